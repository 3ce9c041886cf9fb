//! Result serialization: structured outcomes, solver traces, comparison
//! tables, message logs and audit reports.
//!
//! CSV files are UTF-8, comma-separated with a header row, decimal points and
//! no thousands separators.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use dadp_market::atc::MarketOutcome;
use dadp_market::flow::TraceRecord;
use dadp_market::mechanisms::MechanismReport;
use dadp_market::model::Scenario;

use crate::audit::AuditViolation;
use crate::bus::Bus;

/// The structured result of one run as written to `outcome.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct OutcomeDocument {
    pub scene_id: String,
    pub market_kind: dadp_market::model::MarketKind,
    pub outcome: MarketOutcome,
}

/// Write `outcome.json`.
pub fn write_outcome(out_dir: &Path, scenario: &Scenario, outcome: &MarketOutcome) -> Result<()> {
    let doc = OutcomeDocument {
        scene_id: scenario.scene_id.clone(),
        market_kind: scenario.market_kind,
        outcome: outcome.clone(),
    };
    let path = out_dir.join("outcome.json");
    let text = serde_json::to_string_pretty(&doc).context("serializing outcome")?;
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Write `trace.csv` with one row per player per inner iteration.
pub fn write_trace(out_dir: &Path, trace: &[TraceRecord]) -> Result<()> {
    let path = out_dir.join("trace.csv");
    let mut writer = csv::Writer::from_path(&path)
        .with_context(|| format!("creating {}", path.display()))?;
    for record in trace {
        writer.serialize(record).context("writing trace row")?;
    }
    writer.flush().context("flushing trace.csv")?;
    Ok(())
}

/// Read `trace.csv` back into memory.
pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    reader
        .deserialize()
        .map(|row| row.context("parsing trace row"))
        .collect()
}

/// One `comparison.csv` row.
#[derive(Debug, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub mechanism: String,
    pub energy: f64,
    pub cost: f64,
    pub value: f64,
    pub sw: f64,
    pub budget_surplus: f64,
}

impl From<&MechanismReport> for ComparisonRow {
    fn from(report: &MechanismReport) -> Self {
        ComparisonRow {
            mechanism: report.mechanism.label().to_string(),
            energy: report.energy,
            cost: report.cost,
            value: report.value,
            sw: report.sw,
            budget_surplus: report.budget_surplus,
        }
    }
}

/// Write `comparison.csv` from the mechanism reports.
pub fn write_comparison(out_dir: &Path, reports: &[MechanismReport]) -> Result<()> {
    let path = out_dir.join("comparison.csv");
    let mut writer = csv::Writer::from_path(&path)
        .with_context(|| format!("creating {}", path.display()))?;
    for report in reports {
        writer
            .serialize(ComparisonRow::from(report))
            .context("writing comparison row")?;
    }
    writer.flush().context("flushing comparison.csv")?;
    Ok(())
}

/// Write `audit.log`: one line per violation, empty file on clean runs.
pub fn write_audit(out_dir: &Path, violations: &[AuditViolation]) -> Result<()> {
    let path = out_dir.join("audit.log");
    let mut text = String::new();
    for v in violations {
        text.push_str(&v.to_string());
        text.push('\n');
    }
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Write `messages.jsonl`, the full routed message log.
pub fn write_messages(out_dir: &Path, bus: &Bus) -> Result<()> {
    let path = out_dir.join("messages.jsonl");
    fs::write(&path, bus.log_to_jsonl()).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
