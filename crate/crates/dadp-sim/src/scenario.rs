//! Scenario configuration files.
//!
//! A scenario is a TOML document with `[market]`, `[[las]]`, `[[esps]]` and
//! an optional `[algorithm]` table. Absent algorithm fields take the built-in
//! defaults, so a minimal file only lists the players.
//!
//! ```toml
//! [market]
//! kind = "electricity"
//! scene_id = "S1"
//!
//! [[las]]
//! id = "LA1"
//! alpha = 10.0
//! beta = 1.0
//! d_min = 0.0
//!
//! [[esps]]
//! id = "ESP1"
//! m = 1.0
//! n = 0.5
//! s_max = 10.0
//!
//! [algorithm]
//! rho = 1.0
//! delta = 0.05
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use dadp_market::admm::AdmmParams;
use dadp_market::atc::DadpParams;
use dadp_market::model::{EnergyServiceProvider, LoadAggregator, MarketKind, Scenario};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MarketSection {
    kind: MarketKind,
    #[serde(default)]
    scene_id: String,
}

/// Flat algorithm table: every field optional, merged over the defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub rho: Option<f64>,
    pub eps_pri: Option<f64>,
    pub eps_dual: Option<f64>,
    pub inner_cap: Option<usize>,
    pub delta: Option<f64>,
    pub weight_eps: Option<f64>,
    pub weight_cap: Option<usize>,
    pub gamma0: Option<f64>,
    pub beta_growth: Option<f64>,
    pub eps1_rel: Option<f64>,
    pub eps2: Option<f64>,
    pub outer_cap: Option<usize>,
    pub initial_supply_fraction: Option<f64>,
    pub freeze_weights: Option<bool>,
    pub collect_trace: Option<bool>,
}

impl AlgorithmSection {
    /// Apply every present field on top of the defaults.
    pub fn merge(&self) -> DadpParams {
        let base = DadpParams::default();
        DadpParams {
            admm: AdmmParams {
                rho: self.rho.unwrap_or(base.admm.rho),
                eps_pri: self.eps_pri.unwrap_or(base.admm.eps_pri),
                eps_dual: self.eps_dual.unwrap_or(base.admm.eps_dual),
                max_iter: self.inner_cap.unwrap_or(base.admm.max_iter),
            },
            delta: self.delta.unwrap_or(base.delta),
            weight_eps: self.weight_eps.unwrap_or(base.weight_eps),
            weight_cap: self.weight_cap.unwrap_or(base.weight_cap),
            gamma0: self.gamma0.unwrap_or(base.gamma0),
            beta_growth: self.beta_growth.unwrap_or(base.beta_growth),
            eps1_rel: self.eps1_rel.unwrap_or(base.eps1_rel),
            eps2: self.eps2.unwrap_or(base.eps2),
            outer_cap: self.outer_cap.unwrap_or(base.outer_cap),
            initial_supply_fraction: self
                .initial_supply_fraction
                .unwrap_or(base.initial_supply_fraction),
            freeze_weights: self.freeze_weights.unwrap_or(base.freeze_weights),
            collect_trace: self.collect_trace.unwrap_or(base.collect_trace),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    market: MarketSection,
    las: Vec<LoadAggregator>,
    esps: Vec<EnergyServiceProvider>,
    #[serde(default)]
    algorithm: AlgorithmSection,
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<(Scenario, DadpParams)> {
    let file: ScenarioFile = toml::from_str(text).context("parsing scenario file")?;
    let scenario = Scenario {
        market_kind: file.market.kind,
        scene_id: file.market.scene_id,
        las: file.las,
        esps: file.esps,
    };
    scenario.validate().context("validating scenario")?;
    Ok((scenario, file.algorithm.merge()))
}

/// Load a scenario from disk.
pub fn load_scenario(path: &Path) -> Result<(Scenario, DadpParams)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenario file {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("in {}", path.display()))
}

/// A sweep file: a list of scenes, each shaped like a scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SweepFile {
    scenes: Vec<ScenarioFile>,
}

/// Parse a sweep document into its per-scene scenarios and parameters.
pub fn parse_scenes(text: &str) -> Result<Vec<(Scenario, DadpParams)>> {
    let file: SweepFile = toml::from_str(text).context("parsing scenes file")?;
    file.scenes
        .into_iter()
        .enumerate()
        .map(|(idx, scene)| {
            let scenario = Scenario {
                market_kind: scene.market.kind,
                scene_id: if scene.market.scene_id.is_empty() {
                    format!("S{}", idx + 1)
                } else {
                    scene.market.scene_id
                },
                las: scene.las,
                esps: scene.esps,
            };
            scenario
                .validate()
                .with_context(|| format!("validating scene {}", scenario.scene_id))?;
            Ok((scenario, scene.algorithm.merge()))
        })
        .collect()
}

/// Load a sweep file from disk.
pub fn load_scenes(path: &Path) -> Result<Vec<(Scenario, DadpParams)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenes file {}", path.display()))?;
    parse_scenes(&text).with_context(|| format!("in {}", path.display()))
}
