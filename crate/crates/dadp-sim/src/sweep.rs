//! Multi-scene sweeps: independent runs over a list of scenarios plus the
//! cross-scene per-player series used to study entry and exit effects.

use serde::{Deserialize, Serialize};

use dadp_market::atc::{run_dadp, DadpParams, MarketOutcome};
use dadp_market::model::Scenario;

/// One scene's result; failures are recorded and do not stop the sweep.
#[derive(Debug, Serialize, Deserialize)]
pub struct SceneResult {
    pub scene_id: String,
    pub outcome: Option<MarketOutcome>,
    pub error: Option<String>,
}

/// One row of the cross-scene series: a player's converged position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub scene_id: String,
    pub player_id: String,
    pub side: dadp_market::flow::Side,
    pub quantity: f64,
    pub weight: f64,
    /// The player's scalar quote (bid or offer) in dollars.
    pub quote: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenes: Vec<SceneResult>,
    pub series: Vec<SeriesRow>,
}

/// Run every scene independently and assemble the report.
pub fn run_scene_sweep(scenes: &[(Scenario, DadpParams)]) -> SweepReport {
    let mut report = SweepReport {
        scenes: Vec::new(),
        series: Vec::new(),
    };
    for (scenario, params) in scenes {
        match run_dadp(scenario, params) {
            Ok(outcome) => {
                for (i, la) in scenario.las.iter().enumerate() {
                    report.series.push(SeriesRow {
                        scene_id: scenario.scene_id.clone(),
                        player_id: la.id.clone(),
                        side: dadp_market::flow::Side::Demand,
                        quantity: outcome.demands[i],
                        weight: outcome.p.values[i],
                        quote: outcome.bids[i].amount,
                    });
                }
                for (j, esp) in scenario.esps.iter().enumerate() {
                    report.series.push(SeriesRow {
                        scene_id: scenario.scene_id.clone(),
                        player_id: esp.id.clone(),
                        side: dadp_market::flow::Side::Supply,
                        quantity: outcome.supplies[j],
                        weight: outcome.q.values[j],
                        quote: outcome.offers[j].amount,
                    });
                }
                report.scenes.push(SceneResult {
                    scene_id: scenario.scene_id.clone(),
                    outcome: Some(outcome),
                    error: None,
                });
            }
            Err(err) => {
                log::warn!("scene {} failed: {err}", scenario.scene_id);
                report.scenes.push(SceneResult {
                    scene_id: scenario.scene_id.clone(),
                    outcome: None,
                    error: Some(err.to_string()),
                });
            }
        }
    }
    report
}
