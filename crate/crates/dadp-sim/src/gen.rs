//! Seeded random instance generation for sweeps and acceptance runs.

use rand::Rng;

use dadp_market::model::{EnergyServiceProvider, LoadAggregator, MarketKind, Scenario};

/// Draw from a log-uniform distribution over `[lo, hi]`.
fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Generate a random feasible electricity scenario with `I` in `[2, 6]` and
/// `J` in `[3, 6]` and log-uniform coefficients. Floors are zero and caps are
/// generous, so feasibility holds by construction.
pub fn random_scenario<R: Rng>(rng: &mut R, label: &str) -> Scenario {
    let i_count = rng.gen_range(2..=6);
    let j_count = rng.gen_range(3..=6);
    let las = (0..i_count)
        .map(|i| LoadAggregator {
            id: format!("LA{}", i + 1),
            alpha: log_uniform(rng, 4.0, 20.0),
            beta: log_uniform(rng, 0.2, 2.0),
            d_min: 0.0,
            thermal: None,
        })
        .collect();
    let esps = (0..j_count)
        .map(|j| EnergyServiceProvider {
            id: format!("ESP{}", j + 1),
            m: log_uniform(rng, 0.2, 2.0),
            n: log_uniform(rng, 0.05, 2.0),
            s_max: log_uniform(rng, 2.0, 20.0),
        })
        .collect();
    Scenario {
        market_kind: MarketKind::Electricity,
        scene_id: label.to_string(),
        las,
        esps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_scenarios_validate_and_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in 0..50 {
            let scenario = random_scenario(&mut rng, &format!("G{k}"));
            scenario.validate().unwrap();
            scenario.check_feasible().unwrap();
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let a = random_scenario(&mut ChaCha8Rng::seed_from_u64(42), "A");
        let b = random_scenario(&mut ChaCha8Rng::seed_from_u64(42), "A");
        assert_eq!(a.las.len(), b.las.len());
        assert_eq!(a.las[0].alpha, b.las[0].alpha);
        assert_eq!(a.esps[0].m, b.esps[0].m);
    }
}
