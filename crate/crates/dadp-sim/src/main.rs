//! `dadp` — run, sweep, compare and audit double-sided auction simulations.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dadp_market::atc::run_dadp_observed;
use dadp_market::mechanisms::{compare_mechanisms, Mechanism};
use dadp_market::model::MarketKind;
use dadp_market::MarketError;
use dadp_sim::audit::audit;
use dadp_sim::bus::Bus;
use dadp_sim::gen::random_scenario;
use dadp_sim::output;
use dadp_sim::scenario::{load_scenario, load_scenes};
use dadp_sim::sweep::run_scene_sweep;

/// Exit code for runs that hit an iteration cap.
const EXIT_NONCONVERGENCE: u8 = 2;
/// Exit code for runs or logs with privacy-audit violations.
const EXIT_AUDIT: u8 = 3;

#[derive(Parser)]
#[command(name = "dadp", about = "Double-sided auction market simulator", version)]
struct Cli {
    /// Seed for randomized instance generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clear one scenario with the full auction and audit the message flow.
    Run(RunArgs),
    /// Run a list of scenes independently and collect cross-scene series.
    Sweep(SweepArgs),
    /// Clear one scenario under several mechanisms and tabulate the results.
    Compare(CompareArgs),
    /// Audit a previously recorded message log.
    Audit(AuditArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's market kind.
    #[arg(long, value_enum)]
    market: Option<MarketArg>,
    /// Output directory for outcome.json, trace.csv, audit.log, messages.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenes file (TOML with a [[scenes]] list).
    #[arg(long, conflicts_with = "random")]
    scenes: Option<PathBuf>,
    /// Generate this many random scenes instead of reading a file.
    #[arg(long)]
    random: Option<usize>,
    /// Output directory for the sweep report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated mechanisms: oracle, dadp, kel, pool, vcg.
    #[arg(long, default_value = "oracle,dadp,kel,pool,vcg", value_delimiter = ',')]
    mechanisms: Vec<String>,
    /// Output directory for comparison.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Message log file (JSON lines, as written by `run`).
    #[arg(long)]
    log: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarketArg {
    Power,
    Heat,
}

impl From<MarketArg> for MarketKind {
    fn from(arg: MarketArg) -> Self {
        match arg {
            MarketArg::Power => MarketKind::Electricity,
            MarketArg::Heat => MarketKind::Heat,
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err
                .downcast_ref::<MarketError>()
                .is_some_and(|e| matches!(e, MarketError::NonConvergence { .. }))
            {
                ExitCode::from(EXIT_NONCONVERGENCE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args, cli.seed),
        Command::Compare(args) => cmd_compare(args),
        Command::Audit(args) => cmd_audit(args),
    }
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let (mut scenario, mut params) = load_scenario(&args.scenario)?;
    if let Some(market) = args.market {
        scenario.market_kind = market.into();
        scenario.validate().context("validating scenario after --market override")?;
    }
    if args.out.is_some() {
        params.collect_trace = true;
    }
    let mut bus = Bus::new();
    let outcome = run_dadp_observed(&scenario, &params, &mut bus)
        .context("running the auction")?;
    let violations = audit(&bus.log);
    println!(
        "scene {}: energy {:.4} MWh, SW {:.4} $, outer {} / weight {} / inner {} iterations, {} audit violations",
        scenario.scene_id,
        outcome.total_demand,
        outcome.social_welfare,
        outcome.iterations.outer,
        outcome.iterations.weight_rounds,
        outcome.iterations.inner,
        violations.len(),
    );
    if let Some(out_dir) = &args.out {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))?;
        output::write_outcome(out_dir, &scenario, &outcome)?;
        output::write_trace(out_dir, &outcome.trace)?;
        output::write_audit(out_dir, &violations)?;
        output::write_messages(out_dir, &bus)?;
    }
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("audit: {v}");
        }
        return Ok(ExitCode::from(EXIT_AUDIT));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs, seed: u64) -> Result<ExitCode> {
    let scenes = match (&args.scenes, args.random) {
        (Some(path), None) => load_scenes(path)?,
        (None, Some(count)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|k| {
                    (
                        random_scenario(&mut rng, &format!("R{}", k + 1)),
                        Default::default(),
                    )
                })
                .collect()
        }
        _ => bail!("provide exactly one of --scenes or --random"),
    };
    let report = run_scene_sweep(&scenes);
    let failures = report.scenes.iter().filter(|s| s.error.is_some()).count();
    for scene in &report.scenes {
        match (&scene.outcome, &scene.error) {
            (Some(outcome), _) => println!(
                "scene {}: energy {:.4} MWh, SW {:.4} $",
                scene.scene_id, outcome.total_demand, outcome.social_welfare
            ),
            (_, Some(err)) => println!("scene {}: FAILED ({err})", scene.scene_id),
            _ => unreachable!(),
        }
    }
    if let Some(out_dir) = &args.out {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))?;
        let path = out_dir.join("sweep.json");
        std::fs::write(&path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", path.display()))?;
        let series_path = out_dir.join("series.csv");
        let mut writer = csv::Writer::from_path(&series_path)
            .with_context(|| format!("creating {}", series_path.display()))?;
        for row in &report.series {
            writer.serialize(row)?;
        }
        writer.flush()?;
    }
    if failures > 0 {
        return Ok(ExitCode::from(EXIT_NONCONVERGENCE));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode> {
    let (scenario, params) = load_scenario(&args.scenario)?;
    let mechanisms: Vec<Mechanism> = args
        .mechanisms
        .iter()
        .map(|name| match name.trim().to_ascii_lowercase().as_str() {
            "oracle" => Ok(Mechanism::Oracle),
            "dadp" => Ok(Mechanism::Dadp),
            "kel" => Ok(Mechanism::Kel),
            "pool" => Ok(Mechanism::Pool),
            "vcg" => Ok(Mechanism::Vcg),
            other => bail!("unknown mechanism '{other}'"),
        })
        .collect::<Result<_>>()?;
    let results = compare_mechanisms(&scenario, &params, &mechanisms);
    let mut reports = Vec::new();
    let mut nonconverged = false;
    println!("mechanism  energy      cost       value        sw    budget_surplus");
    for (mech, result) in results {
        match result {
            Ok(report) => {
                println!(
                    "{:<9} {:>8.3} {:>9.3} {:>11.3} {:>9.3} {:>14.4}",
                    mech.label(),
                    report.energy,
                    report.cost,
                    report.value,
                    report.sw,
                    report.budget_surplus
                );
                reports.push(report);
            }
            Err(err) => {
                println!("{:<9} FAILED: {err}", mech.label());
                if matches!(err, MarketError::NonConvergence { .. }) {
                    nonconverged = true;
                }
            }
        }
    }
    if let Some(out_dir) = &args.out {
        std::fs::create_dir_all(out_dir)
            .with_context(|| format!("creating {}", out_dir.display()))?;
        output::write_comparison(out_dir, &reports)?;
    }
    if nonconverged {
        return Ok(ExitCode::from(EXIT_NONCONVERGENCE));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(args: AuditArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.log)
        .with_context(|| format!("reading {}", args.log.display()))?;
    let log = Bus::log_from_jsonl(&text).context("parsing message log")?;
    let violations = audit(&log);
    if violations.is_empty() {
        println!("audit clean: {} messages, 0 violations", log.len());
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            println!("{v}");
        }
        println!("{} violations in {} messages", violations.len(), log.len());
        Ok(ExitCode::from(EXIT_AUDIT))
    }
}
