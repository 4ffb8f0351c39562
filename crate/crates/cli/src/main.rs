use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use stormaccess::access::OVERALL_GROUP;
use stormaccess::fragility::FragilityTable;
use stormaccess::scenario_io::{
    compare_results, generate_fixture, load_bundle, load_results, parse_horizons, write_results, Comparison, ScenarioFile,
    SyntheticFixtureSpec,
};
use stormaccess::simulate::ScenarioResult;
use stormaccess::{Error, ValidationReport};

const EXIT_VALIDATION: u8 = 3;
const EXIT_RUNTIME: u8 = 4;
const EXIT_IO: u8 = 5;

fn version_text() -> &'static str {
    static TEXT: OnceLock<String> = OnceLock::new();
    TEXT.get_or_init(|| {
        format!(
            "{} (fragility table sha256 {})",
            env!("CARGO_PKG_VERSION"),
            FragilityTable::default().checksum()
        )
    })
}

#[derive(Parser)]
#[command(name = "stormaccess", version = version_text(), about = "Storm-induced closures and access to health services")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and every dataset it names.
    Validate {
        config: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the Monte Carlo simulation and write results.
    Run(RunArgs),
    /// Write the synthetic county with one scenario file per storm.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo samples written into the scenario files.
        #[arg(long)]
        samples: Option<usize>,
        /// Generate the small test county instead of the full one.
        #[arg(long)]
        small: bool,
    },
    /// Compare two result directories (baseline first).
    Report {
        baseline: PathBuf,
        other: PathBuf,
        /// Also list every demand's score delta.
        #[arg(long)]
        per_demand: bool,
        /// Print the full comparison as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated horizons: short, long.
    #[arg(long)]
    horizon: Option<String>,
    /// Catchment in minutes.
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::Validation(_) | Error::InvalidInput(_) | Error::UnsupportedBridge { .. } | Error::InvalidSpec(_) => EXIT_VALIDATION,
        Error::UndefinedGroup(_) | Error::Mismatch(_) => EXIT_RUNTIME,
    }
}

fn validate(config: &Path, as_json: bool) -> Result<(), Error> {
    let outcome = load_bundle(config);
    let issues = match &outcome {
        Ok(_) => ValidationReport::default(),
        Err(Error::Validation(r)) => r.clone(),
        Err(other) => {
            let mut r = ValidationReport::default();
            r.push(&config.display().to_string(), None, other.to_string());
            r
        }
    }
    .issues;
    if as_json {
        let doc = json!({"config": config, "valid": outcome.is_ok(), "issues": issues});
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    } else if let Ok(bundle) = &outcome {
        println!(
            "{}: valid ({} nodes, {} edges, {} bridges, {} supplies, {} demands)",
            config.display(),
            bundle.graph.nodes().len(),
            bundle.graph.edges().len(),
            bundle.graph.bridges().len(),
            bundle.supplies.len(),
            bundle.demands.len()
        );
    } else if let Err(Error::Validation(r)) = &outcome {
        eprintln!("{}: {r}", config.display());
    }
    outcome.map(|_| ())
}

fn print_summary(result: &ScenarioResult) {
    println!("storm {}  samples {}  seed {}  d0 {} min", result.storm, result.samples, result.seed, result.catchment_min);
    println!("{:<8} {:>12} {:>12} {:>10} {:>10} {:>10}", "horizon", "mean_score", "avg_cov", "no_access", "converged", "outcomes");
    for hr in &result.horizons {
        let converged = hr.convergence.samples().map_or("no".to_string(), |n| n.to_string());
        println!(
            "{:<8} {:>12.4} {:>12.6} {:>10.4} {:>10} {:>10}",
            hr.horizon.as_str(),
            hr.mean_score(),
            hr.average_cov,
            hr.no_access_fraction,
            converged,
            hr.distinct_outcomes()
        );
    }
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let mut scenario = ScenarioFile::load(&args.config)?;
    let c = &mut scenario.config;
    if let Some(n) = args.samples {
        c.samples = n;
    }
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(h) = &args.horizon {
        c.horizons = parse_horizons(h)?;
    }
    if let Some(d0) = args.d0 {
        c.catchment_min = d0;
    }
    if args.workers.is_some() {
        c.workers = args.workers;
    }
    c.validate()?;
    let bundle = stormaccess::scenario_io::load_bundle_with(scenario)?;
    let result = bundle.run()?;
    let written = write_results(&result, &bundle, &args.out)?;
    print_summary(&result);
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn print_comparison(cmp: &Comparison, per_demand: bool) {
    println!("baseline {}  vs  {}", cmp.baseline_storm, cmp.other_storm);
    for h in &cmp.horizons {
        println!();
        println!(
            "[{}] no-access {:.4} -> {:.4}; {} of {} demands dropped a quartile class",
            h.horizon,
            h.no_access_baseline,
            h.no_access_other,
            h.quartile_drops,
            h.scores.len()
        );
        println!("  {:<20} {:>12} {:>12} {:>12}", "group", "baseline", "other", "delta");
        for g in &h.groups {
            println!("  {:<20} {:>12.4} {:>12.4} {:>12.4}", g.group, g.baseline, g.other, g.delta);
        }
        if per_demand {
            println!("  {:<20} {:>12} {:>12} {:>12} dropped", "demand", "baseline", "other", "delta");
            for s in &h.scores {
                println!(
                    "  {:<20} {:>12.4} {:>12.4} {:>12.4} {}",
                    s.demand_id, s.baseline, s.other, s.delta, s.quartile_dropped
                );
            }
        }
    }
    let overall: Vec<_> = cmp.cross_horizon.iter().filter(|c| c.group == OVERALL_GROUP).collect();
    if !overall.is_empty() {
        println!();
        println!("long minus short (biased: long-term runs exclude inundation, compare with care)");
        for c in overall {
            println!("  {:<20} {:>12.4}", c.storm, c.delta);
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate { config, json } => validate(&config, json),
        Command::Run(args) => run(&args),
        Command::Fixture { out, seed, samples, small } => {
            let mut spec = if small { SyntheticFixtureSpec::small() } else { SyntheticFixtureSpec::default() };
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(n) = samples {
                spec.samples = n;
            }
            let files = generate_fixture(&spec, &out)?;
            for (storm, path) in &files.scenarios {
                println!("{storm}: {}", path.display());
            }
            Ok(())
        }
        Command::Report {
            baseline,
            other,
            per_demand,
            json,
        } => {
            let cmp = compare_results(&load_results(&baseline)?, &load_results(&other)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&cmp).expect("serializable"));
            } else {
                print_comparison(&cmp, per_demand);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet_validation = matches!(cli.command, Command::Validate { .. });
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // `validate` has already printed its report.
            if !(quiet_validation && matches!(e, Error::Validation(_))) {
                eprintln!("error: {e}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
