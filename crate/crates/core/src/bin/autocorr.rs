use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use autocorr::experiments::{
    builtin_scenario, builtin_scenarios, emit_report, load_config, run_scenario, run_scenario_with_workers, Format,
    Scenario, ScenarioReport,
};
use autocorr::{Error, Method, Param};

#[derive(Parser)]
#[command(version, about = "Monte Carlo comparison of autocorrelation estimators")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the builtin scenarios.
    List,
    /// Run a builtin scenario by name, or every scenario in a TOML config file.
    Run {
        target: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Comma-separated subset of csv,json,svg; empty writes nothing.
        #[arg(long, default_value = "csv,json,svg")]
        formats: String,
    },
}

fn resolve(target: &str) -> Result<Vec<Scenario>, Error> {
    if let Some(s) = builtin_scenario(target) {
        return Ok(vec![s]);
    }
    let path = PathBuf::from(target);
    if path.is_file() {
        return load_config(&path);
    }
    Err(Error::UnknownScenario(target.to_string()))
}

fn print_summary(report: &ScenarioReport) {
    println!(
        "{}: {} replicates, {} failed",
        report.scenario.name,
        report.scenario.replicates,
        report.failed_replicates()
    );
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    println!("  {:<8} {:>10} {:>10} {:>10} {:>10}", "method", "tau bias", "tau rmse", "coverage", ">3 SE");
    for &m in &report.scenario.methods {
        if let Some(s) = report.summary(m, Param::Tau) {
            println!(
                "  {:<8} {:>10} {:>10} {:>10} {:>10}",
                m.name(),
                fmt(s.bias),
                fmt(s.rmse),
                fmt(s.coverage),
                fmt(s.beyond_3se)
            );
        }
    }
}

fn run(
    target: &str,
    seed: Option<u64>,
    replicates: Option<usize>,
    workers: Option<usize>,
    out: &std::path::Path,
    formats: &str,
) -> Result<(), Error> {
    let formats = Format::parse_list(formats)?;
    for mut s in resolve(target)? {
        if let Some(seed) = seed {
            s.seed = seed;
        }
        if let Some(r) = replicates {
            s.replicates = r;
        }
        let report = match workers {
            Some(w) => run_scenario_with_workers(&s, w)?,
            None => run_scenario(&s)?,
        };
        print_summary(&report);
        for path in emit_report(&report, &formats, out)? {
            println!("  wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::List => {
            for s in builtin_scenarios() {
                let methods: Vec<&str> = s.methods.iter().map(|m: &Method| m.name()).collect();
                println!(
                    "{:<12} {:<14} n={:<4} dt={}tau transform={:?} replicates={} methods={}",
                    s.name,
                    s.kind.to_string(),
                    s.n,
                    s.dt_over_tau,
                    s.transform,
                    s.replicates,
                    methods.join(",")
                );
            }
            Ok(())
        }
        Command::Run {
            target,
            seed,
            replicates,
            workers,
            out,
            formats,
        } => run(target, *seed, *replicates, *workers, out, formats),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.reason_code());
            ExitCode::FAILURE
        }
    }
}
