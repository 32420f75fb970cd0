use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dish::engine::UpdateSchedule;
use dish::harness::{self, Algorithm, ExperimentConfig, SuiteReport};
use dish::DishError;

#[derive(Parser)]
#[command(name = "dish", version, about = "Hybrid gradient/Newton primal-dual consensus solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method of a JSON experiment config and write traces.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Grid-search stepsizes and print them as JSON.
    Tune {
        #[arg(long)]
        config: PathBuf,
        /// Only tune this method.
        #[arg(long)]
        method: Option<String>,
    },
    /// Run the built-in invariant checks.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Regenerate one of the two synthetic benchmarks and run the standard suite.
    Reproduce {
        #[arg(value_parser = ["setup1", "setup2"])]
        setup: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

const EXIT_DIVERGED: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn fail(e: &DishError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        DishError::Config(_) | DishError::Parse(_) | DishError::Json(_) | DishError::InvalidParameter(_) => {
            ExitCode::from(EXIT_CONFIG)
        }
        DishError::Divergence { .. } => ExitCode::from(EXIT_DIVERGED),
        _ => ExitCode::FAILURE,
    }
}

fn load(path: &Path) -> Result<(ExperimentConfig, PathBuf), DishError> {
    let cfg = ExperimentConfig::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn print_report(report: &SuiteReport) {
    println!("{:<12} {:>10} {:>12} {:>10} {:>8}  status", "method", "iters", "final_err", "slope", "R2");
    for s in report.summaries() {
        let opt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |v| format!("{v:.p$e}"));
        println!(
            "{:<12} {:>10} {:>12} {:>10} {:>8}  {:?}",
            s.method,
            s.iterations_to_target.map_or("-".into(), |k| k.to_string()),
            opt(s.final_rel_err, 2),
            opt(s.slope, 2),
            s.r_squared.map_or("-".into(), |r| format!("{r:.4}")),
            s.status,
        );
    }
}

fn run_and_write(cfg: &ExperimentConfig, base: &Path) -> ExitCode {
    let (instance, report) = match harness::run_suite(cfg, base) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let out = if cfg.output.is_absolute() { cfg.output.clone() } else { base.join(&cfg.output) };
    if let Err(e) = harness::write_outputs(&report, &instance, &out) {
        return fail(&e);
    }
    print_report(&report);
    println!("outputs written to {}", out.display());
    if report.any_diverged() {
        ExitCode::from(EXIT_DIVERGED)
    } else {
        ExitCode::SUCCESS
    }
}

fn tune_cmd(path: &Path, only: Option<&str>) -> ExitCode {
    let (cfg, base) = match load(path) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    if let Some(name) = only {
        if !cfg.methods.iter().any(|m| m.name == name) {
            return fail(&DishError::Config(format!("no method named {name:?}")));
        }
    }
    let instance = match cfg.setup.build(&base) {
        Ok(i) => i,
        Err(e) => return fail(&e),
    };
    let init = match cfg.initial_state(&instance) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let mut out = serde_json::Map::new();
    let mut diverged = false;
    for m in cfg.methods.iter().filter(|m| only.is_none_or(|n| n == m.name)) {
        let result = match &m.algorithm {
            Algorithm::Extra { .. } => harness::tune_extra(&instance, &cfg.tuning, &init).map(|r| {
                serde_json::json!({ "alpha": r.steps.a[0], "iterations": r.iterations, "final_rel_err": r.final_rel_err })
            }),
            Algorithm::Dish { schedule, .. } => UpdateSchedule::from_spec(schedule, instance.n())
                .and_then(|s| harness::tune(&instance, &s, &cfg.tuning, &init))
                .map(|r| serde_json::json!({ "steps": r.steps, "iterations": r.iterations, "final_rel_err": r.final_rel_err })),
        };
        let value = match result {
            Ok(v) => v,
            Err(DishError::Divergence { .. }) => {
                diverged = true;
                serde_json::json!({ "error": "every grid point diverged" })
            }
            Err(e) => return fail(&e),
        };
        out.insert(m.name.clone(), value);
    }
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    if diverged {
        ExitCode::from(EXIT_DIVERGED)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run { config } => match load(&config) {
            Ok((cfg, base)) => run_and_write(&cfg, &base),
            Err(e) => fail(&e),
        },
        Command::Tune { config, method } => tune_cmd(&config, method.as_deref()),
        Command::Verify { seed } => {
            let checks = harness::verify::run_all(seed);
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Reproduce { setup, out, seed } => {
            let out = out.unwrap_or_else(|| PathBuf::from(format!("out/{setup}")));
            match ExperimentConfig::preset(&setup, seed, out) {
                Ok(cfg) => run_and_write(&cfg, Path::new(".")),
                Err(e) => fail(&e),
            }
        }
    }
}
