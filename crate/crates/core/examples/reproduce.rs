//! Regenerate a synthetic benchmark and run the full tuned suite.
//!
//! `cargo run --release --example reproduce -- setup1 [seed]` (setup2 takes a few minutes)

use std::path::Path;

use dish::harness::{run_suite, write_outputs, ExperimentConfig};

fn main() -> dish::Result<()> {
    let mut args = std::env::args().skip(1);
    let setup = args.next().unwrap_or_else(|| "setup1".into());
    let seed = args.next().map_or(Ok(0), |s| s.parse()).map_err(|e| dish::DishError::Config(format!("seed: {e}")))?;
    let out = std::env::temp_dir().join(format!("dish_{setup}_{seed}"));
    let cfg = ExperimentConfig::preset(&setup, seed, out.clone())?;
    let (inst, report) = run_suite(&cfg, Path::new("."))?;
    println!("{setup}: n {} d {} gamma {:.3}", inst.n(), inst.d(), inst.topology().gamma());
    for s in report.summaries() {
        println!(
            "{:<9} iterations {:>6?}  slope {:>9.4}  R2 {:.4}  {:?}",
            s.method,
            s.iterations_to_target,
            s.slope.unwrap_or(f64::NAN),
            s.r_squared.unwrap_or(f64::NAN),
            s.status
        );
    }
    write_outputs(&report, &inst, &out)?;
    println!("traces in {}", out.display());
    Ok(())
}
