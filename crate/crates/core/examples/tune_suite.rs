//! Grid-tune a small method suite from a JSON config and write its outputs.
//!
//! `cargo run --release --example tune_suite -- [out_dir]`

use std::path::{Path, PathBuf};

use dish::harness::{run_suite, write_outputs, ExperimentConfig};

const CONFIG: &str = r#"{
  "setup": {"kind": "quadratic_toy", "n": 8, "d": 3, "seed": 2},
  "methods": [
    {"name": "DISH-G", "algorithm": "dish", "schedule": {"kind": "constant", "primal": "gradient", "dual": "gradient"}},
    {"name": "DISH-4", "algorithm": "dish", "schedule": {"kind": "dish_k", "K": 4}},
    {"name": "DISH-N", "algorithm": "dish", "schedule": {"kind": "constant", "primal": "newton", "dual": "newton"}},
    {"name": "DISH-G&N", "algorithm": "dish", "schedule": {"kind": "switching", "dist": "uniform", "lo": 5, "hi": 50, "seed": 1}},
    {"name": "EXTRA", "algorithm": "extra"}
  ],
  "tuning": {"max_iters": 3000},
  "output": "unused"
}"#;

fn main() -> dish::Result<()> {
    let out =
        std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("dish_tune_suite"));
    let cfg = ExperimentConfig::from_json_str(CONFIG)?;
    let (inst, report) = run_suite(&cfg, Path::new("."))?;
    for s in report.summaries() {
        println!(
            "{:<9} iters {:>5?}  R2 {:.4}  steps {}",
            s.method,
            s.iterations_to_target,
            s.r_squared.unwrap_or(f64::NAN),
            s.steps
                .as_ref()
                .map_or(format!("alpha {:?}", s.alpha), |st| format!("a {} b {} mu {}", st.a[0], st.b[0], st.mu))
        );
    }
    write_outputs(&report, &inst, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
