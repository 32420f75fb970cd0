//! Theoretical stepsizes, the guaranteed rate and per-step diagnostics.
//!
//! `cargo run --release --example theoretical_rate`

use dish::analysis::theoretical_stepsizes;
use dish::engine::{run, AnalysisOptions, RunOptions, RunState, UpdateSchedule};
use dish::objectives::quadratic_toy_ring;

fn main() -> dish::Result<()> {
    let inst = quadratic_toy_ring(5, 2, 0)?;
    let init = RunState::zeros(inst.stacked_dim());
    for mu in [0.0, 1.0] {
        for (name, sched) in [("gradient", UpdateSchedule::all_gradient(5)), ("Newton", UpdateSchedule::all_newton(5))]
        {
            let th = theoretical_stepsizes(&inst, &sched, mu)?;
            let analysis = AnalysisOptions { catalog: th.catalog.clone(), rho: th.rho, per_step: true };
            let opts = RunOptions::new(300).with_analysis(analysis);
            let trace = run(&inst, &sched, &th.steps, &init, &opts).map_err(|f| f.error)?;
            let worst = |f: fn(&dish::engine::TraceRow) -> Option<f64>| {
                trace.rows.iter().filter_map(f).fold(f64::INFINITY, f64::min)
            };
            println!(
                "mu {mu} {name:<8} a {:.4} b {:.2e} rho {:.2e} (proof {:.2e})  min slacks {:.1e} / {:.1e}  envelope ratio {:.3}",
                th.steps.a[0],
                th.steps.b[0],
                th.rho,
                th.rho_proof,
                worst(|r| r.prop1_slack),
                worst(|r| r.prop2_slack),
                trace.envelope_max_ratio.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
