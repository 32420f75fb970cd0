//! Tuned runs of every configured method and the files they produce.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::config::{Algorithm, ExperimentConfig, MethodSpec, StepChoice};
use super::extra::run_extra;
use super::fit::fit_rate;
use super::tune::{tune, tune_extra, TuneResult};
use crate::analysis::theoretical_stepsizes;
use crate::engine::{run, RunFailure, RunOptions, RunState, Stepsizes, Trace, UpdateSchedule};
use crate::error::{DishError, Result};
use crate::objectives::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodStatus {
    Reached,
    NotReached,
    Diverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    /// DISH stepsizes; EXTRA reports its stepsize in `alpha`.
    pub steps: Option<Stepsizes>,
    pub alpha: Option<f64>,
    pub iterations_to_target: Option<usize>,
    pub final_rel_err: Option<f64>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub status: MethodStatus,
    pub message: Option<String>,
}

#[derive(Debug)]
pub struct MethodResult {
    pub summary: SummaryRow,
    pub trace: Option<Trace>,
}

#[derive(Debug)]
pub struct SuiteReport {
    pub results: Vec<MethodResult>,
}

impl SuiteReport {
    pub fn summaries(&self) -> Vec<&SummaryRow> {
        self.results.iter().map(|r| &r.summary).collect()
    }

    pub fn get(&self, method: &str) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.summary.method == method)
    }

    pub fn any_diverged(&self) -> bool {
        self.results.iter().any(|r| r.summary.status == MethodStatus::Diverged)
    }
}

fn failed_row(method: &str, error: &DishError) -> SummaryRow {
    let status = match error {
        DishError::Divergence { .. } => MethodStatus::Diverged,
        _ => MethodStatus::Failed,
    };
    SummaryRow {
        method: method.into(),
        steps: None,
        alpha: None,
        iterations_to_target: None,
        final_rel_err: None,
        slope: None,
        r_squared: None,
        status,
        message: Some(error.to_string()),
    }
}

fn finish_row(
    method: &str,
    steps: Option<Stepsizes>,
    alpha: Option<f64>,
    outcome: std::result::Result<Trace, RunFailure>,
) -> MethodResult {
    match outcome {
        Ok(trace) => {
            let fit = fit_rate(&trace);
            let summary = SummaryRow {
                method: method.into(),
                steps,
                alpha,
                iterations_to_target: trace.reached_target_at,
                final_rel_err: Some(trace.final_rel_err),
                slope: fit.as_ref().ok().map(|f| f.slope),
                r_squared: fit.as_ref().ok().map(|f| f.r_squared),
                status: if trace.reached_target_at.is_some() {
                    MethodStatus::Reached
                } else {
                    MethodStatus::NotReached
                },
                message: fit.err().map(|e| format!("rate fit: {e}")),
            };
            MethodResult { summary, trace: Some(trace) }
        }
        Err(failure) => {
            let mut summary = failed_row(method, &failure.error);
            summary.steps = steps;
            summary.alpha = alpha;
            MethodResult { summary, trace: Some(failure.trace) }
        }
    }
}

/// Tunes (or takes the configured stepsizes of) one method and records its
/// final run.
pub fn run_method(
    instance: &ProblemInstance,
    method: &MethodSpec,
    config: &ExperimentConfig,
    init: &RunState,
) -> MethodResult {
    let tuning = &config.tuning;
    let opts = RunOptions::new(tuning.max_iters).stop_at(tuning.target_rel_err);
    match &method.algorithm {
        Algorithm::Extra { alpha } => {
            let alpha = match alpha {
                Some(a) => *a,
                None => match tune_extra(instance, tuning, init) {
                    Ok(TuneResult { steps, .. }) => steps.a[0],
                    Err(e) => return MethodResult { summary: failed_row(&method.name, &e), trace: None },
                },
            };
            finish_row(&method.name, None, Some(alpha), run_extra(instance, alpha, &init.x, &opts))
        }
        Algorithm::Dish { schedule, steps } => {
            let prepared = UpdateSchedule::from_spec(schedule, instance.n()).and_then(|sched| {
                let st = match steps {
                    StepChoice::Tuned => tune(instance, &sched, tuning, init)?.steps,
                    StepChoice::Fixed { a, b, mu } => Stepsizes::uniform_newton_unit(&sched, *a, *b, *mu),
                    StepChoice::Theoretical { mu } => theoretical_stepsizes(instance, &sched, *mu)?.steps,
                };
                Ok((sched, st))
            });
            match prepared {
                Ok((sched, st)) => {
                    let outcome = run(instance, &sched, &st, init, &opts);
                    finish_row(&method.name, Some(st), None, outcome)
                }
                Err(e) => MethodResult { summary: failed_row(&method.name, &e), trace: None },
            }
        }
    }
}

/// Runs every method of `config`; a failing method does not stop the rest.
pub fn run_suite(config: &ExperimentConfig, base_dir: &Path) -> Result<(ProblemInstance, SuiteReport)> {
    config.validate()?;
    let instance = config.setup.build(base_dir)?;
    let init = config.initial_state(&instance)?;
    let results = config.methods.iter().map(|m| run_method(&instance, m, config, &init)).collect();
    Ok((instance, SuiteReport { results }))
}

/// Writes `<method>.csv`, `summary.json`, `instance.json` and
/// `plotdata/<method>.dat` under `dir`.
pub fn write_outputs(report: &SuiteReport, instance: &ProblemInstance, dir: &Path) -> Result<()> {
    let plot_dir = dir.join("plotdata");
    fs::create_dir_all(&plot_dir)?;
    for r in &report.results {
        if let Some(trace) = &r.trace {
            fs::write(dir.join(format!("{}.csv", r.summary.method)), trace.to_csv())?;
            let mut dat = String::from("# k log10_rel_err\n");
            for (k, v) in trace.log10_series() {
                dat.push_str(&format!("{k} {v:.16e}\n"));
            }
            fs::write(plot_dir.join(format!("{}.dat", r.summary.method)), dat)?;
        }
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report.summaries())?)?;
    fs::write(dir.join("instance.json"), serde_json::to_string_pretty(&instance.to_json())?)?;
    Ok(())
}
