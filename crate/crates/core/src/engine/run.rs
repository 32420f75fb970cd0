//! Iterating an engine to a target with per-iteration bookkeeping.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use nalgebra::DVector;
use serde::Serialize;

use super::compact::{CompactEngine, RunState, Stepsizes};
use super::{UpdateKind, UpdateSchedule};
use crate::analysis::{
    corollary_envelope, dual_optimal_value, merit, verify_proposition_bounds, ConstantCatalog, INNER_TOL,
};
use crate::error::{DishError, Result};
use crate::objectives::ProblemInstance;

/// Relative errors above this abort the run as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Theory-side bookkeeping during a run.
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub catalog: ConstantCatalog,
    pub rho: f64,
    /// Evaluate merit and both step inequalities at every iteration. Without
    /// it only `Δ⁰` and the error envelope are tracked.
    pub per_step: bool,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub max_iters: usize,
    pub stop_rel_err: Option<f64>,
    pub cache: bool,
    pub record_rows: bool,
    pub analysis: Option<AnalysisOptions>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { max_iters: 5000, stop_rel_err: None, cache: true, record_rows: true, analysis: None }
    }
}

impl RunOptions {
    pub fn new(max_iters: usize) -> Self {
        Self { max_iters, ..Self::default() }
    }

    pub fn stop_at(mut self, rel_err: f64) -> Self {
        self.stop_rel_err = Some(rel_err);
        self
    }

    pub fn rows(mut self, record: bool) -> Self {
        self.record_rows = record;
        self
    }

    pub fn cache(mut self, enabled: bool) -> Self {
        self.cache = enabled;
        self
    }

    pub fn with_analysis(mut self, analysis: AnalysisOptions) -> Self {
        self.analysis = Some(analysis);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub k: usize,
    /// `‖x^k − x_OPT‖ / ‖x⁰ − x_OPT‖`, or the absolute error when the
    /// denominator is zero.
    pub rel_err: f64,
    pub sq_err: f64,
    /// `‖W x^k‖`.
    pub consensus_residual: f64,
    pub kinds: String,
    pub merit: Option<f64>,
    pub dual_gap: Option<f64>,
    pub primal_err: Option<f64>,
    pub prop1_slack: Option<f64>,
    pub prop2_slack: Option<f64>,
    pub envelope: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// False when the start was already optimal and errors are absolute.
    pub relative: bool,
    pub iterations: usize,
    pub reached_target_at: Option<usize>,
    pub final_rel_err: f64,
    pub delta0: Option<f64>,
    pub rho: Option<f64>,
    /// Largest `‖x^k − x_OPT‖² / envelope_k` seen, tracked on every
    /// iteration even when rows are not recorded.
    pub envelope_max_ratio: Option<f64>,
    #[serde(skip)]
    pub final_state: Option<RunState>,
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

impl Trace {
    pub fn has_diagnostics(&self) -> bool {
        self.rows.iter().any(|r| r.prop1_slack.is_some() || r.envelope.is_some())
    }

    pub fn to_csv(&self) -> String {
        let extra = self.has_diagnostics();
        let mut out = String::from("k,rel_err,consensus_residual,merit,dual_gap,primal_err,kinds");
        if extra {
            out.push_str(",prop1_slack,prop2_slack,envelope");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                r.k,
                fmt_float(r.rel_err),
                fmt_float(r.consensus_residual),
                fmt_opt(r.merit),
                fmt_opt(r.dual_gap),
                fmt_opt(r.primal_err),
                r.kinds
            );
            if extra {
                let _ = write!(out, ",{},{},{}", fmt_opt(r.prop1_slack), fmt_opt(r.prop2_slack), fmt_opt(r.envelope));
            }
            out.push('\n');
        }
        out
    }

    /// `(k, log10 rel_err)` pairs for rows with positive error.
    pub fn log10_series(&self) -> Vec<(usize, f64)> {
        self.rows.iter().filter(|r| r.rel_err > 0.0).map(|r| (r.k, r.rel_err.log10())).collect()
    }
}

/// A failed run with everything recorded up to the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: DishError,
    pub trace: Trace,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} rows recorded)", self.error, self.trace.rows.len())
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<DishError> for RunFailure {
    fn from(error: DishError) -> Self {
        Self { error, trace: Trace::default() }
    }
}

pub fn kinds_histogram(kinds: &[UpdateKind]) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for k in kinds {
        *counts.entry(k.tag()).or_default() += 1;
    }
    counts.iter().map(|(t, c)| format!("{t}:{c}")).collect::<Vec<_>>().join(";")
}

/// Error bookkeeping shared by every iterative method.
#[derive(Debug)]
pub struct ErrorTracker<'a> {
    instance: &'a ProblemInstance,
    x_opt: DVector<f64>,
    denom: f64,
    stop: Option<f64>,
    record: bool,
    last_sq_err: f64,
    trace: Trace,
}

impl<'a> ErrorTracker<'a> {
    pub fn new(instance: &'a ProblemInstance, x0: &DVector<f64>, stop: Option<f64>, record: bool) -> Result<Self> {
        instance.check_stacked(x0)?;
        let x_opt = instance.x_opt_stacked();
        let denom = (x0 - &x_opt).norm();
        let trace = Trace { relative: denom > 0.0, ..Trace::default() };
        Ok(Self { instance, x_opt, denom, stop, record, last_sq_err: 0.0, trace })
    }

    /// Records iterate `k` and reports whether the run should stop. Fails on
    /// non-finite or exploding iterates.
    pub fn observe(&mut self, k: usize, x: &DVector<f64>, kinds: String) -> Result<(bool, Option<&TraceRow>)> {
        let err = x.iter().zip(self.x_opt.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let rel_err = if self.trace.relative { err / self.denom } else { err };
        if !rel_err.is_finite() || rel_err > DIVERGENCE_LIMIT {
            return Err(DishError::Divergence { iteration: k });
        }
        self.trace.iterations = k;
        self.trace.final_rel_err = rel_err;
        self.last_sq_err = err * err;
        let done = self.stop.is_some_and(|t| rel_err <= t);
        if done && self.trace.reached_target_at.is_none() {
            self.trace.reached_target_at = Some(k);
        }
        let row = if self.record {
            let consensus_residual = self.instance.topology().apply_w(x)?.norm();
            self.trace.rows.push(TraceRow {
                k,
                rel_err,
                sq_err: err * err,
                consensus_residual,
                kinds,
                merit: None,
                dual_gap: None,
                primal_err: None,
                prop1_slack: None,
                prop2_slack: None,
                envelope: None,
            });
            self.trace.rows.last()
        } else {
            None
        };
        Ok((done, row))
    }

    /// Squared error of the last observed iterate.
    pub fn last_sq_err(&self) -> f64 {
        self.last_sq_err
    }

    pub fn trace_mut(&mut self) -> &mut Trace {
        &mut self.trace
    }

    pub fn finish(self) -> Trace {
        self.trace
    }
}

/// Runs the compact engine from `init` for at most `max_iters` steps.
#[allow(clippy::result_large_err)]
pub fn run(
    instance: &ProblemInstance,
    schedule: &UpdateSchedule,
    steps: &Stepsizes,
    init: &RunState,
    options: &RunOptions,
) -> std::result::Result<Trace, RunFailure> {
    let mut engine = CompactEngine::new(instance, schedule, steps)?.with_matrix_cache(options.cache);
    let mut tracker = ErrorTracker::new(instance, &init.x, options.stop_rel_err, options.record_rows)?;
    let analysis = options.analysis.as_ref();
    let g_star = dual_optimal_value(instance);
    let mut envelope_c = None;
    if let Some(a) = analysis {
        let m0 = merit(instance, steps.mu, init, g_star, INNER_TOL)?;
        tracker.trace_mut().delta0 = Some(m0.delta);
        tracker.trace_mut().rho = Some(a.rho);
        envelope_c = Some((m0.delta, a.rho));
    }

    let fail = |error: DishError, tracker: ErrorTracker<'_>| RunFailure { error, trace: tracker.finish() };
    let mut state = init.clone();
    let mut next = RunState::zeros(0);
    let mut matrices = Vec::new();
    let mut warm: Option<DVector<f64>> = None;
    let mut pending_merit = None;
    loop {
        let k = state.k;
        let last = k - init.k >= options.max_iters;
        let kinds = if options.record_rows {
            let kinds: Vec<_> = (0..instance.n()).map(|i| schedule.kind_at(i, k)).collect();
            kinds_histogram(&kinds)
        } else {
            String::new()
        };
        let done = match tracker.observe(k, &state.x, kinds) {
            Ok((done, _)) => done,
            Err(e) => return Err(fail(e, tracker)),
        };
        let stop = done || last;
        let envelope_k =
            analysis.zip(envelope_c).map(|(a, (delta0, rho))| corollary_envelope(&a.catalog, delta0, rho, k - init.k));
        if let Some(env) = envelope_k {
            let sq = tracker.last_sq_err();
            let ratio = if env > 0.0 {
                sq / env
            } else if sq > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            let t = tracker.trace_mut();
            t.envelope_max_ratio = Some(t.envelope_max_ratio.map_or(ratio, |m| m.max(ratio)));
            if let Some(row) = t.rows.last_mut().filter(|r| r.k == k) {
                row.envelope = Some(env);
                if let Some(m) = pending_merit.take() {
                    fill_merit(row, m);
                }
            }
        }
        if stop {
            break;
        }
        let per_step = analysis.is_some_and(|a| a.per_step) && options.record_rows;
        let recorded = if per_step { Some(&mut matrices) } else { None };
        if let Err(e) = engine.step_into(&state, &mut next, recorded) {
            return Err(fail(e, tracker));
        }
        if let (true, Some(a)) = (per_step, analysis) {
            let checked = verify_proposition_bounds(
                instance,
                &state,
                &next,
                &matrices,
                &a.catalog,
                steps,
                INNER_TOL,
                warm.as_ref(),
            );
            match checked {
                Ok((rep, _, dual_k1)) => {
                    if let Some(row) = tracker.trace_mut().rows.last_mut() {
                        fill_merit(row, rep.merit_k);
                        row.prop1_slack = Some(rep.prop1_slack);
                        row.prop2_slack = Some(rep.prop2_slack);
                    }
                    pending_merit = Some(rep.merit_k1);
                    warm = Some(dual_k1.x_star);
                }
                Err(e) => return Err(fail(e, tracker)),
            }
        }
        std::mem::swap(&mut state, &mut next);
    }
    let mut trace = tracker.finish();
    trace.final_state = Some(state);
    Ok(trace)
}

fn fill_merit(row: &mut TraceRow, m: crate::analysis::MeritReport) {
    row.merit = Some(m.delta);
    row.dual_gap = Some(m.delta_lambda);
    row.primal_err = Some(m.delta_x);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::theoretical_stepsizes;
    use crate::objectives::make_quadratic_toy;
    use crate::topology::{degree_weights, Graph};

    fn ring_toy() -> ProblemInstance {
        let cm = degree_weights(&Graph::ring(5).unwrap(), 2).unwrap();
        let centers = (0..5).map(|i| DVector::from_vec(vec![i as f64, 1.0 - (i as f64).powi(2) * 0.25])).collect();
        make_quadratic_toy(centers, cm).unwrap()
    }

    #[test]
    fn theoretical_gradient_run_converges() {
        let inst = crate::objectives::quadratic_toy_ring(5, 2, 0).unwrap();
        let sched = UpdateSchedule::all_gradient(5);
        let t = theoretical_stepsizes(&inst, &sched, 0.0).unwrap();
        let trace = run(&inst, &sched, &t.steps, &RunState::zeros(10), &RunOptions::new(20_000).stop_at(1e-8)).unwrap();
        assert!(trace.reached_target_at.is_some());
        assert!(trace.final_rel_err <= 1e-8);
        assert_eq!(trace.rows.len(), trace.iterations + 1);
    }

    #[test]
    fn start_at_optimum_reports_absolute_error() {
        let inst = ring_toy();
        let sched = UpdateSchedule::all_gradient(5);
        let steps = Stepsizes::uniform(5, 0.1, 0.1, 0.0);
        let init = RunState::new(inst.x_opt_stacked(), DVector::zeros(10));
        let trace = run(&inst, &sched, &steps, &init, &RunOptions::new(5)).unwrap();
        assert!(!trace.relative);
        assert!(trace.rows.iter().all(|r| r.rel_err.is_finite()));
        assert_eq!(trace.rows[0].rel_err, 0.0);
    }

    #[test]
    fn dish_k_full_equals_newton() {
        let inst = ring_toy();
        let steps = Stepsizes::uniform(5, 0.5, 0.2, 1.0);
        let opts = RunOptions::new(40);
        let a = run(&inst, &UpdateSchedule::dish_k(5, 5), &steps, &RunState::zeros(10), &opts).unwrap();
        let b = run(&inst, &UpdateSchedule::all_newton(5), &steps, &RunState::zeros(10), &opts).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn divergence_keeps_partial_trace() {
        let inst = ring_toy();
        let steps = Stepsizes::uniform(5, 50.0, 50.0, 0.0);
        let err = run(&inst, &UpdateSchedule::all_gradient(5), &steps, &RunState::zeros(10), &RunOptions::new(1000))
            .unwrap_err();
        assert!(matches!(err.error, DishError::Divergence { .. }));
        assert!(!err.trace.rows.is_empty());
    }

    #[test]
    fn csv_layout() {
        let inst = ring_toy();
        let sched = UpdateSchedule::dish_k(5, 2);
        let steps = Stepsizes::uniform(5, 0.3, 0.1, 0.0);
        let trace = run(&inst, &sched, &steps, &RunState::zeros(10), &RunOptions::new(3)).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "k,rel_err,consensus_residual,merit,dual_gap,primal_err,kinds");
        assert!(lines.next().unwrap().ends_with(",,,gg:3;nn:2"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn analysis_columns_are_filled() {
        let inst = ring_toy();
        let sched = UpdateSchedule::all_newton(5);
        let t = theoretical_stepsizes(&inst, &sched, 1.0).unwrap();
        let opts = RunOptions::new(10).with_analysis(AnalysisOptions {
            catalog: t.catalog.clone(),
            rho: t.rho,
            per_step: true,
        });
        let trace = run(&inst, &sched, &t.steps, &RunState::zeros(10), &opts).unwrap();
        assert!(trace.rows.iter().all(|r| r.merit.is_some() && r.envelope.is_some()));
        assert!(trace.rows[..10].iter().all(|r| r.prop1_slack.unwrap() >= -1e-7));
        assert!(trace.to_csv().starts_with("k,rel_err,consensus_residual,merit,dual_gap,primal_err,kinds,prop1_slack"));
    }
}
