//! Acceptance criteria 1–8. Runs as a plain binary and prints one line per
//! criterion; exits non-zero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use dish::analysis::{dual_newton_step_exact, dual_value_grad, theoretical_stepsizes, TheoreticalStepsizes, INNER_TOL};
use dish::engine::{
    run, AnalysisOptions, CompactEngine, DistributedEngine, RunOptions, RunState, ScheduleSpec, Stepsizes, Trace,
    UpdateSchedule,
};
use dish::harness::{run_suite, ExperimentConfig, MethodSpec, MethodStatus, SuiteReport};
use dish::objectives::{make_least_squares, make_logistic, quadratic_toy_ring, ProblemInstance, SyntheticParams};
use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0))
}

// ---------------------------------------------------------------- criteria 1, 2, 8

struct TheoryCase {
    label: String,
    inst: ProblemInstance,
    sched: UpdateSchedule,
    th: TheoreticalStepsizes,
}

fn theory_instance(which: &str) -> ProblemInstance {
    match which {
        "toy" => quadratic_toy_ring(5, 2, 0).unwrap(),
        _ => scaled_setup1(0),
    }
}

fn theory_cases() -> Vec<TheoryCase> {
    let mut out = vec![];
    for iname in ["toy", "scaled LS"] {
        let n = theory_instance(iname).n();
        let schedules = [
            ("G", UpdateSchedule::all_gradient(n)),
            ("N", UpdateSchedule::all_newton(n)),
            ("DISH-2", UpdateSchedule::dish_k(n, 2)),
            ("switch", UpdateSchedule::from_spec(&ScheduleSpec::uniform_switching(5, 50, 0), n).unwrap()),
        ];
        for mu in [0.0, 1.0] {
            for (sname, sched) in &schedules {
                let inst = theory_instance(iname);
                let th = theoretical_stepsizes(&inst, sched, mu).unwrap();
                out.push(TheoryCase { label: format!("{iname}/{sname}/mu={mu}"), inst, sched: sched.clone(), th });
            }
        }
    }
    out
}

fn analysis(th: &TheoreticalStepsizes, per_step: bool) -> AnalysisOptions {
    AnalysisOptions { catalog: th.catalog.clone(), rho: th.rho, per_step }
}

fn short_runs(cases: &[TheoryCase]) -> Vec<Trace> {
    cases
        .iter()
        .map(|c| {
            let init = RunState::zeros(c.inst.stacked_dim());
            let opts = RunOptions::new(300).with_analysis(analysis(&c.th, true));
            run(&c.inst, &c.sched, &c.th.steps, &init, &opts).unwrap_or_else(|f| panic!("{}: {}", c.label, f.error))
        })
        .collect()
}

fn criterion1(cases: &[TheoryCase], traces: &[Trace], elapsed: Duration) -> Check {
    let mut worst = f64::INFINITY;
    for (c, t) in cases.iter().zip(traces) {
        ensure(t.rows.len() == 301, || format!("{}: {} rows", c.label, t.rows.len()))?;
        for w in t.rows.windows(2) {
            let (m0, m1) = (w[0].merit.unwrap(), w[1].merit.unwrap());
            let slack = (1.0 - c.th.rho) * m0 + 1e-9 - m1;
            worst = worst.min(slack);
            ensure(slack >= 0.0, || format!("{}: k={} merit {m0:e} -> {m1:e}", c.label, w[0].k))?;
        }
    }
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{} runs x 300 iterations, min slack {worst:.2e}, {:.1}s", cases.len(), elapsed.as_secs_f64()))
}

fn criterion8(cases: &[TheoryCase], traces: &[Trace]) -> Check {
    let mut worst = f64::INFINITY;
    for (c, t) in cases.iter().zip(traces) {
        for r in &t.rows[..t.rows.len() - 1] {
            let s = r.prop1_slack.unwrap().min(r.prop2_slack.unwrap());
            worst = worst.min(s);
            ensure(s >= -1e-7, || format!("{}: k={} slack {s:e}", c.label, r.k))?;
        }
    }
    Ok(format!("min proposition slack {worst:.2e}"))
}

fn criterion2(cases: &[TheoryCase]) -> Check {
    const MAX_ITERS: usize = 5_000_000;
    let mut longest = 0;
    let mut worst_ratio: f64 = 0.0;
    for c in cases {
        let init = RunState::zeros(c.inst.stacked_dim());
        let opts = RunOptions::new(MAX_ITERS).stop_at(1e-6).rows(false).with_analysis(analysis(&c.th, false));
        let t = run(&c.inst, &c.sched, &c.th.steps, &init, &opts).map_err(|f| format!("{}: {}", c.label, f.error))?;
        let k = t.reached_target_at.ok_or_else(|| format!("{}: not reached in {MAX_ITERS}", c.label))?;
        longest = longest.max(k);
        let ratio = t.envelope_max_ratio.unwrap();
        worst_ratio = worst_ratio.max(ratio);
        ensure(ratio <= 1.0, || format!("{}: squared error exceeds envelope by {ratio:.3}", c.label))?;
    }
    Ok(format!("all reach 1e-6 (slowest {longest} iterations), max error/envelope {worst_ratio:.3}"))
}

// ---------------------------------------------------------------- criterion 3

fn random_schedule(rng: &mut ChaCha8Rng, n: usize) -> UpdateSchedule {
    match rng.random_range(0..6u32) {
        0 => UpdateSchedule::all_gradient(n),
        1 => UpdateSchedule::all_newton(n),
        2 => UpdateSchedule::esom0(n),
        3 => UpdateSchedule::dish_k(n, rng.random_range(0..=n)),
        4 => UpdateSchedule::from_spec(&ScheduleSpec::uniform_switching(2, 12, rng.random()), n).unwrap(),
        _ => UpdateSchedule::from_spec(
            &ScheduleSpec::lognormal_switching(1.5, 0.5, Default::default(), 2.0, rng.random()),
            n,
        )
        .unwrap(),
    }
}

fn criterion3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for cfg in 0..20 {
        let n = rng.random_range(3..=8usize);
        let d = rng.random_range(1..=3usize);
        let inst = match rng.random_range(0..3u32) {
            0 => quadratic_toy_ring(n, d, rng.random()).unwrap(),
            kind => small_instance(kind - 1, n, d, rng.random()),
        };
        let sched = random_schedule(&mut rng, n);
        let steps = Stepsizes {
            a: (0..n).map(|i| if sched.always_newton_primal(i) { 1.0 } else { rng.random_range(0.02..0.3) }).collect(),
            b: (0..n).map(|_| rng.random_range(0.02..0.3)).collect(),
            mu: rng.random_range(0.0..1.5),
        };
        let init = RunState::new(random_vec(&mut rng, n * d, 1.0), random_vec(&mut rng, n * d, 1.0));
        let mut compact = CompactEngine::new(&inst, &sched, &steps).unwrap();
        let mut net = DistributedEngine::new(&inst, &sched, &steps, &init).unwrap();
        let mut state = init;
        for k in 0..100 {
            state = compact.step(&state).map_err(|e| format!("config {cfg} compact: {e}"))?;
            net.round().map_err(|e| format!("config {cfg} distributed: {e}"))?;
            let other = net.state();
            let dev = max_abs_diff(&state.x, &other.x).max(max_abs_diff(&state.lambda, &other.lambda));
            worst = worst.max(dev);
            ensure(dev <= 1e-12, || format!("config {cfg} iteration {k}: deviation {dev:e}"))?;
        }
    }
    Ok(format!("20 configurations x 100 iterations, max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 4

fn criterion4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let instances = [quadratic_toy_ring(5, 2, 1).unwrap(), scaled_setup1(2), small_instance(1, 6, 3, 3)];
    for (idx, inst) in instances.iter().enumerate() {
        let n = inst.n();
        let nd = inst.stacked_dim();
        for (name, sched) in [("AHU", UpdateSchedule::all_gradient(n)), ("ESOM-0", UpdateSchedule::esom0(n))] {
            for trial in 0..3 {
                let a: Vec<f64> = (0..n)
                    .map(|_| if trial == 0 && name == "ESOM-0" { 1.0 } else { rng.random_range(0.02..0.2) })
                    .collect();
                let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..0.2)).collect();
                let mu = [0.0, 0.5, 2.0][trial];
                let steps = Stepsizes { a: a.clone(), b: b.clone(), mu };
                let mut engine = CompactEngine::new(inst, &sched, &steps).unwrap();
                let mut state = RunState::new(random_vec(&mut rng, nd, 1.0), random_vec(&mut rng, nd, 1.0));
                let (mut x, mut l) = (state.x.clone(), state.lambda.clone());
                for k in 0..50 {
                    state = engine.step(&state).unwrap();
                    (x, l) = if name == "AHU" {
                        arrow_hurwicz(inst, &a, &b, mu, &x, &l)
                    } else {
                        esom0(inst, &a, &b, mu, &x, &l)
                    };
                    let dev = max_abs_diff(&state.x, &x).max(max_abs_diff(&state.lambda, &l));
                    worst = worst.max(dev);
                    ensure(dev <= 1e-12, || format!("{name} instance {idx} trial {trial} k {k}: {dev:e}"))?;
                }
            }
        }
    }
    Ok(format!("Arrow-Hurwicz and ESOM-0 oracles over 50 iterations, max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- criteria 5, 6

fn calculus_instances() -> Vec<(&'static str, ProblemInstance)> {
    vec![
        ("toy", quadratic_toy_ring(5, 2, 0).unwrap()),
        ("scaled LS", scaled_setup1(0)),
        ("logistic n6", small_instance(1, 6, 3, 11)),
        ("setup1", make_least_squares(&SyntheticParams::setup1(0)).unwrap()),
        ("setup2", make_logistic(&SyntheticParams::setup2(0)).unwrap()),
    ]
}

fn criterion5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_fd: f64 = 0.0;
    let mut worst_id: f64 = 0.0;
    for (name, inst) in calculus_instances() {
        let nd = inst.stacked_dim();
        let w = dense_w(&inst);
        for mu in [0.0, 1.0] {
            if nd <= 20 {
                for _ in 0..10 {
                    let lambda = random_vec(&mut rng, nd, 1.0);
                    let grad = dual_value_grad(&inst, mu, &lambda, INNER_TOL, None).unwrap().grad;
                    let h = 1e-4;
                    let fd = DVector::from_fn(nd, |c, _| {
                        let mut lp = lambda.clone();
                        let mut lm = lambda.clone();
                        lp[c] += h;
                        lm[c] -= h;
                        let gp = dual_value_grad(&inst, mu, &lp, INNER_TOL, None).unwrap().value;
                        let gm = dual_value_grad(&inst, mu, &lm, INNER_TOL, None).unwrap().value;
                        (gp - gm) / (2.0 * h)
                    });
                    let rel = (&fd - &grad).norm() / grad.norm();
                    worst_fd = worst_fd.max(rel);
                    ensure(rel <= 1e-5, || format!("{name} mu={mu}: finite-difference relative error {rel:e}"))?;
                }
            }
            for _ in 0..3 {
                let x = random_vec(&mut rng, nd, 1.0);
                let step = dual_newton_step_exact(&inst, mu, &x).map_err(|e| format!("{name}: {e}"))?;
                // Hessian-weighted average, computed here from the blocks
                let d = inst.d();
                let mut hsum = DMatrix::zeros(d, d);
                let mut hx = DVector::zeros(d);
                let hess = block_hessian(&inst, &x);
                for i in 0..inst.n() {
                    let hi = hess.view((i * d, i * d), (d, d));
                    hsum += hi;
                    hx += hi * x.rows(i * d, d);
                }
                let y = hsum.lu().solve(&hx).unwrap();
                let ones_y = DVector::from_fn(nd, |r, _| y[r % d]);
                let rhs = (&hess + &w * mu) * (ones_y - &x);
                let lhs = &w * &step.delta_lambda;
                let dev = (&lhs - &rhs).amax() / rhs.amax().max(1.0);
                worst_id = worst_id.max(dev);
                ensure(dev <= 1e-8, || format!("{name} mu={mu}: identity deviation {dev:e}"))?;
                // the step solves −W (∇²L)⁻¹ W Δλ = W x
                let sys = -&w * (&hess + &w * mu).lu().solve(&lhs).unwrap();
                let res = (&sys - &w * &x).amax() / (&w * &x).amax().max(1.0);
                ensure(res <= 1e-8, || format!("{name} mu={mu}: Newton system residual {res:e}"))?;
            }
        }
    }
    Ok(format!("max FD relative error {worst_fd:.1e}, max identity deviation {worst_id:.1e}"))
}

fn criterion6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut sector, mut pl, mut lip) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    // same inequality with (1−γ)² in place of (1−γ), reported alongside
    let mut pl_squared = f64::INFINITY;
    let mut pl_failure: Option<String> = None;
    for (name, inst) in calculus_instances() {
        let nd = inst.stacked_dim();
        let w = dense_w(&inst);
        let (s, l) = (inst.s(), inst.l());
        let gamma = inst.topology().gamma();
        let x_opt = inst.x_opt();
        let g_star: f64 = (0..inst.n()).map(|i| inst.objective(i).value(x_opt.as_slice())).sum();
        for mu in [0.0, 1.0] {
            for _ in 0..10 {
                let x = random_vec(&mut rng, nd, 2.0);
                let eig = (block_hessian(&inst, &x) + &w * mu).symmetric_eigen().eigenvalues;
                let (lo, hi) = (eig.min(), eig.max());
                sector = sector.min(lo - s).min(l + 2.0 * mu - hi);
                ensure(lo >= s - 1e-9 && hi <= l + 2.0 * mu + 1e-9, || {
                    format!("{name} mu={mu}: spectrum [{lo}, {hi}] outside [{s}, {}]", l + 2.0 * mu)
                })?;
            }
            let p_g = (1.0 - gamma) / (l + 2.0 * mu);
            for _ in 0..10 {
                let lambda = random_vec(&mut rng, nd, 1.0);
                let dp = dual_value_grad(&inst, mu, &lambda, INNER_TOL, None).unwrap();
                let gap = g_star - dp.value;
                let bound = dp.grad.norm_squared() / (2.0 * p_g);
                pl = pl.min(bound - gap);
                pl_squared = pl_squared.min(bound / (1.0 - gamma) - gap);
                if gap > bound + 1e-9 && pl_failure.is_none() {
                    pl_failure = Some(format!("{name} mu={mu}: PL gap {gap:e} > {bound:e}"));
                }
            }
            for _ in 0..20 {
                let l1 = random_vec(&mut rng, nd, 1.0);
                let l2 = &l1 + random_vec(&mut rng, nd, 0.5);
                let g1 = dual_value_grad(&inst, mu, &l1, INNER_TOL, None).unwrap().grad;
                let g2 = dual_value_grad(&inst, mu, &l2, INNER_TOL, None).unwrap().grad;
                let lhs = (&g1 - &g2).norm();
                let rhs = 4.0 / s * (&l1 - &l2).norm();
                lip = lip.min(rhs - lhs);
                ensure(lhs <= rhs * (1.0 + 1e-9), || format!("{name} mu={mu}: Lipschitz {lhs:e} > {rhs:e}"))?;
            }
        }
    }
    let text = format!(
        "min slacks: sector {sector:.2e}, PL {pl:.2e}, Lipschitz {lip:.2e}; with (1-gamma)^2 the PL slack is {pl_squared:.2e}"
    );
    match pl_failure {
        None => Ok(text),
        Some(f) => Err(format!("{f}; {text}")),
    }
}

// ---------------------------------------------------------------- criterion 7

fn suite(name: &str) -> (ExperimentConfig, SuiteReport) {
    let mut cfg = ExperimentConfig::preset(name, 0, std::env::temp_dir().join("dish_acceptance")).unwrap();
    let n = match &cfg.setup {
        dish::harness::SetupSpec::LeastSquares(p) | dish::harness::SetupSpec::Logistic(p) => p.n,
        _ => unreachable!(),
    };
    cfg.methods.push(MethodSpec::dish("DISH-0", ScheduleSpec::DishK { k: 0 }));
    cfg.methods.push(MethodSpec::dish(&format!("DISH-{n}"), ScheduleSpec::DishK { k: n }));
    let (_, report) = run_suite(&cfg, std::path::Path::new(".")).unwrap();
    (cfg, report)
}

fn criterion7() -> Check {
    let t0 = Instant::now();
    let mut failures = vec![];
    let mut monotone_somewhere = false;
    let mut details = vec![];
    for name in ["setup1", "setup2"] {
        let (_, report) = suite(name);
        let n = report
            .results
            .iter()
            .filter_map(|r| r.summary.method.strip_prefix("DISH-")?.parse::<usize>().ok())
            .max()
            .unwrap();
        let iters = |m: &str| report.get(m).and_then(|r| r.summary.iterations_to_target);
        let mut row = format!("{name}:");
        for r in &report.results {
            let s = &r.summary;
            row += &format!(" {}={:?}/R2={:.3}", s.method, s.iterations_to_target, s.r_squared.unwrap_or(f64::NAN));
            if s.status != MethodStatus::Reached {
                failures.push(format!("{name} {} status {:?}", s.method, s.status));
            }
            match s.r_squared {
                Some(r2) if r2 >= 0.95 => {}
                other => failures.push(format!("(a) {name} {} R2 {other:?}", s.method)),
            }
        }
        match (iters("DISH-N"), iters("DISH-G")) {
            (Some(kn), Some(kg)) if kn <= kg => {}
            (kn, kg) => failures.push(format!("(b) {name} DISH-N {kn:?} vs DISH-G {kg:?}")),
        }
        let ladder = [iters("DISH-0"), iters(&format!("DISH-{}", n.div_ceil(2))), iters(&format!("DISH-{n}"))];
        if let [Some(k0), Some(kh), Some(kn)] = ladder {
            monotone_somewhere |= k0 >= kh && kh >= kn;
        }
        row += &format!(" ladder {ladder:?}");
        details.push(row);
    }
    if !monotone_somewhere {
        failures.push("(c) iterations not non-increasing in K on either setup".into());
    }
    let elapsed = t0.elapsed();
    if elapsed > Duration::from_secs(600) {
        failures.push(format!("took {elapsed:?}"));
    }
    let text = format!("{} [{:.0}s]", details.join(" | "), elapsed.as_secs_f64());
    if failures.is_empty() {
        Ok(text)
    } else {
        Err(format!("{}; {text}", failures.join("; ")))
    }
}

// ----------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Check) -> Check {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    })
}

/// `ACCEPTANCE_ONLY=5,6` restricts the run to the listed criteria.
fn selected() -> Vec<u32> {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(list) => list.split(',').filter_map(|t| t.trim().parse().ok()).collect(),
        Err(_) => (1..=8).collect(),
    }
}

fn main() {
    let only = selected();
    let mut all_ok = true;
    let mut report = |id: u32, title: &str, outcome: &dyn Fn() -> Check| {
        if !only.contains(&id) {
            return;
        }
        let outcome = guarded(outcome);
        let (tag, text) = match &outcome {
            Ok(t) => ("PASS", t),
            Err(t) => ("FAIL", t),
        };
        all_ok &= outcome.is_ok();
        println!("criterion {id} {tag} {title}: {text}");
    };

    let cases = theory_cases();
    let needs_short = only.contains(&1) || only.contains(&8);
    let t0 = Instant::now();
    let short = if needs_short { catch_unwind(AssertUnwindSafe(|| short_runs(&cases))).ok() } else { None };
    let elapsed = t0.elapsed();
    let traces = || short.as_deref().ok_or_else(|| "criterion-1 runs failed".to_string());
    report(1, "merit contraction under theoretical stepsizes", &|| criterion1(&cases, traces()?, elapsed));
    report(2, "exact convergence within the error envelope", &|| criterion2(&cases));
    report(3, "compact and distributed engines agree", &criterion3);
    report(4, "Arrow-Hurwicz and ESOM-0 special cases", &criterion4);
    report(5, "dual gradient and dual Newton identity", &criterion5);
    report(6, "sector, PL and dual Lipschitz bounds", &criterion6);
    report(7, "qualitative benchmark behaviour", &criterion7);
    report(8, "proposition slacks", &|| criterion8(&cases, traces()?));
    if !all_ok {
        std::process::exit(1);
    }
}
