//! Run DISH with several update schedules on the least-squares benchmark.
//!
//! `cargo run --release --example dish_run`

use dish::engine::{run, RunOptions, ScheduleSpec, Stepsizes, UpdateSchedule};
use dish::objectives::{make_least_squares, SyntheticParams};

fn main() -> dish::Result<()> {
    let inst = make_least_squares(&SyntheticParams::setup1(0))?;
    let n = inst.n();
    let init = dish::engine::RunState::zeros(inst.stacked_dim());
    let schedules = [
        ("all gradient", UpdateSchedule::all_gradient(n)),
        ("DISH-5", UpdateSchedule::dish_k(n, 5)),
        ("all Newton", UpdateSchedule::all_newton(n)),
        ("ESOM-0", UpdateSchedule::esom0(n)),
        ("switching", UpdateSchedule::from_spec(&ScheduleSpec::uniform_switching(5, 50, 3), n)?),
    ];
    for (name, sched) in &schedules {
        // a = 1 on Newton agents, shared a, b, mu elsewhere
        let steps = Stepsizes::uniform_newton_unit(sched, 0.03, 0.25, 1.0);
        let opts = RunOptions::new(20_000).stop_at(1e-8);
        match run(&inst, sched, &steps, &init, &opts) {
            Ok(trace) => println!(
                "{name:<13} reached 1e-8 at {:?}  last row kinds {}",
                trace.reached_target_at,
                trace.rows.last().map_or("", |r| r.kinds.as_str())
            ),
            Err(f) => println!("{name:<13} {}", f.error),
        }
    }
    Ok(())
}
