//! Message-passing rounds agree with the stacked engine.
//!
//! `cargo run --example distributed`

use dish::engine::{CompactEngine, DistributedEngine, RunState, Stepsizes, UpdateSchedule};
use dish::objectives::quadratic_toy_ring;

fn main() -> dish::Result<()> {
    let inst = quadratic_toy_ring(6, 3, 1)?;
    let sched = UpdateSchedule::dish_k(6, 3);
    let steps = Stepsizes::uniform_newton_unit(&sched, 0.5, 0.5, 0.5);
    let mut compact = CompactEngine::new(&inst, &sched, &steps)?;
    let mut state = RunState::zeros(inst.stacked_dim());
    let mut net = DistributedEngine::new(&inst, &sched, &steps, &state)?;
    for round in 1..=50 {
        state = compact.step(&state)?;
        let sent = net.round()?;
        if round % 10 == 0 {
            let gap = (&state.x - &net.state().x).amax().max((&state.lambda - &net.state().lambda).amax());
            println!("round {round:>3}: {sent} messages, max |compact - distributed| = {gap:.2e}");
        }
    }
    println!("total messages {}", net.total_messages());
    for a in net.agents() {
        println!("agent {} x = {:.6?}", a.id, a.x.as_slice());
    }
    println!("x_opt   = {:.6?}", inst.x_opt().as_slice());
    Ok(())
}
