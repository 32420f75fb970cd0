//! Generate the two synthetic benchmarks and look at their curvature.
//!
//! `cargo run --example objectives`

use dish::objectives::{make_least_squares, make_logistic, quadratic_toy_ring, SyntheticParams};

fn main() -> dish::Result<()> {
    let ls = make_least_squares(&SyntheticParams::setup1(0))?;
    let lr = make_logistic(&SyntheticParams::setup2(0))?;
    let toy = quadratic_toy_ring(5, 2, 0)?;
    for (name, inst) in [("least squares", &ls), ("logistic", &lr), ("toy ring", &toy)] {
        let x = inst.x_opt_stacked();
        let g = inst.gradient(&x);
        let summed: f64 = (0..inst.d()).map(|c| (0..inst.n()).map(|i| g[i * inst.d() + c]).sum::<f64>().powi(2)).sum();
        println!(
            "{name:<14} n {:>2} d {} s {:.4} l {:.4} gamma {:.3} f(x_opt) {:.6} ||sum grad|| {:.1e}",
            inst.n(),
            inst.d(),
            inst.s(),
            inst.l(),
            inst.topology().gamma(),
            inst.value(&x),
            summed.sqrt()
        );
    }
    println!("x_opt (least squares) = {:.5?}", ls.x_opt().as_slice());
    Ok(())
}
