//! Build graphs, weight them and inspect the mixing spectrum.
//!
//! `cargo run --example topology`

use dish::topology::{degree_weights, erdos_renyi, Graph};

fn main() -> dish::Result<()> {
    let sample = erdos_renyi(10, 0.7, 0)?;
    println!("G(10, 0.7): {} edges, {} rejected draws", sample.graph.edge_count(), sample.resamples);

    for (name, g) in [
        ("ring(8)", Graph::ring(8)?),
        ("path(8)", Graph::path(8)?),
        ("star(8)", Graph::star(8)?),
        ("complete(8)", Graph::complete(8)?),
        ("G(10, 0.7)", sample.graph),
    ] {
        let z = degree_weights(&g, 2)?;
        println!(
            "{name:<12} max degree {:>2}  gamma {:.4}  spectral gap {:.4}  ||W|| {:.4}",
            g.max_degree(),
            z.gamma(),
            z.spectral_gap(),
            z.w_norm()
        );
    }

    // W = (I - Z) ⊗ I_d applied blockwise
    let z = degree_weights(&Graph::ring(4)?, 2)?;
    let v = nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
    println!("W v = {:?}", z.apply_w(&v)?.as_slice());
    print!("Z as CSV:\n{}", z.to_csv());
    Ok(())
}
