//! Conjugate posteriors for one node under the Bayesian and residual
//! approaches, posterior draws, and the plug-in covariance of a network.
//!
//! cargo run --release --example posteriors

use exonet::model::{standardize, EffectPrior, Hyper};
use exonet::posterior::{assemble_sigma, posterior_bayes, posterior_residual, sample, NetworkPosterior};
use exonet::scores::MetricKind;
use exonet::simgen::{example1_spec, simulate};

fn main() -> exonet::Result<()> {
    let sim = simulate(&example1_spec(50, 0.1, 3)?)?;
    let ds = standardize(&sim.ds)?;
    let g = &sim.spec.graph;
    let h = Hyper::default();

    let node = (0..g.node_count()).find(|&i| !g.parents(i).is_empty()).unwrap_or(0);
    let x_i = ds.column(node);
    let x_p = ds.columns(g.parents(node));
    println!("node {node} with parents {:?}", g.parents(node));

    for upsilon in [0.01, 1.0, 100.0] {
        let np = posterior_bayes(&x_i, &x_p, ds.q(), &EffectPrior::Precision(upsilon), &h)?;
        println!(
            "  bayes υ={upsilon:<6} mean {:?}  shape {:.2}  rate {:.4}",
            np.mu.as_slice(),
            np.shape,
            np.rate
        );
    }
    let resid = posterior_residual(&x_i, &x_p, ds.q(), &h)?;
    println!(
        "  residual     mean {:?}  shape {:.2}  rate {:.4}",
        resid.mu.as_slice(),
        resid.shape,
        resid.rate
    );

    let draws = sample(&resid, 5, 7);
    for d in &draws {
        println!("  draw γ = {:?}, ψ = {:.4}", d.gamma.as_slice(), d.psi);
    }

    let net = NetworkPosterior::new(MetricKind::Residual, g, &ds, &h)?;
    let sigma = assemble_sigma(&net, g)?;
    println!("\nplug-in Σ, top-left 4×4 block:");
    let m = sigma.matrix();
    for r in 0..4 {
        let row: Vec<String> = (0..4).map(|c| format!("{:8.4}", m[(r, c)])).collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
