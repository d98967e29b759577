//! Closed-form KL divergence between the Bayesian and residual posteriors,
//! checked against the general NIG formula and a Monte-Carlo estimate.
//!
//! cargo run --release --example kl_divergence

use exonet::divergence::{kl_bayes_residual_from, kl_nig, mc_kl, small_upsilon_limit};
use exonet::model::{standardize, EffectPrior, Hyper};
use exonet::posterior::{posterior_bayes, posterior_residual};
use exonet::simgen::{example1_spec, simulate};

fn main() -> exonet::Result<()> {
    let sim = simulate(&example1_spec(20, 1.0, 5)?)?;
    let ds = standardize(&sim.ds)?;
    let g = &sim.spec.graph;
    let h = Hyper::default();
    let node = (0..g.node_count()).max_by_key(|&i| g.parents(i).len()).unwrap();
    let x_i = ds.column(node);
    let x_p = ds.columns(g.parents(node));
    let (n, k, m) = (ds.n(), g.parents(node).len(), ds.m());
    println!("node {node}: n={n}, |P|={k}, m={m}");
    println!("υ→0 limit: {:.8}\n", small_upsilon_limit(h.delta, n, k, m)?);

    println!("{:>8} {:>14} {:>14} {:>14} {:>10}", "υ", "closed form", "general", "monte carlo", "se");
    for (j, upsilon) in [1e-6, 1e-3, 1e-1, 1.0, 10.0, 100.0].into_iter().enumerate() {
        let bayes = posterior_bayes(&x_i, &x_p, ds.q(), &EffectPrior::Precision(upsilon), &h)?;
        let resid = posterior_residual(&x_i, &x_p, ds.q(), &h)?;
        let closed = kl_bayes_residual_from(&bayes, &resid, &h)?;
        let general = kl_nig(&bayes, &resid)?;
        let mc = mc_kl(&bayes, &resid, 50_000, j as u64)?;
        println!(
            "{upsilon:>8.0e} {closed:>14.8} {general:>14.8} {:>14.8} {:>10.2e}",
            mc.estimate, mc.std_error
        );
    }
    Ok(())
}
