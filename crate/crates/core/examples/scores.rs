//! Local and network scores under the three metrics, and score equivalence
//! on a three-node chain.
//!
//! cargo run --release --example scores

use exonet::model::{standardize, Dag, Hyper};
use exonet::scores::{MetricKind, Scorer};
use exonet::simgen::{example1_spec, simulate};

fn main() -> exonet::Result<()> {
    let sim = simulate(&example1_spec(30, 1.0, 11)?)?;
    let ds = standardize(&sim.ds)?;
    let h = Hyper::with_upsilon(1.0, 1.0, 1.0)?;

    // 0 -> 1 -> 2, its reversal, and the collider 0 -> 1 <- 2.
    let chain = Dag::from_edges(20, &[(0, 1), (1, 2)])?;
    let reversed = Dag::from_edges(20, &[(2, 1), (1, 0)])?;
    let collider = Dag::from_edges(20, &[(0, 1), (2, 1)])?;

    println!("{:<10} {:>14} {:>14} {:>14}", "metric", "chain", "reversed", "collider");
    for metric in MetricKind::ALL {
        let scorer = Scorer::new(metric, &ds, &h)?;
        println!(
            "{:<10} {:>14.6} {:>14.6} {:>14.6}",
            metric.name(),
            scorer.network(&chain)?,
            scorer.network(&reversed)?,
            scorer.network(&collider)?
        );
    }

    let scorer = Scorer::new(MetricKind::Residual, &ds, &h)?;
    println!("\nresidual local scores of node 1:");
    for parents in [vec![], vec![0], vec![2], vec![0, 2]] {
        println!("  parents {parents:?}: {:.6}", scorer.local(1, &parents)?);
    }
    println!("cached parent sets: {}", scorer.cached_entries());
    Ok(())
}
