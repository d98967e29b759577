//! Structure learning by hill climbing with restarts, compared with the
//! true graph of a simulated dataset.
//!
//! cargo run --release --example hill_climb

use exonet::model::{standardize, Hyper};
use exonet::scores::MetricKind;
use exonet::search::{equivalence_class, hill_climb, SearchConfig};
use exonet::simgen::{example1_spec, simulate};

fn main() -> exonet::Result<()> {
    let sim = simulate(&example1_spec(200, 0.1, 21)?)?;
    let ds = standardize(&sim.ds)?;
    let truth = &sim.spec.graph;
    let h = Hyper::with_upsilon(1.0, 1.0, 0.1)?;
    let true_skeleton = equivalence_class(truth).skeleton;
    println!("true graph: {} edges", truth.edge_count());

    for metric in MetricKind::ALL {
        let cfg = SearchConfig {
            metric,
            restarts: 5,
            seed: 1,
            ..SearchConfig::default()
        };
        let res = hill_climb(&ds, &h, &cfg)?;
        let skeleton = equivalence_class(&res.best).skeleton;
        let hits = skeleton.intersection(&true_skeleton).count();
        println!(
            "{:<9} score {:>12.4}  edges {:>2}  skeleton hits {hits}/{}  extra {}  (best restart {}, {} moves)",
            metric.name(),
            res.score,
            res.best.edge_count(),
            true_skeleton.len(),
            skeleton.len() - hits,
            res.best_restart,
            res.trace.iter().filter(|t| t.restart == res.best_restart && t.mv.is_some()).count()
        );
    }
    Ok(())
}
