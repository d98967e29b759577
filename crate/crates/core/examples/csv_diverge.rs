//! Divergence bounds over a υ grid for data read from CSV, the library form
//! of `exonet diverge`. Without arguments a grape-shaped dataset (n = 51,
//! p = 26, three site indicators) is simulated and written to a temporary
//! directory first.
//!
//! cargo run --release --example csv_diverge [X.csv Q.csv]

use exonet::divergence::PosteriorPair;
use exonet::io::{read_dataset, write_dataset};
use exonet::model::{standardize, Dag, Hyper};
use exonet::numerics::SpdMatrix;
use exonet::simgen::{simulate, CoefficientLaw, EffectDesign, SimSpec};
use exonet::study::log_grid;

fn main() -> exonet::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (x, q) = if args.len() == 2 {
        (args[0].clone().into(), args[1].clone().into())
    } else {
        let dir = std::env::temp_dir().join("exonet_csv_diverge");
        std::fs::create_dir_all(&dir)?;
        let spec = SimSpec {
            graph: Dag::from_edges(26, &[(0, 1), (1, 2), (3, 4), (5, 6), (6, 7), (8, 7), (10, 11), (12, 13)])?,
            effect_design: EffectDesign::GroupIndicator { groups: 3 },
            v_true: SpdMatrix::identity(3),
            n: 51,
            seed: 8,
            coefficient_law: CoefficientLaw::default(),
        };
        let sim = simulate(&spec)?;
        println!("wrote simulated data to {}", dir.display());
        write_dataset(&dir, &sim.ds)?
    };

    let ds = standardize(&read_dataset(&x, Some(&q))?)?;
    let order: Vec<usize> = (0..ds.p()).collect();
    println!("n={}, p={}, m={}", ds.n(), ds.p(), ds.m());
    println!("{:>10} {:>12} {:>12}", "υ", "D_empty", "D_full");
    for u in log_grid(1e-3, 1e2, 11)? {
        let pair = PosteriorPair::bayes_vs_residual(&ds, &Hyper::with_upsilon(1.0, 1.0, u)?)?;
        let (lo, hi) = pair.bounds(&order)?;
        println!("{u:>10.3e} {lo:>12.5} {hi:>12.5}");
    }
    Ok(())
}
