//! Divergence bounds and true-graph divergence over sample size and prior
//! precision on the 20-node simulation design.
//!
//! cargo run --release --example example1_study [replicates]

use exonet::model::Hyper;
use exonet::study::{ex1_grid, summarize_ex1, EX1_SIZES, EX1_UPSILONS};

fn main() -> exonet::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let records = ex1_grid(&EX1_SIZES, &EX1_UPSILONS, reps, 2024, &Hyper::default())?;
    println!("{reps} replicates per cell, medians (q1, q3)");
    println!("{:>4} {:>7} {:>26} {:>26} {:>26}", "n", "υ", "D_empty", "D_true", "D_full");
    for s in summarize_ex1(&records) {
        let q = |x: exonet::study::Quartiles| format!("{:.4} ({:.4}, {:.4})", x.median, x.q1, x.q3);
        println!(
            "{:>4} {:>7} {:>26} {:>26} {:>26}",
            s.n,
            s.upsilon,
            q(s.d_empty),
            q(s.d_true),
            q(s.d_full)
        );
    }
    Ok(())
}
