//! How far a misspecified prior covariance υ⁻¹I moves the Bayesian posterior
//! compared with the residual approach, for four generating covariances.
//!
//! cargo run --release --example example2_study [replicates]

use exonet::model::Hyper;
use exonet::simgen::VChoice;
use exonet::study::{ex2_grid, log_grid, summarize_ex2, EX2_GRID};

fn main() -> exonet::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let (lo, hi, points) = EX2_GRID;
    let grid = log_grid(lo, hi, points)?;
    let records = ex2_grid(&VChoice::ALL, &grid, reps, 2024, &Hyper::default())?;
    let summary = summarize_ex2(&records);
    println!("median of D(f_B, f_υ) − D(f_B, f_R), {reps} replicates");
    print!("{:>10}", "υ");
    for c in VChoice::ALL {
        print!(" {:>10}", c.to_string());
    }
    println!();
    for (j, u) in grid.iter().enumerate() {
        print!("{u:>10.3e}");
        for c in 0..VChoice::ALL.len() {
            print!(" {:>10.4}", summary[c * points + j].difference.median);
        }
        println!();
    }
    Ok(())
}
