//! Replicate grids for the two simulation studies.
//!
//! Replicate `k` of a cell draws its dataset from a seed derived from the
//! master seed, the study, the sample size (or `V` choice) and `k`. The
//! prior precision `υ` is not part of the path, so every `υ` of one sample
//! size sees the same underlying draws up to the scale of the effects.

use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::PosteriorPair;
use crate::error::{Error, Result};
use crate::model::{standardize, Dag, EffectPrior, Hyper};
use crate::scores::{MetricKind, WeightedGram, Weighting};
use crate::seeds::derive_seed;
use crate::simgen::{example1_spec, example2_spec, simulate, VChoice};

/// Samples per group in the first study.
pub const EX1_SIZES: [usize; 5] = [5, 10, 20, 50, 100];
pub const EX1_UPSILONS: [f64; 6] = [0.001, 0.01, 0.1, 1.0, 10.0, 100.0];
pub const EX2_GRID: (f64, f64, usize) = (1e-4, 10.0, 30);

const EX1_TAG: u64 = 1;
const EX2_TAG: u64 = 2;

/// `points` values log-spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) || points == 0 || (points == 1 && lo != hi) {
        return Err(Error::Invalid(format!("bad log grid {lo}:{hi}:{points}")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..points)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == points - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * k as f64 / (points - 1) as f64)
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Quartiles with linear interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> Quartiles {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |prob: f64| {
        if v.is_empty() {
            return f64::NAN;
        }
        let pos = prob * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Quartiles {
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex1Record {
    pub n: usize,
    pub upsilon: f64,
    pub replicate: usize,
    pub d_empty: f64,
    pub d_full: f64,
    pub d_true: f64,
}

/// One replicate of the first study: bounds and true-graph divergence at
/// `(n, υ)` with `τ` and `δ` taken from `base`.
pub fn ex1_replicate(n: usize, upsilon: f64, replicate: usize, master: u64, base: &Hyper) -> Result<Ex1Record> {
    let seed = derive_seed(master, &[EX1_TAG, n as u64, replicate as u64]);
    let spec = example1_spec(n, upsilon, seed)?;
    let out = simulate(&spec)?;
    let ds = standardize(&out.ds)?;
    let h = Hyper::with_upsilon(base.tau, base.delta, upsilon)?;
    let pair = PosteriorPair::bayes_vs_residual(&ds, &h)?;
    let order: Vec<usize> = (0..spec.p()).collect();
    let (d_empty, d_full) = pair.bounds(&order)?;
    Ok(Ex1Record {
        n,
        upsilon,
        replicate,
        d_empty,
        d_full,
        d_true: pair.sigma(&spec.graph)?,
    })
}

/// All replicates of the first study, ordered by `(n, υ, replicate)`.
pub fn ex1_grid(sizes: &[usize], upsilons: &[f64], replicates: usize, master: u64, base: &Hyper) -> Result<Vec<Ex1Record>> {
    let cells: Vec<(usize, f64, usize)> = sizes
        .iter()
        .flat_map(|&n| upsilons.iter().flat_map(move |&u| (0..replicates).map(move |k| (n, u, k))))
        .collect();
    cells
        .par_iter()
        .map(|&(n, u, k)| ex1_replicate(n, u, k, master, base))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex1Summary {
    pub n: usize,
    pub upsilon: f64,
    pub replicates: usize,
    pub d_empty: Quartiles,
    pub d_full: Quartiles,
    pub d_true: Quartiles,
}

/// Groups records by `(n, υ)` in first-appearance order.
pub fn summarize_ex1(records: &[Ex1Record]) -> Vec<Ex1Summary> {
    let mut keys: Vec<(usize, f64)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.n, r.upsilon)) {
            keys.push((r.n, r.upsilon));
        }
    }
    keys.into_iter()
        .map(|(n, u)| {
            let cell: Vec<&Ex1Record> = records.iter().filter(|r| r.n == n && r.upsilon == u).collect();
            let col = |f: fn(&Ex1Record) -> f64| quartiles(&cell.iter().map(|r| f(r)).collect::<Vec<_>>());
            Ex1Summary {
                n,
                upsilon: u,
                replicates: cell.len(),
                d_empty: col(|r| r.d_empty),
                d_full: col(|r| r.d_full),
                d_true: col(|r| r.d_true),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex2Record {
    pub choice: VChoice,
    pub replicate: usize,
    pub upsilon: f64,
    /// `D_Σ(f_B, f_υ) − D_Σ(f_B, f_R)` on the true graph.
    pub value: f64,
}

/// One replicate of the second study over the whole `υ` grid. `f_B` uses the
/// generating `V`; `f_υ` uses `V = υ⁻¹ I`.
pub fn ex2_replicate(choice: VChoice, replicate: usize, master: u64, upsilons: &[f64], base: &Hyper) -> Result<Vec<Ex2Record>> {
    let seed = derive_seed(master, &[EX2_TAG, choice.index() as u64, replicate as u64]);
    let spec = example2_spec(choice, seed);
    let out = simulate(&spec)?;
    let ds = standardize(&out.ds)?;
    let h = Hyper::new(base.tau, base.delta, None)?;
    let truth_prior = EffectPrior::Covariance(spec.v_true.clone());
    let truth = WeightedGram::new(&Weighting::bayesian(ds.q(), &truth_prior)?, ds.x())?;
    let resid = WeightedGram::for_dataset(MetricKind::Residual, &ds, &h)?;
    let reference = PosteriorPair::from_grams(truth.clone(), resid, &h)?.sigma(&spec.graph)?;
    upsilons
        .iter()
        .map(|&u| {
            let gram = WeightedGram::new(&Weighting::bayesian(ds.q(), &EffectPrior::Precision(u))?, ds.x())?;
            let d = PosteriorPair::from_grams(truth.clone(), gram, &h)?.sigma(&spec.graph)?;
            Ok(Ex2Record {
                choice,
                replicate,
                upsilon: u,
                value: d - reference,
            })
        })
        .collect()
}

/// All replicates of the second study, ordered by `(V, replicate, υ)`.
pub fn ex2_grid(choices: &[VChoice], upsilons: &[f64], replicates: usize, master: u64, base: &Hyper) -> Result<Vec<Ex2Record>> {
    let cells: Vec<(VChoice, usize)> = choices
        .iter()
        .flat_map(|&c| (0..replicates).map(move |k| (c, k)))
        .collect();
    let nested: Vec<Vec<Ex2Record>> = cells
        .par_iter()
        .map(|&(c, k)| ex2_replicate(c, k, master, upsilons, base))
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ex2Summary {
    pub choice: VChoice,
    pub upsilon: f64,
    pub replicates: usize,
    pub difference: Quartiles,
}

/// Groups records by `(V, υ)`, sorted by `V` then by `υ`.
pub fn summarize_ex2(records: &[Ex2Record]) -> Vec<Ex2Summary> {
    let mut keys: Vec<(VChoice, f64)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.choice, r.upsilon)) {
            keys.push((r.choice, r.upsilon));
        }
    }
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.into_iter()
        .map(|(c, u)| {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.choice == c && r.upsilon == u)
                .map(|r| r.value)
                .collect();
            Ex2Summary {
                choice: c,
                upsilon: u,
                replicates: vals.len(),
                difference: quartiles(&vals),
            }
        })
        .collect()
}

/// Graph used by a study, for reporting.
pub fn study_graph(study: &str) -> Result<Dag> {
    match study {
        "ex1" => Ok(crate::simgen::default_graph()),
        "ex2" => Ok(crate::simgen::example2_graph()),
        other => Err(Error::Invalid(format!("unknown study `{other}` (expected ex1 or ex2)"))),
    }
}
