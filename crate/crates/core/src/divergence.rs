//! Kullback–Leibler divergences between Normal–Inverse-Gamma posteriors.
//!
//! For `p_k`: `ψ ~ IG(a_k, b_k)`, `γ | ψ ~ N(μ_k, ψ A_k⁻¹)`, the divergence
//! splits into the inverse-gamma KL of the `ψ` marginals plus the expected
//! Gaussian KL under `p_1`, which only needs `E[1/ψ] = a_1 / b_1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Dag, EffectPrior, Hyper, StandardizedDataset};
use crate::numerics::{digamma_unchecked, ln_gamma_ratio, Matrix, Vector};
use crate::posterior::{log_pdf, posterior_bayes, posterior_residual, NodePosterior};
use crate::scores::{MetricKind, WeightedGram, Weighting};

/// Values in `[-CLAMP_TOL, 0)` are treated as round-off and reported as 0.
pub const CLAMP_TOL: f64 = 1e-9;

/// `KL(p1 ‖ p2)` for two NIG densities of equal dimension.
pub fn kl_nig(p1: &NodePosterior, p2: &NodePosterior) -> Result<f64> {
    let k = p1.dim();
    if p2.dim() != k {
        return Err(Error::dims("kl_nig", k, p2.dim()));
    }
    let (a1, b1, a2, b2) = (p1.shape, p1.rate, p2.shape, p2.rate);
    let inverse_gamma = (a1 - a2) * digamma_unchecked(a1) + ln_gamma_ratio(a2, a1)?
        + a2 * (b1 / b2).ln()
        + a1 * (b2 - b1) / b1;
    if k == 0 {
        return Ok(inverse_gamma);
    }
    let a2_mat = p2.precision.matrix();
    let trace = p1.precision.solve(a2_mat)?.trace();
    let d = &p2.mu - &p1.mu;
    let quad = d.dot(&(a2_mat * &d));
    let gaussian = 0.5 * (p1.precision.logdet() - p2.precision.logdet()) + 0.5 * trace
        - k as f64 / 2.0
        + a1 / (2.0 * b1) * quad;
    Ok(inverse_gamma + gaussian)
}

/// The closed-form divergence `D(f_B, f_R)` between the Bayesian and the
/// residual posterior of one node, term by term:
///
/// ```text
/// ½ ln(|A_B| / |A_R|) + ½ tr(A_R A_B⁻¹) − |P|/2
///   + (δ+n+|P|)/(4β_B) · (μ_R − μ_B)ᵀ A_R (μ_R − μ_B)
///   + (δ+n−m+|P|)/2 · ln(β_B/β_R)
///   + ln Γ((δ+n−m+|P|)/2) − ln Γ((δ+n+|P|)/2)
///   + (δ+n+|P|)/2 · (β_R/β_B − 1)
///   + (m/2) ψ((δ+n+|P|)/2)
/// ```
pub fn kl_bayes_residual_from(bayes: &NodePosterior, resid: &NodePosterior, h: &Hyper) -> Result<f64> {
    let k = bayes.dim();
    if resid.dim() != k {
        return Err(Error::dims("kl_bayes_residual", k, resid.dim()));
    }
    let m = resid.m_used;
    if m == 0 {
        return Ok(0.0);
    }
    let n = bayes.n_eff as f64;
    let (kf, mf, delta) = (k as f64, m as f64, h.delta);
    let full = delta + n + kf;
    let reduced = delta + n - mf + kf;
    let (beta_b, beta_r) = (bayes.rate, resid.rate);

    let a_r = resid.precision.matrix();
    let log_det = 0.5 * (bayes.precision.logdet() - resid.precision.logdet());
    let trace = if k == 0 {
        0.0
    } else {
        0.5 * bayes.precision.solve(a_r)?.trace()
    };
    let d: Vector = &resid.mu - &bayes.mu;
    let quad = full / (4.0 * beta_b) * d.dot(&(a_r * &d));
    let rate_log = reduced / 2.0 * (beta_b / beta_r).ln();
    let gamma_ratio = ln_gamma_ratio(reduced / 2.0, full / 2.0)?;
    let rate_lin = full / 2.0 * (beta_r / beta_b - 1.0);
    let psi_term = mf / 2.0 * digamma_unchecked(full / 2.0);
    Ok(log_det + trace - kf / 2.0 + quad + rate_log + gamma_ratio + rate_lin + psi_term)
}

/// `D(f_B, f_R)` for one node given its columns, the design `Q` and the
/// effect prior of the Bayesian approach.
pub fn kl_bayes_residual(
    x_i: &Vector,
    x_parents: &Matrix,
    q: &Matrix,
    prior: &EffectPrior,
    h: &Hyper,
) -> Result<f64> {
    let bayes = posterior_bayes(x_i, x_parents, q, prior, h)?;
    let resid = posterior_residual(x_i, x_parents, q, h)?;
    kl_bayes_residual_from(&bayes, &resid, h)
}

/// The `υ → 0` limit of `D(f_B, f_R)`:
/// `ln Γ(a − m/2) − ln Γ(a) + (m/2) ψ(a)` with `a = (δ + n + |P|)/2`.
pub fn small_upsilon_limit(delta: f64, n: usize, parents: usize, m: usize) -> Result<f64> {
    let a = (delta + n as f64 + parents as f64) / 2.0;
    let half_m = m as f64 / 2.0;
    Ok(ln_gamma_ratio(a - half_m, a)? + half_m * digamma_unchecked(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Monte-Carlo estimate of `KL(p1 ‖ p2)` from `samples` draws of `p1`.
pub fn mc_kl(p1: &NodePosterior, p2: &NodePosterior, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < 1000 {
        return Err(Error::Invalid(format!("mc_kl needs at least 1000 samples, got {samples}")));
    }
    if p1.dim() != p2.dim() {
        return Err(Error::dims("mc_kl", p1.dim(), p2.dim()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for t in 0..samples {
        let draw = p1.draw(&mut rng);
        let diff = log_pdf(p1, &draw.gamma, draw.psi)? - log_pdf(p2, &draw.gamma, draw.psi)?;
        let delta = diff - mean;
        mean += delta / (t + 1) as f64;
        m2 += delta * (diff - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok(McEstimate {
        estimate: mean,
        std_error: (var / samples as f64).sqrt(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pairing {
    // Bayesian vs residual via the term-by-term closed form.
    BayesResidual,
    General,
}

/// Two posterior families on one dataset, compared node by node.
#[derive(Debug, Clone)]
pub struct PosteriorPair {
    first: WeightedGram,
    second: WeightedGram,
    hyper: Hyper,
    pairing: Pairing,
}

impl PosteriorPair {
    /// `f_B` (effect prior from `h`) against `f_R`.
    pub fn bayes_vs_residual(ds: &StandardizedDataset, h: &Hyper) -> Result<Self> {
        Ok(PosteriorPair {
            first: WeightedGram::for_dataset(MetricKind::Bayesian, ds, h)?,
            second: WeightedGram::for_dataset(MetricKind::Residual, ds, h)?,
            hyper: h.clone(),
            pairing: Pairing::BayesResidual,
        })
    }

    /// Bayesian posteriors under two effect priors.
    pub fn bayes_vs_bayes(
        ds: &StandardizedDataset,
        first: &EffectPrior,
        second: &EffectPrior,
        h: &Hyper,
    ) -> Result<Self> {
        Ok(PosteriorPair {
            first: WeightedGram::new(&Weighting::bayesian(ds.q(), first)?, ds.x())?,
            second: WeightedGram::new(&Weighting::bayesian(ds.q(), second)?, ds.x())?,
            hyper: h.clone(),
            pairing: Pairing::General,
        })
    }

    /// Arbitrary pair of precomputed Gram matrices, compared with [`kl_nig`].
    pub fn from_grams(first: WeightedGram, second: WeightedGram, h: &Hyper) -> Result<Self> {
        if first.node_count() != second.node_count() {
            return Err(Error::dims("posterior pair", first.node_count(), second.node_count()));
        }
        Ok(PosteriorPair {
            first,
            second,
            hyper: h.clone(),
            pairing: Pairing::General,
        })
    }

    pub fn node_count(&self) -> usize {
        self.first.node_count()
    }

    pub fn posteriors(&self, i: usize, parents: &[usize]) -> Result<(NodePosterior, NodePosterior)> {
        Ok((
            self.first.posterior(i, parents, &self.hyper)?,
            self.second.posterior(i, parents, &self.hyper)?,
        ))
    }

    /// Divergence for node `i` with the given parents.
    pub fn node(&self, i: usize, parents: &[usize]) -> Result<f64> {
        let (p1, p2) = self.posteriors(i, parents)?;
        match self.pairing {
            Pairing::BayesResidual => kl_bayes_residual_from(&p1, &p2, &self.hyper),
            Pairing::General => kl_nig(&p1, &p2),
        }
    }

    /// Per-node divergences for `g`.
    pub fn per_node(&self, g: &Dag) -> Result<Vec<f64>> {
        if g.node_count() != self.node_count() {
            return Err(Error::dims("divergence", self.node_count(), g.node_count()));
        }
        (0..g.node_count()).map(|i| self.node(i, g.parents(i))).collect()
    }

    /// `D_Σ` for `g`: the sum of node divergences.
    pub fn sigma(&self, g: &Dag) -> Result<f64> {
        Ok(self.per_node(g)?.iter().sum())
    }

    /// `(D_Σ^e, D_Σ^f)`: the empty graph and the full graph whose parents
    /// are all predecessors in `ordering`.
    pub fn bounds(&self, ordering: &[usize]) -> Result<(f64, f64)> {
        let p = self.node_count();
        let full = Dag::full_from_ordering(ordering)?;
        if full.node_count() != p {
            return Err(Error::Invalid(format!(
                "ordering has {} entries for {p} variables",
                ordering.len()
            )));
        }
        Ok((self.sigma(&Dag::empty(p))?, self.sigma(&full)?))
    }

    pub fn report(&self, g: &Dag, ordering: &[usize], descriptor: ReportMeta) -> Result<DivergenceReport> {
        let raw = self.per_node(g)?;
        let per_node: Vec<(usize, f64)> = raw.iter().map(|&d| clamp_roundoff(d)).enumerate().collect();
        let total = per_node.iter().map(|(_, d)| d).sum();
        let (e, f) = self.bounds(ordering)?;
        Ok(DivergenceReport {
            per_node,
            raw_per_node: raw,
            total,
            bound_empty: clamp_roundoff(e),
            bound_full: clamp_roundoff(f),
            metadata: descriptor,
        })
    }
}

/// Maps values in `[-CLAMP_TOL, 0)` to 0 and leaves everything else alone.
pub fn clamp_roundoff(d: f64) -> f64 {
    if (-CLAMP_TOL..0.0).contains(&d) {
        0.0
    } else {
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub effect_prior: String,
    pub graph: String,
}

/// Per-node divergences with their sum and the empty/full-graph bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub per_node: Vec<(usize, f64)>,
    /// Values before round-off clamping.
    pub raw_per_node: Vec<f64>,
    pub total: f64,
    pub bound_empty: f64,
    pub bound_full: f64,
    pub metadata: ReportMeta,
}

/// `D_Σ{f_B(Σ|X), f_R(Σ|X)}` for the graph `g`.
pub fn divergence_sigma(g: &Dag, ds: &StandardizedDataset, h: &Hyper) -> Result<f64> {
    PosteriorPair::bayes_vs_residual(ds, h)?.sigma(g)
}

/// `(D_Σ^e, D_Σ^f)` with the full graph taken along `ordering`.
pub fn divergence_bounds(ds: &StandardizedDataset, h: &Hyper, ordering: &[usize]) -> Result<(f64, f64)> {
    PosteriorPair::bayes_vs_residual(ds, h)?.bounds(ordering)
}

/// Builds a full report for `g`, using index order for the full-graph bound.
pub fn divergence_report(g: &Dag, ds: &StandardizedDataset, h: &Hyper) -> Result<DivergenceReport> {
    let pair = PosteriorPair::bayes_vs_residual(ds, h)?;
    let order: Vec<usize> = (0..ds.p()).collect();
    let meta = ReportMeta {
        n: ds.n(),
        m: ds.m(),
        p: ds.p(),
        effect_prior: h.effect_prior()?.describe(),
        graph: format!("{} edges", g.edge_count()),
    };
    pair.report(g, &order, meta)
}

/// Node divergences for many graphs in parallel; output order follows input.
pub fn divergence_sigma_many(pair: &PosteriorPair, graphs: &[Dag]) -> Result<Vec<f64>> {
    graphs.par_iter().map(|g| pair.sigma(g)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{standardize, Dataset};
    use crate::numerics::SpdMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn instance(n: usize, k: usize, m: usize, seed: u64) -> (Vector, Matrix, Matrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xp = gaussian(n, k, &mut rng);
        let q = gaussian(n, m, &mut rng);
        let b = gaussian(m.max(1), 1, &mut rng);
        let mut xi = gaussian(n, 1, &mut rng).column(0).clone_owned();
        for j in 0..k {
            xi += xp.column(j) * 0.4;
        }
        if m > 0 {
            xi += &q * b.rows(0, m) * 1.5;
        }
        (xi, xp, q)
    }

    fn nig(mu: Vec<f64>, a: Matrix, shape: f64, rate: f64) -> NodePosterior {
        NodePosterior {
            mu: Vector::from_vec(mu),
            precision: SpdMatrix::new(a).unwrap(),
            shape,
            rate,
            m_used: 0,
            n_eff: 0,
        }
    }

    #[test]
    fn identical_posteriors_have_zero_divergence() {
        let (xi, xp, q) = instance(20, 2, 1, 1);
        let p = posterior_residual(&xi, &xp, &q, &Hyper::default()).unwrap();
        assert!(kl_nig(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn no_exogenous_means_zero() {
        let (xi, xp, _) = instance(15, 2, 0, 2);
        let q = Matrix::zeros(15, 0);
        let d = kl_bayes_residual(&xi, &xp, &q, &EffectPrior::Precision(1.0), &Hyper::default()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn closed_form_matches_general_kl() {
        for seed in 0..20u64 {
            let n = 8 + (seed as usize * 7) % 60;
            let k = [0, 1, 3][seed as usize % 3];
            let m = [1, 2, 3, 6][seed as usize % 4];
            let (xi, xp, q) = instance(n, k, m, 100 + seed);
            let h = Hyper::new(0.5 + seed as f64 * 0.1, 1.0 + (seed % 3) as f64, None).unwrap();
            let prior = EffectPrior::Precision(10f64.powf(-3.0 + 5.0 * seed as f64 / 19.0));
            let b = posterior_bayes(&xi, &xp, &q, &prior, &h).unwrap();
            let r = posterior_residual(&xi, &xp, &q, &h).unwrap();
            let special = kl_bayes_residual_from(&b, &r, &h).unwrap();
            let general = kl_nig(&b, &r).unwrap();
            assert!((special - general).abs() <= 1e-8, "seed {seed}: {special} vs {general}");
            assert!(special >= -1e-9);
        }
    }

    #[test]
    fn upsilon_limit_value() {
        // δ=1, n=10, |P|=0, m=1 → a = 5.5; reference from 50-digit evaluation
        let want = 0.025_786_437_020_104_887_636;
        assert!((small_upsilon_limit(1.0, 10, 0, 1).unwrap() - want).abs() < 1e-12);
        let (xi, _, q) = instance(10, 0, 1, 3);
        let d = kl_bayes_residual(&xi, &Matrix::zeros(10, 0), &q, &EffectPrior::Precision(1e-8), &Hyper::default())
            .unwrap();
        assert!((d - want).abs() < 1e-5, "{d}");
    }

    #[test]
    fn inverse_gamma_kl_matches_quadrature() {
        let p1 = nig(vec![], Matrix::zeros(0, 0), 5.0, 2.0);
        let p2 = nig(vec![], Matrix::zeros(0, 0), 4.0, 2.0);
        let e = Vector::zeros(0);
        // ∫ log(f1/f2) f1 dψ on ψ = e^u
        let steps = 200_000;
        let (lo, hi) = (-10.0f64, 8.0f64);
        let du = (hi - lo) / steps as f64;
        let mut total = 0.0;
        for s in 0..steps {
            let psi = (lo + (s as f64 + 0.5) * du).exp();
            let l1 = log_pdf(&p1, &e, psi).unwrap();
            let l2 = log_pdf(&p2, &e, psi).unwrap();
            total += (l1 - l2) * l1.exp() * psi * du;
        }
        let got = kl_nig(&p1, &p2).unwrap();
        assert!((got - total).abs() < 1e-6, "{got} vs {total}");
    }

    #[test]
    fn mc_oracle_identity_and_gaussian_case() {
        let a = Matrix::from_element(1, 1, 2.0);
        let p = nig(vec![0.5], a.clone(), 50.0, 50.0);
        let est = mc_kl(&p, &p, 20_000, 1).unwrap();
        assert!(est.estimate.abs() <= 3.0 * est.std_error + 1e-15);

        // Nearly degenerate ψ (huge, equal shape/rate) isolates the Gaussian part:
        // KL(N(μ1, 1/2) ‖ N(μ2, 1/2)) = (μ1 − μ2)² · 2 / 2.
        let shape = 1e7;
        let p1 = nig(vec![0.0], a.clone(), shape, shape);
        let p2 = nig(vec![0.3], a, shape, shape);
        let analytic = 0.09;
        let est = mc_kl(&p1, &p2, 100_000, 2).unwrap();
        assert!((est.estimate - analytic).abs() <= 3.0 * est.std_error, "{est:?}");
        assert!((kl_nig(&p1, &p2).unwrap() - analytic).abs() < 1e-6);
    }

    #[test]
    fn mc_standard_error_scales_with_root_samples() {
        let p1 = nig(vec![0.0, 1.0], Matrix::identity(2, 2) * 3.0, 6.0, 4.0);
        let p2 = nig(vec![0.2, 0.8], Matrix::identity(2, 2) * 2.0, 5.0, 5.0);
        let a = mc_kl(&p1, &p2, 50_000, 5).unwrap();
        let b = mc_kl(&p1, &p2, 100_000, 5).unwrap();
        let ratio = a.std_error / b.std_error;
        assert!((ratio - 2f64.sqrt()).abs() < 0.1, "{ratio}");
        assert!(mc_kl(&p1, &p2, 999, 5).is_err());
        assert_eq!(mc_kl(&p1, &p2, 5000, 9).unwrap(), mc_kl(&p1, &p2, 5000, 9).unwrap());
    }

    fn dataset(n: usize, p: usize, m: usize, seed: u64) -> StandardizedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = gaussian(n, m, &mut rng);
        let mut x = gaussian(n, p, &mut rng);
        if m > 0 {
            x += &q * gaussian(m, p, &mut rng);
        }
        for i in 0..n {
            for j in 1..p {
                x[(i, j)] += 0.6 * x[(i, j - 1)];
            }
        }
        standardize(&Dataset::unnamed(x, q).unwrap()).unwrap()
    }

    #[test]
    fn sigma_is_sum_of_node_divergences() {
        let ds = dataset(30, 4, 2, 7);
        let h = Hyper::with_upsilon(1.0, 1.0, 0.5).unwrap();
        let g = Dag::from_edges(4, &[(0, 1), (1, 2), (0, 3)]).unwrap();
        let total = divergence_sigma(&g, &ds, &h).unwrap();
        let prior = h.effect_prior.clone().unwrap();
        let mut sum = 0.0;
        for i in 0..4 {
            let xp = ds.columns(g.parents(i));
            sum += kl_bayes_residual(&ds.column(i), &xp, ds.q(), &prior, &h).unwrap();
        }
        assert!((total - sum).abs() <= 1e-10);
        let report = divergence_report(&g, &ds, &h).unwrap();
        let per: f64 = report.per_node.iter().map(|(_, d)| d).sum();
        assert!((report.total - per).abs() <= 1e-10);
    }

    #[test]
    fn bounds_degenerate_cases() {
        let h = Hyper::with_upsilon(1.0, 1.0, 2.0).unwrap();
        let ds = dataset(20, 3, 0, 8);
        assert_eq!(divergence_bounds(&ds, &h, &[0, 1, 2]).unwrap(), (0.0, 0.0));
        let ds = dataset(20, 1, 2, 9);
        let (e, f) = divergence_bounds(&ds, &h, &[0]).unwrap();
        assert_eq!(e, f);
        assert!(divergence_bounds(&ds, &h, &[1]).is_err());
    }

    #[test]
    fn two_orientations_of_one_edge() {
        // KL is not claimed to be score equivalent; both values are finite and non-negative.
        let ds = dataset(25, 2, 2, 10);
        let h = Hyper::with_upsilon(1.0, 1.0, 1.0).unwrap();
        let fwd = divergence_sigma(&Dag::from_edges(2, &[(0, 1)]).unwrap(), &ds, &h).unwrap();
        let bwd = divergence_sigma(&Dag::from_edges(2, &[(1, 0)]).unwrap(), &ds, &h).unwrap();
        assert!(fwd >= -1e-9 && bwd >= -1e-9 && fwd.is_finite() && bwd.is_finite());
    }

    #[test]
    fn non_negativity_over_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for t in 0..200u64 {
            let n = rng.random_range(5..=100);
            let m = [1, 2, 3, 6][rng.random_range(0..4)];
            if n <= m + 1 {
                continue;
            }
            let k = rng.random_range(0..=3.min(n - m - 1));
            let ups = 10f64.powf(rng.random_range(-3.0..2.0));
            let (xi, xp, q) = instance(n, k, m, 1000 + t);
            let d = kl_bayes_residual(&xi, &xp, &q, &EffectPrior::Precision(ups), &Hyper::default()).unwrap();
            assert!(d >= -1e-9, "instance {t}: {d}");
        }
    }
}
