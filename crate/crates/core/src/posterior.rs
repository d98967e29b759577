//! Normal–Inverse-Gamma posteriors of the regression parameters `(γ_i, ψ_i)`.
//!
//! Convention: `ψ ~ InverseGamma(shape, rate)` with density
//! `∝ ψ^{−shape−1} e^{−rate/ψ}`, and `γ | ψ ~ N(μ, ψ A⁻¹)`. Under this
//! convention the prior `InverseGamma((δ + |P_i|)/2, τ/2)` updates to the
//! posterior rate `β` below.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{Dag, EffectPrior, Hyper, StandardizedDataset};
use crate::numerics::{ln_gamma_unchecked, Matrix, SpdMatrix, Vector};
use crate::scores::{MetricKind, WeightedGram, Weighting};

#[derive(Debug, Clone, PartialEq)]
pub struct NodePosterior {
    /// Posterior mean of `γ_i`.
    pub mu: Vector,
    /// `A`; the conditional covariance of `γ_i` is `ψ_i A⁻¹`.
    pub precision: SpdMatrix,
    pub shape: f64,
    pub rate: f64,
    /// Exogenous degrees of freedom absorbed by the weighting.
    pub m_used: usize,
    pub n_eff: usize,
}

impl NodePosterior {
    /// Conjugate update from weighted sufficient statistics
    /// `g_ii = x_iᵀWx_i`, `g_pi = X_PᵀWx_i`, `g_pp = X_PᵀWX_P`.
    pub fn from_sufficient_stats(
        g_ii: f64,
        g_pi: &Vector,
        g_pp: &Matrix,
        n_eff: usize,
        m_used: usize,
        h: &Hyper,
    ) -> Result<Self> {
        let k = g_pi.len();
        if g_pp.shape() != (k, k) {
            return Err(Error::dims("posterior", format!("{k}x{k}"), format!("{:?}", g_pp.shape())));
        }
        let precision = SpdMatrix::from_symmetric_part(Matrix::identity(k, k) * h.tau + g_pp)?;
        let mu = precision.solve_vec(g_pi)?;
        let rate = h.tau / 2.0 + 0.5 * (g_ii - g_pi.dot(&mu));
        if !(rate > 0.0) {
            return Err(Error::NonPositiveRate(rate));
        }
        Ok(NodePosterior {
            mu,
            precision,
            shape: (h.delta + n_eff as f64 + k as f64) / 2.0,
            rate,
            m_used,
            n_eff,
        })
    }

    /// Number of parents `|P_i|`.
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `E[ψ] = rate / (shape − 1)`, defined for `shape > 1`.
    pub fn psi_mean(&self) -> Option<f64> {
        (self.shape > 1.0).then(|| self.rate / (self.shape - 1.0))
    }

    /// One draw of `(γ, ψ)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        let g = Gamma::new(self.shape, 1.0).expect("shape is positive");
        let psi = self.rate / g.sample(rng);
        let z = Vector::from_fn(self.dim(), |_, _| rng.sample(StandardNormal));
        let gamma = &self.mu + self.precision.solve_upper_factor(&z) * psi.sqrt();
        Draw { gamma, psi }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub gamma: Vector,
    pub psi: f64,
}

fn stack(x_i: &Vector, x_parents: &Matrix) -> Result<Matrix> {
    if x_parents.nrows() != x_i.len() {
        return Err(Error::dims("posterior", x_i.len(), x_parents.nrows()));
    }
    let k = x_parents.ncols();
    let mut y = Matrix::zeros(x_i.len(), k + 1);
    y.set_column(0, x_i);
    y.columns_mut(1, k).copy_from(x_parents);
    Ok(y)
}

fn from_weighting(w: &Weighting, x_i: &Vector, x_parents: &Matrix, h: &Hyper) -> Result<NodePosterior> {
    let gram = WeightedGram::new(w, &stack(x_i, x_parents)?)?;
    let parents: Vec<usize> = (1..=x_parents.ncols()).collect();
    gram.posterior(0, &parents, h)
}

/// Posterior under the Bayesian approach with effect prior `b_i ~ N(0, ψ_i V)`.
pub fn posterior_bayes(
    x_i: &Vector,
    x_parents: &Matrix,
    q: &Matrix,
    prior: &EffectPrior,
    h: &Hyper,
) -> Result<NodePosterior> {
    from_weighting(&Weighting::bayesian(q, prior)?, x_i, x_parents, h)
}

/// Posterior under the residual approach (effects projected out by `Pᵀ`).
pub fn posterior_residual(
    x_i: &Vector,
    x_parents: &Matrix,
    q: &Matrix,
    h: &Hyper,
) -> Result<NodePosterior> {
    from_weighting(&Weighting::new(MetricKind::Residual, q, h)?, x_i, x_parents, h)
}

/// `count` draws of `(γ, ψ)`; the stream depends only on `seed`.
pub fn sample(np: &NodePosterior, count: usize, seed: u64) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| np.draw(&mut rng)).collect()
}

/// Joint log-density of `(γ, ψ)`.
pub fn log_pdf(np: &NodePosterior, gamma: &Vector, psi: f64) -> Result<f64> {
    if !(psi > 0.0) {
        return Err(Error::Domain {
            function: "NIG log_pdf",
            value: psi,
        });
    }
    if gamma.len() != np.dim() {
        return Err(Error::dims("log_pdf", np.dim(), gamma.len()));
    }
    let k = np.dim() as f64;
    let d = gamma - &np.mu;
    let quad = d.dot(&(np.precision.matrix() * &d));
    let log_ig = np.shape * np.rate.ln() - ln_gamma_unchecked(np.shape) - (np.shape + 1.0) * psi.ln()
        - np.rate / psi;
    let log_normal = -k / 2.0 * (2.0 * PI * psi).ln() + 0.5 * np.precision.logdet() - quad / (2.0 * psi);
    Ok(log_ig + log_normal)
}

/// Per-node posteriors for every node of a DAG.
#[derive(Debug, Clone)]
pub struct NetworkPosterior {
    pub metric: MetricKind,
    pub nodes: Vec<NodePosterior>,
    parents: Vec<Vec<usize>>,
}

impl NetworkPosterior {
    pub fn from_gram(gram: &WeightedGram, g: &Dag, h: &Hyper) -> Result<Self> {
        if g.node_count() != gram.node_count() {
            return Err(Error::dims("network posterior", gram.node_count(), g.node_count()));
        }
        let nodes = (0..g.node_count())
            .map(|i| gram.posterior(i, g.parents(i), h))
            .collect::<Result<Vec<_>>>()?;
        Ok(NetworkPosterior {
            metric: gram.metric(),
            nodes,
            parents: (0..g.node_count()).map(|i| g.parents(i).to_vec()).collect(),
        })
    }

    pub fn new(metric: MetricKind, g: &Dag, ds: &StandardizedDataset, h: &Hyper) -> Result<Self> {
        NetworkPosterior::from_gram(&WeightedGram::for_dataset(metric, ds, h)?, g, h)
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }
}

/// Plug-in covariance `Σ̂ = (I − B)⁻¹ Ψ̂ (I − B)⁻ᵀ`, where `B[i][j]` is the
/// posterior mean coefficient of parent `j` in node `i` and `Ψ̂` holds the
/// posterior means of `ψ_i`.
pub fn assemble_sigma(net: &NetworkPosterior, g: &Dag) -> Result<SpdMatrix> {
    let p = g.node_count();
    if net.nodes.len() != p {
        return Err(Error::dims("assemble_sigma", p, net.nodes.len()));
    }
    let mut b = Matrix::zeros(p, p);
    let mut psi = Vector::zeros(p);
    for (i, node) in net.nodes.iter().enumerate() {
        let parents = g.parents(i);
        if parents != net.parents(i) {
            return Err(Error::InvalidGraph(format!("node {i}: parents differ from the posterior's graph")));
        }
        for (slot, &j) in parents.iter().enumerate() {
            b[(i, j)] = node.mu[slot];
        }
        psi[i] = node.psi_mean().ok_or(Error::UndefinedMean {
            node: i,
            shape: node.shape,
        })?;
    }
    let inv = (Matrix::identity(p, p) - b)
        .try_inverse()
        .ok_or_else(|| Error::InvalidGraph("I - B is singular".into()))?;
    let sigma = &inv * Matrix::from_diagonal(&psi) * inv.transpose();
    SpdMatrix::from_symmetric_part(sigma)
}
