//! Local and network scores for the BGe, Bayesian and residual metrics.
//!
//! All three metrics share one conjugate Normal–Inverse-Gamma evidence
//! formula and differ only in the weighting `W` applied to the data:
//!
//! | metric   | `W`                        | effective `n` | normalizing term      |
//! |----------|----------------------------|---------------|-----------------------|
//! | BGe      | `I`                        | `n`           | n/a                   |
//! | Bayesian | `H_V = (I + QVQᵀ)⁻¹`       | `n`           | `−½ ln|I + QVQᵀ|`     |
//! | Residual | `PPᵀ = I − Q(QᵀQ)⁻¹Qᵀ`     | `n − m`       | n/a                   |
//!
//! Scores are absolute log marginal likelihoods; the uniform graph prior is
//! omitted.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dag, EffectPrior, Hyper, StandardizedDataset, RANK_TOL};
use crate::numerics::{ln_gamma_unchecked, HouseholderQr, Matrix, SpdMatrix, Vector};
use crate::posterior::NodePosterior;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Bge,
    Bayesian,
    Residual,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Bge, MetricKind::Bayesian, MetricKind::Residual];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Bge => "bge",
            MetricKind::Bayesian => "bayes",
            MetricKind::Residual => "residual",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bge" => Ok(MetricKind::Bge),
            "bayes" | "bayesian" => Ok(MetricKind::Bayesian),
            "residual" => Ok(MetricKind::Residual),
            other => Err(Error::Invalid(format!("unknown metric `{other}` (bge|bayes|residual)"))),
        }
    }
}

/// Orthonormal basis `P` of the orthogonal complement of `col(Q)`.
#[derive(Debug, Clone)]
pub struct Projector {
    basis: Matrix,
    projection: Matrix,
}

impl Projector {
    /// `P`, `n × (n − m)`.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// `PPᵀ`, `n × n`.
    pub fn projection(&self) -> &Matrix {
        &self.projection
    }
}

/// Builds `P` with `PᵀQ = 0`, `PᵀP = I` and `PPᵀ = I − Q(QᵀQ)⁻¹Qᵀ` from the
/// trailing columns of the Householder `Q`-factor of `Q`.
pub fn projection_complement(q: &Matrix) -> Result<Projector> {
    let qr = checked_qr(q)?;
    let (n, m) = q.shape();
    let full = qr.full_q();
    let basis = full.columns(m, n - m).clone_owned();
    let projection = &basis * basis.transpose();
    Ok(Projector { basis, projection })
}

fn checked_qr(q: &Matrix) -> Result<HouseholderQr> {
    let (n, m) = q.shape();
    if n <= m {
        return Err(Error::Invalid(format!("n must exceed m (n = {n}, m = {m})")));
    }
    let qr = HouseholderQr::new(q);
    let rank = qr.rank(RANK_TOL * q.norm().max(1.0));
    if rank < m {
        return Err(Error::RankDeficient { rank, m });
    }
    Ok(qr)
}

/// `H_V = I − Q(V⁻¹ + QᵀQ)⁻¹Qᵀ`, the inverse of `I + QVQᵀ`.
#[derive(Debug, Clone)]
pub struct ShrunkHat {
    matrix: SpdMatrix,
}

impl ShrunkHat {
    pub fn matrix(&self) -> &Matrix {
        self.matrix.matrix()
    }

    pub fn as_spd(&self) -> &SpdMatrix {
        &self.matrix
    }
}

pub fn shrunk_hat(q: &Matrix, v: &SpdMatrix) -> Result<ShrunkHat> {
    let (n, m) = q.shape();
    if v.dim() != m {
        return Err(Error::dims("shrunk_hat", format!("V {m}x{m}"), format!("V {0}x{0}", v.dim())));
    }
    let core = SpdMatrix::from_symmetric_part(v.inverse() + q.transpose() * q)?;
    let h = Matrix::identity(n, n) - q * core.solve(&q.transpose())?;
    Ok(ShrunkHat {
        matrix: SpdMatrix::from_symmetric_part(h)?,
    })
}

/// The data weighting for one metric, applied without forming `n × n`
/// matrices: Woodbury `m × m` solves for `H_V`, Householder reflections for
/// `Pᵀ`.
#[derive(Debug, Clone)]
pub struct Weighting {
    metric: MetricKind,
    inner: WeightInner,
    n_eff: usize,
    m_used: usize,
    log_det_cov: f64,
}

#[derive(Debug, Clone)]
enum WeightInner {
    Identity,
    Woodbury { q: Matrix, core: SpdMatrix },
    Projection { qr: HouseholderQr, m: usize },
}

impl Weighting {
    pub fn new(metric: MetricKind, q: &Matrix, h: &Hyper) -> Result<Self> {
        h.check()?;
        let (n, m) = q.shape();
        match metric {
            MetricKind::Bge => Ok(Weighting {
                metric,
                inner: WeightInner::Identity,
                n_eff: n,
                m_used: 0,
                log_det_cov: 0.0,
            }),
            MetricKind::Bayesian => Weighting::bayesian(q, h.effect_prior()?),
            MetricKind::Residual => {
                if m == 0 {
                    return Ok(Weighting {
                        metric,
                        inner: WeightInner::Identity,
                        n_eff: n,
                        m_used: 0,
                        log_det_cov: 0.0,
                    });
                }
                let qr = checked_qr(q)?;
                Ok(Weighting {
                    metric,
                    inner: WeightInner::Projection { qr, m },
                    n_eff: n - m,
                    m_used: m,
                    log_det_cov: 0.0,
                })
            }
        }
    }

    pub fn bayesian(q: &Matrix, prior: &EffectPrior) -> Result<Self> {
        let (n, m) = q.shape();
        if m == 0 {
            return Ok(Weighting {
                metric: MetricKind::Bayesian,
                inner: WeightInner::Identity,
                n_eff: n,
                m_used: 0,
                log_det_cov: 0.0,
            });
        }
        let core = SpdMatrix::from_symmetric_part(prior.precision_matrix(m)? + q.transpose() * q)?;
        // |I + QVQᵀ| = |V| · |V⁻¹ + QᵀQ|
        let log_det_cov = prior.logdet_covariance(m)? + core.logdet();
        Ok(Weighting {
            metric: MetricKind::Bayesian,
            inner: WeightInner::Woodbury { q: q.clone(), core },
            n_eff: n,
            m_used: 0,
            log_det_cov,
        })
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    /// Effective sample count `n′` entering the evidence and posterior shape.
    pub fn n_eff(&self) -> usize {
        self.n_eff
    }

    /// Exogenous degrees of freedom absorbed (`m` for the residual metric).
    pub fn m_used(&self) -> usize {
        self.m_used
    }

    /// `ln|I + QVQᵀ|` for the Bayesian metric, 0 otherwise.
    pub fn log_det_cov(&self) -> f64 {
        self.log_det_cov
    }

    /// `YᵀWY`.
    pub fn gram(&self, y: &Matrix) -> Result<Matrix> {
        match &self.inner {
            WeightInner::Identity => Ok(y.transpose() * y),
            WeightInner::Woodbury { q, core } => {
                if q.nrows() != y.nrows() {
                    return Err(Error::dims("weighted gram", q.nrows(), y.nrows()));
                }
                let qty = q.transpose() * y;
                let g = y.transpose() * y - qty.transpose() * core.solve(&qty)?;
                Ok(symmetrize(g))
            }
            WeightInner::Projection { qr, m } => {
                let z = qr.apply_qt(y)?;
                let tail = z.rows(*m, y.nrows() - m);
                Ok(tail.transpose() * tail)
            }
        }
    }
}

fn symmetrize(g: Matrix) -> Matrix {
    (&g + g.transpose()) * 0.5
}

/// `XᵀWX` for a whole dataset plus the metric's normalizing data; every
/// local score and posterior is a function of sub-blocks of it.
#[derive(Debug, Clone)]
pub struct WeightedGram {
    metric: MetricKind,
    gram: Matrix,
    n_eff: usize,
    m_used: usize,
    log_det_cov: f64,
}

impl WeightedGram {
    pub fn new(weighting: &Weighting, x: &Matrix) -> Result<Self> {
        Ok(WeightedGram {
            metric: weighting.metric,
            gram: weighting.gram(x)?,
            n_eff: weighting.n_eff,
            m_used: weighting.m_used,
            log_det_cov: weighting.log_det_cov,
        })
    }

    pub fn for_dataset(metric: MetricKind, ds: &StandardizedDataset, h: &Hyper) -> Result<Self> {
        WeightedGram::new(&Weighting::new(metric, ds.q(), h)?, ds.x())
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn matrix(&self) -> &Matrix {
        &self.gram
    }

    pub fn n_eff(&self) -> usize {
        self.n_eff
    }

    pub fn node_count(&self) -> usize {
        self.gram.nrows()
    }

    /// Conjugate posterior of node `i` regressed on `parents`.
    pub fn posterior(&self, i: usize, parents: &[usize], h: &Hyper) -> Result<NodePosterior> {
        let g_pp = self.gram.select_rows(parents).select_columns(parents);
        let g_pi = Vector::from_iterator(parents.len(), parents.iter().map(|&j| self.gram[(j, i)]));
        NodePosterior::from_sufficient_stats(self.gram[(i, i)], &g_pi, &g_pp, self.n_eff, self.m_used, h)
    }

    pub fn log_local_score(&self, i: usize, parents: &[usize], h: &Hyper) -> Result<f64> {
        let post = self.posterior(i, parents, h)?;
        Ok(evidence(&post, self.log_det_cov, h))
    }
}

/// Log evidence of the conjugate model, expressed through the posterior:
///
/// `−(n′/2)ln 2π − ½ldc + (k/2)ln τ − ½ln|A| + a₀ln(τ/2) + lnΓ(a₁) − lnΓ(a₀) − a₁ln β`
fn evidence(post: &NodePosterior, log_det_cov: f64, h: &Hyper) -> f64 {
    let k = post.dim() as f64;
    let a0 = (h.delta + k) / 2.0;
    let a1 = post.shape;
    -(post.n_eff as f64) / 2.0 * (2.0 * PI).ln() - 0.5 * log_det_cov + k / 2.0 * h.tau.ln()
        - 0.5 * post.precision.logdet()
        + a0 * (h.tau / 2.0).ln()
        + ln_gamma_unchecked(a1)
        - ln_gamma_unchecked(a0)
        - a1 * post.rate.ln()
}

/// Log local score `ln f(x_i | x_{P_i})` computed directly from columns.
pub fn log_local_score(
    metric: MetricKind,
    x_i: &Vector,
    x_parents: &Matrix,
    q: &Matrix,
    h: &Hyper,
) -> Result<f64> {
    if x_parents.nrows() != x_i.len() {
        return Err(Error::dims("log_local_score", x_i.len(), x_parents.nrows()));
    }
    let weighting = Weighting::new(metric, q, h)?;
    let k = x_parents.ncols();
    let mut y = Matrix::zeros(x_i.len(), k + 1);
    y.set_column(0, x_i);
    y.columns_mut(1, k).copy_from(x_parents);
    let gram = WeightedGram::new(&weighting, &y)?;
    let parents: Vec<usize> = (1..=k).collect();
    gram.log_local_score(0, &parents, h)
}

/// Scores graphs on one dataset under one metric and hyperparameter set,
/// caching local scores by `(node, sorted parents)`.
pub struct Scorer {
    gram: WeightedGram,
    hyper: Hyper,
    cache: Mutex<HashMap<(usize, Vec<usize>), f64>>,
}

impl Scorer {
    pub fn new(metric: MetricKind, ds: &StandardizedDataset, h: &Hyper) -> Result<Self> {
        Ok(Scorer {
            gram: WeightedGram::for_dataset(metric, ds, h)?,
            hyper: h.clone(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn metric(&self) -> MetricKind {
        self.gram.metric
    }

    pub fn node_count(&self) -> usize {
        self.gram.node_count()
    }

    pub fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    pub fn gram(&self) -> &WeightedGram {
        &self.gram
    }

    pub fn local(&self, i: usize, parents: &[usize]) -> Result<f64> {
        let mut key = parents.to_vec();
        key.sort_unstable();
        let key = (i, key);
        if let Some(&v) = self.cache.lock().expect("score cache poisoned").get(&key) {
            return Ok(v);
        }
        // computed outside the lock; a concurrent miss just recomputes
        let v = self.gram.log_local_score(i, &key.1, &self.hyper)?;
        self.cache.lock().expect("score cache poisoned").insert(key, v);
        Ok(v)
    }

    pub fn network(&self, g: &Dag) -> Result<f64> {
        if g.node_count() != self.node_count() {
            return Err(Error::dims("network score", self.node_count(), g.node_count()));
        }
        (0..g.node_count()).map(|i| self.local(i, g.parents(i))).sum()
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.lock().expect("score cache poisoned").len()
    }
}

/// Log network score: sum of log local scores over nodes.
pub fn log_network_score(
    metric: MetricKind,
    g: &Dag,
    ds: &StandardizedDataset,
    h: &Hyper,
) -> Result<f64> {
    Scorer::new(metric, ds, h)?.network(g)
}
