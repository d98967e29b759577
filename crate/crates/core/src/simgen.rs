//! Seeded generators for linear recursive systems with exogenous effects.
//!
//! Node `i` is generated as `x_i = X_{P_i} γ_i + Q b_i + ε_i` with
//! `ψ_i ~ InverseGamma(shape, rate)`, `γ_{i,l} ~ N(0, s ψ_i)` for each parent,
//! `b_i ~ N(0, ψ_i V)` and `ε_i ~ N(0, ψ_i I)`. Every node draws from its own
//! substream of [`SimSpec::seed`].

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{default_names, Dag, Dataset};
use crate::numerics::{column_rank, Matrix, SpdMatrix, Vector};
use crate::seeds::substream;

/// How the exogenous design `Q` is built.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectDesign {
    /// No exogenous variables.
    None,
    /// `groups` contiguous blocks of equal size; column `j` indicates block `j`.
    GroupIndicator { groups: usize },
    /// Standard-normal entries drawn from `seed`, independent of [`SimSpec::seed`].
    FixedGaussian { m: usize, seed: u64 },
    User(Matrix),
}

impl EffectDesign {
    pub fn columns(&self) -> usize {
        match self {
            EffectDesign::None => 0,
            EffectDesign::GroupIndicator { groups } => *groups,
            EffectDesign::FixedGaussian { m, .. } => *m,
            EffectDesign::User(q) => q.ncols(),
        }
    }

    /// The `n × m` design matrix.
    pub fn build(&self, n: usize) -> Result<Matrix> {
        match self {
            EffectDesign::None => Ok(Matrix::zeros(n, 0)),
            EffectDesign::GroupIndicator { groups } => {
                if *groups == 0 || n % groups != 0 {
                    return Err(Error::Invalid(format!("{n} rows cannot form {groups} equal groups")));
                }
                let size = n / groups;
                Ok(Matrix::from_fn(n, *groups, |r, c| if r / size == c { 1.0 } else { 0.0 }))
            }
            EffectDesign::FixedGaussian { m, seed } => {
                let mut rng = substream(*seed, &[0xD3516]);
                // Column-major fill keeps column j independent of later columns.
                let mut q = Matrix::zeros(n, *m);
                for c in 0..*m {
                    for r in 0..n {
                        q[(r, c)] = rng.sample(StandardNormal);
                    }
                }
                Ok(q)
            }
            EffectDesign::User(q) => {
                if q.nrows() != n {
                    return Err(Error::dims("user design rows", n, q.nrows()));
                }
                Ok(q.clone())
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            EffectDesign::None => "none".into(),
            EffectDesign::GroupIndicator { groups } => format!("group-indicator({groups})"),
            EffectDesign::FixedGaussian { m, seed } => format!("fixed-gaussian(m={m}, seed={seed})"),
            EffectDesign::User(q) => format!("user({}x{})", q.nrows(), q.ncols()),
        }
    }
}

/// Distribution of the per-node variance and edge coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientLaw {
    pub psi_shape: f64,
    pub psi_rate: f64,
    /// `γ_{i,l} ~ N(0, gamma_scale · ψ_i)`.
    pub gamma_scale: f64,
}

impl Default for CoefficientLaw {
    fn default() -> Self {
        CoefficientLaw {
            psi_shape: 1.0,
            psi_rate: 2.0,
            gamma_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub graph: Dag,
    pub effect_design: EffectDesign,
    pub v_true: SpdMatrix,
    /// Total number of samples.
    pub n: usize,
    pub seed: u64,
    pub coefficient_law: CoefficientLaw,
}

impl SimSpec {
    pub fn p(&self) -> usize {
        self.graph.node_count()
    }

    pub fn check(&self) -> Result<()> {
        let m = self.effect_design.columns();
        if self.v_true.dim() != m {
            return Err(Error::dims("V_true", m, self.v_true.dim()));
        }
        if self.n <= m {
            return Err(Error::Invalid(format!("n = {} must exceed the {m} design columns", self.n)));
        }
        let law = self.coefficient_law;
        if !(law.psi_shape > 0.0 && law.psi_rate > 0.0 && law.gamma_scale >= 0.0) {
            return Err(Error::Invalid(format!("bad coefficient law {law:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTruth {
    pub from: usize,
    pub to: usize,
    pub gamma: f64,
}

/// The parameters actually drawn for a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub edges: Vec<EdgeTruth>,
    pub psi: Vec<f64>,
    /// `b_i` for each node, length `m`.
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub ds: Dataset,
    pub truth: Truth,
    pub spec: SimSpec,
}

/// Generates one dataset.
pub fn simulate(spec: &SimSpec) -> Result<SimOutput> {
    spec.check()?;
    let (n, p) = (spec.n, spec.p());
    let q = spec.effect_design.build(n)?;
    let m = q.ncols();
    let law = spec.coefficient_law;
    let inv_gamma = Gamma::new(law.psi_shape, 1.0 / law.psi_rate)
        .map_err(|e| Error::Invalid(format!("psi law: {e}")))?;
    let v_factor = spec.v_true.cholesky_factor();

    let mut x = Matrix::zeros(n, p);
    let mut psi = vec![0.0; p];
    let mut b = vec![Vec::new(); p];
    let mut edges = Vec::new();
    for i in spec.graph.topological_order() {
        let mut rng = substream(spec.seed, &[i as u64]);
        let psi_i = 1.0 / inv_gamma.sample(&mut rng);
        let sd = psi_i.sqrt();
        let mut col = Vector::zeros(n);
        for &j in spec.graph.parents(i) {
            let g: f64 = rng.sample::<f64, _>(StandardNormal) * sd * law.gamma_scale.sqrt();
            col += x.column(j) * g;
            edges.push(EdgeTruth { from: j, to: i, gamma: g });
        }
        let z = Vector::from_fn(m, |_, _| rng.sample(StandardNormal));
        let b_i = v_factor * z * sd;
        if m > 0 {
            col += &q * &b_i;
        }
        for r in 0..n {
            col[r] += rng.sample::<f64, _>(StandardNormal) * sd;
        }
        x.set_column(i, &col);
        psi[i] = psi_i;
        b[i] = b_i.iter().copied().collect();
    }
    edges.sort_by_key(|e| (e.from, e.to));
    let ds = Dataset::new(x, q, default_names("X", p), default_names("Q", m))?;
    Ok(SimOutput {
        ds,
        truth: Truth { edges, psi, b },
        spec: spec.clone(),
    })
}

/// Stand-in sparse graph on 20 nodes: 15 edges in small components, node 19
/// isolated.
pub fn default_graph() -> Dag {
    const EDGES: [(usize, usize); 15] = [
        (0, 1),
        (0, 2),
        (1, 3),
        (2, 3),
        (4, 5),
        (5, 6),
        (6, 7),
        (8, 10),
        (9, 10),
        (10, 11),
        (12, 13),
        (12, 14),
        (14, 15),
        (16, 17),
        (17, 18),
    ];
    Dag::from_edges(20, &EDGES).expect("static graph is acyclic")
}

/// The default graph restricted to nodes `0..10`.
pub fn example2_graph() -> Dag {
    let edges: Vec<_> = default_graph().edges().into_iter().filter(|&(a, b)| a < 10 && b < 10).collect();
    Dag::from_edges(10, &edges).expect("subgraph of a DAG")
}

/// Two groups of `n_per_group` samples on the default graph, `V = υ⁻¹ I₂`.
pub fn example1_spec(n_per_group: usize, upsilon: f64, seed: u64) -> Result<SimSpec> {
    if n_per_group < 2 {
        return Err(Error::Invalid(format!("n_per_group must be at least 2, got {n_per_group}")));
    }
    if !(upsilon > 0.0) || !upsilon.is_finite() {
        return Err(Error::InvalidHyper(format!("upsilon must be positive, got {upsilon}")));
    }
    Ok(SimSpec {
        graph: default_graph(),
        effect_design: EffectDesign::GroupIndicator { groups: 2 },
        v_true: SpdMatrix::scaled_identity(2, 1.0 / upsilon)?,
        n: 2 * n_per_group,
        seed,
        coefficient_law: CoefficientLaw::default(),
    })
}

/// Seed of the shared Gaussian design used by every [`example2_spec`] dataset.
pub const EXAMPLE2_Q_SEED: u64 = 20_240_417;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VChoice {
    V0,
    V1,
    V2,
    V3,
}

impl VChoice {
    pub const ALL: [VChoice; 4] = [VChoice::V0, VChoice::V1, VChoice::V2, VChoice::V3];

    pub fn matrix(self) -> SpdMatrix {
        let m = match self {
            VChoice::V0 => Matrix::identity(3, 3),
            VChoice::V1 => Matrix::from_diagonal(&Vector::from_vec(vec![10.0, 1.0, 0.1])),
            VChoice::V2 => Matrix::from_row_slice(3, 3, &[1.0, 0.7, 0.6, 0.7, 1.0, 0.5, 0.6, 0.5, 1.0]),
            VChoice::V3 => Matrix::from_row_slice(3, 3, &[10.0, 0.7, 0.1, 0.7, 1.0, 0.2, 0.1, 0.2, 0.1]),
        };
        SpdMatrix::new(m).expect("fixed matrices are positive definite")
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for VChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "V{}", self.index())
    }
}

impl std::str::FromStr for VChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "V0" => Ok(VChoice::V0),
            "V1" => Ok(VChoice::V1),
            "V2" => Ok(VChoice::V2),
            "V3" => Ok(VChoice::V3),
            _ => Err(Error::Invalid(format!("unknown V choice `{s}` (expected V0..V3)"))),
        }
    }
}

/// Ten variables, 100 samples and three Gaussian exogenous columns shared by
/// all seeds.
pub fn example2_spec(choice: VChoice, seed: u64) -> SimSpec {
    SimSpec {
        graph: example2_graph(),
        effect_design: EffectDesign::FixedGaussian {
            m: 3,
            seed: EXAMPLE2_Q_SEED,
        },
        v_true: choice.matrix(),
        n: 100,
        seed,
        coefficient_law: CoefficientLaw::default(),
    }
}

/// Rank of the generated design, for sanity checks.
pub fn design_rank(q: &Matrix) -> usize {
    column_rank(q, 1e-10)
}
