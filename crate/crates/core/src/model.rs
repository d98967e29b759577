//! Datasets, DAGs and score hyperparameters.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::error::{DatasetIssue, Error, Result};
use crate::numerics::{column_rank, Matrix, SpdMatrix, Vector};

/// Relative tolerance used when checking that `Q` has full column rank.
pub const RANK_TOL: f64 = 1e-8;

/// Response matrix `X` (`n × p`) with an exogenous design `Q` (`n × m`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    q: Matrix,
    variable_names: Vec<String>,
    exogenous_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        x: Matrix,
        q: Matrix,
        variable_names: Vec<String>,
        exogenous_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Dataset {
            x,
            q,
            variable_names,
            exogenous_names,
        };
        let issues = validate(&ds);
        if issues.is_empty() {
            Ok(ds)
        } else {
            Err(Error::InvalidDataset(issues))
        }
    }

    /// Dataset with default names `X1..Xp`, `Q1..Qm`.
    pub fn unnamed(x: Matrix, q: Matrix) -> Result<Self> {
        let names = default_names("X", x.ncols());
        let qnames = default_names("Q", q.ncols());
        Dataset::new(x, q, names, qnames)
    }

    /// Dataset with no exogenous variables (`m = 0`).
    pub fn without_exogenous(x: Matrix) -> Result<Self> {
        let n = x.nrows();
        Dataset::unnamed(x, Matrix::zeros(n, 0))
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn m(&self) -> usize {
        self.q.ncols()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn exogenous_names(&self) -> &[String] {
        &self.exogenous_names
    }

    pub fn column(&self, i: usize) -> Vector {
        self.x.column(i).clone_owned()
    }

    /// The `n × |cols|` submatrix of `X` with the given columns, in order.
    pub fn columns(&self, cols: &[usize]) -> Matrix {
        self.x.select_columns(cols)
    }
}

pub(crate) fn default_names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

/// Every violated dataset invariant. An empty list means the dataset is valid.
pub fn validate(ds: &Dataset) -> Vec<DatasetIssue> {
    let mut issues = Vec::new();
    let (n, p) = ds.x.shape();
    let m = ds.q.ncols();
    if ds.q.nrows() != n {
        issues.push(DatasetIssue::RowMismatch {
            x_rows: n,
            q_rows: ds.q.nrows(),
        });
    }
    if n <= m {
        issues.push(DatasetIssue::NotEnoughSamples { n, m });
    }
    if ds.variable_names.len() != p {
        issues.push(DatasetIssue::NameCount {
            matrix: "X",
            expected: p,
            got: ds.variable_names.len(),
        });
    }
    if ds.exogenous_names.len() != m {
        issues.push(DatasetIssue::NameCount {
            matrix: "Q",
            expected: m,
            got: ds.exogenous_names.len(),
        });
    }
    let mut finite = true;
    for (name, mat) in [("X", &ds.x), ("Q", &ds.q)] {
        if let Some(k) = mat.iter().position(|v| !v.is_finite()) {
            // nalgebra storage is column-major
            let rows = mat.nrows();
            issues.push(DatasetIssue::NonFinite {
                matrix: name,
                row: k % rows,
                col: k / rows,
            });
            finite = false;
        }
    }
    if finite && m > 0 && ds.q.nrows() >= m {
        let rank = column_rank(&ds.q, RANK_TOL);
        if rank < m {
            issues.push(DatasetIssue::RankDeficient { rank, m });
        }
    }
    issues
}

/// A dataset whose response columns have mean 0 and sum of squares `n − 1`.
/// `Q` is kept verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedDataset {
    data: Dataset,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl StandardizedDataset {
    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    /// Column means of the raw data.
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Column standard deviations (divisor `n − 1`) of the raw data.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }
}

impl std::ops::Deref for StandardizedDataset {
    type Target = Dataset;

    fn deref(&self) -> &Dataset {
        &self.data
    }
}

/// Centres every response column and scales it so that `xᵀx = n − 1`.
pub fn standardize(ds: &Dataset) -> Result<StandardizedDataset> {
    let n = ds.n();
    if n < 2 {
        return Err(Error::Invalid("standardize needs at least two samples".into()));
    }
    let mut x = ds.x.clone();
    let mut means = Vec::with_capacity(ds.p());
    let mut scales = Vec::with_capacity(ds.p());
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let ss = col.norm_squared();
        let sd = (ss / (n as f64 - 1.0)).sqrt();
        if !(sd > 1e-12 * mean.abs().max(1e-300)) || sd == 0.0 {
            return Err(Error::ConstantColumn(ds.variable_names[j].clone()));
        }
        col /= sd;
        means.push(mean);
        scales.push(sd);
    }
    Ok(StandardizedDataset {
        data: Dataset {
            x,
            q: ds.q.clone(),
            variable_names: ds.variable_names.clone(),
            exogenous_names: ds.exogenous_names.clone(),
        },
        means,
        scales,
    })
}

/// Directed acyclic graph on nodes `0..p`. Parent lists are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
}

impl Dag {
    pub fn empty(p: usize) -> Self {
        Dag {
            parents: vec![Vec::new(); p],
        }
    }

    /// Builds a DAG from `(parent, child)` pairs.
    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![BTreeSet::new(); p];
        for &(j, i) in edges {
            if j >= p || i >= p {
                return Err(Error::InvalidGraph(format!(
                    "edge {j} -> {i} out of range for {p} nodes"
                )));
            }
            if j == i {
                return Err(Error::InvalidGraph(format!("self-loop on node {i}")));
            }
            parents[i].insert(j);
        }
        let parents: Vec<Vec<usize>> = parents.into_iter().map(|s| s.into_iter().collect()).collect();
        topo_sort(&parents)?;
        Ok(Dag { parents })
    }

    /// The full DAG in which every node's parents are all of its predecessors
    /// in `ordering`.
    pub fn full_from_ordering(ordering: &[usize]) -> Result<Self> {
        let p = ordering.len();
        let mut seen = vec![false; p];
        for &v in ordering {
            if v >= p || seen[v] {
                return Err(Error::Invalid(format!(
                    "ordering {ordering:?} is not a permutation of 0..{p}"
                )));
            }
            seen[v] = true;
        }
        let mut parents = vec![Vec::new(); p];
        for (pos, &v) in ordering.iter().enumerate() {
            let mut ps = ordering[..pos].to_vec();
            ps.sort_unstable();
            parents[v] = ps;
        }
        Ok(Dag { parents })
    }

    pub fn node_count(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// All edges `(parent, child)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(i, ps)| ps.iter().map(move |&j| (j, i)))
            .collect();
        e.sort_unstable();
        e
    }

    /// True if `to` can be reached from `from` along directed edges.
    pub fn reachable(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let p = self.node_count();
        let mut children = vec![Vec::new(); p];
        for (i, ps) in self.parents.iter().enumerate() {
            for &j in ps {
                children[j].push(i);
            }
        }
        let mut seen = vec![false; p];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for &c in &children[v] {
                if c == to {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        false
    }

    /// Adds `from -> to`. Refuses self-loops, duplicates and edges that would
    /// close a cycle.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        if from == to || self.has_edge(from, to) {
            return Err(Error::InvalidGraph(format!("cannot add {from} -> {to}")));
        }
        if self.reachable(to, from) {
            return Err(Error::InvalidGraph(format!(
                "adding {from} -> {to} would create a cycle"
            )));
        }
        let ps = &mut self.parents[to];
        let pos = ps.binary_search(&from).unwrap_err();
        ps.insert(pos, from);
        Ok(())
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) -> bool {
        match self.parents[to].binary_search(&from) {
            Ok(pos) => {
                self.parents[to].remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    /// Parent-before-child ordering, ties broken by ascending node index.
    pub fn topological_order(&self) -> Vec<usize> {
        topo_sort(&self.parents).expect("Dag is acyclic by construction")
    }
}

/// Topological order of the graph given by `(parent, child)` pairs, or the
/// cycle that prevents one.
pub fn topological_order(p: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>> {
    let mut parents = vec![Vec::new(); p];
    for &(j, i) in edges {
        if j >= p || i >= p {
            return Err(Error::InvalidGraph(format!("edge {j} -> {i} out of range")));
        }
        parents[i].push(j);
    }
    topo_sort(&parents)
}

fn topo_sort(parents: &[Vec<usize>]) -> Result<Vec<usize>> {
    let p = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); p];
    for (i, ps) in parents.iter().enumerate() {
        for &j in ps {
            children[j].push(i);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..p)
        .filter(|&i| indegree[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(p);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == p {
        return Ok(order);
    }
    // Every unfinished node has an unfinished parent; walk parents until a
    // node repeats.
    let start = (0..p).find(|&i| indegree[i] > 0).expect("unfinished node");
    let mut path = vec![start];
    let mut pos = vec![usize::MAX; p];
    pos[start] = 0;
    let mut v = start;
    loop {
        let next = *parents[v]
            .iter()
            .find(|&&j| indegree[j] > 0)
            .expect("unfinished parent");
        if pos[next] != usize::MAX {
            let mut cycle: Vec<usize> = path[pos[next]..].to_vec();
            cycle.reverse();
            cycle.push(cycle[0]);
            return Err(Error::Cycle(cycle));
        }
        pos[next] = path.len();
        path.push(next);
        v = next;
    }
}

/// Prior on the exogenous effects `b_i | ψ_i ~ N(0, ψ_i V)`.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectPrior {
    /// `V = υ⁻¹ I`.
    Precision(f64),
    /// Explicit `V`.
    Covariance(SpdMatrix),
}

impl EffectPrior {
    pub fn covariance(&self, m: usize) -> Result<SpdMatrix> {
        match self {
            EffectPrior::Precision(u) => SpdMatrix::scaled_identity(m, 1.0 / u),
            EffectPrior::Covariance(v) => {
                check_dim(v, m)?;
                Ok(v.clone())
            }
        }
    }

    /// `V⁻¹` as a plain matrix.
    pub fn precision_matrix(&self, m: usize) -> Result<Matrix> {
        match self {
            EffectPrior::Precision(u) => Ok(Matrix::identity(m, m) * *u),
            EffectPrior::Covariance(v) => {
                check_dim(v, m)?;
                Ok(v.inverse())
            }
        }
    }

    pub fn logdet_covariance(&self, m: usize) -> Result<f64> {
        match self {
            EffectPrior::Precision(u) => Ok(-(m as f64) * u.ln()),
            EffectPrior::Covariance(v) => {
                check_dim(v, m)?;
                Ok(v.logdet())
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            EffectPrior::Precision(u) => format!("upsilon={u}"),
            EffectPrior::Covariance(v) => format!("V({}x{})", v.dim(), v.dim()),
        }
    }
}

fn check_dim(v: &SpdMatrix, m: usize) -> Result<()> {
    if v.dim() != m {
        return Err(Error::dims("effect prior V", format!("{m}x{m}"), format!("{0}x{0}", v.dim())));
    }
    Ok(())
}

/// Score hyperparameters: prior precision scale `τ`, degrees of freedom `δ`,
/// and optionally the exogenous-effect prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyper {
    pub tau: f64,
    pub delta: f64,
    pub effect_prior: Option<EffectPrior>,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            tau: 1.0,
            delta: 1.0,
            effect_prior: None,
        }
    }
}

impl Hyper {
    pub fn new(tau: f64, delta: f64, effect_prior: Option<EffectPrior>) -> Result<Self> {
        let h = Hyper {
            tau,
            delta,
            effect_prior,
        };
        h.check()?;
        Ok(h)
    }

    pub fn with_upsilon(tau: f64, delta: f64, upsilon: f64) -> Result<Self> {
        Hyper::new(tau, delta, Some(EffectPrior::Precision(upsilon)))
    }

    pub fn check(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidHyper(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidHyper(format!("delta must be positive, got {}", self.delta)));
        }
        if let Some(EffectPrior::Precision(u)) = self.effect_prior {
            if !(u > 0.0 && u.is_finite()) {
                return Err(Error::InvalidHyper(format!("upsilon must be positive, got {u}")));
            }
        }
        Ok(())
    }

    pub fn effect_prior(&self) -> Result<&EffectPrior> {
        self.effect_prior
            .as_ref()
            .ok_or_else(|| Error::InvalidHyper("the Bayesian metric needs an effect prior (upsilon or V)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validate_ok_and_failures() {
        let x = Matrix::from_fn(10, 3, |i, j| ((i * 7 + j * 3) % 5) as f64);
        let q = Matrix::from_fn(10, 2, |i, j| if (i < 5) == (j == 0) { 1.0 } else { 0.0 });
        let ds = Dataset::unnamed(x.clone(), q.clone()).unwrap();
        assert!(validate(&ds).is_empty());

        let dup = Matrix::from_fn(10, 2, |i, _| i as f64 + 1.0);
        let err = Dataset::unnamed(x.clone(), dup).unwrap_err();
        assert!(err.to_string().contains("Q rank 1 < m 2"), "{err}");

        let xs = Matrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let qs = Matrix::identity(3, 3);
        let err = Dataset::unnamed(xs, qs).unwrap_err();
        assert!(err.to_string().contains("n must exceed m"), "{err}");

        let mut bad = x;
        bad[(4, 1)] = f64::NAN;
        match Dataset::unnamed(bad, q) {
            Err(Error::InvalidDataset(issues)) => {
                assert_eq!(issues, vec![DatasetIssue::NonFinite { matrix: "X", row: 4, col: 1 }])
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn standardize_examples() {
        let x = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 10.0]);
        let s = standardize(&Dataset::without_exogenous(x).unwrap()).unwrap();
        let c0: Vec<f64> = s.x().column(0).iter().copied().collect();
        assert_eq!(c0, vec![-1.0, 0.0, 1.0]);
        // (0,0,10): deviations (-10/3,-10/3,20/3), sd = sqrt(100/3)
        let r3 = 3f64.sqrt();
        let want = [-1.0 / r3, -1.0 / r3, 2.0 / r3];
        for (got, want) in s.x().column(1).iter().zip(want) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!((s.x().column(1).norm_squared() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_named() {
        let x = Matrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let ds = Dataset::new(x, Matrix::zeros(3, 0), vec!["a".into(), "flat".into()], vec![]).unwrap();
        let err = standardize(&ds).unwrap_err();
        assert!(err.to_string().contains("constant column `flat`"));
    }

    #[test]
    fn topological_examples() {
        assert_eq!(topological_order(3, &[]).unwrap(), vec![0, 1, 2]);
        assert_eq!(topological_order(3, &[(0, 1), (1, 2)]).unwrap(), vec![0, 1, 2]);
        assert_eq!(topological_order(3, &[(2, 0)]).unwrap(), vec![1, 2, 0]);
        match topological_order(2, &[(0, 1), (1, 0)]) {
            Err(Error::Cycle(c)) => {
                assert_eq!(c.first(), c.last());
                assert_eq!(c.len(), 3);
            }
            other => panic!("{other:?}"),
        }
        assert!(Dag::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).is_err());
        assert!(Dag::from_edges(2, &[(1, 1)]).is_err());
    }

    #[test]
    fn dag_mutation_respects_acyclicity() {
        let mut g = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(g.add_edge(2, 0).is_err());
        assert!(g.add_edge(0, 2).is_ok());
        assert_eq!(g.parents(2), &[0, 1]);
        assert!(g.remove_edge(0, 1));
        assert!(g.add_edge(1, 0).is_ok());
    }

    #[test]
    fn full_graph_from_ordering() {
        let g = Dag::full_from_ordering(&[2, 0, 1]).unwrap();
        assert_eq!(g.parents(2), &[] as &[usize]);
        assert_eq!(g.parents(0), &[2]);
        assert_eq!(g.parents(1), &[0, 2]);
        assert!(Dag::full_from_ordering(&[0, 0, 1]).is_err());
    }

    #[test]
    fn hyper_checks() {
        assert!(Hyper::new(0.0, 1.0, None).is_err());
        assert!(Hyper::with_upsilon(1.0, 1.0, -2.0).is_err());
        assert!(Hyper::default().effect_prior().is_err());
    }

    fn random_dag(p: usize, bits: u64, perm_seed: u64) -> Dag {
        // orient each selected pair along a permutation, so the result is acyclic
        let mut perm: Vec<usize> = (0..p).collect();
        let mut s = perm_seed;
        for i in (1..p).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let mut edges = Vec::new();
        let mut k = 0;
        for a in 0..p {
            for b in (a + 1)..p {
                if bits >> (k % 64) & 1 == 1 {
                    edges.push((perm[a], perm[b]));
                }
                k += 1;
            }
        }
        Dag::from_edges(p, &edges).unwrap()
    }

    proptest! {
        #[test]
        fn topological_order_respects_edges(p in 1usize..10, bits: u64, seed: u64) {
            let g = random_dag(p, bits, seed);
            let order = g.topological_order();
            let mut pos = vec![0; p];
            for (k, &v) in order.iter().enumerate() { pos[v] = k; }
            for (j, i) in g.edges() {
                prop_assert!(pos[j] < pos[i]);
            }
        }

        #[test]
        fn standardize_is_idempotent(vals in proptest::collection::vec(-100.0f64..100.0, 12)) {
            let x = Matrix::from_vec(6, 2, vals);
            if let Ok(s) = standardize(&Dataset::without_exogenous(x).unwrap()) {
                let again = standardize(s.dataset()).unwrap();
                prop_assert!((again.x() - s.x()).amax() <= 1e-12);
                for col in s.x().column_iter() {
                    prop_assert!(col.mean().abs() <= 1e-10);
                    prop_assert!((col.norm_squared() - 5.0).abs() <= 1e-8);
                }
            }
        }
    }
}
