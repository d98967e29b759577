use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance for the symmetry check on [`SpdMatrix`] construction.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// A symmetric positive definite matrix together with its lower Cholesky
/// factor. Construction fails unless the factorization succeeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: Matrix,
    lower: Matrix,
}

impl SpdMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        check_square(&matrix, "SpdMatrix::new")?;
        let scale = matrix.amax().max(1.0);
        let n = matrix.nrows();
        for i in 0..n {
            for j in 0..i {
                let gap = (matrix[(i, j)] - matrix[(j, i)]).abs();
                if gap > SYMMETRY_TOL * scale || !gap.is_finite() {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        gap,
                    });
                }
            }
        }
        let lower = cholesky(&matrix)?;
        Ok(SpdMatrix { matrix, lower })
    }

    /// Symmetrizes `(M + Mᵀ)/2` before factorizing. For matrices that are
    /// symmetric in exact arithmetic but were assembled in floating point.
    pub fn from_symmetric_part(matrix: Matrix) -> Result<Self> {
        check_square(&matrix, "SpdMatrix::from_symmetric_part")?;
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let lower = cholesky(&sym)?;
        Ok(SpdMatrix { matrix: sym, lower })
    }

    pub fn identity(n: usize) -> Self {
        SpdMatrix {
            matrix: Matrix::identity(n, n),
            lower: Matrix::identity(n, n),
        }
    }

    pub fn scaled_identity(n: usize, value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NotPositiveDefinite { minor: 1 });
        }
        Ok(SpdMatrix {
            matrix: Matrix::identity(n, n) * value,
            lower: Matrix::identity(n, n) * value.sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// Lower-triangular `L` with `L Lᵀ = M`.
    pub fn cholesky_factor(&self) -> &Matrix {
        &self.lower
    }

    pub fn logdet(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        if rhs.nrows() != self.dim() {
            return Err(Error::dims(
                "solve_spd",
                format!("{} rows", self.dim()),
                format!("{} rows", rhs.nrows()),
            ));
        }
        let mut out = rhs.clone();
        for j in 0..out.ncols() {
            let mut col = out.column(j).clone_owned();
            forward_substitute(&self.lower, &mut col);
            back_substitute_transposed(&self.lower, &mut col);
            out.set_column(j, &col);
        }
        Ok(out)
    }

    pub fn solve_vec(&self, rhs: &Vector) -> Result<Vector> {
        if rhs.len() != self.dim() {
            return Err(Error::dims(
                "solve_spd",
                self.dim(),
                rhs.len(),
            ));
        }
        let mut out = rhs.clone();
        forward_substitute(&self.lower, &mut out);
        back_substitute_transposed(&self.lower, &mut out);
        Ok(out)
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        self.solve(&Matrix::identity(n, n))
            .expect("identity has matching dimensions")
    }

    /// `vᵀ M⁻¹ v`, computed as `‖L⁻¹ v‖²`.
    pub fn inv_quad_form(&self, v: &Vector) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::dims("inv_quad_form", self.dim(), v.len()));
        }
        let mut w = v.clone();
        forward_substitute(&self.lower, &mut w);
        Ok(w.norm_squared())
    }

    /// Solves `Lᵀ x = z`. With `z ~ N(0, I)` this yields `x ~ N(0, M⁻¹)`.
    pub fn solve_upper_factor(&self, z: &Vector) -> Vector {
        let mut out = z.clone();
        back_substitute_transposed(&self.lower, &mut out);
        out
    }
}

/// Natural log of the determinant of an SPD matrix.
pub fn logdet_spd(m: &SpdMatrix) -> f64 {
    m.logdet()
}

/// Solves `M S = B` for `S`.
pub fn solve_spd(m: &SpdMatrix, b: &Matrix) -> Result<Matrix> {
    m.solve(b)
}

/// Lower Cholesky factor of `m`. Only the lower triangle is read.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    check_square(m, "cholesky")?;
    let n = m.nrows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = m[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        let d = diag.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

fn check_square(m: &Matrix, context: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(
            context,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

// L y = b, in place.
fn forward_substitute(l: &Matrix, b: &mut Vector) {
    let n = l.nrows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

// Lᵀ x = y, in place.
fn back_substitute_transposed(l: &Matrix, y: &mut Vector) {
    let n = l.nrows();
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
}

/// Householder QR of a tall matrix without pivoting.
///
/// Reflector `k` is `I − 2 v_k v_kᵀ` with `v_k` unit length and zero in its
/// first `k` entries. The sign rule `v = x + sign(x₀)‖x‖e₀` (with
/// `sign(0) = +1`) makes the factorization a deterministic function of the
/// input.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    reflectors: Vec<Vector>,
    r_diag: Vec<f64>,
    rows: usize,
}

impl HouseholderQr {
    pub fn new(a: &Matrix) -> Self {
        let (n, m) = a.shape();
        let mut work = a.clone();
        let mut reflectors = Vec::with_capacity(m.min(n));
        let mut r_diag = Vec::with_capacity(m.min(n));
        for k in 0..m.min(n) {
            let x = work.view((k, k), (n - k, 1)).clone_owned();
            let norm = x.norm();
            let mut v = Vector::zeros(n);
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            if norm == 0.0 {
                reflectors.push(v);
                r_diag.push(0.0);
                continue;
            }
            for i in 0..(n - k) {
                v[k + i] = x[i];
            }
            v[k] -= alpha;
            let vnorm = v.norm();
            if vnorm > 0.0 {
                v /= vnorm;
            }
            // work <- (I - 2 v vᵀ) work
            let proj = v.transpose() * &work;
            work -= (&v * proj) * 2.0;
            r_diag.push(work[(k, k)]);
            reflectors.push(v);
        }
        HouseholderQr {
            reflectors,
            r_diag,
            rows: n,
        }
    }

    pub fn r_diagonal(&self) -> &[f64] {
        &self.r_diag
    }

    /// Number of `|r_jj|` above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.r_diag.iter().filter(|d| d.abs() > tol).count()
    }

    /// `Qᵀ Y = H_{m−1} ⋯ H₀ Y` without forming `Q`.
    pub fn apply_qt(&self, y: &Matrix) -> Result<Matrix> {
        if y.nrows() != self.rows {
            return Err(Error::dims("apply_qt", self.rows, y.nrows()));
        }
        let mut out = y.clone();
        for v in &self.reflectors {
            let proj = v.transpose() * &out;
            out -= (v * proj) * 2.0;
        }
        Ok(out)
    }

    /// The full `n × n` orthogonal factor `H₀ H₁ ⋯ H_{m−1}`.
    pub fn full_q(&self) -> Matrix {
        let n = self.rows;
        let mut q = Matrix::identity(n, n);
        for v in self.reflectors.iter().rev() {
            let proj = v.transpose() * &q;
            q -= (v * proj) * 2.0;
        }
        q
    }
}

/// Numerical column rank of `a` with tolerance `rel_tol · max(1, ‖a‖_F)`.
pub fn column_rank(a: &Matrix, rel_tol: f64) -> usize {
    if a.ncols() == 0 {
        return 0;
    }
    let tol = rel_tol * a.norm().max(1.0);
    HouseholderQr::new(a).rank(tol)
}
