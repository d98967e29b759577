//! Dense linear-algebra kernels and special functions.

mod linalg;
mod special;

pub use linalg::{
    cholesky, column_rank, logdet_spd, solve_spd, HouseholderQr, Matrix, SpdMatrix, Vector,
    SYMMETRY_TOL,
};
pub use special::{digamma, ln_gamma_ratio, log_gamma};

pub(crate) use special::{digamma_unchecked, ln_gamma_unchecked};
