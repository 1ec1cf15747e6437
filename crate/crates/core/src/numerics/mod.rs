//! Dense linear algebra and special functions.

pub mod linalg;
pub mod matrix;
pub mod special;

pub use linalg::{numerical_rank, solve_lu, solve_spd, symmetric_eigenvalues, Cholesky};
pub use matrix::{dot, Matrix};
pub use special::{
    beta_inc, beta_quantile, chi2_sf, gamma_p, gamma_q, ln_gamma, normal_cdf, normal_pdf,
    normal_quantile, normal_sf, student_t_cdf, student_t_quantile,
};
