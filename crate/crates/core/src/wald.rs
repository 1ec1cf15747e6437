//! Wald tests of `H₀: Rβ(α) = r`.
//!
//! The statistic is `n/(α(1−α)) · (Rβ̂ − r)ᵀ W (Rβ̂ − r)` with
//! `W = (R G⁻¹ H G⁻¹ Rᵀ)⁻¹`, referred to a χ² law with `J = rows(R)` degrees
//! of freedom.

use rayon::prelude::*;

use crate::density::{compute_h, estimate_g, EgConfig, GEstimate, GMethod, HMatrix};
use crate::error::{Error, Result};
use crate::numerics::{chi2_sf, dot, numerical_rank, solve_spd, Matrix};
use crate::rq::{fit_rq, Dataset, QuantileFit};

/// Nominal levels at which rejection flags are reported.
pub const NOMINAL_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

/// Linear restriction `Rβ = r` with `rank(R) = J ≤ d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Restriction {
    r_mat: Matrix,
    r: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl Restriction {
    pub fn new(r_mat: Matrix, r: Vec<f64>) -> Result<Self> {
        let (j, d) = (r_mat.rows(), r_mat.cols());
        if j == 0 {
            return Err(Error::domain("restriction needs at least one row"));
        }
        if r.len() != j {
            return Err(Error::DimensionMismatch(format!("R has {j} rows but r has {} entries", r.len())));
        }
        if j > d || numerical_rank(&r_mat, 1e-10) < j {
            return Err(Error::domain(format!("restriction matrix must have full row rank {j}")));
        }
        Ok(Self { r_mat, r, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.j() {
            return Err(Error::DimensionMismatch("one label per restriction row".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// `e_kᵀβ = 0` for each listed coefficient index.
    pub fn select(d: usize, indices: &[usize]) -> Result<Self> {
        let mut r_mat = Matrix::zeros(indices.len(), d);
        for (row, &k) in indices.iter().enumerate() {
            if k >= d {
                return Err(Error::domain(format!("coefficient index {k} out of range for d={d}")));
            }
            r_mat[(row, k)] = 1.0;
        }
        Self::new(r_mat, vec![0.0; indices.len()])
    }

    pub fn j(&self) -> usize {
        self.r_mat.rows()
    }

    pub fn d(&self) -> usize {
        self.r_mat.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.r_mat
    }

    pub fn rhs(&self) -> &[f64] {
        &self.r
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// `Rβ − r`.
    pub fn discrepancy(&self, beta: &[f64]) -> Vec<f64> {
        self.r_mat.row_iter().zip(&self.r).map(|(row, r)| dot(row, beta) - r).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaldResult {
    pub alpha: f64,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// `(τ, p < τ)` for each level in [`NOMINAL_LEVELS`].
    pub reject_at: Vec<(f64, bool)>,
    pub method: GMethod,
    pub bandwidth: f64,
    pub m_used: Option<usize>,
    pub floored: usize,
}

impl WaldResult {
    pub fn rejects(&self, tau: f64) -> bool {
        self.p_value < tau
    }
}

fn lift_singular(e: Error, to: Error) -> Error {
    match e {
        Error::SingularMatrix { .. } => to,
        other => other,
    }
}

/// `W = (R G⁻¹ H G⁻¹ Rᵀ)⁻¹`, formed with two SPD solves.
pub fn compute_w(g: &GEstimate, h: &HMatrix, restr: &Restriction) -> Result<Matrix> {
    let core = restricted_core(&g.g, &h.h, restr)?;
    let mut w = solve_spd(&core, &Matrix::identity(restr.j())).map_err(|e| lift_singular(e, Error::SingularW))?;
    w.symmetrize();
    Ok(w)
}

/// `R G⁻¹ H G⁻¹ Rᵀ`, symmetrized.
fn restricted_core(g: &Matrix, h: &Matrix, restr: &Restriction) -> Result<Matrix> {
    if g.rows() != restr.d() || h.rows() != restr.d() {
        return Err(Error::DimensionMismatch(format!(
            "G is {}x{}, H is {}x{}, restriction has {} columns",
            g.rows(),
            g.cols(),
            h.rows(),
            h.cols(),
            restr.d()
        )));
    }
    let z = solve_spd(g, &restr.matrix().transpose()).map_err(|e| lift_singular(e, Error::SingularG { ratio: 0.0 }))?;
    let mut core = z.transpose().matmul(&h.matmul(&z)?)?;
    core.symmetrize();
    Ok(core)
}

/// Wald test at the level of `fit`, using the covariance ingredients `g`, `h`.
pub fn wald_test(fit: &QuantileFit, g: &GEstimate, h: &HMatrix, restr: &Restriction, n: usize) -> Result<WaldResult> {
    if (fit.alpha - g.alpha).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "fit at level {} but G estimated at {}",
            fit.alpha, g.alpha
        )));
    }
    let alpha = fit.alpha;
    let v = restr.discrepancy(&fit.beta);
    let statistic = if v.iter().all(|&x| x == 0.0) {
        0.0
    } else {
        // vᵀ W v = vᵀ core⁻¹ v
        let core = restricted_core(&g.g, &h.h, restr)?;
        let sol = solve_spd(&core, &Matrix::column_vector(&v)).map_err(|e| lift_singular(e, Error::SingularW))?;
        let q = dot(&v, sol.as_slice());
        (n as f64 / (alpha * (1.0 - alpha)) * q).max(0.0)
    };
    let df = restr.j();
    let p_value = chi2_sf(statistic, df as u32)?;
    Ok(WaldResult {
        alpha,
        statistic,
        df,
        p_value,
        reject_at: NOMINAL_LEVELS.iter().map(|&t| (t, p_value < t)).collect(),
        method: g.method,
        bandwidth: g.bandwidth,
        m_used: g.m_used,
        floored: g.floored,
    })
}

/// Fits the α-quantile, estimates `G` with `method` and tests `restr`.
pub fn test_at(data: &Dataset, restr: &Restriction, alpha: f64, method: GMethod, cfg: &EgConfig) -> Result<WaldResult> {
    let fit = fit_rq(data, alpha)?;
    let g = estimate_g(data, &fit, method, cfg)?;
    wald_test(&fit, &g, &compute_h(data), restr, data.n())
}

/// One point on a p-value curve; failures are kept rather than aborting the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub alpha: f64,
    pub outcome: std::result::Result<WaldResult, Error>,
}

/// Pointwise Wald tests over a grid of quantile levels, in input order.
pub fn pvalue_curve(
    data: &Dataset,
    restr: &Restriction,
    alphas: &[f64],
    method: GMethod,
    cfg: &EgConfig,
) -> Result<Vec<CurvePoint>> {
    if alphas.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if restr.d() != data.d() {
        return Err(Error::DimensionMismatch(format!(
            "restriction has {} columns, data has {}",
            restr.d(),
            data.d()
        )));
    }
    let h = compute_h(data);
    Ok(alphas
        .par_iter()
        .map(|&alpha| {
            let outcome = fit_rq(data, alpha)
                .and_then(|fit| {
                    let g = estimate_g(data, &fit, method, cfg)?;
                    wald_test(&fit, &g, &h, restr, data.n())
                })
                .map_err(|e| Error::AtLevel {
                    alpha,
                    source: Box::new(e),
                });
            CurvePoint { alpha, outcome }
        })
        .collect())
}
