//! Small dense factorizations: Cholesky for SPD systems, partial-pivot LU for
//! square bases, column-pivoted Householder QR for rank detection and a cyclic
//! Jacobi sweep for symmetric eigenvalues.

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Relative pivot floor for SPD factorizations.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors a symmetric positive definite matrix. Only the lower triangle
    /// of `a` is read.
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        Self::factor_lower(a.rows(), a.as_slice())
    }

    /// Factors from a packed row-major `n×n` buffer (lower triangle used).
    pub fn factor_lower(n: usize, a: &[f64]) -> Result<Self> {
        Self::factor_lower_with_floor(n, a, PIVOT_FLOOR)
    }

    /// As [`Cholesky::factor_lower`], failing when a pivot drops below
    /// `rel_floor` times the largest diagonal entry.
    pub fn factor_lower_with_floor(n: usize, a: &[f64], rel_floor: f64) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[i * n + i].abs()));
        let floor = rel_floor * max_diag;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = a[j * n + j];
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if !(diag > floor) || max_diag == 0.0 {
                return Err(Error::SingularMatrix { pivot: diag, floor });
            }
            let ljj = diag.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, system has {}",
                b.rows(),
                self.n
            )));
        }
        let mut out = Matrix::zeros(self.n, b.cols());
        let mut col = vec![0.0; self.n];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            self.solve_in_place(&mut col);
            for (i, &c) in col.iter().enumerate() {
                out[(i, j)] = c;
            }
        }
        Ok(out)
    }
}

/// Solves `A X = B` for symmetric positive definite `A`.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if !a.is_symmetric(1e-10) {
        return Err(Error::domain(format!(
            "solve_spd requires a symmetric matrix (asymmetry {:e})",
            a.asymmetry()
        )));
    }
    Cholesky::factor(a)?.solve_matrix(b)
}

/// Solves a square system with partial-pivot LU. Returns `None` when a pivot
/// falls below `tol` times the largest absolute entry.
pub fn solve_lu(a: &Matrix, b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = a.rows();
    debug_assert!(a.is_square() && b.len() == n);
    let scale = a.max_abs();
    if scale == 0.0 {
        return None;
    }
    let mut m = a.as_slice().to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, m[i * n + k].abs()))
            .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if pmax <= tol * scale {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let piv = m[k * n + k];
        for i in (k + 1)..n {
            let f = m[i * n + k] / piv;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[i * n + j] * x[j];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

/// Numerical rank of `a` from a column-pivoted Householder QR.
///
/// A diagonal entry of R counts toward the rank when it exceeds
/// `tol · |R₁₁|`.
pub fn numerical_rank(a: &Matrix, tol: f64) -> usize {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return 0;
    }
    // work column-major for cache-friendly column operations
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let steps = m.min(n);
    let mut r11 = 0.0;
    let mut rank = 0;
    for k in 0..steps {
        let (p, _) = norms[k..]
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let p = p + k;
        cols.swap(k, p);
        norms.swap(k, p);

        let alpha: f64 = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if k == 0 {
            r11 = alpha;
            if r11 == 0.0 {
                return 0;
            }
        }
        if alpha <= tol * r11 {
            break;
        }
        rank += 1;
        let sign = if cols[k][k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for col in cols.iter_mut().skip(k + 1) {
            let proj: f64 = v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum::<f64>() * 2.0 / vnorm2;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= proj * vi;
            }
        }
        for j in (k + 1)..n {
            norms[j] = cols[j][(k + 1)..].iter().map(|x| x * x).sum();
        }
    }
    rank
}

/// Eigenvalues of a symmetric matrix (ascending) by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_symmetric(1e-10) {
        return Err(Error::domain("eigenvalues requested for a non-symmetric matrix"));
    }
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        let total = m.frobenius_norm().powi(2);
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev = m.diagonal();
    ev.sort_by(|a, b| a.total_cmp(b));
    Ok(ev)
}
