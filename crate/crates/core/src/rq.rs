//! Regression quantiles.
//!
//! `fit_rq` solves the check-loss problem through its linear-programming dual
//!
//! ```text
//! max  yᵀa   s.t.  Xᵀa = (1 − α)·Xᵀ1,  0 ≤ a ≤ 1
//! ```
//!
//! with a Mehrotra predictor–corrector (Frisch–Newton) interior-point method.
//! The interior solution is then purified to the exact-fit vertex through the
//! `d` observations with the smallest residuals whenever that vertex is at least
//! as good, so residual signs are exact on non-degenerate problems.

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{dot, numerical_rank, solve_lu, Cholesky, Matrix};

/// Duality-gap tolerance, relative to the current objective.
pub const GAP_TOL: f64 = 1e-8;
/// Interior-point iteration cap.
pub const MAX_ITER: usize = 100;
/// Fraction of the step to the boundary taken each iteration.
const STEP_DAMP: f64 = 0.99995;
/// Range `fit_process` clips requested levels into.
pub const LEVEL_CLIP: (f64, f64) = (0.005, 0.995);

/// Check loss `ρ_α(u) = u(α − 1{u ≤ 0})`.
#[inline]
pub fn check_loss(u: f64, alpha: f64) -> f64 {
    if u > 0.0 {
        alpha * u
    } else {
        (alpha - 1.0) * u
    }
}

/// Response vector plus design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    x: Matrix,
    column_names: Vec<String>,
}

impl Dataset {
    /// Validates shapes, finiteness, name uniqueness and full column rank.
    pub fn new(y: Vec<f64>, x: Matrix, column_names: Vec<String>) -> Result<Self> {
        let (n, d) = (x.rows(), x.cols());
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "response has {} entries but design has {n} rows",
                y.len()
            )));
        }
        if d == 0 || n <= d {
            return Err(Error::domain(format!("need n > d >= 1, got n={n}, d={d}")));
        }
        if column_names.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "{} column names for {d} columns",
                column_names.len()
            )));
        }
        for (i, name) in column_names.iter().enumerate() {
            if column_names[..i].contains(name) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite response value"));
        }
        let rank = numerical_rank(&x, 1e-10);
        if rank < d {
            return Err(Error::RankDeficient { rank, cols: d });
        }
        Ok(Self { y, x, column_names })
    }

    /// Dataset with generated column names `x0, x1, …`.
    pub fn from_xy(y: Vec<f64>, x: Matrix) -> Result<Self> {
        let names = (0..x.cols()).map(|j| format!("x{j}")).collect();
        Self::new(y, x, names)
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Zero-residual tolerance `1e-9·(1 + max|yᵢ|)`.
    pub fn zero_tol(&self) -> f64 {
        1e-9 * (1.0 + self.y.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    pub fn residuals(&self, beta: &[f64]) -> Vec<f64> {
        self.x
            .row_iter()
            .zip(&self.y)
            .map(|(row, y)| y - dot(row, beta))
            .collect()
    }

    pub fn objective(&self, beta: &[f64], alpha: f64) -> f64 {
        self.residuals(beta).iter().map(|&u| check_loss(u, alpha)).sum()
    }
}

/// Fitted regression α-quantile.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFit {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the returned solution is an exact-fit vertex.
    pub vertex: bool,
}

impl QuantileFit {
    /// Counts of (negative, zero, positive) residuals under tolerance `ztol`.
    pub fn sign_counts(&self, ztol: f64) -> (usize, usize, usize) {
        self.residuals.iter().fold((0, 0, 0), |(neg, zero, pos), &r| {
            if r < -ztol {
                (neg + 1, zero, pos)
            } else if r > ztol {
                (neg, zero, pos + 1)
            } else {
                (neg, zero + 1, pos)
            }
        })
    }
}

/// Fits the regression α-quantile.
pub fn fit_rq(data: &Dataset, alpha: f64) -> Result<QuantileFit> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("quantile level must lie in (0,1), got {alpha}")));
    }
    let ip = frisch_newton(data.x(), data.y(), alpha)?;
    let mut beta = ip.beta;
    let mut residuals = data.residuals(&beta);
    let mut objective: f64 = residuals.iter().map(|&u| check_loss(u, alpha)).sum();
    let mut vertex = false;

    if let Some(vb) = purify(data, &residuals) {
        let vres = data.residuals(&vb);
        let vobj: f64 = vres.iter().map(|&u| check_loss(u, alpha)).sum();
        if vobj <= objective * (1.0 + 1e-12) {
            beta = vb;
            residuals = vres;
            objective = vobj;
            vertex = true;
        }
    }

    Ok(QuantileFit {
        alpha,
        beta,
        residuals,
        objective,
        iterations: ip.iterations,
        converged: true,
        vertex,
    })
}

struct IpSolution {
    beta: Vec<f64>,
    iterations: usize,
}

fn step_bound(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(1e20, f64::min)
}

/// Accumulates the lower triangle of `Σ wᵢ xᵢxᵢᵀ` into `out` (d×d, row-major).
fn weighted_gram(x: &Matrix, w: &[f64], out: &mut [f64]) {
    let d = x.cols();
    out.iter_mut().for_each(|v| *v = 0.0);
    for (row, &wi) in x.row_iter().zip(w) {
        for a in 0..d {
            let wa = wi * row[a];
            let dst = &mut out[a * d..a * d + a + 1];
            for (o, &xb) in dst.iter_mut().zip(&row[..=a]) {
                *o += wa * xb;
            }
        }
    }
}

/// `Σ vᵢ xᵢ`, i.e. `Xᵀv`.
fn xt_times(x: &Matrix, v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (row, &vi) in x.row_iter().zip(v) {
        for (o, &xr) in out.iter_mut().zip(row) {
            *o += vi * xr;
        }
    }
}

fn frisch_newton(x: &Matrix, y: &[f64], alpha: f64) -> Result<IpSolution> {
    let (n, d) = (x.rows(), x.cols());
    let nf = n as f64;

    // dual start at the least-squares fit
    let mut gram = vec![0.0; d * d];
    weighted_gram(x, &vec![1.0; n], &mut gram);
    let chol = Cholesky::factor_lower(d, &gram).map_err(|_| Error::RankDeficient {
        rank: numerical_rank(x, 1e-10),
        cols: d,
    })?;
    let mut dual = vec![0.0; d];
    xt_times(x, y, &mut dual);
    chol.solve_in_place(&mut dual);
    // LP dual variable is −β
    dual.iter_mut().for_each(|v| *v = -*v);

    let mut xp = vec![1.0 - alpha; n];
    let mut s = vec![alpha; n];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut resid = vec![0.0; n];
    for (i, row) in x.row_iter().enumerate() {
        resid[i] = -y[i] - dot(row, &dual);
    }
    let scale = resid.iter().map(|r| r.abs()).sum::<f64>() / nf;
    let jitter = 1e-6 * scale.max(f64::MIN_POSITIVE);
    for i in 0..n {
        // c − Aᵀy with c = −y
        let r = resid[i];
        if r.abs() < jitter {
            z[i] = r.max(0.0) + jitter;
            w[i] = (-r).max(0.0) + jitter;
        } else {
            z[i] = r.max(0.0);
            w[i] = (-r).max(0.0);
        }
    }

    let mut q = vec![0.0; n];
    let mut rr = vec![0.0; n];
    let mut dx = vec![0.0; n];
    let mut ds = vec![0.0; n];
    let mut dz = vec![0.0; n];
    let mut dw = vec![0.0; n];
    let mut corr = vec![0.0; n];
    let mut xi = vec![0.0; n];
    let mut dxdz = vec![0.0; n];
    let mut dsdw = vec![0.0; n];
    let mut rhs = vec![0.0; d];
    let mut dy = vec![0.0; d];
    let mut tmp = vec![0.0; n];

    let y_scale = y.iter().map(|v| v.abs()).sum::<f64>();
    let converged = |dual: &[f64], z: &[f64], w: &[f64], xp: &[f64], s: &[f64]| {
        let gap: f64 = (0..n).map(|i| z[i] * xp[i] + w[i] * s[i]).sum();
        let obj: f64 = x
            .row_iter()
            .zip(y)
            .map(|(row, yi)| check_loss(yi + dot(row, dual), alpha))
            .sum();
        gap <= GAP_TOL * obj.max(1e-12 * y_scale).max(f64::MIN_POSITIVE)
    };

    for it in 1..=MAX_ITER {
        if converged(&dual, &z, &w, &xp, &s) {
            return Ok(IpSolution {
                beta: dual.iter().map(|v| -v).collect(),
                iterations: it - 1,
            });
        }
        for i in 0..n {
            q[i] = 1.0 / (z[i] / xp[i] + w[i] / s[i]);
            rr[i] = z[i] - w[i];
            tmp[i] = q[i] * rr[i];
        }
        weighted_gram(x, &q, &mut gram);
        // the weights q span many orders of magnitude near the optimum
        let ada = match Cholesky::factor_lower_with_floor(d, &gram, 1e-30) {
            Ok(c) => c,
            Err(_) => break,
        };
        xt_times(x, &tmp, &mut rhs);
        dy.copy_from_slice(&rhs);
        ada.solve_in_place(&mut dy);

        for (i, row) in x.row_iter().enumerate() {
            dx[i] = q[i] * (dot(row, &dy) - rr[i]);
            ds[i] = -dx[i];
            dz[i] = -z[i] * (dx[i] / xp[i] + 1.0);
            dw[i] = -w[i] * (ds[i] / s[i] + 1.0);
        }
        let mut fp = step_bound(&xp, &dx).min(step_bound(&s, &ds));
        let mut fd = step_bound(&w, &dw).min(step_bound(&z, &dz));
        fp = (STEP_DAMP * fp).min(1.0);
        fd = (STEP_DAMP * fd).min(1.0);

        if fp.min(fd) < 1.0 {
            // Mehrotra corrector
            let mu0: f64 = (0..n).map(|i| z[i] * xp[i] + w[i] * s[i]).sum();
            let g: f64 = (0..n)
                .map(|i| {
                    (z[i] + fd * dz[i]) * (xp[i] + fp * dx[i]) + (w[i] + fd * dw[i]) * (s[i] + fp * ds[i])
                })
                .sum();
            let mu = mu0 * (g / mu0).powi(3) / (2.0 * nf);
            for i in 0..n {
                dxdz[i] = dx[i] * dz[i];
                dsdw[i] = ds[i] * dw[i];
                xi[i] = mu * (1.0 / xp[i] - 1.0 / s[i]);
                corr[i] = q[i] * (dxdz[i] - dsdw[i] - xi[i]);
            }
            xt_times(x, &corr, &mut dy);
            for (a, b) in dy.iter_mut().zip(&rhs) {
                *a += b;
            }
            ada.solve_in_place(&mut dy);
            for (i, row) in x.row_iter().enumerate() {
                let xinv = 1.0 / xp[i];
                let sinv = 1.0 / s[i];
                dx[i] = q[i] * (dot(row, &dy) + xi[i] - rr[i] - dxdz[i] + dsdw[i]);
                ds[i] = -dx[i];
                dz[i] = mu * xinv - z[i] - xinv * z[i] * dx[i] - dxdz[i];
                dw[i] = mu * sinv - w[i] - sinv * w[i] * ds[i] - dsdw[i];
            }
            fp = step_bound(&xp, &dx).min(step_bound(&s, &ds));
            fd = step_bound(&w, &dw).min(step_bound(&z, &dz));
            fp = (STEP_DAMP * fp).min(1.0);
            fd = (STEP_DAMP * fd).min(1.0);
        }

        for i in 0..n {
            xp[i] += fp * dx[i];
            s[i] += fp * ds[i];
            z[i] += fd * dz[i];
            w[i] += fd * dw[i];
        }
        for (a, b) in dual.iter_mut().zip(&dy) {
            *a += fd * b;
        }
    }
    if converged(&dual, &z, &w, &xp, &s) {
        return Ok(IpSolution {
            beta: dual.iter().map(|v| -v).collect(),
            iterations: MAX_ITER,
        });
    }
    Err(Error::ConvergenceFailure {
        what: "interior-point quantile regression",
        iterations: MAX_ITER,
    })
}

/// Exact fit through the `d` smallest-|residual| observations that form a
/// nonsingular basis.
fn purify(data: &Dataset, residuals: &[f64]) -> Option<Vec<f64>> {
    let (n, d) = (data.n(), data.d());
    let x = data.x();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| residuals[a].abs().total_cmp(&residuals[b].abs()).then(a.cmp(&b)));

    let mut basis: Vec<usize> = Vec::with_capacity(d);
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(d);
    for &i in &order {
        let row = x.row(i);
        let norm = dot(row, row).sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut v = row.to_vec();
        for u in &ortho {
            let p = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        let vn = dot(&v, &v).sqrt();
        if vn > 1e-8 * norm {
            v.iter_mut().for_each(|a| *a /= vn);
            ortho.push(v);
            basis.push(i);
            if basis.len() == d {
                break;
            }
        }
    }
    if basis.len() < d {
        return None;
    }
    let rows: Vec<&[f64]> = basis.iter().map(|&i| x.row(i)).collect();
    let xb = Matrix::from_rows(&rows).ok()?;
    let yb: Vec<f64> = basis.iter().map(|&i| data.y()[i]).collect();
    solve_lu(&xb, &yb, 1e-12)
}

/// Regression quantiles over a grid of levels.
#[derive(Debug, Clone)]
pub struct QuantileProcess {
    pub levels: Vec<f64>,
    pub fits: Vec<QuantileFit>,
    /// Number of requested levels clipped into [`LEVEL_CLIP`].
    pub clipped: usize,
}

impl QuantileProcess {
    pub fn betas(&self) -> impl Iterator<Item = &[f64]> + Clone + '_ {
        self.fits.iter().map(|f| f.beta.as_slice())
    }
}

/// Fits every level (sorted ascending, clipped into [0.005, 0.995]).
pub fn fit_process(data: &Dataset, levels: &[f64]) -> Result<QuantileProcess> {
    if levels.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut sorted = Vec::with_capacity(levels.len());
    let mut clipped = 0;
    for &l in levels {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::domain(format!("quantile level must lie in (0,1), got {l}")));
        }
        let c = l.clamp(LEVEL_CLIP.0, LEVEL_CLIP.1);
        if c != l {
            clipped += 1;
        }
        sorted.push(c);
    }
    if clipped > 0 {
        warn!("{clipped} quantile level(s) clipped into [{}, {}]", LEVEL_CLIP.0, LEVEL_CLIP.1);
    }
    sorted.sort_by(f64::total_cmp);
    let fits = sorted
        .par_iter()
        .map(|&l| {
            fit_rq(data, l).map_err(|e| Error::AtLevel {
                alpha: l,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantileProcess {
        levels: sorted,
        fits,
        clipped,
    })
}
