//! Independent oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

pub mod suites;

use std::f64::consts::PI;

use qrwald_core::{check_loss, Matrix};

/// Composite Simpson rule with `2k` panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, k: usize) -> f64 {
    let n = 2 * k;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Standard normal CDF by quadrature of the density.
pub fn normal_cdf_oracle(x: f64) -> f64 {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    if x.abs() <= 8.0 {
        0.5 + simpson(phi, 0.0, x, 4000)
    } else if x > 0.0 {
        1.0 - simpson(phi, x, x + 40.0, 20_000)
    } else {
        simpson(phi, x - 40.0, x, 20_000)
    }
}

/// Upper normal tail by quadrature, accurate far into the tail.
pub fn normal_sf_oracle(x: f64) -> f64 {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
    simpson(phi, x, x + 40.0, 40_000)
}

/// `Γ(s)` for half-integer or integer `s` by recursion from Γ(1/2)=√π, Γ(1)=1.
pub fn gamma_halfint(s: f64) -> f64 {
    let twice = (2.0 * s).round() as i64;
    assert!(twice >= 1 && (2.0 * s - twice as f64).abs() < 1e-12);
    let (mut g, mut x) = if twice % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while x < s - 1e-12 {
        g *= x;
        x += 1.0;
    }
    g
}

/// χ² CDF by quadrature after `x = t²`, which removes the k = 1 singularity.
pub fn chi2_cdf_oracle(x: f64, k: u32) -> f64 {
    let kf = k as f64;
    let c = 1.0 / (2f64.powf(kf / 2.0) * gamma_halfint(kf / 2.0));
    let g = |t: f64| {
        let x = t * t;
        c * x.powf(kf / 2.0 - 1.0) * (-x / 2.0).exp() * 2.0 * t
    };
    let g = move |t: f64| if t == 0.0 { if k == 1 { 2.0 * c } else { 0.0 } } else { g(t) };
    simpson(g, 0.0, x.sqrt(), 20_000)
}

/// χ² upper tail by quadrature from `x` outward.
pub fn chi2_sf_oracle(x: f64, k: u32) -> f64 {
    if x < 1.0 {
        return 1.0 - chi2_cdf_oracle(x, k);
    }
    let kf = k as f64;
    let c = 1.0 / (2f64.powf(kf / 2.0) * gamma_halfint(kf / 2.0));
    let f = |t: f64| c * t.powf(kf / 2.0 - 1.0) * (-t / 2.0).exp();
    simpson(f, x, x + 200.0 + 10.0 * kf, 100_000)
}

/// Student-t CDF for integer `ν`. With `x = √ν·tan θ` the density becomes
/// proportional to `cos^(ν−1) θ` on (−π/2, π/2).
pub fn student_t_cdf_oracle(t: f64, nu: u32) -> f64 {
    let g = |th: f64| th.cos().powi(nu as i32 - 1);
    let total = simpson(g, -PI / 2.0, PI / 2.0, 20_000);
    let part = simpson(g, 0.0, (t / (nu as f64).sqrt()).atan(), 20_000);
    0.5 + part / total
}

/// `∫₀^{hi} t^{a−1}(1−t)^{b−1} dt` for `hi ≤ ½` after `t = u^p` with `p·a`
/// integral and `p ≥ 4`, so the transformed integrand is smooth.
fn beta_left(hi: f64, a: f64, b: f64) -> f64 {
    let pa = (4.0 * a).ceil().max(4.0);
    let p = pa / a;
    let g = |u: f64| p * u.powf(pa - 1.0) * (1.0 - u.powf(p)).powf(b - 1.0);
    simpson(g, 0.0, hi.powf(1.0 / p), 20_000)
}

/// Regularised incomplete beta by quadrature, split at ½ with power
/// substitutions toward each end point.
pub fn beta_cdf_oracle(x: f64, a: f64, b: f64) -> f64 {
    let whole = beta_left(0.5, a, b) + beta_left(0.5, b, a);
    let part = if x <= 0.5 {
        beta_left(x, a, b)
    } else {
        whole - beta_left(1.0 - x, b, a)
    };
    part / whole
}

/// Minimum check loss over all exact-fit bases (rows of full rank).
pub fn lp_vertex_oracle(x: &[Vec<f64>], y: &[f64], alpha: f64) -> f64 {
    let n = y.len();
    let d = x[0].len();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
        let rhs: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        if let Some(beta) = gauss_solve(a, rhs) {
            let obj: f64 = (0..n)
                .map(|i| {
                    let fit: f64 = x[i].iter().zip(&beta).map(|(a, b)| a * b).sum();
                    check_loss(y[i] - fit, alpha)
                })
                .sum();
            best = best.min(obj);
        }
        // next combination
        let mut k = d;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < n - d + k {
                idx[k] += 1;
                for j in k + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Gaussian elimination with partial pivoting; `None` if numerically singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Explicit inverse by Gauss–Jordan elimination.
pub fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.rows();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let a: Vec<Vec<f64>> = (0..n).map(|r| m.row(r).to_vec()).collect();
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(gauss_solve(a, e)?);
    }
    let mut data = vec![0.0; n * n];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
    Matrix::new(n, n, data).ok()
}

/// Smallest eigenvalue lower bound check: all leading principal minors of
/// `m + shift·I` via Cholesky without pivoting floor.
pub fn is_psd(m: &Matrix, tol: f64) -> bool {
    let n = m.rows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m[(j, j)] + tol * scale;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d < 0.0 {
            return false;
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = if ljj > 0.0 { s / ljj } else { 0.0 };
        }
    }
    true
}