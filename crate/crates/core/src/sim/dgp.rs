//! Simulation designs `Y = 1 + ΣⱼXⱼ + D + δ_a(U)·D·X₁ + F⁻¹(U)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{beta_quantile, normal_quantile, student_t_quantile, Matrix};
use crate::rq::Dataset;
use crate::wald::Restriction;

/// Column layout of generated designs.
pub const COLUMNS: [&str; 7] = ["intercept", "x1", "x2", "x3", "x4", "d", "d_x1"];
/// Index of the tested `D·X₁` coefficient.
pub const TESTED_COEF: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorDist {
    #[default]
    Normal,
    /// Student-t with three degrees of freedom.
    T3,
}

impl ErrorDist {
    pub fn quantile(self, u: f64) -> Result<f64> {
        match self {
            ErrorDist::Normal => normal_quantile(u),
            ErrorDist::T3 => student_t_quantile(u, 3.0),
        }
    }
}

impl fmt::Display for ErrorDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorDist::Normal => "normal",
            ErrorDist::T3 => "t3",
        })
    }
}

impl FromStr for ErrorDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(ErrorDist::Normal),
            "t3" => Ok(ErrorDist::T3),
            other => Err(Error::config("error", format!("unknown error distribution `{other}`"))),
        }
    }
}

/// Heterogeneity function `δ_a(U)` of models 1–6.
pub fn delta_a(model: u8, a: f64, u: f64, alpha_star: f64, dist: ErrorDist) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::domain(format!("U must lie in (0,1), got {u}")));
    }
    match model {
        1 => Ok(a),
        2 => Ok(a * (1.0 + dist.quantile(u)?)),
        3 => Ok((1.0 - 5.0 * a) * beta_quantile(u, 1.0, 4.0)? - beta_quantile(alpha_star, 1.0, 4.0)?),
        4 => Ok(2.0 * a * beta_quantile(u, 0.5, 0.5)?),
        5 => Ok(2.0 * a * beta_quantile(u, 2.0, 2.0)?),
        6 => Ok(((2.0 * PI * u).sin() - (2.0 * PI * alpha_star).sin() - 2.0 * PI * a) / (2.0 * PI)),
        m => Err(Error::domain(format!("model must be 1..=6, got {m}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgpSpec {
    pub model: u8,
    pub a: f64,
    pub alpha_star: f64,
    pub dist: ErrorDist,
    pub n: usize,
}

impl DgpSpec {
    pub fn new(model: u8, a: f64, alpha_star: f64, dist: ErrorDist, n: usize) -> Result<Self> {
        if !(1..=6).contains(&model) {
            return Err(Error::domain(format!("model must be 1..=6, got {model}")));
        }
        if n < 20 {
            return Err(Error::domain(format!("sample size must be at least 20, got {n}")));
        }
        if !(alpha_star > 0.0 && alpha_star < 1.0) || !a.is_finite() {
            return Err(Error::domain("alpha_star must lie in (0,1) and a must be finite"));
        }
        Ok(Self {
            model,
            a,
            alpha_star,
            dist,
            n,
        })
    }

    pub fn delta(&self, u: f64) -> Result<f64> {
        delta_a(self.model, self.a, u, self.alpha_star, self.dist)
    }

    /// Coefficients of the conditional `u`-quantile, assuming it is monotone in `u`.
    pub fn true_beta(&self, u: f64) -> Result<Vec<f64>> {
        Ok(vec![1.0 + self.dist.quantile(u)?, 1.0, 1.0, 1.0, 1.0, 1.0, self.delta(u)?])
    }
}

/// Uniform draw on the open interval (0, 1).
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

/// Draws one sample; the restriction tests that the `D·X₁` coefficient is zero.
pub fn generate_sample<R: Rng + ?Sized>(spec: &DgpSpec, rng: &mut R) -> Result<(Dataset, Restriction)> {
    let n = spec.n;
    let d = COLUMNS.len();
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut xs = [0.0; 4];
        for v in xs.iter_mut() {
            *v = normal_quantile(open_unit(rng))?;
        }
        let treat = if rng.gen::<bool>() { 1.0 } else { 0.0 };
        let u = open_unit(rng);
        let yi = 1.0 + xs.iter().sum::<f64>() + treat + spec.delta(u)? * treat * xs[0] + spec.dist.quantile(u)?;
        x.extend_from_slice(&[1.0, xs[0], xs[1], xs[2], xs[3], treat, treat * xs[0]]);
        y.push(yi);
    }
    let names = COLUMNS.iter().map(|s| s.to_string()).collect();
    let data = Dataset::new(y, Matrix::new(n, d, x)?, names)?;
    let restr = Restriction::select(d, &[TESTED_COEF])?.with_labels(vec![COLUMNS[TESTED_COEF].to_string()])?;
    Ok((data, restr))
}
