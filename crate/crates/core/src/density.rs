//! Conditional densities at the α-quantile and the matrix
//! `G(α) = E[fᵢ(Xᵢᵀβ(α)) XᵢXᵢᵀ]`.
//!
//! The quantile-process estimator (`weg`) smooths the fitted quantiles
//! `Xᵢᵀβ̂(U_j)` over a grid of levels in `[a1, a2]`:
//!
//! ```text
//! f̂ᵢ = (a2 − a1)/(m·h) · Σⱼ K( Xᵢᵀ(β̂(U_j) − β̂(α)) / h )
//! Ĝ  = (1/n) Σᵢ f̂ᵢ XᵢXᵢᵀ
//! ```
//!
//! with `K` the Epanechnikov kernel, on `[−1, 1]` by default or rescaled to
//! `[−1/2, 1/2]` (see [`KernelSupport`]). Three classical
//! comparators are provided: Powell's uniform-kernel estimator (`wker`), the
//! Hendricks–Koenker difference quotient (`wnid`) and a scalar iid sparsity
//! (`wiid`). All use the Hall–Sheather rule-of-thumb bandwidth.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{dot, normal_pdf, normal_quantile, symmetric_eigenvalues, Matrix};
use crate::rq::{fit_process, fit_rq, Dataset, QuantileFit, QuantileProcess, LEVEL_CLIP};

/// Eigenvalue ratio at or below which an estimated `G` is declared singular.
pub const SINGULAR_RATIO: f64 = 1e-12;

/// Epanechnikov kernel rescaled to the support `[−1/2, 1/2]`.
#[inline]
pub fn kernel_epa(w: f64) -> f64 {
    if w.abs() <= 0.5 {
        1.5 * (1.0 - 4.0 * w * w)
    } else {
        0.0
    }
}

/// Support of the Epanechnikov kernel in the quantile-process estimator.
///
/// `Unit` is the usual `0.75(1 − w²)` on `[−1, 1]`; at a given `h` it smooths
/// twice as wide as `Half`, which is [`kernel_epa`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelSupport {
    #[default]
    Unit,
    Half,
}

impl KernelSupport {
    #[inline]
    pub fn eval(self, w: f64) -> f64 {
        match self {
            KernelSupport::Unit => 0.5 * kernel_epa(0.5 * w),
            KernelSupport::Half => kernel_epa(w),
        }
    }
}

impl fmt::Display for KernelSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelSupport::Unit => "unit",
            KernelSupport::Half => "half",
        })
    }
}

impl FromStr for KernelSupport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "unit" => Ok(KernelSupport::Unit),
            "half" => Ok(KernelSupport::Half),
            other => Err(Error::config("kernel", format!("unknown kernel support `{other}`"))),
        }
    }
}

/// Number of quantile-process levels, `⌊(k·n / (ln n)^{11/5})^{5/4}⌋`, at least 2.
pub fn grid_size_m(n: usize, k: f64) -> Result<usize> {
    if n < 20 || !(k > 0.0) || !k.is_finite() {
        return Err(Error::domain(format!("grid size needs n >= 20 and k > 0, got n={n}, k={k}")));
    }
    let nf = n as f64;
    let m = (k * nf / nf.ln().powf(2.2)).powf(1.25).floor();
    Ok((m as usize).max(2))
}

/// Kernel bandwidth `c·(ln m / m)^{1/5}`.
pub fn bandwidth_h(m: usize, c: f64) -> Result<f64> {
    if m < 2 || !(c > 0.0) || !c.is_finite() {
        return Err(Error::domain(format!("bandwidth needs m >= 2 and c > 0, got m={m}, c={c}")));
    }
    let mf = m as f64;
    Ok(c * (mf.ln() / mf).powf(0.2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelMode {
    /// Midpoints `a1 + (j − 1/2)(a2 − a1)/m`.
    Equispaced,
    /// Independent uniform draws from a generator seeded with `EgConfig::seed`.
    IidUniform,
}

impl FromStr for LevelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equispaced" => Ok(LevelMode::Equispaced),
            "iid" | "iid-uniform" => Ok(LevelMode::IidUniform),
            other => Err(Error::config("level-mode", format!("unknown level mode `{other}`"))),
        }
    }
}

/// Tuning for the quantile-process density estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EgConfig {
    pub a1: f64,
    pub a2: f64,
    pub k: f64,
    pub c: f64,
    pub m_override: Option<usize>,
    pub h_override: Option<f64>,
    pub level_mode: LevelMode,
    pub seed: u64,
    pub kernel: KernelSupport,
}

impl Default for EgConfig {
    fn default() -> Self {
        Self {
            a1: 0.01,
            a2: 0.99,
            k: 5.0,
            c: 1.5,
            m_override: None,
            h_override: None,
            level_mode: LevelMode::Equispaced,
            seed: 0,
            kernel: KernelSupport::Unit,
        }
    }
}

impl EgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a1 > 0.0 && self.a1 < self.a2 && self.a2 < 1.0) {
            return Err(Error::config("a1/a2", format!("need 0 < a1 < a2 < 1, got [{}, {}]", self.a1, self.a2)));
        }
        if !(self.k > 0.0) {
            return Err(Error::config("k", "must be positive"));
        }
        if !(self.c > 0.0) {
            return Err(Error::config("c", "must be positive"));
        }
        if matches!(self.m_override, Some(m) if m < 2) {
            return Err(Error::config("m", "must be at least 2"));
        }
        if matches!(self.h_override, Some(h) if !(h > 0.0 && h.is_finite())) {
            return Err(Error::config("h", "must be positive"));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.a2 - self.a1
    }

    /// Grid size and bandwidth for a sample of size `n`.
    pub fn resolve(&self, n: usize) -> Result<(usize, f64)> {
        let m = match self.m_override {
            Some(m) => m,
            None => grid_size_m(n, self.k)?,
        };
        let h = match self.h_override {
            Some(h) => h,
            None => bandwidth_h(m, self.c)?,
        };
        Ok((m, h))
    }
}

/// Quantile levels for the process estimator.
pub fn draw_levels(cfg: &EgConfig, m: usize) -> Vec<f64> {
    let (a1, a2) = (cfg.a1, cfg.a2);
    let step = (a2 - a1) / m as f64;
    match cfg.level_mode {
        LevelMode::Equispaced => (0..m).map(|j| a1 + (j as f64 + 0.5) * step).collect(),
        LevelMode::IidUniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..m)
                .map(|_| loop {
                    let u = rng.gen_range(a1..a2);
                    if u > a1 {
                        break u;
                    }
                })
                .collect()
        }
    }
}

fn kernel_sum<'a>(
    data: &Dataset,
    betas: impl Iterator<Item = &'a [f64]> + Clone,
    beta_alpha: &[f64],
    h: f64,
    span: f64,
    kernel: KernelSupport,
) -> Vec<f64> {
    let m = betas.clone().count();
    let scale = span / (m as f64 * h);
    data.x()
        .row_iter()
        .map(|row| {
            let centre = dot(row, beta_alpha);
            let s: f64 = betas.clone().map(|b| kernel.eval((dot(row, b) - centre) / h)).sum();
            scale * s
        })
        .collect()
}

/// Per-observation density estimates from the fitted quantile process.
///
/// `span` is `a2 − a1`, the length of the level interval.
pub fn eg_density(
    data: &Dataset,
    process: &QuantileProcess,
    fit_alpha: &QuantileFit,
    h: f64,
    span: f64,
    kernel: KernelSupport,
) -> Vec<f64> {
    kernel_sum(data, process.betas(), &fit_alpha.beta, h, span, kernel)
}

/// The same kernel sum evaluated at known coefficient functions (simulation only).
pub fn infeasible_density<F>(
    data: &Dataset,
    true_beta: F,
    alpha: f64,
    levels: &[f64],
    h: f64,
    span: f64,
    kernel: KernelSupport,
) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let betas: Vec<Vec<f64>> = levels.iter().map(|&u| true_beta(u)).collect();
    let centre = true_beta(alpha);
    kernel_sum(data, betas.iter().map(Vec::as_slice), &centre, h, span, kernel)
}

/// `H_n = (1/n) Σ XᵢXᵢᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HMatrix {
    pub h: Matrix,
}

pub fn compute_h(data: &Dataset) -> HMatrix {
    HMatrix {
        h: weighted_second_moment(data, &vec![1.0; data.n()]),
    }
}

/// `(1/n) Σ wᵢ XᵢXᵢᵀ`, filled symmetrically.
fn weighted_second_moment(data: &Dataset, w: &[f64]) -> Matrix {
    let d = data.d();
    let n = data.n() as f64;
    let mut g = Matrix::zeros(d, d);
    for (row, &wi) in data.x().row_iter().zip(w) {
        if wi == 0.0 {
            continue;
        }
        for a in 0..d {
            let wa = wi * row[a];
            for b in 0..=a {
                g[(a, b)] += wa * row[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..=a {
            let v = g[(a, b)] / n;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GMethod {
    /// Quantile-process kernel estimator (`weg`).
    Eg,
    /// Scalar iid sparsity (`wiid`).
    IidSparsity,
    /// Hendricks–Koenker difference quotient (`wnid`).
    Hk,
    /// Powell uniform-kernel estimator (`wker`).
    Powell,
}

impl GMethod {
    pub const ALL: [GMethod; 4] = [GMethod::Eg, GMethod::IidSparsity, GMethod::Hk, GMethod::Powell];

    /// Short test-procedure tag.
    pub fn tag(self) -> &'static str {
        match self {
            GMethod::Eg => "weg",
            GMethod::IidSparsity => "wiid",
            GMethod::Hk => "wnid",
            GMethod::Powell => "wker",
        }
    }
}

impl fmt::Display for GMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for GMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "weg" => Ok(GMethod::Eg),
            "wiid" => Ok(GMethod::IidSparsity),
            "wnid" => Ok(GMethod::Hk),
            "wker" => Ok(GMethod::Powell),
            other => Err(Error::config("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Estimate of `G(α)` together with the per-observation densities behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GEstimate {
    pub alpha: f64,
    pub method: GMethod,
    pub g: Matrix,
    pub f_hat: Vec<f64>,
    pub bandwidth: f64,
    /// Quantile-process grid size (quantile-process method only).
    pub m_used: Option<usize>,
    /// Difference quotients floored at zero (Hendricks–Koenker only).
    pub floored: usize,
}

fn check_nonsingular(g: &Matrix) -> Result<()> {
    let ev = symmetric_eigenvalues(g)?;
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(hi > 0.0) || lo <= SINGULAR_RATIO * hi {
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        return Err(Error::SingularG { ratio });
    }
    Ok(())
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("quantile level must lie in (0,1), got {alpha}")))
    }
}

/// Quantile-process estimate of `G(α)`, fitting the α-quantile first.
pub fn estimate_g_eg(data: &Dataset, alpha: f64, cfg: &EgConfig) -> Result<GEstimate> {
    check_eg_level(alpha, cfg)?;
    let fit = fit_rq(data, alpha)?;
    estimate_g_eg_from_fit(data, &fit, cfg)
}

fn check_eg_level(alpha: f64, cfg: &EgConfig) -> Result<()> {
    cfg.validate()?;
    if !(cfg.a1 < alpha && alpha < cfg.a2) {
        return Err(Error::domain(format!(
            "quantile level {alpha} outside the process interval ({}, {})",
            cfg.a1, cfg.a2
        )));
    }
    Ok(())
}

/// Quantile-process estimate of `G(α)` reusing an existing α-fit.
pub fn estimate_g_eg_from_fit(data: &Dataset, fit: &QuantileFit, cfg: &EgConfig) -> Result<GEstimate> {
    check_eg_level(fit.alpha, cfg)?;
    let (m, h) = cfg.resolve(data.n())?;
    let levels = draw_levels(cfg, m);
    let process = fit_process(data, &levels)?;
    let f_hat = eg_density(data, &process, fit, h, cfg.span(), cfg.kernel);
    let g = weighted_second_moment(data, &f_hat);
    check_nonsingular(&g)?;
    Ok(GEstimate {
        alpha: fit.alpha,
        method: GMethod::Eg,
        g,
        f_hat,
        bandwidth: h,
        m_used: Some(m),
        floored: 0,
    })
}

/// Hall–Sheather rule-of-thumb bandwidth on the probability scale,
/// `n^{−1/3} z^{2/3} [1.5 φ(Φ⁻¹(α))² / (2Φ⁻¹(α)² + 1)]^{1/3}`, `z = Φ⁻¹(1 − τ/2)`.
pub fn hall_sheather_bandwidth(n: usize, alpha: f64, tau: f64) -> Result<f64> {
    if n < 20 || !(alpha > 0.0 && alpha < 1.0) || !(tau > 0.0 && tau < 1.0) {
        return Err(Error::domain(format!(
            "Hall-Sheather bandwidth needs n >= 20, alpha and tau in (0,1); got n={n}, alpha={alpha}, tau={tau}"
        )));
    }
    let x0 = normal_quantile(alpha)?;
    let f0 = normal_pdf(x0);
    let z = normal_quantile(1.0 - tau / 2.0)?;
    Ok((n as f64).powf(-1.0 / 3.0) * z.powf(2.0 / 3.0) * (1.5 * f0 * f0 / (2.0 * x0 * x0 + 1.0)).powf(1.0 / 3.0))
}

const HS_TAU: f64 = 0.05;

/// Offset subtracted from fitted quantile differences, `ε^{2/3}`.
pub const HK_EPS: f64 = 3.666_852_862_501_036_4e-11;

/// Hendricks–Koenker difference-quotient estimate of `G(α)`.
pub fn estimate_g_hk(data: &Dataset, alpha: f64) -> Result<GEstimate> {
    check_level(alpha)?;
    let hs = hall_sheather_bandwidth(data.n(), alpha, HS_TAU)?;
    let h = hs.min(alpha - LEVEL_CLIP.0).min(LEVEL_CLIP.1 - alpha);
    if !(h > 0.0) {
        return Err(Error::domain(format!("no room for a difference quotient at level {alpha}")));
    }
    let hi = fit_rq(data, alpha + h)?;
    let lo = fit_rq(data, alpha - h)?;
    let diff: Vec<f64> = hi.beta.iter().zip(&lo.beta).map(|(a, b)| a - b).collect();
    let mut floored = 0;
    let f_hat: Vec<f64> = data
        .x()
        .row_iter()
        .map(|row| {
            // observations shared by both bases have dyhat at rounding level
            let dyhat = dot(row, &diff) - HK_EPS;
            if dyhat > 0.0 {
                2.0 * h / dyhat
            } else {
                floored += 1;
                0.0
            }
        })
        .collect();
    let g = weighted_second_moment(data, &f_hat);
    check_nonsingular(&g)?;
    Ok(GEstimate {
        alpha,
        method: GMethod::Hk,
        g,
        f_hat,
        bandwidth: h,
        m_used: None,
        floored,
    })
}

/// Powell window half-width `Φ⁻¹(1/2 + h) − Φ⁻¹(1/2 − h)` for Hall–Sheather `h`.
pub fn powell_window(n: usize, alpha: f64) -> Result<f64> {
    let h = hall_sheather_bandwidth(n, alpha, HS_TAU)?;
    if h >= 0.5 {
        return Err(Error::domain(format!("Hall-Sheather bandwidth {h} too wide for the Powell window")));
    }
    Ok(normal_quantile(0.5 + h)? - normal_quantile(0.5 - h)?)
}

/// Powell uniform-kernel estimate of `G(α)`, fitting the α-quantile first.
pub fn estimate_g_powell(data: &Dataset, alpha: f64) -> Result<GEstimate> {
    check_level(alpha)?;
    let fit = fit_rq(data, alpha)?;
    estimate_g_powell_from_fit(data, &fit)
}

pub fn estimate_g_powell_from_fit(data: &Dataset, fit: &QuantileFit) -> Result<GEstimate> {
    let delta = powell_window(data.n(), fit.alpha)?;
    powell_with_window(data, fit, delta)
}

/// Powell estimate with an explicit window half-width `delta`.
pub fn powell_with_window(data: &Dataset, fit: &QuantileFit, delta: f64) -> Result<GEstimate> {
    if !(delta > 0.0) {
        return Err(Error::domain("Powell window must be positive"));
    }
    let inside = 1.0 / (2.0 * delta);
    let f_hat: Vec<f64> = fit
        .residuals
        .iter()
        .map(|u| if u.abs() <= delta { inside } else { 0.0 })
        .collect();
    if f_hat.iter().all(|&f| f == 0.0) {
        return Err(Error::SingularG { ratio: 0.0 });
    }
    let g = weighted_second_moment(data, &f_hat);
    check_nonsingular(&g)?;
    Ok(GEstimate {
        alpha: fit.alpha,
        method: GMethod::Powell,
        g,
        f_hat,
        bandwidth: delta,
        m_used: None,
        floored: 0,
    })
}

/// Scalar-sparsity estimate `G = H_n / ŝ`, fitting the α-quantile first.
pub fn estimate_g_iid(data: &Dataset, alpha: f64) -> Result<GEstimate> {
    check_level(alpha)?;
    let fit = fit_rq(data, alpha)?;
    estimate_g_iid_from_fit(data, &fit)
}

/// Type-1 empirical quantile of sorted values.
fn order_statistic(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((n as f64 * p).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

/// Sparsity `ŝ = [Q̂(α + h) − Q̂(α − h)] / (2h)` from the α-fit residuals.
pub fn iid_sparsity(data: &Dataset, fit: &QuantileFit) -> Result<(f64, f64)> {
    let alpha = fit.alpha;
    let h = hall_sheather_bandwidth(data.n(), alpha, HS_TAU)?;
    if !(alpha - h > 0.0 && alpha + h < 1.0) {
        return Err(Error::domain(format!(
            "sparsity bandwidth {h} pushes level {alpha} outside (0,1)"
        )));
    }
    let mut sorted = fit.residuals.clone();
    sorted.sort_by(f64::total_cmp);
    let s = (order_statistic(&sorted, alpha + h) - order_statistic(&sorted, alpha - h)) / (2.0 * h);
    Ok((s, h))
}

pub fn estimate_g_iid_from_fit(data: &Dataset, fit: &QuantileFit) -> Result<GEstimate> {
    let (s, h) = iid_sparsity(data, fit)?;
    if !(s > 0.0) {
        return Err(Error::DegenerateSparsity(s));
    }
    let g = compute_h(data).h.scale(1.0 / s);
    check_nonsingular(&g)?;
    Ok(GEstimate {
        alpha: fit.alpha,
        method: GMethod::IidSparsity,
        g,
        f_hat: vec![1.0 / s; data.n()],
        bandwidth: h,
        m_used: None,
        floored: 0,
    })
}

/// Dispatches to the estimator for `method`, reusing `fit` where possible.
pub fn estimate_g(data: &Dataset, fit: &QuantileFit, method: GMethod, cfg: &EgConfig) -> Result<GEstimate> {
    match method {
        GMethod::Eg => estimate_g_eg_from_fit(data, fit, cfg),
        GMethod::IidSparsity => estimate_g_iid_from_fit(data, fit),
        GMethod::Hk => estimate_g_hk(data, fit.alpha),
        GMethod::Powell => estimate_g_powell_from_fit(data, fit),
    }
}
