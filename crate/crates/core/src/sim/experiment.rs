use std::collections::BTreeMap;
use std::time::Instant;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dgp::{generate_sample, DgpSpec, ErrorDist};
use super::report::{SimReport, SimRow};
use crate::density::{compute_h, estimate_g, EgConfig, GMethod};
use crate::error::{Error, Result};
use crate::rq::fit_rq;
use crate::wald::wald_test;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub models: Vec<u8>,
    pub sample_sizes: Vec<usize>,
    pub alphas: Vec<f64>,
    pub a_values: Vec<f64>,
    pub methods: Vec<GMethod>,
    pub replications: usize,
    pub nominal_tau: f64,
    pub base_seed: u64,
    pub eg_config: EgConfig,
    pub error_dist: ErrorDist,
    /// Emit one progress line per finished cell on standard error.
    pub progress: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            models: vec![1],
            sample_sizes: vec![100],
            alphas: vec![0.5],
            a_values: vec![0.0],
            methods: vec![GMethod::Eg],
            replications: 1000,
            nominal_tau: 0.05,
            base_seed: 20_190_101,
            eg_config: EgConfig::default(),
            error_dist: ErrorDist::Normal,
            progress: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let nonempty = |key: &str, len: usize| {
            if len == 0 {
                Err(Error::config(key, "must not be empty"))
            } else {
                Ok(())
            }
        };
        nonempty("models", self.models.len())?;
        nonempty("sizes", self.sample_sizes.len())?;
        nonempty("alphas", self.alphas.len())?;
        nonempty("a", self.a_values.len())?;
        nonempty("methods", self.methods.len())?;
        if let Some(m) = self.models.iter().find(|m| !(1..=6).contains(*m)) {
            return Err(Error::config("models", format!("model {m} not in 1..=6")));
        }
        if let Some(n) = self.sample_sizes.iter().find(|&&n| n < 20) {
            return Err(Error::config("sizes", format!("sample size {n} below 20")));
        }
        if !self.a_values.contains(&0.0) {
            return Err(Error::config("a", "must include 0 for size correction"));
        }
        if self.a_values.iter().any(|a| !a.is_finite()) {
            return Err(Error::config("a", "values must be finite"));
        }
        if self.replications < 100 {
            return Err(Error::config("reps", format!("need at least 100 replications, got {}", self.replications)));
        }
        if !(self.nominal_tau > 0.0 && self.nominal_tau <= 1.0) {
            return Err(Error::config("tau", "nominal level must lie in (0, 1]"));
        }
        if self.methods.contains(&GMethod::Eg) {
            self.eg_config.validate()?;
        }
        for &alpha in &self.alphas {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::config("alphas", format!("level {alpha} outside (0,1)")));
            }
            if self.methods.contains(&GMethod::Eg) && !(self.eg_config.a1 < alpha && alpha < self.eg_config.a2) {
                return Err(Error::config("alphas", format!("level {alpha} outside the process interval")));
            }
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one replication. The heterogeneity constant `a` is deliberately
/// not part of the key so null and alternative runs share their draws.
pub fn replication_seed(base: u64, model: u8, n: usize, alpha: f64, rep: usize) -> u64 {
    [model as u64, n as u64, alpha.to_bits(), rep as u64]
        .iter()
        .fold(splitmix(base), |acc, &k| splitmix(acc ^ splitmix(k)))
}

/// Outcome of one method on one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepOutcome {
    /// `None` when the estimate failed numerically.
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub seconds: f64,
}

/// Runs every method on one simulated sample.
pub fn run_replication(spec: &DgpSpec, alpha: f64, methods: &[GMethod], eg: &EgConfig, seed: u64) -> Result<Vec<RepOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (data, restr) = generate_sample(spec, &mut rng)?;
    let start = Instant::now();
    let fit = fit_rq(&data, alpha);
    let fit_secs = start.elapsed().as_secs_f64();
    let fit = match fit {
        Ok(f) => f,
        Err(e) if e.is_numerical() => {
            return Ok(methods
                .iter()
                .map(|_| RepOutcome {
                    statistic: None,
                    p_value: None,
                    seconds: fit_secs,
                })
                .collect())
        }
        Err(e) => return Err(e),
    };
    let h = compute_h(&data);
    methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let res = estimate_g(&data, &fit, method, eg).and_then(|g| wald_test(&fit, &g, &h, &restr, data.n()));
            let seconds = fit_secs + start.elapsed().as_secs_f64();
            match res {
                Ok(w) => Ok(RepOutcome {
                    statistic: Some(w.statistic),
                    p_value: Some(w.p_value),
                    seconds,
                }),
                Err(e) if e.is_numerical() => Ok(RepOutcome {
                    statistic: None,
                    p_value: None,
                    seconds,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Type-1 empirical quantile of sorted values.
fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((n as f64 * p).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

struct CellStats {
    stats: Vec<Option<f64>>,
    pvals: Vec<Option<f64>>,
    seconds: Vec<f64>,
}

/// Size and size-corrected power over the configured grid of cells.
pub fn run_experiment(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let tau = cfg.nominal_tau;
    let mut a_values = cfg.a_values.clone();
    a_values.sort_by(f64::total_cmp);
    a_values.dedup();
    let mut rows = Vec::new();

    for &model in &cfg.models {
        for &n in &cfg.sample_sizes {
            for &alpha in &cfg.alphas {
                let mut cells: BTreeMap<usize, Vec<CellStats>> = BTreeMap::new();
                for (ai, &a) in a_values.iter().enumerate() {
                    let spec = DgpSpec::new(model, a, alpha, cfg.error_dist, n)?;
                    let reps: Vec<Vec<RepOutcome>> = (0..cfg.replications)
                        .into_par_iter()
                        .map(|rep| {
                            let seed = replication_seed(cfg.base_seed, model, n, alpha, rep);
                            run_replication(&spec, alpha, &cfg.methods, &cfg.eg_config, seed)
                        })
                        .collect::<Result<_>>()?;
                    let per_method = (0..cfg.methods.len())
                        .map(|mi| CellStats {
                            stats: reps.iter().map(|r| r[mi].statistic).collect(),
                            pvals: reps.iter().map(|r| r[mi].p_value).collect(),
                            seconds: reps.iter().map(|r| r[mi].seconds).collect(),
                        })
                        .collect();
                    cells.insert(ai, per_method);
                }

                let null_idx = a_values.iter().position(|&a| a == 0.0).expect("validated");
                for (mi, &method) in cfg.methods.iter().enumerate() {
                    let mut null: Vec<f64> = cells[&null_idx][mi].stats.iter().flatten().copied().collect();
                    null.sort_by(f64::total_cmp);
                    let critical = if null.is_empty() {
                        f64::NAN
                    } else {
                        empirical_quantile(&null, 1.0 - tau)
                    };
                    for (ai, &a) in a_values.iter().enumerate() {
                        let cell = &cells[&ai][mi];
                        let valid: Vec<(f64, f64)> = cell
                            .stats
                            .iter()
                            .zip(&cell.pvals)
                            .filter_map(|(s, p)| Some(((*s)?, (*p)?)))
                            .collect();
                        let failures = cfg.replications - valid.len();
                        if failures * 100 > cfg.replications {
                            warn!(
                                "model={model} n={n} alpha={alpha} a={a} method={method}: {failures} of {} replications failed",
                                cfg.replications
                            );
                        }
                        let denom = valid.len().max(1) as f64;
                        let raw = valid.iter().filter(|(_, p)| *p < tau).count() as f64 / denom * 100.0;
                        let corrected = if critical.is_nan() {
                            f64::NAN
                        } else {
                            valid.iter().filter(|(s, _)| *s > critical).count() as f64 / denom * 100.0
                        };
                        let cpu_mean_s = cell.seconds.iter().sum::<f64>() / cell.seconds.len().max(1) as f64;
                        if cfg.progress {
                            eprintln!(
                                "cell model={model} n={n} alpha={alpha:.2} a={a:.2} method={method} done reps={} rej={raw:.1}",
                                cfg.replications
                            );
                        }
                        rows.push(SimRow {
                            model,
                            n,
                            alpha,
                            a,
                            method,
                            raw_pct: raw,
                            size_corrected_pct: corrected,
                            reps: cfg.replications,
                            cpu_mean_s,
                            failures,
                        });
                    }
                }
            }
        }
    }
    let mut report = SimReport { rows };
    report.sort();
    Ok(report)
}

/// Average absolute density errors on a pure-location design, where every
/// conditional density at the α-quantile equals `φ(Φ⁻¹(α))` (normal errors).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityAccuracy {
    pub n: usize,
    pub alpha: f64,
    /// Mean over replications of the mean |f̂ᵢ − f₀|.
    pub feasible_error: f64,
    /// Same for the estimator evaluated at the true coefficients.
    pub infeasible_error: f64,
    /// Mean of the mean |f̂ᵢ − f̃ᵢ|.
    pub gap: f64,
    pub replications: usize,
}

pub fn density_accuracy(n: usize, alpha: f64, replications: usize, eg: &EgConfig, base_seed: u64) -> Result<DensityAccuracy> {
    use crate::density::{draw_levels, eg_density, infeasible_density};
    use crate::numerics::{normal_pdf, normal_quantile};
    use crate::rq::fit_process;

    eg.validate()?;
    let spec = DgpSpec::new(1, 0.0, alpha, ErrorDist::Normal, n)?;
    let f0 = normal_pdf(normal_quantile(alpha)?);
    let (m, h) = eg.resolve(n)?;
    let levels = draw_levels(eg, m);
    let per_rep: Vec<(f64, f64, f64)> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(base_seed, 1, n, alpha, rep));
            let (data, _) = generate_sample(&spec, &mut rng)?;
            let fit = fit_rq(&data, alpha)?;
            let process = fit_process(&data, &levels)?;
            let fhat = eg_density(&data, &process, &fit, h, eg.span(), eg.kernel);
            let ftilde = infeasible_density(
                &data,
                |u| spec.true_beta(u).expect("level inside (0,1)"),
                alpha,
                &levels,
                h,
                eg.span(),
                eg.kernel,
            );
            let nf = n as f64;
            let e_hat = fhat.iter().map(|f| (f - f0).abs()).sum::<f64>() / nf;
            let e_tilde = ftilde.iter().map(|f| (f - f0).abs()).sum::<f64>() / nf;
            let gap = fhat.iter().zip(&ftilde).map(|(a, b)| (a - b).abs()).sum::<f64>() / nf;
            Ok((e_hat, e_tilde, gap))
        })
        .collect::<Result<_>>()?;
    let r = per_rep.len() as f64;
    Ok(DensityAccuracy {
        n,
        alpha,
        feasible_error: per_rep.iter().map(|v| v.0).sum::<f64>() / r,
        infeasible_error: per_rep.iter().map(|v| v.1).sum::<f64>() / r,
        gap: per_rep.iter().map(|v| v.2).sum::<f64>() / r,
        replications,
    })
}
