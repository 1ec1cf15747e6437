//! Deterministic check suites, each reporting every failed check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qrwald_core::numerics::{
    beta_inc, beta_quantile, chi2_sf, normal_cdf, normal_quantile, normal_sf, student_t_cdf, student_t_quantile,
};
use qrwald_core::sim::{generate_sample, run_experiment, DgpSpec, ErrorDist, SimConfig};
use qrwald_core::wald::test_at;
use qrwald_core::{
    compute_h, compute_w, estimate_g, fit_process, fit_rq, wald_test, Dataset, EgConfig, GMethod, LevelMode, Matrix,
    Restriction,
};

use super::*;

#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: usize,
    pub failures: Vec<String>,
    /// Largest observed error relative to its tolerance.
    pub worst: f64,
}

impl Outcome {
    fn check(&mut self, ok: bool, ratio: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        if ratio.is_finite() {
            self.worst = self.worst.max(ratio);
        }
        if !ok {
            self.failures.push(what());
        }
    }

    /// `|got − want| ≤ tol`, recorded with its ratio to the tolerance.
    fn close(&mut self, got: f64, want: f64, tol: f64, what: impl FnOnce() -> String) {
        let err = (got - want).abs();
        self.check(err <= tol, err / tol, || format!("{}: got {got:e}, want {want:e}", what()));
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }

    fn merge(&mut self, other: Outcome) {
        self.checks += other.checks;
        self.worst = self.worst.max(other.worst);
        self.failures.extend(other.failures);
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    normal_quantile(rng.gen_range(1e-12..1.0)).unwrap()
}

fn random_data(rng: &mut ChaCha8Rng, n: usize, d: usize, discrete_y: bool) -> Dataset {
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut fit = 0.5;
        x.push(1.0);
        for j in 1..d {
            let v = normal(rng);
            fit += v * j as f64 * 0.7;
            x.push(v);
        }
        let e = normal(rng) * (1.0 + 0.3 * x[x.len() - d..].iter().skip(1).map(|v| v.abs()).sum::<f64>());
        y.push(if discrete_y { (fit + e).round() } else { fit + e });
    }
    Dataset::from_xy(y, Matrix::new(n, d, x).unwrap()).unwrap()
}

/// Objective of `fit_rq` against exhaustive basis enumeration.
pub fn lp_oracle(instances: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for case in 0..instances {
        let d = rng.gen_range(1..=3);
        let n = rng.gen_range(d + 2..=25);
        let alpha = rng.gen_range(0.05..0.95);
        let data = random_data(&mut rng, n, d, case % 5 == 4);
        let rows: Vec<Vec<f64>> = data.x().row_iter().map(|r| r.to_vec()).collect();
        let want = lp_vertex_oracle(&rows, data.y(), alpha);
        match fit_rq(&data, alpha) {
            Ok(fit) => {
                let got = data.objective(&fit.beta, alpha);
                let tol = 1e-6 * want.max(1e-9);
                out.close(got, want, tol, || format!("case {case} (n={n}, d={d}, alpha={alpha:.3})"));
            }
            Err(e) => out.check(false, f64::INFINITY, || format!("case {case}: {e}")),
        }
    }
    out
}

fn coef_close(out: &mut Outcome, got: &[f64], want: &[f64], what: &str) {
    for (j, (g, w)) in got.iter().zip(want).enumerate() {
        out.close(*g, *w, 1e-6 * (1.0 + w.abs()), || format!("{what} coef {j}"));
    }
}

fn transformed(data: &Dataset, y: Vec<f64>, x: Option<Matrix>) -> Dataset {
    Dataset::from_xy(y, x.unwrap_or_else(|| data.x().clone())).unwrap()
}

/// Scale, shift and reparameterisation equivariance of `fit_rq`.
pub fn equivariance(cases: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    for case in 0..cases {
        let n = rng.gen_range(30..120);
        let d = rng.gen_range(2..=4);
        let data = random_data(&mut rng, n, d, false);
        let alpha = [0.25, 0.5, 0.75][case % 3];
        let base = fit_rq(&data, alpha).unwrap();
        let mirror = fit_rq(&data, 1.0 - alpha).unwrap();

        let c = rng.gen_range(0.1..10.0);
        let up = fit_rq(&transformed(&data, data.y().iter().map(|v| c * v).collect(), None), alpha).unwrap();
        let want: Vec<f64> = base.beta.iter().map(|b| c * b).collect();
        coef_close(&mut out, &up.beta, &want, &format!("case {case} scale {c:.3}"));

        let down = fit_rq(&transformed(&data, data.y().iter().map(|v| -c * v).collect(), None), alpha).unwrap();
        let want: Vec<f64> = mirror.beta.iter().map(|b| -c * b).collect();
        coef_close(&mut out, &down.beta, &want, &format!("case {case} scale {:.3}", -c));

        let gamma: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let y: Vec<f64> = data.x().row_iter().zip(data.y()).map(|(r, v)| v + qrwald_core::numerics::dot(r, &gamma)).collect();
        let shifted = fit_rq(&transformed(&data, y, None), alpha).unwrap();
        let want: Vec<f64> = base.beta.iter().zip(&gamma).map(|(b, g)| b + g).collect();
        coef_close(&mut out, &shifted.beta, &want, &format!("case {case} shift"));

        // X → XA keeps the intercept column in place so the fit stays comparable
        let mut a = Matrix::identity(d);
        for i in 0..d {
            for j in 1..d {
                a[(i, j)] = if i == j { rng.gen_range(0.5..2.0) } else { rng.gen_range(-1.0..1.0) };
            }
        }
        let xa = data.x().matmul(&a).unwrap();
        let repar = fit_rq(&transformed(&data, data.y().to_vec(), Some(xa)), alpha).unwrap();
        // A·β̃ should recover β
        let back = a.mul_vec(&repar.beta).unwrap();
        coef_close(&mut out, &back, &base.beta, &format!("case {case} reparameterisation"));
    }
    out
}

fn model_sample(model: u8, a: f64, alpha: f64, n: usize, seed: u64) -> (Dataset, Restriction) {
    let spec = DgpSpec::new(model, a, alpha, ErrorDist::Normal, n).unwrap();
    generate_sample(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// Wald statistic unchanged when `(R, r)` becomes `(A R, A r)`.
pub fn wald_rescaling(cases: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome::default();
    let cfg = EgConfig::default();
    for case in 0..cases {
        let model = (case % 6) as u8 + 1;
        let (data, _) = model_sample(model, 0.5, 0.5, 200, rng.gen());
        let d = data.d();
        let picks: &[usize] = if case % 2 == 0 { &[6] } else { &[1, 5, 6] };
        let j = picks.len();
        let mut rm = Matrix::zeros(j, d);
        for (i, &c) in picks.iter().enumerate() {
            rm[(i, c)] = 1.0;
        }
        let r: Vec<f64> = (0..j).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let a = loop {
            let m = Matrix::new(j, j, (0..j * j).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
            if inverse(&m).is_some() {
                break m;
            }
        };
        let plain = Restriction::new(rm.clone(), r.clone()).unwrap();
        let scaled = Restriction::new(a.matmul(&rm).unwrap(), a.mul_vec(&r).unwrap()).unwrap();
        let fit = fit_rq(&data, 0.5).unwrap();
        let h = compute_h(&data);
        for method in GMethod::ALL {
            let g = match estimate_g(&data, &fit, method, &cfg) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let s0 = wald_test(&fit, &g, &h, &plain, data.n()).unwrap().statistic;
            let s1 = wald_test(&fit, &g, &h, &scaled, data.n()).unwrap().statistic;
            out.close(s1, s0, 1e-8 * (1.0 + s0.abs()), || format!("case {case} {method} J={j}"));
        }
    }
    out
}

/// Symmetry and positive semi-definiteness of every `G` and `W`, and `W`
/// against an explicit-inverse computation.
pub fn g_and_w(seed: u64) -> Outcome {
    let mut out = Outcome::default();
    let cfg = EgConfig::default();
    for model in 1..=6u8 {
        for (k, &a) in [0.0, 1.0].iter().enumerate() {
            for alpha in [0.25, 0.5, 0.75] {
                let (data, restr) = model_sample(model, a, alpha, 150, seed + 10 * model as u64 + k as u64);
                let fit = fit_rq(&data, alpha).unwrap();
                let h = compute_h(&data);
                for method in GMethod::ALL {
                    let tag = format!("model {model} a={a} alpha={alpha} {method}");
                    let g = match estimate_g(&data, &fit, method, &cfg) {
                        Ok(g) => g,
                        Err(e) if e.is_numerical() => continue,
                        Err(e) => panic!("{tag}: {e}"),
                    };
                    let gs = g.g.max_abs();
                    out.check(g.g.asymmetry() <= 1e-12 * gs, g.g.asymmetry() / (1e-12 * gs), || format!("{tag}: G asymmetric"));
                    out.check(is_psd(&g.g, 1e-10), 0.0, || format!("{tag}: G not PSD"));
                    let w = compute_w(&g, &h, &restr).unwrap();
                    let ws = w.max_abs();
                    out.check(w.asymmetry() <= 1e-12 * ws, w.asymmetry() / (1e-12 * ws), || format!("{tag}: W asymmetric"));
                    out.check(is_psd(&w, 1e-10), 0.0, || format!("{tag}: W not PSD"));

                    let gi = inverse(&g.g).unwrap();
                    let rm = restr.matrix();
                    let core = rm.matmul(&gi).unwrap().matmul(&h.h).unwrap().matmul(&gi).unwrap().matmul(&rm.transpose()).unwrap();
                    let want = inverse(&core).unwrap();
                    for (x, y) in w.as_slice().iter().zip(want.as_slice()) {
                        out.close(*x, *y, 1e-8 * ws.max(want.max_abs()), || format!("{tag}: W entry"));
                    }
                }
            }
        }
    }
    out
}

/// Repeated runs with equispaced levels are bit-identical.
pub fn determinism(seed: u64) -> Outcome {
    let mut out = Outcome::default();
    let cfg = EgConfig::default();
    assert_eq!(cfg.level_mode, LevelMode::Equispaced);
    for model in 1..=6u8 {
        let (data, restr) = model_sample(model, 0.5, 0.5, 120, seed + model as u64);
        for method in GMethod::ALL {
            let a = test_at(&data, &restr, 0.5, method, &cfg);
            let b = test_at(&data, &restr, 0.5, method, &cfg);
            out.check(a == b, 0.0, || format!("model {model} {method}: repeated tests differ"));
        }
        let levels: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
        let p = fit_process(&data, &levels).unwrap();
        let q = fit_process(&data, &levels).unwrap();
        out.check(p.fits == q.fits, 0.0, || format!("model {model}: repeated process fits differ"));
    }
    let sim = SimConfig {
        models: vec![1, 3],
        sample_sizes: vec![40],
        alphas: vec![0.5],
        a_values: vec![0.0, 1.0],
        methods: GMethod::ALL.to_vec(),
        replications: 100,
        base_seed: seed,
        ..SimConfig::default()
    };
    let first = run_experiment(&sim).unwrap().without_timings();
    let second = run_experiment(&sim).unwrap().without_timings();
    out.check(first == second, 0.0, || "repeated experiments differ".to_string());
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = single.install(|| run_experiment(&sim)).unwrap().without_timings();
    out.check(first == serial, 0.0, || "serial and parallel experiments differ".to_string());
    out
}

/// All algebraic invariants together.
pub fn invariants(seed: u64) -> Outcome {
    let mut out = equivariance(60, seed);
    out.merge(wald_rescaling(24, seed + 1));
    out.merge(g_and_w(seed + 2));
    out.merge(determinism(seed + 3));
    out
}

/// Distribution functions and quantile inversions against quadrature.
pub fn special_functions() -> Outcome {
    let mut out = Outcome::default();
    let probs = [1e-10, 1e-6, 1e-3, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999, 1.0 - 1e-6];

    for i in -32..=32 {
        let x = i as f64 * 0.25;
        out.close(normal_cdf(x), normal_cdf_oracle(x), 1e-12, || format!("normal cdf at {x}"));
    }
    for i in 0..=16 {
        let x = i as f64 * 0.5;
        let want = normal_sf_oracle(x);
        out.close(normal_sf(x), want, 1e-9 * want, || format!("normal sf at {x}"));
    }
    for &p in &probs {
        let q = normal_quantile(p).unwrap();
        let back = if q < 0.0 { normal_sf_oracle(-q) } else { 1.0 - normal_sf_oracle(q) };
        out.close(back, p, 1e-10 * p.min(1.0 - p).max(1e-6), || format!("normal quantile at {p}"));
    }

    for k in [1u32, 2, 3, 5, 10, 30] {
        for x in [0.01, 0.1, 0.5, 1.0, 2.0, 3.84, 5.0, 10.0, 20.0, 40.0, 80.0] {
            let want = chi2_sf_oracle(x, k);
            let got = chi2_sf(x, k).unwrap();
            out.close(got, want, 1e-10_f64.max(1e-8 * want), || format!("chi2 sf k={k} x={x}"));
        }
    }

    for nu in [1u32, 2, 3, 5, 10, 30] {
        for i in -20..=20 {
            let t = i as f64 * 0.5;
            out.close(student_t_cdf(t, nu as f64), student_t_cdf_oracle(t, nu), 1e-10, || format!("t cdf nu={nu} at {t}"));
        }
        for &p in &probs[2..] {
            let q = student_t_quantile(p, nu as f64).unwrap();
            out.close(student_t_cdf_oracle(q, nu), p, 1e-8, || format!("t quantile nu={nu} at {p}"));
        }
    }

    for (a, b) in [(0.5, 0.5), (1.0, 1.0), (2.0, 3.0), (0.3, 4.0), (5.0, 1.5), (10.0, 10.0), (2.5, 0.7), (1.0, 4.0)] {
        for i in 1..20 {
            let x = i as f64 / 20.0;
            out.close(beta_inc(x, a, b), beta_cdf_oracle(x, a, b), 1e-10, || format!("beta({a},{b}) cdf at {x}"));
        }
        for &p in &probs[2..] {
            let q = beta_quantile(p, a, b).unwrap();
            out.close(beta_cdf_oracle(q, a, b), p, 1e-8, || format!("beta({a},{b}) quantile at {p}"));
        }
    }
    out
}
