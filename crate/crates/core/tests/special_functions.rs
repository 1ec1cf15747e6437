mod common;

use qrwald_core::numerics::{chi2_sf, gamma_p, ln_gamma, normal_pdf};

#[test]
fn distribution_functions_match_quadrature() {
    let out = common::suites::special_functions();
    assert!(out.passed(), "{} of {} failed: {:#?}", out.failures.len(), out.checks, out.failures);
}

#[test]
fn oracles_reproduce_closed_forms() {
    // chi-square with 2 degrees of freedom is exponential with mean 2
    for x in [0.3, 1.0, 4.0, 12.0] {
        assert!((common::chi2_sf_oracle(x, 2) - (-x / 2.0f64).exp()).abs() < 1e-12);
    }
    // Cauchy
    for t in [-3.0, 0.4, 2.0] {
        let want = 0.5 + f64::atan(t) / std::f64::consts::PI;
        assert!((common::student_t_cdf_oracle(t, 1) - want).abs() < 1e-12);
    }
    // Beta(2, 1) has cdf x²
    for x in [0.1, 0.5, 0.9] {
        assert!((common::beta_cdf_oracle(x, 2.0, 1.0) - x * x).abs() < 1e-12);
    }
    assert!((common::normal_cdf_oracle(1.959963984540054) - 0.975).abs() < 1e-12);
}

#[test]
fn gamma_identities() {
    for k in 1..15 {
        let fact: f64 = (1..k).map(|i| i as f64).product();
        assert!((ln_gamma(k as f64) - fact.ln()).abs() < 1e-12 * (1.0 + fact.ln()));
    }
    assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    for x in [0.5, 2.0, 7.0] {
        assert!((gamma_p(1.0, x) - (1.0 - (-x as f64).exp())).abs() < 1e-13);
        assert!((chi2_sf(x, 4).unwrap() - (-x / 2.0 as f64).exp() * (1.0 + x / 2.0)).abs() < 1e-13);
    }
    assert!((normal_pdf(0.0) - 0.3989422804014327).abs() < 1e-16);
}

#[test]
fn rejects_invalid_arguments() {
    assert!(chi2_sf(-1.0, 3).is_err() || chi2_sf(-1.0, 3).unwrap() == 1.0);
    assert!(chi2_sf(1.0, 0).is_err());
    assert!(qrwald_core::numerics::normal_quantile(0.0).is_err() || qrwald_core::numerics::normal_quantile(0.0).unwrap() == f64::NEG_INFINITY);
    assert!(qrwald_core::numerics::beta_quantile(1.5, 2.0, 2.0).is_err());
}
