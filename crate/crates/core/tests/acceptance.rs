//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use qrwald_core::sim::{density_accuracy, run_experiment, SimConfig, SimReport};
use qrwald_core::{EgConfig, GMethod};

const REPS: usize = 1000;

struct Verdict {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn experiment(models: Vec<u8>, sizes: Vec<usize>, alphas: Vec<f64>, a: Vec<f64>, methods: Vec<GMethod>) -> SimReport {
    let cfg = SimConfig {
        models,
        sample_sizes: sizes,
        alphas,
        a_values: a,
        methods,
        replications: REPS,
        ..SimConfig::default()
    };
    run_experiment(&cfg).expect("experiment runs")
}

fn size_reproduction(report: &SimReport) -> Verdict {
    let targets = [
        (100, 0.25, 5.6),
        (100, 0.50, 4.5),
        (100, 0.75, 5.1),
        (300, 0.25, 5.4),
        (300, 0.50, 3.2),
        (300, 0.75, 4.1),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, alpha, want) in targets {
        let got = report.find(1, n, alpha, 0.0, GMethod::Eg).unwrap().raw_pct;
        pass &= (got - want).abs() <= 2.5;
        parts.push(format!("n={n} a={alpha}: {got:.1} (target {want})"));
    }
    Verdict {
        id: 1,
        name: "size reproduction, model 1",
        pass,
        detail: parts.join("; "),
    }
}

fn power_ordering(report: &SimReport) -> Verdict {
    let targets = [(0.5, 40.0), (1.0, 84.5), (1.5, 98.1)];
    let mut pass = true;
    let mut prev = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for (a, want) in targets {
        let got = report.find(1, 300, 0.5, a, GMethod::Eg).unwrap().size_corrected_pct;
        pass &= (got - want).abs() <= 5.0 && got > prev;
        prev = got;
        parts.push(format!("a={a}: {got:.1} (target {want})"));
    }
    Verdict {
        id: 2,
        name: "size-corrected power, model 1",
        pass,
        detail: parts.join("; "),
    }
}

fn cross_model(model1: &SimReport, others: &SimReport) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for model in 1..=6u8 {
        let report = if model == 1 { model1 } else { others };
        let got = report.find(model, 300, 0.5, 0.0, GMethod::Eg).unwrap().raw_pct;
        pass &= (2.0..=8.0).contains(&got);
        parts.push(format!("model {model}: {got:.1}"));
    }
    Verdict {
        id: 3,
        name: "raw size band across models",
        pass,
        detail: parts.join("; "),
    }
}

fn comparators(report: &SimReport) -> Verdict {
    let nid = report.find(1, 300, 0.5, 0.0, GMethod::Hk).unwrap();
    let ker = report.find(1, 300, 0.5, 0.0, GMethod::Powell).unwrap();
    let pass = (nid.raw_pct - 3.9).abs() <= 3.0 && (ker.raw_pct - 1.3).abs() <= 3.0;
    Verdict {
        id: 4,
        name: "comparator sizes",
        pass,
        detail: format!(
            "wnid {:.1} (target 3.9), wker {:.1} (target 1.3), failures {}/{}",
            nid.raw_pct, ker.raw_pct, nid.failures, ker.failures
        ),
    }
}

fn density(reps: usize) -> (Verdict, Verdict) {
    let eg = EgConfig::default();
    let (mut pass5, mut pass6) = (true, true);
    let (mut p5, mut p6) = (Vec::new(), Vec::new());
    for alpha in [0.25, 0.5, 0.75] {
        let small = density_accuracy(100, alpha, reps, &eg, 20_190_101).unwrap();
        let large = density_accuracy(1000, alpha, reps, &eg, 20_190_101).unwrap();
        pass5 &= large.feasible_error <= 0.05 && large.feasible_error < small.feasible_error;
        pass6 &= large.gap < small.gap;
        p5.push(format!("a={alpha}: {:.4} at n=1000, {:.4} at n=100", large.feasible_error, small.feasible_error));
        p6.push(format!("a={alpha}: {:.4} at n=1000, {:.4} at n=100", large.gap, small.gap));
    }
    (
        Verdict {
            id: 5,
            name: "density error against the true density",
            pass: pass5,
            detail: p5.join("; "),
        },
        Verdict {
            id: 6,
            name: "feasible/infeasible density gap",
            pass: pass6,
            detail: p6.join("; "),
        },
    )
}

fn from_outcome(id: u8, name: &'static str, out: common::suites::Outcome) -> Verdict {
    let mut detail = format!("{} checks, {} failed, worst error/tolerance {:.3}", out.checks, out.failures.len(), out.worst);
    if let Some(first) = out.failures.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    Verdict {
        id,
        name,
        pass: out.passed(),
        detail,
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut verdicts = Vec::new();

    verdicts.push(from_outcome(7, "LP oracle", common::suites::lp_oracle(200, 2019)));
    verdicts.push(from_outcome(8, "algebraic invariants", common::suites::invariants(2019)));
    verdicts.push(from_outcome(9, "special functions", common::suites::special_functions()));

    let (c5, c6) = density(50);
    verdicts.push(c5);
    verdicts.push(c6);

    let sizes = experiment(vec![1], vec![100, 300], vec![0.25, 0.5, 0.75], vec![0.0], vec![GMethod::Eg]);
    verdicts.push(size_reproduction(&sizes));
    let power = experiment(
        vec![1],
        vec![300],
        vec![0.5],
        vec![0.0, 0.5, 1.0, 1.5],
        vec![GMethod::Eg, GMethod::Hk, GMethod::Powell],
    );
    verdicts.push(power_ordering(&power));
    verdicts.push(comparators(&power));
    let others = experiment(vec![2, 3, 4, 5, 6], vec![300], vec![0.5], vec![0.0], vec![GMethod::Eg]);
    verdicts.push(cross_model(&power, &others));

    verdicts.sort_by_key(|v| v.id);
    for v in &verdicts {
        println!("{} criterion {}: {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.name, v.detail);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("{} of {} criteria passed in {:.0}s", verdicts.len() - failed, verdicts.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
