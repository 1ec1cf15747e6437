use std::path::Path;

use crate::density::GMethod;
use crate::error::{Error, Result};

pub const HEADER: [&str; 10] = [
    "model",
    "n",
    "alpha",
    "a",
    "method",
    "raw_pct",
    "size_corrected_pct",
    "reps",
    "cpu_mean_s",
    "failures",
];

/// Rejection percentages for one (model, n, α, a, method) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub model: u8,
    pub n: usize,
    pub alpha: f64,
    pub a: f64,
    pub method: GMethod,
    pub raw_pct: f64,
    pub size_corrected_pct: f64,
    /// Replications attempted; failed ones are excluded from the percentages.
    pub reps: usize,
    pub cpu_mean_s: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimReport {
    pub rows: Vec<SimRow>,
}

impl SimReport {
    /// Orders rows by (model, n, alpha, method tag, a).
    pub fn sort(&mut self) {
        self.rows.sort_by(|x, y| {
            x.model
                .cmp(&y.model)
                .then(x.n.cmp(&y.n))
                .then(x.alpha.total_cmp(&y.alpha))
                .then(x.method.tag().cmp(y.method.tag()))
                .then(x.a.total_cmp(&y.a))
        });
    }

    pub fn find(&self, model: u8, n: usize, alpha: f64, a: f64, method: GMethod) -> Option<&SimRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.n == n && r.alpha == alpha && r.a == a && r.method == method)
    }

    /// Same report with timings zeroed, for reproducibility comparisons.
    pub fn without_timings(&self) -> SimReport {
        SimReport {
            rows: self
                .rows
                .iter()
                .map(|r| SimRow {
                    cpu_mean_s: 0.0,
                    ..r.clone()
                })
                .collect(),
        }
    }
}

pub fn emit_report(report: &SimReport, path: impl AsRef<Path>) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::domain("refusing to write an empty report"));
    }
    let mut sorted = report.clone();
    sorted.sort();
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(HEADER).map_err(|e| Error::Io(e.to_string()))?;
    for r in &sorted.rows {
        w.write_record([
            r.model.to_string(),
            r.n.to_string(),
            format!("{}", r.alpha),
            format!("{}", r.a),
            r.method.tag().to_string(),
            format!("{:.1}", r.raw_pct),
            format!("{:.1}", r.size_corrected_pct),
            r.reps.to_string(),
            format!("{:.6}", r.cpu_mean_s),
            r.failures.to_string(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<SimReport> {
    let mut rdr = csv::Reader::from_path(path.as_ref()).map_err(|e| Error::Io(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            msg: "unexpected report header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let bad = |field: &str| Error::Parse {
            line,
            msg: format!("bad `{field}` value"),
        };
        let num = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(HEADER[k]));
        let int = |k: usize| rec[k].parse::<usize>().map_err(|_| bad(HEADER[k]));
        rows.push(SimRow {
            model: rec[0].parse().map_err(|_| bad("model"))?,
            n: int(1)?,
            alpha: num(2)?,
            a: num(3)?,
            method: rec[4].parse().map_err(|_| bad("method"))?,
            raw_pct: num(5)?,
            size_corrected_pct: num(6)?,
            reps: int(7)?,
            cpu_mean_s: num(8)?,
            failures: int(9)?,
        });
    }
    Ok(SimReport { rows })
}
