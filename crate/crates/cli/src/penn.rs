//! Loader for the Pennsylvania reemployment-bonus layout (`Penn46.ascii`,
//! <http://www.econ.uiuc.edu/~roger/research/inference/Penn46.ascii>).
//!
//! The response is `log(inuidur1)`. Regressors: intercept, a treatment
//! indicator (`tg != 0`), fourteen controls, their treatment interactions
//! and the interactions of `female` with `black`, `hispanic` and `dep`.
//! The default restriction sets the fourteen treatment interactions to zero.
//! The control list is a best-effort reconstruction.

use std::path::Path;

use log::warn;
use qrwald_core::io::{read_table, Loaded};
use qrwald_core::{Dataset, Error, Matrix};

pub const RESPONSE: &str = "inuidur1";
pub const TREATMENT: &str = "tg";
pub const CONTROLS: [&str; 14] = [
    "female", "black", "hispanic", "dep", "q1", "q2", "q3", "q4", "q5", "recall", "agelt35", "agegt54", "durable",
    "lusd",
];
pub const FEMALE_INTERACTIONS: [&str; 3] = ["black", "hispanic", "dep"];

pub struct PennData {
    pub loaded: Loaded,
    /// Names of the treatment-interaction columns.
    pub interactions: Vec<String>,
}

pub fn load(path: &Path) -> Result<PennData, Error> {
    let table = read_table(path)?;
    let yi = table.column(RESPONSE)?;
    let ti = table.column(TREATMENT)?;
    let ci = CONTROLS.iter().map(|c| table.column(c)).collect::<Result<Vec<_>, _>>()?;
    let female = table.column("female")?;
    let fi = FEMALE_INTERACTIONS
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>, _>>()?;

    let mut names = vec!["intercept".to_string(), "treat".to_string()];
    names.extend(CONTROLS.iter().map(|c| c.to_string()));
    let interactions: Vec<String> = CONTROLS.iter().map(|c| format!("treat_x_{c}")).collect();
    names.extend(interactions.iter().cloned());
    names.extend(FEMALE_INTERACTIONS.iter().map(|c| format!("female_x_{c}")));
    let d = names.len();

    let (rows, mut dropped) = table.numeric_rows();
    let mut y = Vec::with_capacity(rows.len());
    let mut x = Vec::with_capacity(rows.len() * d);
    for row in &rows {
        if !(row[yi] > 0.0) {
            dropped += 1;
            continue;
        }
        y.push(row[yi].ln());
        let treat = if row[ti] != 0.0 { 1.0 } else { 0.0 };
        x.push(1.0);
        x.push(treat);
        x.extend(ci.iter().map(|&j| row[j]));
        x.extend(ci.iter().map(|&j| treat * row[j]));
        x.extend(fi.iter().map(|&j| row[female] * row[j]));
    }
    if dropped > 0 {
        warn!("dropped {dropped} rows with missing, non-numeric or non-positive durations");
    }
    let n = y.len();
    let data = Dataset::new(y, Matrix::new(n, d, x)?, names)?;
    Ok(PennData {
        loaded: Loaded { data, dropped },
        interactions,
    })
}
