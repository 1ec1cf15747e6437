//! Delimited-text data loading and writing.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::rq::Dataset;
use crate::wald::Restriction;

/// Name given to the column added by `intercept = true`.
pub const INTERCEPT: &str = "intercept";

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub data: Dataset,
    /// Rows dropped because a cell was missing or non-numeric.
    pub dropped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Delim {
    Comma,
    Whitespace,
}

fn split_line(line: &str, delim: Delim) -> Vec<String> {
    match delim {
        Delim::Comma => line.split(',').map(|s| s.trim().trim_matches('"').to_string()).collect(),
        Delim::Whitespace => line.split_whitespace().map(str::to_string).collect(),
    }
}

/// Raw table: header plus rows of cells with their 1-based line numbers.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<(usize, Vec<String>)>,
}

pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "file has no header".into(),
    })?;
    let delim = if first.contains(',') { Delim::Comma } else { Delim::Whitespace };
    let header = split_line(first, delim);
    let mut seen = HashSet::new();
    for name in &header {
        if name.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "empty column name".into(),
            });
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    let mut rows = Vec::new();
    for (line, l) in lines {
        let cells = split_line(l, delim);
        if cells.len() != header.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", header.len(), cells.len()),
            });
        }
        rows.push((line, cells));
    }
    Ok(Table { header, rows })
}

fn parse_cell(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Numeric rows, dropping any row with a missing or non-numeric cell.
    pub fn numeric_rows(&self) -> (Vec<Vec<f64>>, usize) {
        let mut out = Vec::with_capacity(self.rows.len());
        let mut dropped = 0;
        for (_, cells) in &self.rows {
            match cells.iter().map(|c| parse_cell(c)).collect::<Option<Vec<f64>>>() {
                Some(v) => out.push(v),
                None => dropped += 1,
            }
        }
        (out, dropped)
    }
}

/// Builds a dataset from a numeric table: `response` becomes `y`, every
/// other column a regressor, optionally preceded by an intercept.
pub fn dataset_from_columns(
    header: &[String],
    rows: &[Vec<f64>],
    response: &str,
    intercept: bool,
) -> Result<Dataset> {
    let yi = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::UnknownColumn(response.to_string()))?;
    if intercept && header.iter().any(|h| h == INTERCEPT) {
        return Err(Error::DuplicateColumn(INTERCEPT.into()));
    }
    let mut names: Vec<String> = Vec::new();
    if intercept {
        names.push(INTERCEPT.into());
    }
    names.extend(header.iter().enumerate().filter(|&(j, _)| j != yi).map(|(_, h)| h.clone()));
    let d = names.len();
    let mut x = Vec::with_capacity(rows.len() * d);
    let mut y = Vec::with_capacity(rows.len());
    for row in rows {
        y.push(row[yi]);
        if intercept {
            x.push(1.0);
        }
        x.extend(row.iter().enumerate().filter(|&(j, _)| j != yi).map(|(_, v)| *v));
    }
    Dataset::new(y, Matrix::new(rows.len(), d, x)?, names)
}

/// Loads a header-first table with comma or whitespace delimiters.
pub fn load_csv(path: impl AsRef<Path>, response: &str, intercept: bool) -> Result<Loaded> {
    let table = read_table(path)?;
    table.column(response)?;
    let (rows, dropped) = table.numeric_rows();
    if dropped > 0 {
        warn!("dropped {dropped} rows with missing or non-numeric cells");
    }
    let data = dataset_from_columns(&table.header, &rows, response, intercept)?;
    Ok(Loaded { data, dropped })
}

/// Writes `response` followed by the regressors, 17 significant digits per value.
pub fn write_dataset_csv(data: &Dataset, response: &str, path: impl AsRef<Path>) -> Result<()> {
    if data.column_index(response).is_some() {
        return Err(Error::DuplicateColumn(response.to_string()));
    }
    let mut out = std::io::BufWriter::new(fs::File::create(path.as_ref())?);
    write!(out, "{response}")?;
    for name in data.column_names() {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for (yi, row) in data.y().iter().zip(data.x().row_iter()) {
        write!(out, "{yi:.16e}")?;
        for v in row {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Restriction that the named coefficients are jointly zero.
pub fn build_restriction(data: &Dataset, names: &[impl AsRef<str>]) -> Result<Restriction> {
    if names.is_empty() {
        return Err(Error::domain("restriction needs at least one column name"));
    }
    let idx = names
        .iter()
        .map(|n| {
            data.column_index(n.as_ref())
                .ok_or_else(|| Error::UnknownColumn(n.as_ref().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Restriction::select(data.d(), &idx)?.with_labels(names.iter().map(|n| n.as_ref().to_string()).collect())
}
