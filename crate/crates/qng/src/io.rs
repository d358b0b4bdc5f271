//! Output tables and sample-set files.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use qng_core::measurement::SampleSet;
use serde_json::{json, Value};

use crate::CliError;

/// Significant digits of every number written to CSV.
pub const SIG_DIGITS: usize = 12;

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` with 12 significant digits, '.' as decimal separator, fixed
/// notation for exponents in `-5..12` and `<mantissa>e<exp>` otherwise.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mant))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

/// Column-named rows, written as CSV or as `{"columns": .., "rows": ..}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    /// Numeric column by name.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        self.rows
            .iter()
            .map(|r| match &r[i] {
                Cell::Num(x) => Some(*x),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

/// `# state=<desc> phi=<rad> seed=<int>` followed by one value per line.
pub fn write_samples<W: Write>(mut w: W, set: &SampleSet) -> Result<(), CliError> {
    writeln!(w, "# state={} phi={} seed={}", set.source, fmt_num(set.phi), set.seed)?;
    for v in &set.values {
        writeln!(w, "{}", fmt_num(*v))?;
    }
    Ok(())
}

pub fn write_samples_file(path: &Path, set: &SampleSet) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write_samples(&mut buf, set)?;
    fs::write(path, buf)?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(String, f64, u64), CliError> {
    let bad = || CliError::Invalid(format!("malformed sample header: {line:?}"));
    let rest = line.strip_prefix('#').ok_or_else(bad)?.trim();
    let rest = rest.strip_prefix("state=").ok_or_else(bad)?;
    // The state description is free text; phi and seed are the last fields.
    let (rest, seed) = rest.rsplit_once(" seed=").ok_or_else(bad)?;
    let (state, phi) = rest.rsplit_once(" phi=").ok_or_else(bad)?;
    let phi: f64 = phi.trim().parse().map_err(|_| bad())?;
    let seed: u64 = seed.trim().parse().map_err(|_| bad())?;
    Ok((state.to_string(), phi, seed))
}

pub fn read_samples<R: Read>(r: R) -> Result<SampleSet, CliError> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Invalid("empty sample file".into()))??;
    let (source, phi, seed) = parse_header(&header)?;
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| CliError::Invalid(format!("line {}: not a number: {t:?}", i + 2)))?;
        if !v.is_finite() {
            return Err(CliError::Invalid(format!("line {}: non-finite sample", i + 2)));
        }
        values.push(v);
    }
    Ok(SampleSet {
        values,
        seed,
        phi,
        source,
    })
}

pub fn read_samples_file(path: &Path) -> Result<SampleSet, CliError> {
    read_samples(fs::File::open(path)?)
}
