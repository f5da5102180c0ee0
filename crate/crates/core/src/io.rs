//! File formats.
//!
//! Set functions, spectra, report sets and supports are two-column CSV
//! files keyed by a binary bundle string (item 1 leftmost). Networks use
//! the plain-text format of [`MlpNetwork::to_text`].

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::domain::{Bundle, ReportSet};
use crate::error::{Error, Result};
use crate::fourier::{DenseSetFunction, SparseSpectrum, TransformKind};
use crate::recovery::SupportSuperset;
use crate::surrogate::MlpNetwork;

/// A rectangular CSV table. Columns listed in `timing` hold wall-clock
/// measurements and are dropped by [`Table::to_csv_without_timing`].
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub timing: Vec<usize>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Table {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new(), timing: Vec::new() }
    }

    pub fn with_timing(mut self, columns: &[&str]) -> Table {
        self.timing = columns.iter().filter_map(|c| self.column(c)).collect();
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of column `name` parsed as numbers; blanks are skipped.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name).ok_or_else(|| Error::Parse(format!("no column {name}")))?;
        self.rows
            .iter()
            .filter(|r| !r[c].is_empty())
            .map(|r| r[c].parse::<f64>().map_err(|e| Error::Parse(format!("{name}: {e}"))))
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        self.render(|_| true)
    }

    pub fn to_csv_without_timing(&self) -> Result<String> {
        self.render(|c| !self.timing.contains(&c))
    }

    fn render(&self, keep: impl Fn(usize) -> bool) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let pick = |row: &[String]| -> Vec<String> {
            row.iter().enumerate().filter(|(c, _)| keep(*c)).map(|(_, v)| v.clone()).collect()
        };
        w.write_record(pick(&self.header))?;
        for row in &self.rows {
            w.write_record(pick(row))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_csv()?)
    }

    pub fn read(path: &Path) -> Result<Table> {
        let mut r = csv::Reader::from_path(path)?;
        let mut table = Table::new(r.headers()?.iter());
        for rec in r.records() {
            table.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(table)
    }
}

/// Writes `text`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::File::create(path)?.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    fs::File::open(path)?.read_to_string(&mut s)?;
    Ok(s)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn write_pairs(path: &Path, header: [&str; 2], m: usize, pairs: impl Iterator<Item = (Bundle, f64)>) -> Result<()> {
    let mut table = Table::new(header);
    for (b, v) in pairs {
        table.push(vec![b.to_binary_string(m), format!("{v:e}")]);
    }
    table.write(path)
}

/// Reads `(bundle, value)` rows; all bundles must have the same length.
fn read_pairs(path: &Path) -> Result<(usize, Vec<(Bundle, f64)>)> {
    let mut r = csv::Reader::from_path(path)?;
    let mut m = None;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let (key, value) = match (rec.get(0), rec.get(1)) {
            (Some(k), Some(v)) => (k, v),
            _ => return Err(Error::Parse(format!("{}: expected two columns", path.display()))),
        };
        let (b, len) = Bundle::parse(key)?;
        if *m.get_or_insert(len) != len {
            return Err(Error::Parse(format!("{}: bundle {key} has {len} items", path.display())));
        }
        let v: f64 = value.trim().parse().map_err(|e| Error::Parse(format!("{}: {value}: {e}", path.display())))?;
        out.push((b, v));
    }
    let m = m.ok_or_else(|| Error::Parse(format!("{}: no rows", path.display())))?;
    Ok((m, out))
}

pub fn write_dense(path: &Path, f: &DenseSetFunction) -> Result<()> {
    write_pairs(path, ["bundle", "value"], f.num_items(), f.iter())
}

/// Reads a complete table of `2^m` values in any row order.
pub fn read_dense(path: &Path) -> Result<DenseSetFunction> {
    let (m, pairs) = read_pairs(path)?;
    if pairs.len() != 1 << m {
        return Err(Error::Parse(format!("{}: {} rows for {m} items", path.display(), pairs.len())));
    }
    let mut f = DenseSetFunction::zeros(m)?;
    let mut seen = vec![false; 1 << m];
    for (b, v) in pairs {
        if std::mem::replace(&mut seen[b.index()], true) {
            return Err(Error::Parse(format!("{}: duplicate bundle {}", path.display(), b.to_binary_string(m))));
        }
        f.set(b, v);
    }
    Ok(f)
}

pub fn write_spectrum(path: &Path, s: &SparseSpectrum) -> Result<()> {
    write_pairs(path, ["frequency", "coefficient"], s.num_items(), s.iter())
}

pub fn read_spectrum(path: &Path, kind: TransformKind) -> Result<SparseSpectrum> {
    let (m, pairs) = read_pairs(path)?;
    SparseSpectrum::new(kind, m, pairs)
}

pub fn write_reports(path: &Path, reports: &ReportSet, m: usize) -> Result<()> {
    write_pairs(path, ["bundle", "value"], m, reports.iter())
}

pub fn read_reports(path: &Path) -> Result<(usize, ReportSet)> {
    let (m, pairs) = read_pairs(path)?;
    let mut reports = ReportSet::new();
    for (b, v) in pairs {
        reports.insert(b, v)?;
    }
    Ok((m, reports))
}

/// One frequency per line, best first.
pub fn write_support(path: &Path, s: &SupportSuperset) -> Result<()> {
    let mut table = Table::new(["rank", "frequency"]);
    for (r, y) in s.frequencies.iter().enumerate() {
        table.push(vec![r.to_string(), y.to_binary_string(s.m)]);
    }
    table.write(path)
}

pub fn read_support(path: &Path, kind: TransformKind) -> Result<SupportSuperset> {
    let table = Table::read(path)?;
    let c = table.column("frequency").ok_or_else(|| Error::Parse(format!("{}: no frequency column", path.display())))?;
    let mut m = None;
    let mut freqs = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let (b, len) = Bundle::parse(&row[c])?;
        if *m.get_or_insert(len) != len {
            return Err(Error::Parse(format!("{}: mixed bundle lengths", path.display())));
        }
        freqs.push(b);
    }
    SupportSuperset::new(kind, m.unwrap_or(0), freqs)
}

pub fn write_network(path: &Path, net: &MlpNetwork) -> Result<()> {
    write_text(path, &net.to_text())
}

pub fn read_network(path: &Path) -> Result<MlpNetwork> {
    MlpNetwork::from_text(&read_text(path)?)
}
