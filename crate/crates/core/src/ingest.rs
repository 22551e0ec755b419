//! Feature-vector CSV ingestion.
//!
//! Accepts comma-separated files (optionally with a header) and
//! whitespace-separated files such as the UCR time-series archive format,
//! where the label is the first column. Labels are arbitrary strings mapped
//! to dense class ids in first-seen order; numeric labels are canonicalised
//! first so `1.0000000e+00` and `1` are the same class.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::dataset::Dataset;
use crate::error::{ArfError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    First,
    #[default]
    Last,
    /// Zero-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = ArfError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "first" => LabelColumn::First,
            "last" => LabelColumn::Last,
            _ => match s.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(s.to_string()),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    Comma,
    Whitespace,
    /// Comma if the first non-empty line contains one, else whitespace.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub has_header: bool,
    pub delimiter: Delimiter,
    /// Maps this label to class 0 and every other label to class 1.
    pub binarize_against: Option<String>,
    /// Fixed label-to-class mapping (index = class id), e.g. from a trained
    /// forest. Unknown labels are errors.
    pub class_names: Option<Vec<String>>,
}

pub fn ingest_csv(path: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, path, opts)
}

/// Parses file contents; `path` is only used in error messages.
pub fn parse_csv(text: &str, path: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let err = |row: usize, col: usize, msg: String| ArfError::Parse {
        path: path.to_path_buf(),
        row,
        col,
        msg,
    };
    let delimiter = match opts.delimiter {
        Delimiter::Auto => {
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
            if first.contains(',') {
                Delimiter::Comma
            } else {
                Delimiter::Whitespace
            }
        }
        d => d,
    };
    let records = read_records(text, delimiter, path)?;
    let mut records = records.into_iter();

    let header = if opts.has_header {
        Some(
            records
                .next()
                .ok_or_else(|| err(1, 0, "missing header row".into()))?
                .1,
        )
    } else {
        None
    };
    let records: Vec<(usize, Vec<String>)> = records.collect();
    let width = header
        .as_ref()
        .map(Vec::len)
        .or_else(|| records.first().map(|r| r.1.len()))
        .ok_or_else(|| err(1, 0, "file contains no data rows".into()))?;
    if width < 2 {
        return Err(err(
            1,
            1,
            format!("need a label and at least one feature, found {width} column(s)"),
        ));
    }
    let label_col = match &opts.label_column {
        LabelColumn::First => 0,
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(err(
                1,
                i + 1,
                format!("label column {i} outside {width} columns"),
            ))
        }
        LabelColumn::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| err(1, 0, format!("no header column named `{name}`")))?,
    };

    let mut mapper = LabelMapper::new(opts);
    let mut features = Vec::with_capacity(records.len() * (width - 1));
    let mut labels = Vec::with_capacity(records.len());
    for (row, cells) in &records {
        if cells.len() != width {
            return Err(err(
                *row,
                cells.len().min(width) + 1,
                format!("expected {width} columns, found {}", cells.len()),
            ));
        }
        for (c, cell) in cells.iter().enumerate() {
            if c == label_col {
                continue;
            }
            features.push(parse_feature(cell).map_err(|m| err(*row, c + 1, m))?);
        }
        let label = mapper
            .class_of(&cells[label_col])
            .map_err(|m| err(*row, label_col + 1, m))?;
        labels.push(label);
    }
    let names = mapper.into_names();
    Dataset::from_flat(features, width - 1, labels, names.len())?.with_class_names(names)
}

fn read_records(
    text: &str,
    delimiter: Delimiter,
    path: &Path,
) -> Result<Vec<(usize, Vec<String>)>> {
    let mut out = Vec::new();
    match delimiter {
        Delimiter::Comma => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            for rec in reader.records() {
                let rec = rec.map_err(|e| ArfError::Parse {
                    path: PathBuf::from(path),
                    row: e.position().map_or(0, |p| p.line() as usize),
                    col: 0,
                    msg: e.to_string(),
                })?;
                let line = rec.position().map_or(0, |p| p.line() as usize);
                if rec.len() == 1 && rec[0].is_empty() {
                    continue;
                }
                out.push((line, rec.iter().map(str::to_string).collect()));
            }
        }
        _ => {
            for (i, line) in text.lines().enumerate() {
                let cells: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                if !cells.is_empty() {
                    out.push((i + 1, cells));
                }
            }
        }
    }
    Ok(out)
}

fn parse_feature(cell: &str) -> std::result::Result<f64, String> {
    let c = cell.trim();
    if c.is_empty() || matches!(c.to_ascii_lowercase().as_str(), "na" | "nan" | "?" | "null") {
        return Err("missing value".into());
    }
    match c.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("non-finite value `{c}`")),
        Err(_) => Err(format!("non-numeric value `{c}`")),
    }
}

/// Canonical label text: integral numbers print as integers.
pub fn canonical_label(raw: &str) -> String {
    let t = raw.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
        _ => t.to_string(),
    }
}

struct LabelMapper {
    fixed: bool,
    binarize: Option<String>,
    names: Vec<String>,
}

impl LabelMapper {
    fn new(opts: &CsvOptions) -> Self {
        if let Some(names) = &opts.class_names {
            return Self {
                fixed: true,
                binarize: None,
                names: names.iter().map(|n| canonical_label(n)).collect(),
            };
        }
        if let Some(b) = &opts.binarize_against {
            let b = canonical_label(b);
            return Self {
                fixed: true,
                binarize: Some(b.clone()),
                names: vec![b.clone(), format!("not-{b}")],
            };
        }
        Self {
            fixed: false,
            binarize: None,
            names: Vec::new(),
        }
    }

    fn class_of(&mut self, raw: &str) -> std::result::Result<usize, String> {
        let label = canonical_label(raw);
        if label.is_empty() {
            return Err("missing label".into());
        }
        if let Some(b) = &self.binarize {
            return Ok(usize::from(&label != b));
        }
        if let Some(i) = self.names.iter().position(|n| *n == label) {
            return Ok(i);
        }
        if self.fixed {
            return Err(format!(
                "label `{label}` not in the known classes {:?}",
                self.names
            ));
        }
        self.names.push(label);
        Ok(self.names.len() - 1)
    }

    fn into_names(self) -> Vec<String> {
        self.names
    }
}

/// Writes features then the label (class name when known) with a header
/// `f0,...,f{n-1},label`.
pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..data.n_features()).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (i, row) in data.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let l = data.label(i);
        rec.push(
            data.class_names()
                .map_or_else(|| l.to_string(), |n| n[l].clone()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
