//! CSV / JSON / aligned-table rendering of sweep results.
//!
//! Point tables always use the column order
//! `policy,threshold,B,accuracy,macro_acc,avg_trees,avg_cycles,avg_energy_uj`.

use std::io::Write;
use std::str::FromStr;

use crate::error::{ArfError, Result};
use crate::sweep::{DropRow, ParetoPoint, ReducedPoint};

pub const POINT_COLUMNS: [&str; 8] = [
    "policy",
    "threshold",
    "B",
    "accuracy",
    "macro_acc",
    "avg_trees",
    "avg_cycles",
    "avg_energy_uj",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Table,
}

impl FromStr for Format {
    type Err = ArfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "table" => Ok(Format::Table),
            other => Err(ArfError::UnknownFormat(other.to_string())),
        }
    }
}

fn point_row(p: &ParetoPoint) -> Vec<String> {
    vec![
        p.policy.to_string(),
        p.threshold.to_string(),
        p.batch.to_string(),
        p.accuracy.to_string(),
        p.macro_avg_accuracy.to_string(),
        p.avg_trees.to_string(),
        p.avg_cycles.to_string(),
        p.avg_energy_uj.to_string(),
    ]
}

fn write_rows<W: Write>(
    out: &mut W,
    format: Format,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        Format::Table => {
            let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
            for r in rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.len());
                }
            }
            let line = |cells: &mut dyn Iterator<Item = &str>| {
                cells
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:>w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            writeln!(out, "{}", line(&mut header.iter().copied()))?;
            for r in rows {
                writeln!(out, "{}", line(&mut r.iter().map(String::as_str)))?;
            }
        }
        Format::Json => unreachable!("JSON is serialized from typed values"),
    }
    Ok(())
}

pub fn write_points<W: Write>(points: &[ParetoPoint], format: Format, mut out: W) -> Result<()> {
    if format == Format::Json {
        serde_json::to_writer_pretty(&mut out, points)?;
        writeln!(out)?;
        return Ok(());
    }
    let rows: Vec<Vec<String>> = points.iter().map(point_row).collect();
    write_rows(&mut out, format, &POINT_COLUMNS, &rows)
}

pub fn write_reduced<W: Write>(points: &[ReducedPoint], format: Format, mut out: W) -> Result<()> {
    if format == Format::Json {
        serde_json::to_writer_pretty(&mut out, points)?;
        writeln!(out)?;
        return Ok(());
    }
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.trees.to_string(),
                p.accuracy.to_string(),
                p.macro_avg_accuracy.to_string(),
                p.avg_cycles.to_string(),
                p.avg_energy_uj.to_string(),
            ]
        })
        .collect();
    write_rows(
        &mut out,
        format,
        &[
            "trees",
            "accuracy",
            "macro_acc",
            "avg_cycles",
            "avg_energy_uj",
        ],
        &rows,
    )
}

pub fn write_drop_table<W: Write>(table: &[DropRow], format: Format, mut out: W) -> Result<()> {
    if format == Format::Json {
        serde_json::to_writer_pretty(&mut out, table)?;
        writeln!(out)?;
        return Ok(());
    }
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            vec![
                r.drop.to_string(),
                r.batch.to_string(),
                opt(r.reduced_rf_trees.map(|t| t.to_string())),
                opt(r.min_trees.as_ref().map(|p| p.avg_trees.to_string())),
                opt(r.min_trees.as_ref().map(|p| p.threshold.to_string())),
                opt(r.min_energy.as_ref().map(|p| p.avg_energy_uj.to_string())),
                opt(r.min_energy.as_ref().map(|p| p.threshold.to_string())),
            ]
        })
        .collect();
    write_rows(
        &mut out,
        format,
        &[
            "drop",
            "B",
            "reduced_rf_trees",
            "min_avg_trees",
            "threshold_at_min_trees",
            "min_avg_energy_uj",
            "threshold_at_min_energy",
        ],
        &rows,
    )
}
