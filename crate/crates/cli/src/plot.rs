//! Split a trace CSV into gnuplot-ready `batch value` series.
//!
//! Empty cells become `?`, which gnuplot skips after
//! `set datafile missing '?'`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::experiment::TRACE_HEADER;
use crate::CliError;

pub const SERIES: [&str; 3] = ["empirical", "expected", "optimal"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: &'static str,
    pub points: Vec<(u64, Option<f64>)>,
}

impl Series {
    pub fn to_text(&self) -> String {
        let mut out = format!("# batch {}_loss\n", self.name);
        for (batch, value) in &self.points {
            match value {
                Some(v) => out.push_str(&format!("{batch} {v:.16e}\n")),
                None => out.push_str(&format!("{batch} ?\n")),
            }
        }
        out
    }
}

fn malformed(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("trace line {line}: {msg}"))
}

pub fn parse_trace(text: &str) -> Result<Vec<Series>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        Some((_, h)) => {
            return Err(malformed(
                1,
                format!("expected header '{TRACE_HEADER}', found '{h}'"),
            ))
        }
        None => return Err(malformed(1, "empty trace")),
    }
    let mut series: Vec<Series> = SERIES
        .iter()
        .map(|&name| Series {
            name,
            points: Vec::new(),
        })
        .collect();
    for (i, line) in lines {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 4 {
            return Err(malformed(
                n,
                format!("expected 4 columns, found {}", cells.len()),
            ));
        }
        let batch: u64 = cells[0]
            .parse()
            .map_err(|_| malformed(n, format!("bad batch index '{}'", cells[0])))?;
        for (s, cell) in series.iter_mut().zip(&cells[1..]) {
            let value = if cell.is_empty() {
                None
            } else {
                Some(
                    cell.parse::<f64>()
                        .map_err(|_| malformed(n, format!("bad value '{cell}'")))?,
                )
            };
            s.points.push((batch, value));
        }
    }
    Ok(series)
}

/// Write `<name>.dat` for each series into `dir`, returning the paths.
pub fn emit_plot_data(trace: &Path, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let text = fs::read_to_string(trace)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", trace.display())))?;
    let series = parse_trace(&text)?;
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for s in series {
        let path = dir.join(format!("{}.dat", s.name));
        fs::write(&path, s.to_text())
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        paths.push(path);
    }
    Ok(paths)
}
