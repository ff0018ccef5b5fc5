//! CSV and plain-text tables.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use super::errors::ErrorReport;
use super::study::RunRow;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

const ERROR_COLUMNS: [&str; 5] = ErrorReport::NAMES;
const RATE_COLUMNS: [&str; 5] = ["eoc_v_l2l2", "eoc_v_l2h1", "eoc_v_linf", "eoc_p_l2l2", "eoc_div_l2l2"];

pub fn header() -> Vec<&'static str> {
    let mut h = vec!["case", "nu", "n_sm", "c", "h", "r", "k", "dofs"];
    h.extend(ERROR_COLUMNS);
    h.extend(RATE_COLUMNS);
    h.extend(["n_nl", "n_l", "max_l", "cap_hits", "rebuilds", "converged", "wall_time"]);
    h
}

/// Scientific notation with six significant digits and a signed two-digit
/// exponent, e.g. `2.79971e-02`.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
}

fn opt(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

fn record(row: &RunRow) -> Vec<String> {
    let mut out = vec![
        row.case.clone(),
        sci(row.nu),
        row.n_sm.to_string(),
        row.c.to_string(),
        sci(row.h),
        row.r.to_string(),
        row.k.to_string(),
        row.dofs.to_string(),
    ];
    let errs = row.errors.map(|e| e.values().map(Some)).unwrap_or([None; 5]);
    out.extend(errs.iter().map(|&e| opt(e)));
    out.extend(row.eoc.iter().map(|&e| opt(e)));
    out.extend([
        sci(row.mean_newton),
        sci(row.mean_krylov),
        row.max_krylov.to_string(),
        row.cap_hits.to_string(),
        row.rebuilds.to_string(),
        row.converged.to_string(),
        sci(row.wall_time),
    ]);
    out
}

/// Writes the rows as CSV with a header row and LF line endings.
pub fn write_csv<W: Write>(rows: &[RunRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header())?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[RunRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

fn bad(msg: String) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, msg))
}

/// Reads rows written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let expected = header();
    if rd.headers()?.iter().ne(expected.iter().copied()) {
        return Err(bad("unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| bad(format!("column {i}: {:?}", &rec[i]))) };
        let u = |i: usize| -> Result<usize> { rec[i].parse().map_err(|_| bad(format!("column {i}: {:?}", &rec[i]))) };
        let o = |i: usize| -> Result<Option<f64>> { if rec[i].is_empty() { Ok(None) } else { f(i).map(Some) } };
        let errs = (0..5).map(|j| o(8 + j)).collect::<Result<Vec<_>>>()?;
        let errors = if errs.iter().all(Option::is_some) {
            let e: Vec<f64> = errs.iter().map(|x| x.unwrap()).collect();
            Some(ErrorReport { velocity_l2: e[0], velocity_h1: e[1], velocity_linf: e[2], pressure_l2: e[3], divergence_l2: e[4] })
        } else {
            None
        };
        let mut eoc = [None; 5];
        for (j, slot) in eoc.iter_mut().enumerate() {
            *slot = o(13 + j)?;
        }
        rows.push(RunRow {
            case: rec[0].to_string(),
            nu: f(1)?,
            n_sm: u(2)?,
            c: u(3)?,
            h: f(4)?,
            r: u(5)?,
            k: u(6)?,
            dofs: u(7)?,
            errors,
            eoc,
            mean_newton: f(18)?,
            mean_krylov: f(19)?,
            max_krylov: u(20)?,
            cap_hits: u(21)?,
            rebuilds: u(22)?,
            converged: rec[23].parse().map_err(|_| bad(format!("column 23: {:?}", &rec[23])))?,
            wall_time: f(24)?,
        });
    }
    Ok(rows)
}

/// Tables grouped by case, `nu` and `r`: errors with rates by refinement
/// level, followed by the iteration averages.
pub fn text_table(rows: &[RunRow]) -> String {
    let mut out = String::new();
    let mut start = 0;
    while start < rows.len() {
        let first = &rows[start];
        let end = rows[start..]
            .iter()
            .position(|r| r.case != first.case || r.nu != first.nu || r.r != first.r || r.k != first.k || r.n_sm != first.n_sm)
            .map_or(rows.len(), |p| start + p);
        let group = &rows[start..end];
        let _ = writeln!(out, "{} nu={} r={} k={} n_sm={}", first.case, sci(first.nu), first.r, first.k, first.n_sm);
        if group.iter().any(|r| r.errors.is_some()) {
            let _ = write!(out, "{:>4} {:>12}", "c", "h");
            for name in ERROR_COLUMNS {
                let _ = write!(out, " {name:>12} {:>5}", "eoc");
            }
            out.push('\n');
            for row in group {
                let _ = write!(out, "{:>4} {:>12}", row.c, sci(row.h));
                let errs = row.errors.map(|e| e.values().map(Some)).unwrap_or([None; 5]);
                for (e, rate) in errs.iter().zip(&row.eoc) {
                    let e = e.map_or("-".to_string(), sci);
                    let rate = rate.map_or("-".to_string(), |x| format!("{x:.2}"));
                    let _ = write!(out, " {e:>12} {rate:>5}");
                }
                out.push('\n');
            }
        }
        let _ = writeln!(out, "{:>4} {:>12} {:>8} {:>8} {:>6} {:>9} {:>10}", "c", "dofs", "n_nl", "n_l", "max_l", "rebuilds", "converged");
        for row in group {
            let _ = writeln!(
                out,
                "{:>4} {:>12} {:>8.2} {:>8.2} {:>6} {:>9} {:>10}",
                row.c, row.dofs, row.mean_newton, row.mean_krylov, row.max_krylov, row.rebuilds, row.converged
            );
        }
        out.push('\n');
        start = end;
    }
    out
}

/// Writes the rows to `path` in the requested format.
pub fn emit_report(rows: &[RunRow], path: &Path, format: ReportFormat) -> Result<()> {
    let file = std::fs::File::create(path)?;
    match format {
        ReportFormat::Csv => write_csv(rows, std::io::BufWriter::new(file)),
        ReportFormat::Text => {
            let mut w = std::io::BufWriter::new(file);
            w.write_all(text_table(rows).as_bytes())?;
            w.flush()?;
            Ok(())
        }
    }
}
