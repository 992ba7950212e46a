//! CSV reading and writing for datasets and tabulated functions.
//!
//! Lines starting with `#` are comments (used for provenance headers).
//! Floats are written with Rust's shortest round-trip formatting, so a
//! written file parses back to identical values.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::bands::BandwidthTable;
use crate::error::{Error, Result};
use crate::survival::{Dataset, StepFunction};

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::Utf8 { err, .. } => parse_err(line, format!("invalid UTF-8: {err}")),
        other => parse_err(line, format!("{other:?}")),
    }
}

fn parse_f64(field: &str, line: u64, column: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(line, format!("column '{column}': '{field}' is not a number")))?;
    if v.is_nan() {
        return Err(parse_err(line, format!("column '{column}' is NaN")));
    }
    Ok(v)
}

type NumericRows = (Vec<String>, Vec<(u64, Vec<f64>)>);

/// Header and rows of a headed numeric CSV, rows as `(line number, values)`.
fn numeric_rows<R: Read>(input: R, min_columns: usize) -> Result<NumericRows> {
    let mut rdr = reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < min_columns || (header.len() == 1 && header[0].is_empty()) {
        return Err(parse_err(
            1,
            format!("expected at least {min_columns} header columns, found {}", header.len()),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} columns, found {}", header.len(), rec.len()),
            ));
        }
        let values = rec
            .iter()
            .zip(&header)
            .map(|(f, c)| parse_f64(f, line, c))
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, values));
    }
    Ok((header, rows))
}

/// Parses a dataset CSV with header `z,delta,x1[,x2,...]`.
pub fn read_dataset<R: Read>(input: R) -> Result<Dataset> {
    let mut rdr = reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect();
    if header.len() < 3 || header[0] != "z" || header[1] != "delta" {
        return Err(parse_err(
            1,
            format!("header must be 'z,delta,x1[,x2,...]', found '{}'", header.join(",")),
        ));
    }
    let d = header.len() - 2;
    let mut z = Vec::new();
    let mut delta = Vec::new();
    let mut x = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} columns, found {}", header.len(), rec.len()),
            ));
        }
        z.push(parse_f64(&rec[0], line, "z")?);
        delta.push(match &rec[1] {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(line, format!("delta must be 0 or 1, found '{other}'")))
            }
        });
        for (j, field) in rec.iter().skip(2).enumerate() {
            x.push(parse_f64(field, line, &header[j + 2])?);
        }
    }
    if z.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(z, delta, x, d)
}

pub fn parse_dataset_str(text: &str) -> Result<Dataset> {
    read_dataset(text.as_bytes())
}

pub fn parse_dataset(path: &Path) -> Result<Dataset> {
    read_dataset(File::open(path)?)
}

/// Writes `data` with header `z,delta,x1..xd`, preceded by `comments` as
/// `# ` lines.
pub fn write_dataset<W: Write>(mut out: W, data: &Dataset, comments: &[String]) -> Result<()> {
    write_comments(&mut out, comments)?;
    let mut header = vec!["z".to_string(), "delta".to_string()];
    header.extend((1..=data.dim()).map(|j| format!("x{j}")));
    writeln!(out, "{}", header.join(","))?;
    for i in 0..data.len() {
        write!(out, "{},{}", data.z()[i], u8::from(data.delta()[i]))?;
        for v in data.covariate(i) {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_comments<W: Write>(out: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(())
}

/// Parses a two-column `(u, value)` table into a right-continuous step
/// function jumping at each `u`, with value 0 to the left of the first
/// row. Rows must have strictly increasing `u`.
pub fn read_step_table<R: Read>(input: R) -> Result<StepFunction> {
    let (_, rows) = numeric_rows(input, 2)?;
    let mut jumps = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    let mut prev = f64::NEG_INFINITY;
    for (line, r) in rows {
        if r.len() != 2 {
            return Err(parse_err(line, "step table rows need exactly two columns"));
        }
        if r[0] <= prev {
            return Err(parse_err(line, "jump locations must be strictly increasing"));
        }
        prev = r[0];
        jumps.push(r[0]);
        values.push(r[1]);
    }
    StepFunction::new(jumps, values, 0.0)
}

pub fn parse_step_table_str(text: &str) -> Result<StepFunction> {
    read_step_table(text.as_bytes())
}

/// Parses a distribution-function table; values must lie in `[0, 1]` and
/// never decrease.
pub fn read_distribution_table<R: Read>(input: R) -> Result<StepFunction> {
    let sf = read_step_table(input)?;
    if !sf.is_distribution_function() {
        return Err(Error::param(
            "distribution table must be nondecreasing with values in [0, 1]",
        ));
    }
    Ok(sf)
}

pub fn write_step_table<W: Write>(
    mut out: W,
    sf: &StepFunction,
    header: (&str, &str),
    comments: &[String],
) -> Result<()> {
    write_comments(&mut out, comments)?;
    writeln!(out, "{},{}", header.0, header.1)?;
    for (u, v) in sf.jumps().iter().zip(sf.values()) {
        writeln!(out, "{u},{v}")?;
    }
    Ok(())
}

/// Parses a per-point bandwidth table with header `x1[,x2,...],h`.
pub fn read_bandwidth_table<R: Read>(input: R) -> Result<BandwidthTable> {
    let (header, rows) = numeric_rows(input, 2)?;
    if !header.last().is_some_and(|h| h.eq_ignore_ascii_case("h")) {
        return Err(parse_err(1, "bandwidth table header must end with 'h'"));
    }
    if rows.is_empty() {
        return Err(parse_err(1, "bandwidth table has no rows"));
    }
    let mut points = Vec::with_capacity(rows.len());
    let mut hs = Vec::with_capacity(rows.len());
    for (_, mut r) in rows {
        hs.push(r.pop().expect("at least two columns"));
        points.push(r);
    }
    BandwidthTable::new(points, hs)
}

pub fn parse_bandwidth_table_str(text: &str) -> Result<BandwidthTable> {
    read_bandwidth_table(text.as_bytes())
}
