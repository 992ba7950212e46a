//! Parsers for the small flag languages (`lo:hi`, `fixed:h`, ...) and the
//! JSON config file.

use std::path::PathBuf;

use ipcw::{Region, Transform};
use serde_json::Value;

use crate::error::CliError;

fn number(s: &str, what: &str) -> Result<f64, CliError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("{what}: '{s}' is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!("{what}: '{s}' is not finite")))
    }
}

fn count(s: &str, what: &str) -> Result<usize, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::config(format!("{what}: '{s}' is not a nonnegative integer")))
}

/// `lo:hi[,lo:hi...]`.
pub fn parse_region(s: &str) -> Result<Region, CliError> {
    let bounds = s
        .split(',')
        .map(|axis| {
            let (lo, hi) = axis
                .split_once(':')
                .ok_or_else(|| CliError::config(format!("region axis '{axis}' must be lo:hi")))?;
            Ok((number(lo, "region")?, number(hi, "region")?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Region::new(bounds).map_err(|e| CliError::config(e.to_string()))
}

/// `lo:hi:steps`, equally spaced and inclusive.
pub fn parse_h_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(CliError::config(format!("h grid '{s}' must be lo:hi:steps")));
    };
    let lo = number(lo, "h grid")?;
    let hi = number(hi, "h grid")?;
    let steps = count(steps, "h grid")?;
    if !(lo > 0.0 && hi >= lo) || steps == 0 || (steps > 1 && hi == lo) {
        return Err(CliError::config(format!(
            "h grid '{s}' needs 0 < lo <= hi and a positive step count"
        )));
    }
    if steps > 100_000 {
        return Err(CliError::config("h grid has too many steps"));
    }
    Ok(ipcw::bands::linspace(lo, hi, steps))
}

/// `identity` or `indicator:t`.
pub fn parse_psi(s: &str) -> Result<Transform, CliError> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("identity") {
        return Ok(Transform::identity());
    }
    match s.split_once(':') {
        Some((kind, t)) if kind.eq_ignore_ascii_case("indicator") => {
            Ok(Transform::indicator(number(t, "psi")?))
        }
        _ => Err(CliError::config(format!(
            "psi '{s}' must be 'identity' or 'indicator:t'"
        ))),
    }
}

/// Bandwidth rule before any table file is read.
#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthSpec {
    Fixed(f64),
    PowerLaw { a: f64, delta0: f64 },
    Table(PathBuf),
}

/// `fixed:h | power:A:delta0 | table:file.csv`.
pub fn parse_bandwidth(s: &str) -> Result<BandwidthSpec, CliError> {
    let s = s.trim();
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| CliError::config(format!("bandwidth '{s}' has no rule prefix")))?;
    match kind.to_ascii_lowercase().as_str() {
        "fixed" => {
            let h = number(rest, "bandwidth")?;
            if h <= 0.0 {
                return Err(CliError::config("fixed bandwidth must be positive"));
            }
            Ok(BandwidthSpec::Fixed(h))
        }
        "power" => {
            let (a, d) = rest
                .split_once(':')
                .ok_or_else(|| CliError::config("power bandwidth must be power:A:delta0"))?;
            Ok(BandwidthSpec::PowerLaw {
                a: number(a, "bandwidth")?,
                delta0: number(d, "bandwidth")?,
            })
        }
        "table" if !rest.is_empty() => Ok(BandwidthSpec::Table(PathBuf::from(rest))),
        _ => Err(CliError::config(format!(
            "bandwidth '{s}' must be fixed:h, power:A:delta0 or table:file.csv"
        ))),
    }
}

/// Comma-separated numbers, e.g. a point `x1,x2` or a list of bandwidths.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    let v = s
        .split(',')
        .map(|p| number(p, "list"))
        .collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err(CliError::config("empty list"));
    }
    Ok(v)
}

pub fn parse_count_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',').map(|p| count(p, "list")).collect()
}

/// `c1:c2:h_n` reference bounds for tabulated bandwidths.
pub fn parse_bounds(s: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [c1, c2, hn] = parts.as_slice() else {
        return Err(CliError::config(format!("bounds '{s}' must be c1:c2:hn")));
    };
    let (c1, c2, hn) = (number(c1, "bounds")?, number(c2, "bounds")?, number(hn, "bounds")?);
    if !(c1 > 0.0 && c2 >= c1 && hn > 0.0) {
        return Err(CliError::config("bounds need 0 < c1 <= c2 and hn > 0"));
    }
    Ok((c1, c2, hn))
}

/// Turns a JSON config object into `--key value` arguments. Booleans
/// become bare flags when true; arrays are joined with commas.
pub fn config_to_args(text: &str) -> Result<Vec<(String, Option<String>)>, CliError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::config(format!("config file is not valid JSON: {e}")))?;
    let Value::Object(map) = value else {
        return Err(CliError::config("config file must hold a JSON object"));
    };
    let mut out = Vec::with_capacity(map.len());
    for (key, v) in map {
        if key.is_empty() || key.starts_with('-') || key.contains(char::is_whitespace) {
            return Err(CliError::config(format!("invalid config key '{key}'")));
        }
        let flag = key.replace('_', "-");
        match v {
            Value::Bool(true) => out.push((flag, None)),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined = items
                    .iter()
                    .map(scalar)
                    .collect::<Result<Vec<_>, _>>()?
                    .join(",");
                out.push((flag, Some(joined)));
            }
            other => out.push((flag, Some(scalar(&other)?))),
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(CliError::config("config values must be scalars or arrays of scalars")),
    }
}
