//! Compact command-line notation for sets, lower functions and numbers.
//!
//! Sets: `interval:a:b`, `point:x`, `points:x,y,…`, `cantor:m:ρ:L`,
//! `union:[A;B;…]`, or a JSON object. Lower functions: `hnu:ν`, `chung:c`,
//! `table:path` (CSV with a `t,h` header) or a JSON object. Numbers accept
//! fractions such as `1/3`.

use std::path::Path;

use relcap::{LowerFunctionSpec, SetSpec};

use crate::error::{LabError, LabResult};

fn bad(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

pub fn parse_number(s: &str) -> LabResult<f64> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad(format!("bad number `{s}`")))?;
            let q: f64 = q.trim().parse().map_err(|_| bad(format!("bad number `{s}`")))?;
            p / q
        }
        None => s.parse().map_err(|_| bad(format!("bad number `{s}`")))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad(format!("`{s}` is not finite")))
    }
}

pub fn parse_numbers(items: &[String]) -> LabResult<Vec<f64>> {
    items.iter().flat_map(|s| s.split(',')).filter(|s| !s.trim().is_empty()).map(parse_number).collect()
}

/// `a:b` with integers.
pub fn parse_range(s: &str) -> LabResult<(u64, u64)> {
    let (a, b) = s.split_once(':').ok_or_else(|| bad(format!("expected lo:hi, got `{s}`")))?;
    let a = a.trim().parse().map_err(|_| bad(format!("bad integer in `{s}`")))?;
    let b = b.trim().parse().map_err(|_| bad(format!("bad integer in `{s}`")))?;
    Ok((a, b))
}

/// `start:end:ratio`.
pub fn parse_geometric(s: &str) -> LabResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, q] = parts[..] else {
        return Err(bad(format!("expected start:end:ratio, got `{s}`")));
    };
    Ok(relcap::sets::geometric_sweep(parse_number(a)?, parse_number(b)?, parse_number(q)?)?)
}

/// Splits on `;` outside square brackets.
fn split_top(s: &str) -> LabResult<Vec<&str>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ';' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(bad(format!("unbalanced brackets in `{s}`")));
        }
    }
    if depth != 0 {
        return Err(bad(format!("unbalanced brackets in `{s}`")));
    }
    out.push(&s[start..]);
    Ok(out.into_iter().filter(|p| !p.trim().is_empty()).collect())
}

pub fn parse_set(s: &str) -> LabResult<SetSpec> {
    let s = s.trim();
    if s.starts_with('{') {
        return Ok(serde_json::from_str(s)?);
    }
    let (kind, rest) = s.split_once(':').ok_or_else(|| bad(format!("unknown set `{s}`")))?;
    let fields: Vec<&str> = rest.split(':').collect();
    match (kind, &fields[..]) {
        ("interval", [a, b]) => Ok(SetSpec::Interval { a: parse_number(a)?, b: parse_number(b)? }),
        ("point", [x]) => Ok(SetSpec::Points { points: vec![parse_number(x)?] }),
        ("points", [xs]) => Ok(SetSpec::Points {
            points: xs.split(',').filter(|x| !x.trim().is_empty()).map(parse_number).collect::<LabResult<_>>()?,
        }),
        ("cantor", [m, ratio, depth]) => Ok(SetSpec::Cantor {
            pieces: m.trim().parse().map_err(|_| bad(format!("bad piece count `{m}`")))?,
            ratio: parse_number(ratio)?,
            depth: depth.trim().parse().map_err(|_| bad(format!("bad depth `{depth}`")))?,
        }),
        ("union", _) => {
            let inner = rest
                .trim()
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| bad(format!("expected union:[…], got `{s}`")))?;
            let children = split_top(inner)?.into_iter().map(parse_set).collect::<LabResult<_>>()?;
            Ok(SetSpec::Union { children })
        }
        _ => Err(bad(format!("unknown set `{s}`"))),
    }
}

pub fn parse_lower(s: &str) -> LabResult<LowerFunctionSpec> {
    let s = s.trim();
    let spec = if s.starts_with('{') {
        serde_json::from_str(s)?
    } else {
        match s.split_once(':') {
            Some(("hnu", nu)) => LowerFunctionSpec::HNu { nu: parse_number(nu)? },
            Some(("chung", c)) => LowerFunctionSpec::CriticalChung { c: parse_number(c)? },
            Some(("table", path)) => read_table(Path::new(path))?,
            _ => return Err(bad(format!("unknown lower function `{s}`"))),
        }
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(serde::Deserialize)]
struct TableRow {
    t: f64,
    h: f64,
}

fn read_table(path: &Path) -> LabResult<LowerFunctionSpec> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let samples = reader
        .deserialize::<TableRow>()
        .map(|row| row.map(|r| (r.t, r.h)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LowerFunctionSpec::Tabulated { samples })
}
