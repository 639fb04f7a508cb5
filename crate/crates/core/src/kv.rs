//! `key=value` text files used for building, oracle and threshold settings.

use crate::error::{Error, Result};

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected `key=value`, got `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::parse(i + 1, "empty key"));
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

pub(crate) fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::parse(line, format!("`{key}`: `{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::parse(line, format!("`{key}`: value must be finite")));
    }
    Ok(x)
}

pub(crate) fn parse_u32(line: usize, key: &str, v: &str) -> Result<u32> {
    v.parse()
        .map_err(|_| Error::parse(line, format!("`{key}`: `{v}` is not a non-negative integer")))
}
