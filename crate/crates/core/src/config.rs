//! Parameter spaces, concrete configurations and their text formats.
//!
//! A parameter-spec file has one parameter per line:
//!
//! ```text
//! # name            kind  bounds / values      # description
//! eta_weight        real  0 10                 # weight of the arrival estimate
//! lobby_floor       int   1 4
//! zoning_enabled    bool
//! parking_policy    enum  none,lobby,spread
//! ```
//!
//! A configuration file assigns every parameter exactly once, `name = value`,
//! in any order.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kv::strip_comment;

/// Two real parameter values closer than this are considered equal.
pub const REAL_EQ_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Integer,
    Real,
    Boolean,
    Enumeration,
}

/// Admissible values of a parameter.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Integer { lo: i64, hi: i64 },
    Real { lo: f64, hi: f64 },
    Boolean,
    Enumeration(Vec<String>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    /// Index into the enumeration's value list.
    Choice(usize),
}

impl Value {
    /// Equality with [`REAL_EQ_TOLERANCE`] for reals.
    pub fn approx_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Real(a), Value::Real(b)) => (a - b).abs() <= REAL_EQ_TOLERANCE,
            (a, b) => a == b,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Int(v) => v as f64,
            Value::Real(v) => v,
            Value::Bool(b) => f64::from(u8::from(b)),
            Value::Choice(i) => i as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSpec {
    name: String,
    domain: Domain,
    description: String,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, domain: Domain, description: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == '=' || c == '#') {
            return Err(Error::InvalidArgument(format!("invalid parameter name `{name}`")));
        }
        match &domain {
            Domain::Integer { lo, hi } if lo > hi => {
                return Err(Error::InvalidArgument(format!("`{name}`: inverted range {lo} > {hi}")))
            }
            Domain::Real { lo, hi } if !(lo.is_finite() && hi.is_finite()) => {
                return Err(Error::InvalidArgument(format!("`{name}`: bounds must be finite")))
            }
            Domain::Real { lo, hi } if lo > hi => {
                return Err(Error::InvalidArgument(format!("`{name}`: inverted range {lo} > {hi}")))
            }
            Domain::Enumeration(vals) => {
                if vals.is_empty() {
                    return Err(Error::InvalidArgument(format!("`{name}`: empty value list")));
                }
                for (i, v) in vals.iter().enumerate() {
                    if v.is_empty() || v.chars().any(char::is_whitespace) {
                        return Err(Error::InvalidArgument(format!("`{name}`: invalid value `{v}`")));
                    }
                    if vals[..i].contains(v) {
                        return Err(Error::InvalidArgument(format!("`{name}`: duplicate value `{v}`")));
                    }
                }
            }
            _ => {}
        }
        Ok(Self {
            name,
            domain,
            description: description.into(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn kind(&self) -> ParamKind {
        match self.domain {
            Domain::Integer { .. } => ParamKind::Integer,
            Domain::Real { .. } => ParamKind::Real,
            Domain::Boolean => ParamKind::Boolean,
            Domain::Enumeration(_) => ParamKind::Enumeration,
        }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (&self.domain, value) {
            (Domain::Integer { lo, hi }, Value::Int(v)) => lo <= v && v <= hi,
            (Domain::Real { lo, hi }, Value::Real(v)) => v.is_finite() && lo <= v && v <= hi,
            (Domain::Boolean, Value::Bool(_)) => true,
            (Domain::Enumeration(vals), Value::Choice(i)) => *i < vals.len(),
            _ => false,
        }
    }

    /// True when the domain holds exactly one value.
    pub fn is_single_valued(&self) -> bool {
        match &self.domain {
            Domain::Integer { lo, hi } => lo == hi,
            Domain::Real { lo, hi } => lo == hi,
            Domain::Boolean => false,
            Domain::Enumeration(vals) => vals.len() == 1,
        }
    }

    pub fn parse_value(&self, text: &str) -> Result<Value> {
        let out_of_range = || Error::OutOfRange {
            name: self.name.clone(),
            value: text.to_string(),
        };
        let value = match &self.domain {
            Domain::Integer { .. } => Value::Int(text.parse().map_err(|_| out_of_range())?),
            Domain::Real { .. } => Value::Real(text.parse().map_err(|_| out_of_range())?),
            Domain::Boolean => Value::Bool(text.parse().map_err(|_| out_of_range())?),
            Domain::Enumeration(vals) => {
                Value::Choice(vals.iter().position(|v| v == text).ok_or_else(out_of_range)?)
            }
        };
        if self.contains(&value) {
            Ok(value)
        } else {
            Err(out_of_range())
        }
    }

    pub fn format_value(&self, value: &Value) -> String {
        match (&self.domain, value) {
            (Domain::Enumeration(vals), Value::Choice(i)) => vals[*i].clone(),
            (_, Value::Int(v)) => v.to_string(),
            (_, Value::Real(v)) => v.to_string(),
            (_, Value::Bool(b)) => b.to_string(),
            (_, Value::Choice(i)) => i.to_string(),
        }
    }

    fn spec_line(&self) -> String {
        let body = match &self.domain {
            Domain::Integer { lo, hi } => format!("{} int {} {}", self.name, lo, hi),
            Domain::Real { lo, hi } => format!("{} real {} {}", self.name, lo, hi),
            Domain::Boolean => format!("{} bool", self.name),
            Domain::Enumeration(vals) => format!("{} enum {}", self.name, vals.join(",")),
        };
        if self.description.is_empty() {
            body
        } else {
            format!("{body} # {}", self.description)
        }
    }
}

/// Draws a value uniformly from the spec's domain.
///
/// With `exclude`, redraws until the value differs from it.
pub fn random_value<R: Rng + ?Sized>(spec: &ParameterSpec, rng: &mut R, exclude: Option<&Value>) -> Result<Value> {
    if exclude.is_some() && spec.is_single_valued() {
        return Err(Error::SingleValuedDomain(spec.name.clone()));
    }
    loop {
        let v = match &spec.domain {
            Domain::Integer { lo, hi } => Value::Int(rng.random_range(*lo..=*hi)),
            Domain::Real { lo, hi } if lo == hi => Value::Real(*lo),
            Domain::Real { lo, hi } => Value::Real(rng.random_range(*lo..=*hi)),
            Domain::Boolean => Value::Bool(rng.random()),
            Domain::Enumeration(vals) => Value::Choice(rng.random_range(0..vals.len())),
        };
        match exclude {
            Some(x) if v.approx_eq(x) => continue,
            _ => return Ok(v),
        }
    }
}

/// Ordered set of parameters; the order is the canonical parameter index.
#[derive(Clone, Debug)]
pub struct ParameterSpace {
    specs: Vec<ParameterSpec>,
    index: HashMap<String, usize>,
}

impl PartialEq for ParameterSpace {
    fn eq(&self, other: &Self) -> bool {
        self.specs == other.specs
    }
}

impl ParameterSpace {
    pub fn new(specs: Vec<ParameterSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::EmptySpace);
        }
        let mut index = HashMap::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            if index.insert(s.name.clone(), i).is_some() {
                return Err(Error::DuplicateParameter(s.name.clone()));
            }
        }
        Ok(Self { specs, index })
    }

    /// Parses a parameter-spec file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut specs: Vec<ParameterSpec> = Vec::new();
        let mut seen = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let body = strip_comment(raw).trim();
            if body.is_empty() {
                continue;
            }
            let description = raw.find('#').map(|p| raw[p + 1..].trim()).unwrap_or("");
            let tokens: Vec<&str> = body.split_whitespace().collect();
            let name = tokens[0];
            let kind = tokens.get(1).copied().ok_or_else(|| Error::parse(lineno, "missing parameter kind"))?;
            let domain = match kind {
                "int" | "integer" => {
                    let (lo, hi) = bounds(lineno, &tokens)?;
                    let lo = lo.parse().map_err(|_| Error::parse(lineno, format!("bad integer bound `{lo}`")))?;
                    let hi = hi.parse().map_err(|_| Error::parse(lineno, format!("bad integer bound `{hi}`")))?;
                    if lo > hi {
                        return Err(Error::parse(lineno, format!("inverted range {lo} > {hi}")));
                    }
                    Domain::Integer { lo, hi }
                }
                "real" => {
                    let (lo, hi) = bounds(lineno, &tokens)?;
                    let lo: f64 = lo.parse().map_err(|_| Error::parse(lineno, format!("bad real bound `{lo}`")))?;
                    let hi: f64 = hi.parse().map_err(|_| Error::parse(lineno, format!("bad real bound `{hi}`")))?;
                    if lo > hi {
                        return Err(Error::parse(lineno, format!("inverted range {lo} > {hi}")));
                    }
                    Domain::Real { lo, hi }
                }
                "bool" | "boolean" => {
                    if tokens.len() != 2 {
                        return Err(Error::parse(lineno, "boolean parameters take no bounds"));
                    }
                    Domain::Boolean
                }
                "enum" | "enumeration" => {
                    if tokens.len() != 3 {
                        return Err(Error::parse(lineno, "expected `<name> enum v1,v2,...`"));
                    }
                    Domain::Enumeration(tokens[2].split(',').map(str::to_string).collect())
                }
                other => return Err(Error::parse(lineno, format!("unknown kind `{other}`"))),
            };
            if let Some(prev) = seen.insert(name.to_string(), lineno) {
                return Err(Error::parse(lineno, format!("duplicate parameter `{name}` (first on line {prev})")));
            }
            let spec = ParameterSpec::new(name, domain, description).map_err(|e| Error::parse(lineno, e.to_string()))?;
            specs.push(spec);
        }
        Self::new(specs)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for spec in &self.specs {
            s.push_str(&spec.spec_line());
            s.push('\n');
        }
        s
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[ParameterSpec] {
        &self.specs
    }

    pub fn spec(&self, i: usize) -> &ParameterSpec {
        &self.specs[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

fn bounds<'a>(lineno: usize, tokens: &[&'a str]) -> Result<(&'a str, &'a str)> {
    match tokens {
        [_, _, lo, hi] => Ok((lo, hi)),
        _ => Err(Error::parse(lineno, "expected `<name> <kind> <lo> <hi>`")),
    }
}

/// A point of a [`ParameterSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    space: Arc<ParameterSpace>,
    values: Vec<Value>,
}

impl Configuration {
    pub fn new(space: Arc<ParameterSpace>, values: Vec<Value>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::SpaceMismatch);
        }
        for (spec, v) in space.specs.iter().zip(&values) {
            if !spec.contains(v) {
                return Err(Error::OutOfRange {
                    name: spec.name.clone(),
                    value: format!("{v:?}"),
                });
            }
        }
        Ok(Self { space, values })
    }

    /// Parses a configuration file against `space`.
    pub fn parse(text: &str, space: &Arc<ParameterSpace>) -> Result<Self> {
        let mut values: Vec<Option<Value>> = vec![None; space.len()];
        for (lineno, key, val) in crate::kv::parse_kv(text)? {
            let i = space
                .index_of(&key)
                .ok_or_else(|| Error::parse(lineno, Error::UnknownParameter(key.clone()).to_string()))?;
            if values[i].is_some() {
                return Err(Error::parse(lineno, format!("parameter `{key}` assigned twice")));
            }
            let v = space.specs[i]
                .parse_value(&val)
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
            values[i] = Some(v);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::MissingParameter(space.specs[i].name.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            space: Arc::clone(space),
            values,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (spec, v) in self.space.specs.iter().zip(&self.values) {
            s.push_str(&format!("{} = {}\n", spec.name, spec.format_value(v)));
        }
        s
    }

    pub fn space(&self) -> &Arc<ParameterSpace> {
        &self.space
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn get(&self, i: usize) -> &Value {
        &self.values[i]
    }

    pub fn get_by_name(&self, name: &str) -> Option<&Value> {
        self.space.index_of(name).map(|i| &self.values[i])
    }

    /// Replaces one value, keeping the configuration valid.
    pub fn set(&mut self, i: usize, value: Value) -> Result<()> {
        let spec = &self.space.specs[i];
        if !spec.contains(&value) {
            return Err(Error::OutOfRange {
                name: spec.name.clone(),
                value: format!("{value:?}"),
            });
        }
        self.values[i] = value;
        Ok(())
    }

    pub fn set_by_name(&mut self, name: &str, text: &str) -> Result<()> {
        let i = self
            .space
            .index_of(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        let v = self.space.specs[i].parse_value(text)?;
        self.values[i] = v;
        Ok(())
    }

    /// Number of parameters whose values differ.
    pub fn hamming_distance(&self, other: &Configuration) -> Result<usize> {
        if !Arc::ptr_eq(&self.space, &other.space) && self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| !a.approx_eq(b))
            .count())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
