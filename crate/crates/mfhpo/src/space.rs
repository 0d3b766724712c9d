//! Mixed hierarchical search spaces and points within them.
//!
//! A [`ParamSpace`] is an ordered list of typed parameters (continuous,
//! integer, categorical) with per-axis optimization scales and optional
//! single-parent activation conditions. A [`Config`] stores one value per
//! declared parameter; parameters whose condition is unmet hold
//! [`ParamValue::Inactive`].
//!
//! Encoding maps a config to one f64 per axis: numerics go to [0,1] under the
//! declared scale, categoricals to level-index / (levels−1), inactive axes to
//! the reserved sentinel −1. Distances over encoded vectors are Gower-style:
//! |Δ| on numeric axes, 0/1 mismatch on categorical ones, with the sentinel at
//! distance 1 from every active value and 0 from another sentinel.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved encoded value for inactive axes.
pub const INACTIVE_CODE: f64 = -1.0;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("invalid space: {0}")]
    BadDefinition(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid value: {0}")]
    BadValue(String),
    #[error("encoded vector has arity {got}, space has {expected}")]
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
    LogLog,
    Reciprocal,
}

impl Scale {
    fn token(self) -> &'static str {
        match self {
            Scale::Linear => "linear",
            Scale::Log => "log",
            Scale::LogLog => "loglog",
            Scale::Reciprocal => "reciprocal",
        }
    }

    fn from_token(t: &str) -> Option<Scale> {
        match t {
            "linear" => Some(Scale::Linear),
            "log" => Some(Scale::Log),
            "loglog" => Some(Scale::LogLog),
            "reciprocal" => Some(Scale::Reciprocal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamKind {
    Continuous { lo: f64, hi: f64 },
    Integer { lo: i64, hi: i64 },
    Categorical { levels: Vec<String> },
}

/// Activation condition: the parameter is active iff its (categorical) parent
/// currently holds one of `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub parent: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDef {
    pub name: String,
    pub kind: ParamKind,
    pub scale: Scale,
    pub condition: Option<Condition>,
}

impl ParamDef {
    pub fn continuous(name: &str, lo: f64, hi: f64, scale: Scale) -> Self {
        ParamDef { name: name.into(), kind: ParamKind::Continuous { lo, hi }, scale, condition: None }
    }

    pub fn integer(name: &str, lo: i64, hi: i64, scale: Scale) -> Self {
        ParamDef { name: name.into(), kind: ParamKind::Integer { lo, hi }, scale, condition: None }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        ParamDef {
            name: name.into(),
            kind: ParamKind::Categorical { levels: levels.iter().map(|s| s.to_string()).collect() },
            scale: Scale::Linear,
            condition: None,
        }
    }

    pub fn when(mut self, parent: &str, values: &[&str]) -> Self {
        self.condition =
            Some(Condition { parent: parent.into(), values: values.iter().map(|s| s.to_string()).collect() });
        self
    }
}

/// One value of a [`Config`]; categorical values are stored as level indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Float(f64),
    Int(i64),
    Cat(usize),
    Inactive,
}

impl ParamValue {
    pub fn is_active(self) -> bool {
        !matches!(self, ParamValue::Inactive)
    }

    /// Numeric view; categorical yields the level index.
    pub fn as_f64(self) -> Option<f64> {
        match self {
            ParamValue::Float(v) => Some(v),
            ParamValue::Int(v) => Some(v as f64),
            ParamValue::Cat(v) => Some(v as f64),
            ParamValue::Inactive => None,
        }
    }

    fn bits(self) -> (u64, u64) {
        match self {
            ParamValue::Float(v) => (0, v.to_bits()),
            ParamValue::Int(v) => (1, v as u64),
            ParamValue::Cat(v) => (2, v as u64),
            ParamValue::Inactive => (3, 0),
        }
    }
}

/// A point in a [`ParamSpace`]; `values[i]` belongs to the i-th parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub values: Vec<ParamValue>,
}

impl Config {
    pub fn is_active(&self, axis: usize) -> bool {
        self.values[axis].is_active()
    }

    /// Stable identity for deduplication; equal keys iff equal configs.
    pub fn identity_key(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.values.len() * 2);
        for v in &self.values {
            let (tag, bits) = v.bits();
            out.push(tag);
            out.push(bits);
        }
        out
    }
}

/// Per-axis metadata for distance and kernel computations over encoded
/// vectors.
#[derive(Debug, Clone, Copy)]
pub struct AxisInfo {
    pub categorical: bool,
    /// Level count for categorical axes, 0 otherwise.
    pub levels: usize,
}

#[derive(Debug, Clone)]
pub struct ParamSpace {
    params: Vec<ParamDef>,
    index: BTreeMap<String, usize>,
    /// Per axis: (parent axis, accepted parent level indices).
    cond: Vec<Option<(usize, Vec<usize>)>>,
    /// Parents-before-children evaluation order.
    topo: Vec<usize>,
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '+'))
}

impl ParamSpace {
    pub fn new(params: Vec<ParamDef>) -> Result<Self, SpaceError> {
        let bad = |msg: String| Err(SpaceError::BadDefinition(msg));
        let mut index = BTreeMap::new();
        for (i, p) in params.iter().enumerate() {
            if !valid_ident(&p.name) {
                return bad(format!("bad parameter name {:?}", p.name));
            }
            if index.insert(p.name.clone(), i).is_some() {
                return bad(format!("duplicate parameter {:?}", p.name));
            }
            match &p.kind {
                ParamKind::Continuous { lo, hi } => {
                    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                        return bad(format!("{}: bounds must be finite with lower < upper", p.name));
                    }
                    check_scale_bounds(&p.name, *lo, p.scale)?;
                }
                ParamKind::Integer { lo, hi } => {
                    if lo >= hi {
                        return bad(format!("{}: integer bounds must satisfy lower < upper", p.name));
                    }
                    check_scale_bounds(&p.name, *lo as f64, p.scale)?;
                }
                ParamKind::Categorical { levels } => {
                    if levels.is_empty() {
                        return bad(format!("{}: empty level list", p.name));
                    }
                    let mut seen = BTreeMap::new();
                    for l in levels {
                        if !valid_ident(l) {
                            return bad(format!("{}: bad level {:?}", p.name, l));
                        }
                        if seen.insert(l, ()).is_some() {
                            return bad(format!("{}: duplicate level {:?}", p.name, l));
                        }
                    }
                    if p.scale != Scale::Linear {
                        return bad(format!("{}: categorical parameters take no scale", p.name));
                    }
                }
            }
        }
        let mut cond = Vec::with_capacity(params.len());
        for p in &params {
            match &p.condition {
                None => cond.push(None),
                Some(c) => {
                    let Some(&pi) = index.get(&c.parent) else {
                        return bad(format!("{}: unknown parent {:?}", p.name, c.parent));
                    };
                    if params[pi].name == p.name {
                        return bad(format!("{}: conditioned on itself", p.name));
                    }
                    let ParamKind::Categorical { levels } = &params[pi].kind else {
                        return bad(format!("{}: parent {:?} is not categorical", p.name, c.parent));
                    };
                    if c.values.is_empty() {
                        return bad(format!("{}: empty condition value set", p.name));
                    }
                    let mut lvls = Vec::new();
                    for v in &c.values {
                        let Some(li) = levels.iter().position(|l| l == v) else {
                            return bad(format!("{}: condition value {:?} is not a level of {:?}", p.name, v, c.parent));
                        };
                        if lvls.contains(&li) {
                            return bad(format!("{}: duplicate condition value {:?}", p.name, v));
                        }
                        lvls.push(li);
                    }
                    cond.push(Some((pi, lvls)));
                }
            }
        }
        // Kahn's algorithm, stable by declaration order; detects cycles.
        let n = params.len();
        let mut topo = Vec::with_capacity(n);
        let mut placed = vec![false; n];
        while topo.len() < n {
            let before = topo.len();
            for i in 0..n {
                if placed[i] {
                    continue;
                }
                let ready = match &cond[i] {
                    None => true,
                    Some((pi, _)) => placed[*pi],
                };
                if ready {
                    placed[i] = true;
                    topo.push(i);
                }
            }
            if topo.len() == before {
                return bad("dependency cycle among conditions".into());
            }
        }
        Ok(ParamSpace { params, index, cond, topo })
    }

    pub fn dimension(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[ParamDef] {
        &self.params
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn axis_info(&self) -> Vec<AxisInfo> {
        self.params
            .iter()
            .map(|p| match &p.kind {
                ParamKind::Categorical { levels } => AxisInfo { categorical: true, levels: levels.len() },
                _ => AxisInfo { categorical: false, levels: 0 },
            })
            .collect()
    }

    /// Whether axis `i`'s condition is met under `values`.
    pub fn condition_met(&self, values: &[ParamValue], i: usize) -> bool {
        match &self.cond[i] {
            None => true,
            Some((pi, lvls)) => match values[*pi] {
                ParamValue::Cat(l) => lvls.contains(&l),
                _ => false,
            },
        }
    }

    /// Axis evaluation order with parents before children.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Level index lookup for a categorical axis.
    pub fn level_index(&self, axis: usize, level: &str) -> Option<usize> {
        match &self.params[axis].kind {
            ParamKind::Categorical { levels } => levels.iter().position(|l| l == level),
            _ => None,
        }
    }

    /// Draws one value for axis `i` uniformly on its declared scale.
    pub fn sample_axis<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> ParamValue {
        let p = &self.params[i];
        match &p.kind {
            ParamKind::Continuous { lo, hi } => {
                let u: f64 = rng.random();
                ParamValue::Float(from_unit(u, *lo, *hi, p.scale))
            }
            ParamKind::Integer { lo, hi } => {
                if p.scale == Scale::Linear {
                    ParamValue::Int(rng.random_range(*lo..=*hi))
                } else {
                    // Sample continuous on the scale, round, reject out-of-bounds.
                    loop {
                        let u: f64 = rng.random();
                        let v = from_unit(u, *lo as f64, *hi as f64, p.scale).round();
                        let k = v as i64;
                        if k >= *lo && k <= *hi {
                            return ParamValue::Int(k);
                        }
                    }
                }
            }
            ParamKind::Categorical { levels } => ParamValue::Cat(rng.random_range(0..levels.len())),
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Config> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Config {
        let mut values = vec![ParamValue::Inactive; self.params.len()];
        for &i in &self.topo {
            if self.condition_met(&values, i) {
                values[i] = self.sample_axis(i, rng);
            }
        }
        Config { values }
    }

    /// Checks arity, activity consistency, and bounds/level membership.
    pub fn validate_config(&self, c: &Config) -> Result<(), SpaceError> {
        if c.values.len() != self.params.len() {
            return Err(SpaceError::Arity { expected: self.params.len(), got: c.values.len() });
        }
        for (i, p) in self.params.iter().enumerate() {
            let active = self.condition_met(&c.values, i);
            let v = c.values[i];
            if active != v.is_active() {
                return Err(SpaceError::BadValue(format!(
                    "{}: activity mismatch (condition {} but value {:?})",
                    p.name,
                    if active { "met" } else { "unmet" },
                    v
                )));
            }
            match (&p.kind, v) {
                (_, ParamValue::Inactive) => {}
                (ParamKind::Continuous { lo, hi }, ParamValue::Float(x)) => {
                    if !(x >= *lo && x <= *hi) {
                        return Err(SpaceError::BadValue(format!("{}: {} outside [{}, {}]", p.name, x, lo, hi)));
                    }
                }
                (ParamKind::Integer { lo, hi }, ParamValue::Int(x)) => {
                    if !(x >= *lo && x <= *hi) {
                        return Err(SpaceError::BadValue(format!("{}: {} outside [{}, {}]", p.name, x, lo, hi)));
                    }
                }
                (ParamKind::Categorical { levels }, ParamValue::Cat(l)) => {
                    if l >= levels.len() {
                        return Err(SpaceError::BadValue(format!("{}: level index {} out of range", p.name, l)));
                    }
                }
                _ => {
                    return Err(SpaceError::BadValue(format!("{}: value {:?} has the wrong kind", p.name, v)));
                }
            }
        }
        Ok(())
    }

    /// Maps a config to one f64 per axis; see module docs.
    pub fn encode(&self, c: &Config) -> Result<Vec<f64>, SpaceError> {
        self.validate_config(c)?;
        let mut out = Vec::with_capacity(self.params.len());
        for (i, p) in self.params.iter().enumerate() {
            out.push(match c.values[i] {
                ParamValue::Inactive => INACTIVE_CODE,
                v => self.encode_axis(i, v).ok_or_else(|| {
                    SpaceError::BadValue(format!("{}: cannot encode {:?}", p.name, v))
                })?,
            });
        }
        Ok(out)
    }

    /// Encoded [0,1] coordinate of an active value on axis `i`.
    pub fn encode_axis(&self, i: usize, v: ParamValue) -> Option<f64> {
        let p = &self.params[i];
        match (&p.kind, v) {
            (ParamKind::Continuous { lo, hi }, ParamValue::Float(x)) => Some(to_unit(x, *lo, *hi, p.scale)),
            (ParamKind::Integer { lo, hi }, ParamValue::Int(x)) => {
                Some(to_unit(x as f64, *lo as f64, *hi as f64, p.scale))
            }
            (ParamKind::Categorical { levels }, ParamValue::Cat(l)) => {
                let n = levels.len();
                Some(if n == 1 { 0.0 } else { l as f64 / (n - 1) as f64 })
            }
            _ => None,
        }
    }

    /// Decodes a [0,1] coordinate on axis `i` back to a value.
    pub fn decode_axis(&self, i: usize, u: f64) -> Result<ParamValue, SpaceError> {
        let p = &self.params[i];
        if !(-1e-9..=1.0 + 1e-9).contains(&u) {
            return Err(SpaceError::BadValue(format!("{}: encoded value {} outside [0,1]", p.name, u)));
        }
        let u = u.clamp(0.0, 1.0);
        Ok(match &p.kind {
            ParamKind::Continuous { lo, hi } => ParamValue::Float(from_unit(u, *lo, *hi, p.scale)),
            ParamKind::Integer { lo, hi } => {
                let v = from_unit(u, *lo as f64, *hi as f64, p.scale).round() as i64;
                ParamValue::Int(v.clamp(*lo, *hi))
            }
            ParamKind::Categorical { levels } => {
                let n = levels.len();
                let l = (u * (n - 1) as f64).round() as usize;
                ParamValue::Cat(l.min(n - 1))
            }
        })
    }

    /// Inverse of [`encode`](Self::encode). Exact on integer and categorical
    /// axes, within 1e−12 relative on continuous ones.
    pub fn decode(&self, v: &[f64]) -> Result<Config, SpaceError> {
        if v.len() != self.params.len() {
            return Err(SpaceError::Arity { expected: self.params.len(), got: v.len() });
        }
        let mut values = vec![ParamValue::Inactive; self.params.len()];
        for &i in &self.topo {
            let met = self.condition_met(&values, i);
            let sentinel = v[i] < -0.5;
            match (met, sentinel) {
                (false, true) => {}
                (true, true) => {
                    return Err(SpaceError::BadValue(format!(
                        "{}: sentinel on an active axis",
                        self.params[i].name
                    )))
                }
                (false, false) => {
                    return Err(SpaceError::BadValue(format!(
                        "{}: active code on an inactive axis",
                        self.params[i].name
                    )))
                }
                (true, false) => values[i] = self.decode_axis(i, v[i])?,
            }
        }
        Ok(Config { values })
    }

    /// Renders a config as `name=value` pairs in declaration order.
    pub fn display_config(&self, c: &Config) -> String {
        let mut out = String::new();
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            match (&p.kind, c.values[i]) {
                (_, ParamValue::Inactive) => {
                    let _ = write!(out, "{}=-", p.name);
                }
                (ParamKind::Categorical { levels }, ParamValue::Cat(l)) => {
                    let _ = write!(out, "{}={}", p.name, levels[l]);
                }
                (_, ParamValue::Int(v)) => {
                    let _ = write!(out, "{}={}", p.name, v);
                }
                (_, ParamValue::Float(v)) => {
                    let _ = write!(out, "{}={}", p.name, v);
                }
                _ => {
                    let _ = write!(out, "{}=?", p.name);
                }
            }
        }
        out
    }
}

fn check_scale_bounds(name: &str, lo: f64, scale: Scale) -> Result<(), SpaceError> {
    let ok = match scale {
        Scale::Linear => true,
        Scale::Log | Scale::Reciprocal => lo > 0.0,
        Scale::LogLog => lo > 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(SpaceError::BadDefinition(format!(
            "{}: scale {} requires lower bound {} {}",
            name,
            scale.token(),
            if scale == Scale::LogLog { ">" } else { ">" },
            if scale == Scale::LogLog { 1.0 } else { 0.0 }
        )))
    }
}

/// Maps `v ∈ [lo, hi]` to [0,1] under the scale transform.
pub fn to_unit(v: f64, lo: f64, hi: f64, scale: Scale) -> f64 {
    match scale {
        Scale::Linear => (v - lo) / (hi - lo),
        Scale::Log => (v.ln() - lo.ln()) / (hi.ln() - lo.ln()),
        Scale::LogLog => {
            let (a, b) = (lo.ln().ln(), hi.ln().ln());
            (v.ln().ln() - a) / (b - a)
        }
        Scale::Reciprocal => (1.0 / lo - 1.0 / v) / (1.0 / lo - 1.0 / hi),
    }
}

/// Inverse of [`to_unit`].
pub fn from_unit(u: f64, lo: f64, hi: f64, scale: Scale) -> f64 {
    match scale {
        Scale::Linear => lo + u * (hi - lo),
        Scale::Log => (lo.ln() + u * (hi.ln() - lo.ln())).exp(),
        Scale::LogLog => {
            let (a, b) = (lo.ln().ln(), hi.ln().ln());
            (a + u * (b - a)).exp().exp()
        }
        Scale::Reciprocal => 1.0 / (1.0 / lo - u * (1.0 / lo - 1.0 / hi)),
    }
}

/// Gower distance between encoded vectors: mean per-axis dissimilarity with
/// the sentinel rules from the module docs. `axes` may be longer than the
/// space dimension when extra numeric features (fidelity) are appended.
pub fn gower(axes: &[AxisInfo], a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), axes.len());
    debug_assert_eq!(b.len(), axes.len());
    let mut acc = 0.0;
    for (i, ax) in axes.iter().enumerate() {
        let (x, y) = (a[i], b[i]);
        let (xin, yin) = (x < -0.5, y < -0.5);
        acc += if xin && yin {
            0.0
        } else if xin || yin {
            1.0
        } else if ax.categorical {
            if x == y {
                0.0
            } else {
                1.0
            }
        } else {
            (x - y).abs()
        };
    }
    acc / axes.len() as f64
}

// --- text format ---------------------------------------------------------
//
// One parameter per line:
//   <name> real <lo>..<hi> [linear|log|loglog|reciprocal] [if <parent> in {v,...}]
//   <name> int  <lo>..<hi> [scale] [if ...]
//   <name> cat  {v1,v2,...} [if ...]
// Blank lines and `#` comments are ignored. See README for the grammar.

pub fn parse_space(text: &str) -> Result<ParamSpace, SpaceError> {
    let mut params = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let perr = |msg: String| SpaceError::Parse { line, msg };
        let stripped = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let toks: Vec<&str> = stripped.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() < 3 {
            return Err(perr("expected: <name> <kind> <domain> ...".into()));
        }
        let name = toks[0].to_string();
        let mut rest = &toks[3..];
        let (kind, mut scale) = match toks[1] {
            "real" => {
                let (lo, hi) = parse_range_f64(toks[2]).map_err(&perr)?;
                (ParamKind::Continuous { lo, hi }, Scale::Linear)
            }
            "int" => {
                let (lo, hi) = parse_range_i64(toks[2]).map_err(&perr)?;
                (ParamKind::Integer { lo, hi }, Scale::Linear)
            }
            "cat" => {
                let levels = parse_level_set(toks[2]).map_err(&perr)?;
                (ParamKind::Categorical { levels }, Scale::Linear)
            }
            other => return Err(perr(format!("unknown kind {:?} (expected real|int|cat)", other))),
        };
        if let Some(tok) = rest.first() {
            if let Some(s) = Scale::from_token(tok) {
                if matches!(kind, ParamKind::Categorical { .. }) {
                    return Err(perr("categorical parameters take no scale".into()));
                }
                scale = s;
                rest = &rest[1..];
            }
        }
        let condition = if rest.is_empty() {
            None
        } else {
            if rest.len() != 4 || rest[0] != "if" || rest[2] != "in" {
                return Err(perr("expected: if <parent> in {v,...}".into()));
            }
            let values = parse_level_set(rest[3]).map_err(&perr)?;
            Some(Condition { parent: rest[1].to_string(), values })
        };
        params.push(ParamDef { name, kind, scale, condition });
    }
    ParamSpace::new(params)
}

fn parse_range_f64(tok: &str) -> Result<(f64, f64), String> {
    let (a, b) = tok.split_once("..").ok_or_else(|| format!("bad range {:?} (expected lo..hi)", tok))?;
    let lo = a.parse::<f64>().map_err(|_| format!("bad number {:?}", a))?;
    let hi = b.parse::<f64>().map_err(|_| format!("bad number {:?}", b))?;
    Ok((lo, hi))
}

fn parse_range_i64(tok: &str) -> Result<(i64, i64), String> {
    let (a, b) = tok.split_once("..").ok_or_else(|| format!("bad range {:?} (expected lo..hi)", tok))?;
    let lo = a.parse::<i64>().map_err(|_| format!("bad integer {:?}", a))?;
    let hi = b.parse::<i64>().map_err(|_| format!("bad integer {:?}", b))?;
    Ok((lo, hi))
}

fn parse_level_set(tok: &str) -> Result<Vec<String>, String> {
    let inner = tok
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| format!("bad level set {:?} (expected {{a,b,...}})", tok))?;
    if inner.is_empty() {
        return Err("empty level set".into());
    }
    Ok(inner.split(',').map(|s| s.to_string()).collect())
}

/// Canonical text form; `parse_space(serialize_space(s))` reconstructs `s`.
pub fn serialize_space(space: &ParamSpace) -> String {
    let mut out = String::new();
    for p in space.params() {
        match &p.kind {
            ParamKind::Continuous { lo, hi } => {
                let _ = write!(out, "{} real {}..{} {}", p.name, lo, hi, p.scale.token());
            }
            ParamKind::Integer { lo, hi } => {
                let _ = write!(out, "{} int {}..{} {}", p.name, lo, hi, p.scale.token());
            }
            ParamKind::Categorical { levels } => {
                let _ = write!(out, "{} cat {{{}}}", p.name, levels.join(","));
            }
        }
        if let Some(c) = &p.condition {
            let _ = write!(out, " if {} in {{{}}}", c.parent, c.values.join(","));
        }
        out.push('\n');
    }
    out
}
