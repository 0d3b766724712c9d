//! The batched multifidelity main loop.
//!
//! A run repeatedly starts batches of configurations at a low fidelity and
//! walks them up the fidelity ladder r = η_fid^(b−s), …, 1, keeping the best
//! 1/η_surv fraction between stages. Bracket scheduling comes in two modes:
//! `equal` restarts every batch at the lowest rung and (optionally) refills
//! eliminated slots with fresh proposals, while `HB` rotates the starting
//! rung through all s brackets with per-bracket batch sizes balanced to spend
//! roughly equal budget. New proposals come from the sampler, whose
//! surrogate-filter parameters can vary over the life of the run.
//!
//! η_fid = ∞ is the degenerate single-stage schedule: every batch evaluates
//! straight at full fidelity and elimination never happens.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::archive::{Archive, EvalRecord};
use crate::objectives::Objective;
use crate::sampler::{self, FilterMethod, GeneratingDist, SampleSpec};
use crate::space::Config;
use crate::surrogate::{SurrogateKind, GOOD_FRACTION};

#[derive(Debug, Error)]
pub enum OptError {
    #[error("invalid optimizer spec: {0}")]
    BadSpec(String),
    #[error("spec line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("spec r_min {spec} is below the objective's minimum fidelity {obj}")]
    FidelityMismatch { spec: f64, obj: f64 },
    #[error("geometric interpolation needs positive endpoints, got {0} and {1}")]
    NonpositiveGeometric(f64, f64),
    #[error("select_top on an empty batch")]
    EmptyBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMethod {
    Equal,
    Hb,
}

impl BatchMethod {
    pub fn token(self) -> &'static str {
        match self {
            BatchMethod::Equal => "equal",
            BatchMethod::Hb => "HB",
        }
    }

    pub fn from_token(t: &str) -> Option<Self> {
        match t {
            "equal" => Some(BatchMethod::Equal),
            "HB" => Some(BatchMethod::Hb),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PLambda {
    Uniform,
    Kde,
}

impl PLambda {
    pub fn token(self) -> &'static str {
        match self {
            PLambda::Uniform => "uniform",
            PLambda::Kde => "KDE",
        }
    }

    pub fn from_token(t: &str) -> Option<Self> {
        match t {
            "uniform" => Some(PLambda::Uniform),
            "KDE" => Some(PLambda::Kde),
            _ => None,
        }
    }
}

/// Full configuration vector of one optimizer run. The paired fields are
/// (start, end) endpoints interpolated over the exhausted budget fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSpec {
    pub mu1: usize,
    pub batch_method: BatchMethod,
    /// Fidelity ladder ratio; `f64::INFINITY` encodes the single-stage
    /// schedule (every evaluation at r = 1).
    pub eta_fid: f64,
    /// Survival ratio: each elimination keeps ~|C|/η_surv members.
    pub eta_surv: f64,
    pub filter_method: FilterMethod,
    pub p_lambda: PLambda,
    pub surrogate: SurrogateKind,
    pub filter_mb: bool,
    pub rho_random: bool,
    pub rho: (f64, f64),
    pub ns0: (f64, f64),
    pub ns1: (f64, f64),
    pub n_trn: (usize, usize),
    /// Refill eliminated slots under `equal` batches (false gives plain
    /// successive halving).
    pub refill: bool,
    /// Total budget in units of full-fidelity evaluations.
    pub budget: f64,
    pub r_min: f64,
    /// Cost recorded when an objective evaluation fails.
    pub penalty: f64,
}

pub const MIN_ETA_FID: f64 = 1.189_207_115_002_721; // 2^(1/4)

impl OptimizerSpec {
    /// A neutral single-bracket baseline: unfiltered uniform proposals,
    /// η_surv = η_fid = 3. Callers override fields from here.
    pub fn base(budget: f64, r_min: f64) -> OptimizerSpec {
        OptimizerSpec {
            mu1: 32,
            batch_method: BatchMethod::Equal,
            eta_fid: 3.0,
            eta_surv: 3.0,
            filter_method: FilterMethod::Tournament,
            p_lambda: PLambda::Uniform,
            surrogate: SurrogateKind::Knn1,
            filter_mb: true,
            rho_random: true,
            rho: (1.0, 1.0),
            ns0: (64.0, 64.0),
            ns1: (64.0, 64.0),
            n_trn: (1, 1),
            refill: true,
            budget,
            r_min,
            penalty: 1e9,
        }
    }

    pub fn validate(&self) -> Result<(), OptError> {
        let bad = |msg: String| Err(OptError::BadSpec(msg));
        if self.mu1 < 2 {
            return bad(format!("mu1 must be >= 2, got {}", self.mu1));
        }
        if !(self.eta_fid.is_infinite() || self.eta_fid >= MIN_ETA_FID - 1e-12) {
            return bad(format!("eta_fid must be >= 2^(1/4) or inf, got {}", self.eta_fid));
        }
        if !(self.eta_surv >= 1.0) {
            return bad(format!("eta_surv must be >= 1, got {}", self.eta_surv));
        }
        for (name, v) in [("rho_0", self.rho.0), ("rho_1", self.rho.1)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{} must lie in [0,1], got {}", name, v));
            }
        }
        for (name, v) in
            [("ns0_0", self.ns0.0), ("ns0_1", self.ns0.1), ("ns1_0", self.ns1.0), ("ns1_1", self.ns1.1)]
        {
            if !(1.0..=1000.0).contains(&v) {
                return bad(format!("{} must lie in [1,1000], got {}", name, v));
            }
        }
        for (name, v) in [("n_trn_0", self.n_trn.0), ("n_trn_1", self.n_trn.1)] {
            if !(1..=10).contains(&v) {
                return bad(format!("{} must lie in 1..=10, got {}", name, v));
            }
        }
        if !(self.budget > 0.0) {
            return bad(format!("budget must be > 0, got {}", self.budget));
        }
        if !(self.r_min > 0.0 && self.r_min <= 1.0) {
            return bad(format!("r_min must lie in (0,1], got {}", self.r_min));
        }
        if !self.penalty.is_finite() {
            return bad(format!("penalty must be finite, got {}", self.penalty));
        }
        Ok(())
    }

    /// Sampler parameters materialized at budget fraction `t` for a space of
    /// dimension `dim`.
    pub fn sample_spec_at(&self, t: f64, dim: usize) -> SampleSpec {
        let t = t.clamp(0.0, 1.0);
        let geo = |v: (f64, f64)| interpolate_param(v.0, v.1, t, Interpolation::Geometric).expect("validated");
        let n_trn = interpolate_param(self.n_trn.0 as f64, self.n_trn.1 as f64, t, Interpolation::Geometric)
            .expect("validated");
        SampleSpec {
            filter_method: self.filter_method,
            rho: interpolate_param(self.rho.0, self.rho.1, t, Interpolation::Linear).expect("linear is total"),
            ns0: geo(self.ns0),
            ns1: geo(self.ns1),
            n_trn: ((n_trn + 0.5).floor() as usize).max(1),
            rho_random: self.rho_random,
            surrogate: self.surrogate,
            filter_mb: self.filter_mb,
            dist: match self.p_lambda {
                PLambda::Uniform => GeneratingDist::Uniform,
                PLambda::Kde => GeneratingDist::Kde { fraction: GOOD_FRACTION, min_good: dim + 1 },
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    Geometric,
}

/// Endpoint interpolation over the exhausted budget fraction: linear for ρ,
/// geometric for the sample-schedule endpoints.
pub fn interpolate_param(v0: f64, v1: f64, t: f64, mode: Interpolation) -> Result<f64, OptError> {
    debug_assert!((0.0..=1.0).contains(&t));
    match mode {
        Interpolation::Linear => Ok(v0 + t * (v1 - v0)),
        Interpolation::Geometric => {
            if v0 <= 0.0 || v1 <= 0.0 {
                return Err(OptError::NonpositiveGeometric(v0, v1));
            }
            Ok(v0.powf(1.0 - t) * v1.powf(t))
        }
    }
}

/// Number of fidelity rungs: ⌊−log_{η_fid}(r_min)⌋ + 1, with a small epsilon
/// so exact powers (r_min = η^−k) land on the intended rung count.
pub fn stage_count(eta_fid: f64, r_min: f64) -> usize {
    debug_assert!(r_min > 0.0 && r_min <= 1.0);
    if eta_fid.is_infinite() {
        return 1;
    }
    debug_assert!(eta_fid > 1.0);
    (-r_min.ln() / eta_fid.ln() + 1e-9).floor() as usize + 1
}

/// Per-bracket batch sizes μ(1..s). Bracket b spends
/// K(b) = Σ_{j=0}^{s−b} μ(b)·η_fid^{b−s+j}/η_surv^j in the continuous
/// relaxation; μ(b) is chosen so every bracket's K(b) matches bracket 1's,
/// rounded to the nearest integer (minimum 1). With η_surv = η_fid = η this
/// reproduces the classic ⌈s·η^{s−b}/(s−b+1)⌉ ladder up to rounding.
pub fn hb_batch_sizes(mu1: usize, s: usize, eta_surv: f64, eta_fid: f64) -> Vec<usize> {
    assert!(s >= 1 && mu1 >= 1);
    if s == 1 {
        return vec![mu1];
    }
    let cost_rate = |b: usize| -> f64 {
        (0..=(s - b)).map(|j| eta_fid.powi((b as i32 - s as i32) + j as i32) / eta_surv.powi(j as i32)).sum()
    };
    let target = mu1 as f64 * cost_rate(1);
    (1..=s)
        .map(|b| if b == 1 { mu1 } else { ((target / cost_rate(b) + 0.5).floor() as usize).max(1) })
        .collect()
}

/// Indices of the ⌊n/η_surv + 0.5⌋ (minimum 1) smallest costs, in their
/// original order; ties keep the earlier entry.
pub fn select_top_indices(costs: &[f64], eta_surv: f64) -> Result<Vec<usize>, OptError> {
    if costs.is_empty() {
        return Err(OptError::EmptyBatch);
    }
    let keep = (((costs.len() as f64 / eta_surv) + 0.5).floor() as usize).clamp(1, costs.len());
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].partial_cmp(&costs[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut kept: Vec<usize> = order.into_iter().take(keep).collect();
    kept.sort_unstable();
    Ok(kept)
}

struct Member {
    config: Config,
    last_y: f64,
}

/// Best full-fidelity record if any exists, otherwise best overall: the
/// record reported as a run's final answer.
pub fn final_best(archive: &Archive) -> Option<&EvalRecord> {
    archive.best(true).or_else(|| archive.best(false))
}

/// Executes one optimization run and returns the evaluation archive.
pub fn run<O: Objective + ?Sized>(
    spec: &OptimizerSpec,
    obj: &O,
    rng: &mut ChaCha8Rng,
) -> Result<Archive, OptError> {
    spec.validate()?;
    if spec.r_min < obj.r_min() - 1e-12 {
        return Err(OptError::FidelityMismatch { spec: spec.r_min, obj: obj.r_min() });
    }
    let space = obj.space();
    let dim = space.dimension();
    let s = stage_count(spec.eta_fid, spec.r_min);
    let mus = match spec.batch_method {
        BatchMethod::Hb => hb_batch_sizes(spec.mu1, s, spec.eta_surv, spec.eta_fid),
        BatchMethod::Equal => vec![spec.mu1; s],
    };

    let mut archive = Archive::new();
    let mut t = 0.0f64;
    let mut b: usize = 1;
    let mut exp: i32 = 0; // r = eta_fid^exp; exp == 0 means full fidelity
    let mut r: f64;
    let mut batch: Vec<Member> = Vec::new();
    let mut mu_b = spec.mu1;
    let mut batch_id: u64 = 0;
    let mut bracket_id: u64 = 1;
    let mut stage_id: u64 = 0;
    let mut started = false;

    while t < 1.0 {
        if exp == 0 || !started {
            // Start a new batch at the bracket's lowest rung.
            mu_b = mus[b - 1];
            exp = b as i32 - s as i32;
            r = spec.eta_fid.powi(exp);
            let sspec = spec.sample_spec_at(t, dim);
            batch = sampler::sample(&archive, mu_b, r, &sspec, space, rng)
                .into_iter()
                .map(|config| Member { config, last_y: f64::NAN })
                .collect();
            if started {
                batch_id += 1;
            }
            bracket_id = b as u64;
            stage_id = 0;
            started = true;
            b = match spec.batch_method {
                BatchMethod::Hb => (b % s) + 1,
                BatchMethod::Equal => 1,
            };
        } else {
            // Progress fidelity: eliminate, then (equal mode) refill.
            exp += 1;
            r = spec.eta_fid.powi(exp);
            let costs: Vec<f64> = batch.iter().map(|m| m.last_y).collect();
            let kept = select_top_indices(&costs, spec.eta_surv)?;
            let mut next: Vec<Member> = Vec::with_capacity(mu_b);
            for i in kept {
                next.push(Member { config: batch[i].config.clone(), last_y: batch[i].last_y });
            }
            if spec.batch_method == BatchMethod::Equal && spec.refill && next.len() < mu_b {
                let need = mu_b - next.len();
                let sspec = spec.sample_spec_at(t, dim);
                for config in sampler::sample(&archive, need, r, &sspec, space, rng) {
                    next.push(Member { config, last_y: f64::NAN });
                }
            }
            batch = next;
            stage_id += 1;
        }

        for m in &mut batch {
            let seed_tag: u64 = rng.random();
            let raw = obj.evaluate(&m.config, r, seed_tag);
            let y = if raw.is_finite() { raw } else { spec.penalty };
            archive.append(EvalRecord {
                config: m.config.clone(),
                r,
                y,
                budget_at: t,
                batch_id,
                bracket_id,
                stage_id,
                seed_tag,
            });
            m.last_y = y;
        }
        t += r * batch.len() as f64 / spec.budget;
    }
    Ok(archive)
}

// --- spec file format -----------------------------------------------------
//
// One `key = value` per line; `#` starts a comment. Keys are the parameter
// names listed in the README; omitted keys take the `base` defaults, and
// budget/r_min fall back to the values supplied by the caller's context.

const SPEC_KEYS: [&str; 21] = [
    "mu1", "batch_method", "eta_fid", "eta_surv", "filter_method", "p_lambda", "surrogate", "filter_mb",
    "rho_random", "rho_0", "rho_1", "ns0_0", "ns0_1", "ns1_0", "ns1_1", "n_trn_0", "n_trn_1", "refill",
    "budget", "r_min", "penalty",
];

/// Parses a spec file; `budget` and `r_min` are the contextual defaults used
/// when the file does not pin them itself.
pub fn parse_spec(text: &str, budget: f64, r_min: f64) -> Result<OptimizerSpec, OptError> {
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let stripped = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        if stripped.trim().is_empty() {
            continue;
        }
        let Some((k, v)) = stripped.split_once('=') else {
            return Err(OptError::Parse { line, msg: "expected key = value".into() });
        };
        let key = k.trim().to_string();
        if !SPEC_KEYS.contains(&key.as_str()) {
            return Err(OptError::Parse { line, msg: format!("unknown key {:?}", key) });
        }
        if kv.insert(key.clone(), (line, v.trim().to_string())).is_some() {
            return Err(OptError::Parse { line, msg: format!("duplicate key {:?}", key) });
        }
    }
    let mut spec = OptimizerSpec::base(budget, r_min);
    for (key, (line, val)) in &kv {
        let perr = |msg: String| OptError::Parse { line: *line, msg };
        let f = |v: &str| v.parse::<f64>().map_err(|_| perr(format!("bad number {:?}", v)));
        let u = |v: &str| v.parse::<usize>().map_err(|_| perr(format!("bad integer {:?}", v)));
        let flag = |v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(perr(format!("bad flag {:?} (expected true|false)", v))),
        };
        match key.as_str() {
            "mu1" => spec.mu1 = u(val)?,
            "batch_method" => {
                spec.batch_method =
                    BatchMethod::from_token(val).ok_or_else(|| perr(format!("bad batch_method {:?}", val)))?
            }
            "eta_fid" => spec.eta_fid = if val == "inf" { f64::INFINITY } else { f(val)? },
            "eta_surv" => spec.eta_surv = f(val)?,
            "filter_method" => {
                spec.filter_method = match val.as_str() {
                    "tournament" => FilterMethod::Tournament,
                    "progressive" => FilterMethod::Progressive,
                    _ => return Err(perr(format!("bad filter_method {:?}", val))),
                }
            }
            "p_lambda" => {
                spec.p_lambda = PLambda::from_token(val).ok_or_else(|| perr(format!("bad p_lambda {:?}", val)))?
            }
            "surrogate" => {
                spec.surrogate =
                    SurrogateKind::from_token(val).ok_or_else(|| perr(format!("bad surrogate {:?}", val)))?
            }
            "filter_mb" => spec.filter_mb = flag(val)?,
            "rho_random" => spec.rho_random = flag(val)?,
            "rho_0" => spec.rho.0 = f(val)?,
            "rho_1" => spec.rho.1 = f(val)?,
            "ns0_0" => spec.ns0.0 = f(val)?,
            "ns0_1" => spec.ns0.1 = f(val)?,
            "ns1_0" => spec.ns1.0 = f(val)?,
            "ns1_1" => spec.ns1.1 = f(val)?,
            "n_trn_0" => spec.n_trn.0 = u(val)?,
            "n_trn_1" => spec.n_trn.1 = u(val)?,
            "refill" => spec.refill = flag(val)?,
            "budget" => spec.budget = f(val)?,
            "r_min" => spec.r_min = f(val)?,
            "penalty" => spec.penalty = f(val)?,
            _ => unreachable!("key whitelist checked above"),
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Canonical text form; `parse_spec(serialize_spec(s), _, _)` reconstructs s.
pub fn serialize_spec(spec: &OptimizerSpec) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{} = {}", k, v);
    };
    kv("mu1", spec.mu1.to_string());
    kv("batch_method", spec.batch_method.token().into());
    kv("eta_fid", if spec.eta_fid.is_infinite() { "inf".into() } else { format!("{}", spec.eta_fid) });
    kv("eta_surv", format!("{}", spec.eta_surv));
    kv(
        "filter_method",
        match spec.filter_method {
            FilterMethod::Tournament => "tournament".into(),
            FilterMethod::Progressive => "progressive".into(),
        },
    );
    kv("p_lambda", spec.p_lambda.token().into());
    kv("surrogate", spec.surrogate.token().into());
    kv("filter_mb", spec.filter_mb.to_string());
    kv("rho_random", spec.rho_random.to_string());
    kv("rho_0", format!("{}", spec.rho.0));
    kv("rho_1", format!("{}", spec.rho.1));
    kv("ns0_0", format!("{}", spec.ns0.0));
    kv("ns0_1", format!("{}", spec.ns0.1));
    kv("ns1_0", format!("{}", spec.ns1.0));
    kv("ns1_1", format!("{}", spec.ns1.1));
    kv("n_trn_0", spec.n_trn.0.to_string());
    kv("n_trn_1", spec.n_trn.1.to_string());
    kv("refill", spec.refill.to_string());
    kv("budget", format!("{}", spec.budget));
    kv("r_min", format!("{}", spec.r_min));
    kv("penalty", format!("{}", spec.penalty));
    out
}
