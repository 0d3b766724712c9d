//! Meta-optimization: tuning the optimizer's own configuration.
//!
//! The optimizer configuration is itself a point in a mixed search space, so
//! the machinery from [`crate::space`] is reused one level up. A
//! [`MetaSearchSpace`] maps a 17-parameter space (or a restricted variant of
//! it) onto [`OptimizerSpec`] values; [`meta_objective`] scores one candidate
//! configuration by running it over a training instance set;
//! [`tune`] searches the meta-space with either pure random sampling or a
//! forest-based lower-confidence-bound loop.
//!
//! Non-linear scales are handled by declaring the transformed quantity as
//! the axis: the batch size and the filter-rate endpoints live on log axes,
//! the fidelity ratio axis carries log(log(η_fid)), and the survival ratio
//! is parameterized by its reciprocal so that "no elimination" (η_surv = 1)
//! and "keep only the best" (η_surv → ∞) are both reachable.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::archive::{Archive, EvalRecord};
use crate::objectives::InstanceSet;
use crate::optimizer::{self, BatchMethod, OptError, OptimizerSpec, PLambda};
use crate::sampler::FilterMethod;
use crate::seed::{derive, rng_from};
use crate::space::{Config, ParamDef, ParamSpace, ParamValue, Scale, SpaceError};
use crate::surrogate::{self, SurrogateError, SurrogateKind};

#[derive(Debug, thiserror::Error)]
pub enum MetaError {
    #[error("variant {0} is produced by optimization, not by substitution")]
    NotASubstitution(&'static str),
    #[error("instance set {0:?} has no training instances")]
    EmptyTrain(String),
    #[error("need at least one meta-evaluation")]
    NoEvals,
    #[error("degenerate reference span on instance {0}")]
    DegenerateReference(usize),
    #[error(transparent)]
    Opt(#[from] OptError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error("malformed meta-archive line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

// --- restriction variants ----------------------------------------------------

/// Restricted configuration families. `GammaStar` is the unrestricted
/// 17-parameter space; the numbered variants pin or tie parameters.
/// `G1` and `G4`..`G7` are value substitutions into an already-tuned
/// configuration; `G2` and `G3` are re-optimized under equality ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    GammaStar,
    G1,
    G2,
    G3,
    G4,
    G5,
    G6,
    G7,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::GammaStar,
        Variant::G1,
        Variant::G2,
        Variant::G3,
        Variant::G4,
        Variant::G5,
        Variant::G6,
        Variant::G7,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Variant::GammaStar => "gamma-star",
            Variant::G1 => "g1",
            Variant::G2 => "g2",
            Variant::G3 => "g3",
            Variant::G4 => "g4",
            Variant::G5 => "g5",
            Variant::G6 => "g6",
            Variant::G7 => "g7",
        }
    }

    pub fn from_token(t: &str) -> Option<Variant> {
        Variant::ALL.iter().copied().find(|v| v.token() == t)
    }
}

/// A substitution product: a concrete configuration plus the budget factor
/// the experiment should apply when running it (the single-batch variant
/// with a fixed batch size is meant to be run with four times the budget).
#[derive(Debug, Clone, PartialEq)]
pub struct Substitution {
    pub label: String,
    pub spec: OptimizerSpec,
    pub budget_scale: f64,
}

/// Applies a substitution variant to a tuned configuration. `G4` expands to
/// one entry per surrogate learner; the other substitution variants yield a
/// single entry. `GammaStar` is the identity. Field edits are idempotent;
/// the budget factor is reported rather than baked into the spec.
pub fn substitute(base: &OptimizerSpec, variant: Variant) -> Result<Vec<Substitution>, MetaError> {
    let one = |label: &str, spec: OptimizerSpec, budget_scale: f64| {
        vec![Substitution { label: label.to_string(), spec, budget_scale }]
    };
    match variant {
        Variant::GammaStar => Ok(one("gamma-star", base.clone(), 1.0)),
        Variant::G1 => {
            let mut g = base.clone();
            g.eta_fid = f64::INFINITY;
            Ok(one("g1", g, 1.0))
        }
        Variant::G2 => Err(MetaError::NotASubstitution("g2")),
        Variant::G3 => Err(MetaError::NotASubstitution("g3")),
        Variant::G4 => {
            let kinds =
                [SurrogateKind::Knn1, SurrogateKind::Kknn7, SurrogateKind::Tpe, SurrogateKind::Rf];
            Ok(kinds
                .iter()
                .map(|&k| {
                    let mut g = base.clone();
                    g.batch_method = BatchMethod::Equal;
                    g.surrogate = k;
                    Substitution {
                        label: format!("g4-{}", k.token().to_lowercase()),
                        spec: g,
                        budget_scale: 1.0,
                    }
                })
                .collect())
        }
        Variant::G5 => {
            let mut g = base.clone();
            g.batch_method = BatchMethod::Equal;
            g.rho = (0.0, 0.0);
            Ok(one("g5", g, 1.0))
        }
        Variant::G6 => {
            let mut g = base.clone();
            g.batch_method = BatchMethod::Equal;
            g.rho = (0.0, 0.0);
            g.p_lambda = PLambda::Uniform;
            Ok(one("g6", g, 1.0))
        }
        Variant::G7 => {
            let mut g = base.clone();
            g.batch_method = BatchMethod::Equal;
            g.mu1 = 32;
            Ok(one("g7", g, 4.0))
        }
    }
}

// --- the meta search space ---------------------------------------------------

// Axis bounds for the transformed parameters.
fn loglog_eta_bounds() -> (f64, f64) {
    let ln2 = std::f64::consts::LN_2;
    ((0.25 * ln2).ln(), (4.0 * ln2).ln())
}
const INV_ETA_SURV_LO: f64 = 1e-6;

const BOOL_LEVELS: [&str; 2] = ["false", "true"];

/// The search space over optimizer configurations for one restriction
/// variant. Tied parameters share a single axis and pinned parameters have
/// no axis at all, so every sampled point satisfies its variant's
/// constraints by construction.
pub struct MetaSearchSpace {
    variant: Variant,
    space: ParamSpace,
}

impl MetaSearchSpace {
    pub fn new(variant: Variant) -> MetaSearchSpace {
        use Variant::*;
        let mut axes: Vec<ParamDef> = Vec::new();
        if variant != G7 {
            axes.push(ParamDef::integer("mu1", 2, 200, Scale::Log));
        }
        if matches!(variant, GammaStar | G1 | G2 | G3) {
            axes.push(ParamDef::categorical("batch_method", &["equal", "hb"]));
        }
        if variant != G1 {
            let (lo, hi) = loglog_eta_bounds();
            axes.push(ParamDef::continuous("loglog_eta_fid", lo, hi, Scale::Linear));
        }
        axes.push(ParamDef::continuous("inv_eta_surv", INV_ETA_SURV_LO, 1.0, Scale::Linear));
        if variant != G3 {
            axes.push(ParamDef::categorical("filter_method", &["tournament", "progressive"]));
        }
        if variant != G6 {
            axes.push(ParamDef::categorical("p_lambda", &["uniform", "kde"]));
        }
        axes.push(ParamDef::categorical("surrogate", &["KNN1", "KKNN7", "TPE", "RF"]));
        axes.push(ParamDef::categorical("filter_mb", &BOOL_LEVELS));
        axes.push(ParamDef::categorical("rho_random", &BOOL_LEVELS));
        match variant {
            G2 | G3 => axes.push(ParamDef::continuous("rho", 0.0, 1.0, Scale::Linear)),
            G5 | G6 => {}
            _ => {
                axes.push(ParamDef::continuous("rho_0", 0.0, 1.0, Scale::Linear));
                axes.push(ParamDef::continuous("rho_1", 0.0, 1.0, Scale::Linear));
            }
        }
        match variant {
            G3 => axes.push(ParamDef::continuous("ns", 1.0, 1000.0, Scale::Log)),
            G2 => {
                axes.push(ParamDef::continuous("ns0", 1.0, 1000.0, Scale::Log));
                axes.push(ParamDef::continuous("ns1", 1.0, 1000.0, Scale::Log));
            }
            _ => {
                for name in ["ns0_0", "ns0_1", "ns1_0", "ns1_1"] {
                    axes.push(ParamDef::continuous(name, 1.0, 1000.0, Scale::Log));
                }
            }
        }
        match variant {
            G3 => {}
            G2 => axes.push(ParamDef::integer("n_trn", 1, 10, Scale::Log)),
            _ => {
                axes.push(ParamDef::integer("n_trn_0", 1, 10, Scale::Log));
                axes.push(ParamDef::integer("n_trn_1", 1, 10, Scale::Log));
            }
        }
        let space = ParamSpace::new(axes).expect("static definition is valid");
        MetaSearchSpace { variant, space }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    /// Budget factor the experiment applies on top of its nominal budget.
    pub fn budget_scale(&self) -> f64 {
        if self.variant == Variant::G7 {
            4.0
        } else {
            1.0
        }
    }

    /// Maps a sampled point to a full configuration. `budget` and `r_min`
    /// are context the meta-space does not optimize; callers running on a
    /// scenario overwrite the budget per instance anyway.
    pub fn decode(&self, c: &Config, budget: f64, r_min: f64) -> Result<OptimizerSpec, MetaError> {
        self.space.validate_config(c)?;
        let mut g = OptimizerSpec::base(budget, r_min);
        for (i, p) in self.space.params().iter().enumerate() {
            let v = c.values[i];
            let fval = || v.as_f64().expect("numeric axis");
            let cat = |levels: &'static [&'static str]| -> &'static str {
                match v {
                    ParamValue::Cat(l) => levels[l],
                    _ => unreachable!("categorical axis"),
                }
            };
            match p.name.as_str() {
                "mu1" => g.mu1 = fval() as usize,
                "batch_method" => {
                    g.batch_method = if cat(&["equal", "hb"]) == "hb" {
                        BatchMethod::Hb
                    } else {
                        BatchMethod::Equal
                    }
                }
                "loglog_eta_fid" => g.eta_fid = fval().exp().exp(),
                "inv_eta_surv" => g.eta_surv = 1.0 / fval(),
                "filter_method" => {
                    g.filter_method = if cat(&["tournament", "progressive"]) == "progressive" {
                        FilterMethod::Progressive
                    } else {
                        FilterMethod::Tournament
                    }
                }
                "p_lambda" => {
                    g.p_lambda =
                        if cat(&["uniform", "kde"]) == "kde" { PLambda::Kde } else { PLambda::Uniform }
                }
                "surrogate" => {
                    g.surrogate = SurrogateKind::from_token(cat(&["KNN1", "KKNN7", "TPE", "RF"]))
                        .expect("axis levels are valid tokens")
                }
                "filter_mb" => g.filter_mb = cat(&BOOL_LEVELS) == "true",
                "rho_random" => g.rho_random = cat(&BOOL_LEVELS) == "true",
                "rho" => g.rho = (fval(), fval()),
                "rho_0" => g.rho.0 = fval(),
                "rho_1" => g.rho.1 = fval(),
                "ns" => {
                    let x = fval();
                    g.ns0 = (x, x);
                    g.ns1 = (x, x);
                }
                "ns0" => g.ns0 = (fval(), fval()),
                "ns1" => g.ns1 = (fval(), fval()),
                "ns0_0" => g.ns0.0 = fval(),
                "ns0_1" => g.ns0.1 = fval(),
                "ns1_0" => g.ns1.0 = fval(),
                "ns1_1" => g.ns1.1 = fval(),
                "n_trn" => {
                    let k = fval() as usize;
                    g.n_trn = (k, k);
                }
                "n_trn_0" => g.n_trn.0 = fval() as usize,
                "n_trn_1" => g.n_trn.1 = fval() as usize,
                other => unreachable!("unknown meta axis {other}"),
            }
        }
        match self.variant {
            Variant::G1 => g.eta_fid = f64::INFINITY,
            Variant::G3 => {
                g.filter_method = FilterMethod::Tournament;
                g.n_trn = (1, 1);
            }
            Variant::G4 => g.batch_method = BatchMethod::Equal,
            Variant::G5 => {
                g.batch_method = BatchMethod::Equal;
                g.rho = (0.0, 0.0);
            }
            Variant::G6 => {
                g.batch_method = BatchMethod::Equal;
                g.rho = (0.0, 0.0);
                g.p_lambda = PLambda::Uniform;
            }
            Variant::G7 => {
                g.batch_method = BatchMethod::Equal;
                g.mu1 = 32;
            }
            _ => {}
        }
        g.validate()?;
        Ok(g)
    }
}

// --- meta objective ----------------------------------------------------------

/// Root for the per-instance reference samples used to normalize costs.
/// Fixed so that normalization is a property of the instance, not of the
/// meta-evaluation seed.
const META_REF_ROOT: u64 = 0x6d65_7461;
const META_REF_EVALS: usize = 1000;

#[derive(Debug, Clone)]
pub struct MetaEvalResult {
    pub spec: OptimizerSpec,
    /// Normalized final cost per training instance, in training order.
    pub per_instance: Vec<f64>,
    /// Arithmetic mean of the per-instance values.
    pub aggregate: f64,
    pub wallclock_secs: f64,
}

/// Scores one configuration on the training split of `set`: each training
/// instance gets one run with budget `budget_mult · dimension`, the final
/// full-fidelity cost is normalized against that instance's reference
/// sample (0 = best known, 1 = median of uniform full-fidelity draws), and
/// the aggregate is the mean across instances. Pure in (spec, set,
/// budget_mult, seed); instance runs execute concurrently.
pub fn meta_objective(
    spec: &OptimizerSpec,
    set: &InstanceSet,
    budget_mult: f64,
    seed: u64,
) -> Result<MetaEvalResult, MetaError> {
    if set.train.is_empty() {
        return Err(MetaError::EmptyTrain(set.name.clone()));
    }
    let t0 = Instant::now();
    let per_instance: Vec<f64> = set
        .train
        .par_iter()
        .enumerate()
        .map(|(j, &idx)| -> Result<f64, MetaError> {
            let obj = set.instances[idx].as_ref();
            let d = obj.space().dimension();
            let mut g = spec.clone();
            g.budget = budget_mult * d as f64;
            let mut rng = rng_from(derive(seed, "meta-run", &[j as u64]));
            let archive = optimizer::run(&g, obj, &mut rng)?;
            let best = optimizer::final_best(&archive).expect("budget > 0 yields records").y;
            let (min_ref, med_ref) =
                analysis::reference_stats(obj, META_REF_EVALS, derive(META_REF_ROOT, "ref", &[idx as u64]));
            let regret = analysis::normalized_regret(best, min_ref, med_ref);
            if regret.is_nan() {
                return Err(MetaError::DegenerateReference(idx));
            }
            Ok(regret)
        })
        .collect::<Result<_, _>>()?;
    let aggregate = per_instance.iter().sum::<f64>() / per_instance.len() as f64;
    Ok(MetaEvalResult {
        spec: spec.clone(),
        per_instance,
        aggregate,
        wallclock_secs: t0.elapsed().as_secs_f64(),
    })
}

// --- search loop -------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneMethod {
    Random,
    BoLcb,
}

impl TuneMethod {
    pub fn token(self) -> &'static str {
        match self {
            TuneMethod::Random => "random",
            TuneMethod::BoLcb => "bo_lcb",
        }
    }

    pub fn from_token(t: &str) -> Option<TuneMethod> {
        match t {
            "random" => Some(TuneMethod::Random),
            "bo_lcb" => Some(TuneMethod::BoLcb),
            _ => None,
        }
    }
}

const LCB_KAPPA: f64 = 1.0;
const LCB_CANDIDATES: usize = 1000;

/// Generic sequential model-based search over an unconditional space.
/// `eval(k, point)` scores the k-th proposal; lower is better. Random mode
/// draws every point uniformly. LCB mode runs a uniform initial design of
/// min(2·dim+1, n/2) points, then proposes the minimizer of
/// mean − κ·spread under a bootstrapped forest over 1000 uniform
/// candidates, with every third post-design proposal drawn uniformly
/// instead. Returns the best point, its score, and the full trail.
pub fn search<F>(
    space: &ParamSpace,
    n: usize,
    method: TuneMethod,
    seed: u64,
    mut eval: F,
) -> Result<(Config, f64, Vec<(Config, f64)>), MetaError>
where
    F: FnMut(usize, &Config) -> Result<f64, MetaError>,
{
    if n == 0 {
        return Err(MetaError::NoEvals);
    }
    let mut rng = rng_from(derive(seed, "meta-propose", &[]));
    let n_init = match method {
        TuneMethod::Random => n,
        TuneMethod::BoLcb => (2 * space.dimension() + 1).min((n / 2).max(1)),
    };
    let mut trail: Vec<(Config, f64)> = Vec::with_capacity(n);
    for k in 0..n {
        let config = if k < n_init || (k - n_init) % 3 == 2 {
            space.sample_one(&mut rng)
        } else {
            propose_lcb(space, &trail, &mut rng)?
        };
        let y = eval(k, &config)?;
        trail.push((config, y));
    }
    let best = trail
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .expect("n >= 1");
    Ok((trail[best].0.clone(), trail[best].1, trail))
}

fn propose_lcb(
    space: &ParamSpace,
    trail: &[(Config, f64)],
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Config, MetaError> {
    let mut arch = Archive::new();
    for (i, (c, y)) in trail.iter().enumerate() {
        arch.append(EvalRecord {
            config: c.clone(),
            r: 1.0,
            y: *y,
            budget_at: i as f64,
            batch_id: i as u64,
            bracket_id: 0,
            stage_id: 0,
            seed_tag: 0,
        });
    }
    let model = surrogate::induce(SurrogateKind::Rf, space, &arch, true, rng)?;
    let mut best: Option<(f64, Config)> = None;
    for cand in space.sample_uniform(LCB_CANDIDATES, rng) {
        let x = space.encode(&cand)?;
        let (mean, spread) = model.predict_spread(&x, 1.0).expect("forest model");
        let lcb = mean - LCB_KAPPA * spread;
        if best.as_ref().is_none_or(|(b, _)| lcb < *b) {
            best = Some((lcb, cand));
        }
    }
    Ok(best.expect("candidate count > 0").1)
}

// --- tune --------------------------------------------------------------------

/// One scored meta-point: the sampled meta-space location, the decoded
/// configuration (canonical text), its per-instance normalized costs and
/// their mean.
#[derive(Debug, Clone)]
pub struct MetaEvalRow {
    pub config: Config,
    pub spec_text: String,
    pub per_instance: Vec<f64>,
    pub aggregate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MetaRowWire {
    spec: String,
    aggregate: f64,
    per_instance: Vec<f64>,
}

#[derive(Debug, Default)]
pub struct MetaArchive {
    pub rows: Vec<MetaEvalRow>,
}

impl MetaArchive {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in &self.rows {
            let wire = MetaRowWire {
                spec: row.spec_text.clone(),
                aggregate: row.aggregate,
                per_instance: row.per_instance.clone(),
            };
            let line = serde_json::to_string(&wire).expect("no non-finite aggregates");
            writeln!(w, "{}", line)?;
        }
        Ok(())
    }

    /// Parses the serialized form back into (spec text, aggregate,
    /// per-instance) triples. The meta-space location is not stored.
    pub fn read_jsonl(text: &str) -> Result<Vec<(String, f64, Vec<f64>)>, MetaError> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let wire: MetaRowWire = serde_json::from_str(line)
                .map_err(|e| MetaError::Malformed { line: i + 1, msg: e.to_string() })?;
            out.push((wire.spec, wire.aggregate, wire.per_instance));
        }
        Ok(out)
    }
}

/// Searches a restricted meta-space for the configuration with the best
/// aggregate on `set`'s training split. Returns the best configuration and
/// the full meta-archive. The effective per-instance budget is
/// `budget_mult · budget_scale() · dimension`.
pub fn tune(
    mspace: &MetaSearchSpace,
    set: &InstanceSet,
    budget_mult: f64,
    n_meta_evals: usize,
    method: TuneMethod,
    seed: u64,
) -> Result<(OptimizerSpec, MetaArchive), MetaError> {
    let eff_mult = budget_mult * mspace.budget_scale();
    let r_min = set
        .train
        .iter()
        .chain(set.test.iter())
        .map(|&i| set.instances[i].as_ref().r_min())
        .fold(f64::MIN, f64::max);
    let mut rows: Vec<MetaEvalRow> = Vec::with_capacity(n_meta_evals);
    let (best_config, _, _) = search(mspace.space(), n_meta_evals, method, seed, |k, config| {
        let spec = mspace.decode(config, 1.0, r_min)?;
        let res = meta_objective(&spec, set, eff_mult, derive(seed, "meta-eval", &[k as u64]))?;
        rows.push(MetaEvalRow {
            config: config.clone(),
            spec_text: optimizer::serialize_spec(&res.spec),
            per_instance: res.per_instance.clone(),
            aggregate: res.aggregate,
        });
        Ok(res.aggregate)
    })?;
    let best_spec = mspace.decode(&best_config, 1.0, r_min)?;
    Ok((best_spec, MetaArchive { rows }))
}

/// Formats the best row per variant as an aligned text table (the report
/// the tuning campaign ends with).
pub fn report_best(rows: &[(String, String, f64)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<14} {:>12}  spec", "variant", "aggregate");
    for (variant, spec_line, aggregate) in rows {
        let _ = writeln!(out, "{:<14} {:>12.6}  {}", variant, aggregate, spec_line);
    }
    out
}
