//! Synthetic multifidelity objectives used by the benchmark harness.
//!
//! Three scenario families cover the structural regimes the optimizer is
//! meant to handle: a small rotated numeric problem, a large hierarchical
//! mixed space gated by a selector parameter, and a purely categorical table
//! landscape. All share one fidelity model: the cost at fidelity r is the
//! true cost plus a pessimistic bias term scaled by (1 − r) plus zero-mean
//! Gaussian noise with σ(r) = σ₀·√((1 − r)/r), so both distortions vanish at
//! r = 1. Instances of one family share the search space and differ only in
//! seeded shifts, rotations and value tables.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::seed::{derive, rng_from};
use crate::space::{Config, ParamDef, ParamKind, ParamSpace, ParamValue, Scale};

/// Lowest fidelity any scenario instance accepts.
pub const SCENARIO_R_MIN: f64 = 1.0 / 32.0;
/// Noise level at r = 1/2; the scale grows like √((1−r)/r) below that.
pub const DEFAULT_SIGMA0: f64 = 0.03;

/// A minimization problem with a fidelity knob.
///
/// `evaluate` must be a pure function of (config, r, seed) and finite for
/// every valid input; implementations panic on out-of-range fidelities or
/// configs that do not belong to `space`.
pub trait Objective: Send + Sync {
    fn space(&self) -> &ParamSpace;
    fn r_min(&self) -> f64;
    fn evaluate(&self, c: &Config, r: f64, seed: u64) -> f64;
    fn known_optimum(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("scenario {name} needs at least {need} instances, got {got}")]
    TooFewInstances { name: String, need: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Numeric7,
    MixedHier,
    Categorical,
}

impl ScenarioKind {
    pub fn token(self) -> &'static str {
        match self {
            ScenarioKind::Numeric7 => "numeric7",
            ScenarioKind::MixedHier => "mixed-hier",
            ScenarioKind::Categorical => "categorical",
        }
    }

    pub fn from_token(t: &str) -> Option<Self> {
        match t {
            "numeric7" => Some(ScenarioKind::Numeric7),
            "mixed-hier" => Some(ScenarioKind::MixedHier),
            "categorical" => Some(ScenarioKind::Categorical),
            _ => None,
        }
    }

    /// Instance count used when the caller does not pick one.
    pub fn default_instances(self) -> usize {
        match self {
            ScenarioKind::Numeric7 => 10,
            ScenarioKind::MixedHier => 12,
            ScenarioKind::Categorical => 1,
        }
    }
}

/// A named family of objective instances with a train/test split. The
/// categorical family is test-only; the others put min(8, ⌊0.8·n⌋) instances
/// into the training half.
pub struct InstanceSet {
    pub name: String,
    pub instances: Vec<Box<dyn Objective>>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn make_scenario(kind: ScenarioKind, n_instances: usize, master_seed: u64) -> Result<InstanceSet, ObjError> {
    let splittable = !matches!(kind, ScenarioKind::Categorical);
    let need = if splittable { 2 } else { 1 };
    if n_instances < need {
        return Err(ObjError::TooFewInstances { name: kind.token().into(), need, got: n_instances });
    }
    let instances: Vec<Box<dyn Objective>> = (0..n_instances)
        .map(|k| {
            let seed = derive(master_seed, "inst", &[k as u64]);
            match kind {
                ScenarioKind::Numeric7 => Box::new(Numeric7::new(seed, DEFAULT_SIGMA0)) as Box<dyn Objective>,
                ScenarioKind::MixedHier => Box::new(MixedHier::new(seed, DEFAULT_SIGMA0)),
                ScenarioKind::Categorical => Box::new(CatTable::new(seed, DEFAULT_SIGMA0)),
            }
        })
        .collect();
    let (train, test) = if splittable {
        let k = (((0.8 * n_instances as f64).floor() as usize).min(8)).max(1);
        ((0..k).collect(), (k..n_instances).collect())
    } else {
        (Vec::new(), (0..n_instances).collect())
    };
    Ok(InstanceSet { name: kind.token().into(), instances, train, test })
}

fn check_fidelity(r_min: f64, r: f64) {
    assert!(r >= r_min - 1e-12 && r <= 1.0 + 1e-12, "fidelity {} outside [{}, 1]", r, r_min);
}

/// Zero-mean Gaussian noise with σ(r) = σ₀·√((1−r)/r), derived
/// deterministically from the evaluation seed, the config identity and the
/// fidelity, so repeated evaluations of the same triple agree bit-for-bit.
fn fidelity_noise(sigma0: f64, r: f64, seed: u64, c: &Config) -> f64 {
    let sigma = sigma0 * ((1.0 - r) / r).max(0.0).sqrt();
    if sigma == 0.0 {
        return 0.0;
    }
    let mut key = c.identity_key();
    key.push(r.to_bits());
    let mut rng = rng_from(derive(seed, "noise", &key));
    let n: f64 = StandardNormal.sample(&mut rng);
    sigma * n
}

// --- numeric7 ---------------------------------------------------------------

const NUM_COS_WEIGHT: f64 = 1.0;
const NUM_BIAS_WEIGHT: f64 = 0.15;

/// 7-D continuous problem on [−5,5]⁷: a shifted, rotated quadratic bowl plus
/// a cosine ripple (so it is multimodal but has a unique known global
/// minimum at the shift point). The low-fidelity bias is a second quadratic
/// centered near, but not at, the optimum.
pub struct Numeric7 {
    space: ParamSpace,
    shift: [f64; 7],
    rot: [[f64; 7]; 7],
    bias_shift: [f64; 7],
    base: f64,
    sigma0: f64,
}

impl Numeric7 {
    pub fn new(seed: u64, sigma0: f64) -> Numeric7 {
        let space = ParamSpace::new(
            (1..=7).map(|i| ParamDef::continuous(&format!("x{}", i), -5.0, 5.0, Scale::Linear)).collect(),
        )
        .expect("static definition is valid");
        let mut rng = rng_from(seed);
        let mut shift = [0.0; 7];
        for v in &mut shift {
            *v = rng.random_range(-2.0..2.0);
        }
        let mut rot = [[0.0; 7]; 7];
        for (i, row) in rot.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for i in 0..7 {
            for j in (i + 1)..7 {
                let theta: f64 = rng.random_range(0.0..TAU);
                let (sin, cos) = theta.sin_cos();
                for k in 0..7 {
                    let a = rot[i][k];
                    let b = rot[j][k];
                    rot[i][k] = cos * a - sin * b;
                    rot[j][k] = sin * a + cos * b;
                }
            }
        }
        let mut bias_shift = [0.0; 7];
        for v in &mut bias_shift {
            *v = rng.random_range(-0.5..0.5);
        }
        let base = rng.random_range(0.0..10.0);
        Numeric7 { space, shift, rot, bias_shift, base, sigma0 }
    }

    /// The global minimizer (cost there equals `known_optimum`).
    pub fn optimum_config(&self) -> Config {
        Config { values: self.shift.iter().map(|&v| ParamValue::Float(v)).collect() }
    }
}

impl Objective for Numeric7 {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn r_min(&self) -> f64 {
        SCENARIO_R_MIN
    }

    fn evaluate(&self, c: &Config, r: f64, seed: u64) -> f64 {
        check_fidelity(self.r_min(), r);
        debug_assert!(self.space.validate_config(c).is_ok());
        let mut z = [0.0; 7];
        for i in 0..7 {
            let mut acc = 0.0;
            for k in 0..7 {
                acc += self.rot[i][k] * (c.values[k].as_f64().expect("numeric axis") - self.shift[k]);
            }
            z[i] = acc;
        }
        let quad = z.iter().map(|v| v * v).sum::<f64>() / 7.0;
        let ripple = z.iter().map(|v| 1.0 - (TAU * v).cos()).sum::<f64>() / 7.0;
        let f = self.base + quad + NUM_COS_WEIGHT * ripple;
        let bias =
            NUM_BIAS_WEIGHT * z.iter().zip(&self.bias_shift).map(|(v, b)| (v - b) * (v - b)).sum::<f64>() / 7.0;
        f + (1.0 - r) * bias + fidelity_noise(self.sigma0, r, seed, c)
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(self.base)
    }
}

// --- mixed-hier -------------------------------------------------------------

const HIER_CONT: [usize; 6] = [4, 4, 4, 3, 3, 2];
const HIER_INT: [usize; 6] = [2, 2, 2, 2, 2, 1];
const HIER_MODELS: [&str; 6] = ["m1", "m2", "m3", "m4", "m5", "m6"];
const HIER_CHOICE: [&str; 4] = ["p", "q", "r", "s"];
const HIER_BIAS_WEIGHT: f64 = 0.5;

fn hier_space() -> ParamSpace {
    let mut defs = vec![ParamDef::categorical("model", &HIER_MODELS)];
    for (b, &m) in HIER_MODELS.iter().enumerate() {
        for k in 1..=HIER_CONT[b] {
            let name = format!("{}_c{}", m, k);
            let def = if k % 2 == 1 {
                ParamDef::continuous(&name, -1.0, 1.0, Scale::Linear)
            } else {
                ParamDef::continuous(&name, 1e-3, 1e3, Scale::Log)
            };
            defs.push(def.when("model", &[m]));
        }
        for k in 1..=HIER_INT[b] {
            let name = format!("{}_i{}", m, k);
            let def = if k % 2 == 1 {
                ParamDef::integer(&name, 0, 32, Scale::Linear)
            } else {
                ParamDef::integer(&name, 1, 64, Scale::Log)
            };
            defs.push(def.when("model", &[m]));
        }
        defs.push(ParamDef::categorical(&format!("{}_choice", m), &HIER_CHOICE).when("model", &[m]));
    }
    ParamSpace::new(defs).expect("static definition is valid")
}

struct HierBlock {
    numeric_axes: Vec<usize>,
    targets: Vec<f64>,
    bias_targets: Vec<f64>,
    cat_axis: usize,
    cat_table: Vec<f64>,
    offset: f64,
    bias_offset: f64,
}

/// 38-D hierarchical problem: a 6-level selector activates one of six
/// disjoint child blocks (20 continuous, 11 integer and 6 categorical
/// children in total). Cost is a per-block offset plus a quadratic around a
/// block-specific target in encoded unit space plus a table term for the
/// block's categorical child; only active parameters enter the cost.
pub struct MixedHier {
    space: ParamSpace,
    selector: usize,
    blocks: Vec<HierBlock>,
    base: f64,
    sigma0: f64,
    optimum: f64,
}

fn numeric_axis_min(space: &ParamSpace, axis: usize, target: f64) -> f64 {
    match space.params()[axis].kind {
        ParamKind::Continuous { .. } => 0.0,
        ParamKind::Integer { lo, hi } => {
            let mut best = f64::INFINITY;
            for v in lo..=hi {
                let u = space.encode_axis(axis, ParamValue::Int(v)).expect("level in range");
                best = best.min((u - target) * (u - target));
            }
            best
        }
        ParamKind::Categorical { .. } => unreachable!("numeric axes only"),
    }
}

impl MixedHier {
    pub fn new(seed: u64, sigma0: f64) -> MixedHier {
        let space = hier_space();
        let selector = space.index_of("model").expect("selector exists");
        let mut rng = rng_from(seed);
        let mut blocks = Vec::with_capacity(6);
        for (b, &m) in HIER_MODELS.iter().enumerate() {
            let mut numeric_axes = Vec::new();
            for k in 1..=HIER_CONT[b] {
                numeric_axes.push(space.index_of(&format!("{}_c{}", m, k)).expect("child exists"));
            }
            for k in 1..=HIER_INT[b] {
                numeric_axes.push(space.index_of(&format!("{}_i{}", m, k)).expect("child exists"));
            }
            let cat_axis = space.index_of(&format!("{}_choice", m)).expect("child exists");
            let targets: Vec<f64> = numeric_axes.iter().map(|_| rng.random_range(0.1..0.9)).collect();
            let bias_targets: Vec<f64> =
                targets.iter().map(|t| (t + rng.random_range(-0.3..0.3)).clamp(0.0, 1.0)).collect();
            let cat_table: Vec<f64> = HIER_CHOICE.iter().map(|_| rng.random_range(0.0..1.0)).collect();
            let offset = rng.random_range(0.0..2.0);
            let bias_offset = rng.random_range(0.0..1.0);
            blocks.push(HierBlock { numeric_axes, targets, bias_targets, cat_axis, cat_table, offset, bias_offset });
        }
        let base = rng.random_range(0.0..5.0);
        let optimum = base
            + blocks
                .iter()
                .map(|blk| {
                    let numeric: f64 = blk
                        .numeric_axes
                        .iter()
                        .zip(&blk.targets)
                        .map(|(&axis, &t)| numeric_axis_min(&space, axis, t))
                        .sum();
                    let cat = blk.cat_table.iter().cloned().fold(f64::INFINITY, f64::min);
                    blk.offset + numeric + cat
                })
                .fold(f64::INFINITY, f64::min);
        MixedHier { space, selector, blocks, base, sigma0, optimum }
    }
}

impl Objective for MixedHier {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn r_min(&self) -> f64 {
        SCENARIO_R_MIN
    }

    fn evaluate(&self, c: &Config, r: f64, seed: u64) -> f64 {
        check_fidelity(self.r_min(), r);
        let u = self.space.encode(c).expect("config must be valid for this space");
        let sel = match c.values[self.selector] {
            ParamValue::Cat(l) => l,
            _ => panic!("selector must be active"),
        };
        let blk = &self.blocks[sel];
        let mut quad = 0.0;
        let mut bias_quad = 0.0;
        for (j, &axis) in blk.numeric_axes.iter().enumerate() {
            let d = u[axis] - blk.targets[j];
            quad += d * d;
            let db = u[axis] - blk.bias_targets[j];
            bias_quad += db * db;
        }
        let lev = match c.values[blk.cat_axis] {
            ParamValue::Cat(l) => l,
            _ => panic!("block choice must be active"),
        };
        let f = self.base + blk.offset + quad + blk.cat_table[lev];
        let bias = HIER_BIAS_WEIGHT * (blk.bias_offset + bias_quad);
        f + (1.0 - r) * bias + fidelity_noise(self.sigma0, r, seed, c)
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(self.optimum)
    }
}

// --- categorical ------------------------------------------------------------

const CAT_AXES: usize = 34;
const CAT_ROOTS: usize = 10;
const CAT_PAIRS: usize = 20;
const CAT_BIAS_WEIGHT: f64 = 0.2;

/// Level count of 1-based axis i; a fixed 2/3/4 pattern.
fn cat_level_count(i: usize) -> usize {
    2 + ((i * 5 + 2) % 3)
}

fn cat_space() -> ParamSpace {
    let mut defs = Vec::with_capacity(CAT_AXES);
    for i in 1..=CAT_AXES {
        let levels: Vec<String> = (0..cat_level_count(i)).map(|k| format!("v{}", k)).collect();
        let level_refs: Vec<&str> = levels.iter().map(|s| s.as_str()).collect();
        let mut def = ParamDef::categorical(&format!("c{:02}", i), &level_refs);
        if i > CAT_ROOTS {
            let p = ((i * 7 + 3) % CAT_ROOTS) + 1;
            let lp = cat_level_count(p);
            let k = 1 + ((i * 3 + p) % (lp - 1));
            let start = (i + p) % lp;
            let subset: Vec<String> = (0..k).map(|j| format!("v{}", (start + j) % lp)).collect();
            let subset_refs: Vec<&str> = subset.iter().map(|s| s.as_str()).collect();
            def = def.when(&format!("c{:02}", p), &subset_refs);
        }
        defs.push(def);
    }
    ParamSpace::new(defs).expect("static definition is valid")
}

/// 34 categorical axes, 24 of them gated by a root-axis condition. Cost sums
/// a seeded per-level table over the active axes plus seeded interaction
/// tables over 20 fixed axis pairs (counted only when both ends are active).
pub struct CatTable {
    space: ParamSpace,
    levels_per_axis: Vec<usize>,
    main: Vec<Vec<f64>>,
    bias_tab: Vec<Vec<f64>>,
    pairs: Vec<(usize, usize, Vec<f64>)>,
    base: f64,
    sigma0: f64,
}

impl CatTable {
    pub fn new(seed: u64, sigma0: f64) -> CatTable {
        let space = cat_space();
        let levels_per_axis: Vec<usize> = space.axis_info().iter().map(|a| a.levels).collect();
        let mut rng = rng_from(seed);
        let main: Vec<Vec<f64>> =
            levels_per_axis.iter().map(|&l| (0..l).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let bias_tab: Vec<Vec<f64>> =
            levels_per_axis.iter().map(|&l| (0..l).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let base = rng.random_range(0.0..2.0);
        let mut seen = BTreeSet::new();
        let mut pairs = Vec::with_capacity(CAT_PAIRS);
        while pairs.len() < CAT_PAIRS {
            let a = rng.random_range(0..CAT_AXES);
            let b = rng.random_range(0..CAT_AXES);
            let (i, j) = (a.min(b), a.max(b));
            if i == j || !seen.insert((i, j)) {
                continue;
            }
            let w: Vec<f64> =
                (0..levels_per_axis[i] * levels_per_axis[j]).map(|_| rng.random_range(0.0..1.0)).collect();
            pairs.push((i, j, w));
        }
        CatTable { space, levels_per_axis, main, bias_tab, pairs, base, sigma0 }
    }
}

impl Objective for CatTable {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn r_min(&self) -> f64 {
        SCENARIO_R_MIN
    }

    fn evaluate(&self, c: &Config, r: f64, seed: u64) -> f64 {
        check_fidelity(self.r_min(), r);
        debug_assert!(self.space.validate_config(c).is_ok());
        let levels: Vec<Option<usize>> = c
            .values
            .iter()
            .map(|v| match v {
                ParamValue::Cat(l) => Some(*l),
                ParamValue::Inactive => None,
                _ => panic!("categorical axes only"),
            })
            .collect();
        let mut f = self.base;
        let mut bias = 0.0;
        for (i, lev) in levels.iter().enumerate() {
            if let Some(l) = lev {
                f += self.main[i][*l];
                bias += self.bias_tab[i][*l];
            }
        }
        for (i, j, w) in &self.pairs {
            if let (Some(a), Some(b)) = (levels[*i], levels[*j]) {
                f += w[a * self.levels_per_axis[*j] + b];
            }
        }
        f + (1.0 - r) * CAT_BIAS_WEIGHT * bias + fidelity_noise(self.sigma0, r, seed, c)
    }
}
