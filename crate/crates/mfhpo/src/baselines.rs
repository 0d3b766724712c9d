//! Named optimizer presets.
//!
//! The four classic algorithms are plain configurations of the one main
//! loop: random search with batched full-fidelity evaluations, successive
//! halving as a single non-refilling bracket, the bracket-rotating ladder
//! schedule, and its model-based variant that swaps the generating
//! distribution for a KDE over the good archive split, filters through a
//! density-ratio surrogate and interleaves one third random draws.

use crate::optimizer::{stage_count, BatchMethod, OptimizerSpec, PLambda};
use crate::sampler::FilterMethod;
use crate::surrogate::SurrogateKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Rs,
    Sh,
    Hb,
    Bohb,
}

impl PresetName {
    pub fn token(self) -> &'static str {
        match self {
            PresetName::Rs => "RS",
            PresetName::Sh => "SH",
            PresetName::Hb => "HB",
            PresetName::Bohb => "BOHB",
        }
    }

    pub fn from_token(t: &str) -> Option<Self> {
        match t {
            "RS" => Some(PresetName::Rs),
            "SH" => Some(PresetName::Sh),
            "HB" => Some(PresetName::Hb),
            "BOHB" => Some(PresetName::Bohb),
            _ => None,
        }
    }

    pub const ALL: [PresetName; 4] = [PresetName::Rs, PresetName::Sh, PresetName::Hb, PresetName::Bohb];
}

/// The batch size that makes the ladder presets spend their first bracket
/// like the textbook schedule (⌈η^{s−1}⌉, one survivor at full fidelity);
/// the single-stage presets default to 32.
pub fn canonical_mu1(name: PresetName, eta: f64, r_min: f64) -> usize {
    match name {
        PresetName::Rs => 32,
        PresetName::Sh | PresetName::Hb | PresetName::Bohb => {
            let s = stage_count(eta, r_min);
            (eta.powi(s as i32 - 1).ceil() as usize).max(2)
        }
    }
}

/// Builds the named preset. All presets share the tournament filter with
/// n_trn = 1, randomized interleave counts and max-budget surrogate
/// filtering, so rows differ only in the fields that define them.
pub fn preset(name: PresetName, eta: f64, r_min: f64, mu1: usize, budget: f64) -> OptimizerSpec {
    let mut spec = OptimizerSpec {
        mu1,
        eta_surv: eta,
        eta_fid: eta,
        filter_method: FilterMethod::Tournament,
        n_trn: (1, 1),
        rho_random: true,
        filter_mb: true,
        rho: (1.0, 1.0),
        ..OptimizerSpec::base(budget, r_min)
    };
    match name {
        PresetName::Rs => {
            spec.eta_fid = f64::INFINITY;
            spec.batch_method = BatchMethod::Equal;
            spec.p_lambda = PLambda::Uniform;
        }
        PresetName::Sh => {
            spec.batch_method = BatchMethod::Equal;
            spec.refill = false;
            spec.p_lambda = PLambda::Uniform;
        }
        PresetName::Hb => {
            spec.batch_method = BatchMethod::Hb;
            spec.p_lambda = PLambda::Uniform;
        }
        PresetName::Bohb => {
            spec.batch_method = BatchMethod::Hb;
            spec.p_lambda = PLambda::Kde;
            spec.surrogate = SurrogateKind::Tpe;
            spec.rho = (1.0 / 3.0, 1.0 / 3.0);
            spec.ns0 = (64.0, 64.0);
            spec.ns1 = (64.0, 64.0);
        }
    }
    spec
}
