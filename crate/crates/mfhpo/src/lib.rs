//! Multifidelity hyperparameter optimization on mixed hierarchical search
//! spaces.
//!
//! The optimizer evaluates batches of configurations at increasing fidelity,
//! eliminating poor performers between stages (successive-halving style) and
//! optionally filtering new proposals through a surrogate model trained on the
//! evaluation archive. Random search, successive halving, Hyperband and BOHB
//! are all reachable as presets of the same configuration vector, and the
//! vector itself can be tuned on synthetic benchmark instances.

pub mod analysis;
pub mod archive;
pub mod baselines;
pub mod forest;
pub mod kde;
pub mod manifest;
pub mod metaopt;
pub mod objectives;
pub mod optimizer;
pub mod sampler;
pub mod seed;
pub mod space;
pub mod surrogate;

pub use archive::{Archive, EvalRecord};
pub use objectives::{make_scenario, InstanceSet, Objective, ScenarioKind};
pub use optimizer::{run, OptimizerSpec};
pub use space::{Config, ParamSpace, ParamValue};
