//! Trajectory extraction, regret normalization and rank aggregation for
//! benchmark runs.
//!
//! Costs from different instances live on unrelated scales, so comparisons
//! normalize against two per-instance reference constants: the best known
//! cost and the median of a full-fidelity random sample. A normalized regret
//! of 0 means "as good as the best reference", 1 means "as good as the
//! random-sampling median".

use crate::archive::EvalRecord;
use crate::objectives::Objective;
use crate::seed::{derive, rng_from};

/// Number of budget checkpoints reported per run.
pub const N_CHECKPOINTS: usize = 64;

/// Log-spaced budget checkpoints from 0.1 to `b_max` inclusive, in
/// full-fidelity-evaluation units.
pub fn checkpoints(b_max: f64) -> Vec<f64> {
    assert!(b_max > 0.1, "budget {} must exceed the first checkpoint 0.1", b_max);
    let lo = 0.1f64.ln();
    let hi = b_max.ln();
    (0..N_CHECKPOINTS)
        .map(|i| {
            if i == 0 {
                0.1
            } else if i == N_CHECKPOINTS - 1 {
                b_max
            } else {
                (lo + (hi - lo) * i as f64 / (N_CHECKPOINTS - 1) as f64).exp()
            }
        })
        .collect()
}

/// Cumulative budget (in full-fidelity units) at which a record's result
/// becomes available: the spend when its stage started plus its own cost.
pub fn completed_at(rec: &EvalRecord, budget: f64) -> f64 {
    rec.budget_at * budget + rec.r
}

/// Best cost over all fidelities among records completed within `at` units.
pub fn best_so_far(records: &[EvalRecord], budget: f64, at: f64) -> Option<f64> {
    records
        .iter()
        .filter(|rec| completed_at(rec, budget) <= at + 1e-9)
        .map(|rec| rec.y)
        .fold(None, |acc, y| Some(acc.map_or(y, |a: f64| a.min(y))))
}

/// Best-so-far curve sampled at the given checkpoints (None before the first
/// completed evaluation). Nonincreasing where defined.
pub fn trajectory(records: &[EvalRecord], budget: f64, points: &[f64]) -> Vec<Option<f64>> {
    let mut done: Vec<(f64, f64)> = records.iter().map(|rec| (completed_at(rec, budget), rec.y)).collect();
    done.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out = Vec::with_capacity(points.len());
    let mut idx = 0;
    let mut best: Option<f64> = None;
    for &p in points {
        while idx < done.len() && done[idx].0 <= p + 1e-9 {
            best = Some(best.map_or(done[idx].1, |b: f64| b.min(done[idx].1)));
            idx += 1;
        }
        out.push(best);
    }
    out
}

/// (cost − min_ref) / (med_ref − min_ref); NaN when the references collapse.
pub fn normalized_regret(cost: f64, min_ref: f64, med_ref: f64) -> f64 {
    let span = med_ref - min_ref;
    if !(span > 0.0) {
        return f64::NAN;
    }
    (cost - min_ref) / span
}

pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty());
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// 1-based ranks with ties sharing the average of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0; // average of 1-based positions i+1..=j+1
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Per-instance reference constants (min_ref, med_ref) from an n-point
/// full-fidelity uniform sample; the declared optimum tightens min_ref when
/// the instance knows it.
pub fn reference_stats(obj: &dyn Objective, n: usize, seed: u64) -> (f64, f64) {
    assert!(n >= 2);
    let mut rng = rng_from(seed);
    let costs: Vec<f64> = obj
        .space()
        .sample_uniform(n, &mut rng)
        .iter()
        .enumerate()
        .map(|(i, c)| obj.evaluate(c, 1.0, derive(seed, "ref-eval", &[i as u64])))
        .collect();
    let sample_min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_ref = obj.known_optimum().map_or(sample_min, |o| o.min(sample_min));
    (min_ref, median(&costs))
}
