//! Surrogate learners that rank candidate configurations from the archive.
//!
//! `induce` turns an archive snapshot into an immutable scoring function
//! (lower score means predicted-better). Four learners are available: 1-NN
//! and weighted 7-NN regressors under Gower distance, a good/bad
//! density-ratio scorer, and a random forest. With `filter_mb` set, training
//! keeps only each config's highest-fidelity evaluation and the query
//! fidelity is ignored; otherwise fidelity joins the feature vector as an
//! extra numeric axis.

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::archive::Archive;
use crate::forest::Forest;
use crate::kde::ProductKde;
use crate::space::{gower, AxisInfo, ParamSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SurrogateKind {
    Knn1,
    Kknn7,
    Tpe,
    Rf,
}

impl SurrogateKind {
    pub fn token(self) -> &'static str {
        match self {
            SurrogateKind::Knn1 => "KNN1",
            SurrogateKind::Kknn7 => "KKNN7",
            SurrogateKind::Tpe => "TPE",
            SurrogateKind::Rf => "RF",
        }
    }

    pub fn from_token(t: &str) -> Option<SurrogateKind> {
        match t {
            "KNN1" => Some(SurrogateKind::Knn1),
            "KKNN7" => Some(SurrogateKind::Kknn7),
            "TPE" => Some(SurrogateKind::Tpe),
            "RF" => Some(SurrogateKind::Rf),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("cannot induce a surrogate from an empty archive")]
    EmptyArchive,
    #[error("density-ratio surrogate needs at least 2 distinct configs, archive has {0}")]
    TooFewDistinct(usize),
}

/// Split fraction for the density-ratio learner.
pub const GOOD_FRACTION: f64 = 0.15;

enum Model {
    /// k-NN with per-rank weights; `weights.len()` is the effective k.
    Knn { x: Vec<Vec<f64>>, y: Vec<f64>, weights: Vec<f64> },
    /// Good/bad density ratio, scored as log bad − log good.
    Ratio { good: ProductKde, bad: ProductKde },
    Forest(Forest),
}

pub struct Surrogate {
    model: Model,
    axes: Vec<AxisInfo>,
    filter_mb: bool,
}

/// Rank weights for the k-nearest-neighbor regressor in d dimensions
/// (Samworth's asymptotically optimal scheme): the i-th neighbor gets
/// (1/k)·[1 + d/2 − d/(2k^{2/d})·(i^{1+2/d} − (i−1)^{1+2/d})], with negative
/// tail weights clamped to zero and the rest renormalized to sum 1.
pub fn samworth_weights(k: usize, d: usize) -> Vec<f64> {
    assert!(k >= 1 && d >= 1);
    let (kf, df) = (k as f64, d as f64);
    let ex = 1.0 + 2.0 / df;
    let mut w: Vec<f64> = (1..=k)
        .map(|i| {
            let i = i as f64;
            let raw = (1.0 + df / 2.0 - df / (2.0 * kf.powf(2.0 / df)) * (i.powf(ex) - (i - 1.0).powf(ex))) / kf;
            raw.max(0.0)
        })
        .collect();
    let s: f64 = w.iter().sum();
    for v in &mut w {
        *v /= s;
    }
    w
}

fn feature_axes(space: &ParamSpace, filter_mb: bool) -> Vec<AxisInfo> {
    let mut axes = space.axis_info();
    if !filter_mb {
        axes.push(AxisInfo { categorical: false, levels: 0 });
    }
    axes
}

fn training_rows(space: &ParamSpace, archive: &Archive, filter_mb: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    if filter_mb {
        for rec in archive.per_config_best_fidelity() {
            xs.push(space.encode(&rec.config).expect("archived config encodes"));
            ys.push(rec.y);
        }
    } else {
        for rec in archive.records() {
            let mut x = space.encode(&rec.config).expect("archived config encodes");
            x.push(rec.r);
            xs.push(x);
            ys.push(rec.y);
        }
    }
    (xs, ys)
}

/// Trains a surrogate of the requested kind on the archive. The RNG drives
/// only forest bootstrapping; the other learners are deterministic.
pub fn induce(
    kind: SurrogateKind,
    space: &ParamSpace,
    archive: &Archive,
    filter_mb: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Surrogate, SurrogateError> {
    if archive.is_empty() {
        return Err(SurrogateError::EmptyArchive);
    }
    let axes = feature_axes(space, filter_mb);
    let model = match kind {
        SurrogateKind::Knn1 | SurrogateKind::Kknn7 => {
            let (x, y) = training_rows(space, archive, filter_mb);
            let weights = match kind {
                SurrogateKind::Knn1 => vec![1.0],
                _ => samworth_weights(x.len().min(7), axes.len()),
            };
            Model::Knn { x, y, weights }
        }
        SurrogateKind::Tpe => {
            let min_good = space.dimension() + 1;
            let (good, bad) = archive.split_good_bad(GOOD_FRACTION, min_good);
            let distinct = good.len() + bad.len();
            if distinct < 2 {
                return Err(SurrogateError::TooFewDistinct(distinct));
            }
            let mut good = good;
            let mut bad = bad;
            if bad.is_empty() {
                // min_good swallowed everything; the worst good record seeds
                // the bad density so the ratio stays defined.
                bad.push(good.pop().expect("good nonempty"));
            }
            let encode = |recs: &[&crate::archive::EvalRecord]| {
                recs.iter()
                    .map(|rec| {
                        let mut x = space.encode(&rec.config).expect("archived config encodes");
                        if !filter_mb {
                            x.push(rec.r);
                        }
                        x
                    })
                    .collect::<Vec<_>>()
            };
            Model::Ratio {
                good: ProductKde::fit(&axes, encode(&good)),
                bad: ProductKde::fit(&axes, encode(&bad)),
            }
        }
        SurrogateKind::Rf => {
            let (x, y) = training_rows(space, archive, filter_mb);
            let mtry = axes.len().div_ceil(3);
            Model::Forest(Forest::fit(&x, &y, 100, mtry, rng))
        }
    };
    Ok(Surrogate { model, axes, filter_mb })
}

impl Surrogate {
    /// Scores an encoded config at query fidelity `r`; lower is
    /// predicted-better. `x` must not include the fidelity column.
    pub fn predict(&self, x: &[f64], r: f64) -> f64 {
        let query: Vec<f64>;
        let q: &[f64] = if self.filter_mb {
            x
        } else {
            query = x.iter().copied().chain(std::iter::once(r)).collect();
            &query
        };
        match &self.model {
            Model::Knn { x: tx, y, weights } => {
                let mut order: Vec<(f64, usize)> =
                    tx.iter().enumerate().map(|(i, t)| (gower(&self.axes, q, t), i)).collect();
                order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                weights.iter().zip(&order).map(|(w, (_, i))| w * y[*i]).sum()
            }
            Model::Ratio { good, bad } => bad.log_density(q) - good.log_density(q),
            Model::Forest(f) => f.predict(q),
        }
    }

    /// Per-tree (mean, std) for forest surrogates; None for the others.
    pub fn predict_spread(&self, x: &[f64], r: f64) -> Option<(f64, f64)> {
        let query: Vec<f64>;
        let q: &[f64] = if self.filter_mb {
            x
        } else {
            query = x.iter().copied().chain(std::iter::once(r)).collect();
            &query
        };
        match &self.model {
            Model::Forest(f) => Some(f.predict_spread(q)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::EvalRecord;
    use crate::seed::rng_from;
    use crate::space::{Config, ParamDef, ParamValue, Scale};

    fn space1d() -> ParamSpace {
        ParamSpace::new(vec![ParamDef::continuous("x", 0.0, 1.0, Scale::Linear)]).unwrap()
    }

    fn rec1d(x: f64, r: f64, y: f64, at: f64) -> EvalRecord {
        EvalRecord {
            config: Config { values: vec![ParamValue::Float(x)] },
            r,
            y,
            budget_at: at,
            batch_id: 0,
            bracket_id: 0,
            stage_id: 0,
            seed_tag: 0,
        }
    }

    #[test]
    fn knn1_interpolates_training_points() {
        let s = space1d();
        let mut a = Archive::new();
        a.append(rec1d(0.3, 1.0, 5.0, 0.0));
        a.append(rec1d(0.9, 1.0, 2.0, 0.1));
        let m = induce(SurrogateKind::Knn1, &s, &a, true, &mut rng_from(1)).unwrap();
        assert_eq!(m.predict(&[0.3], 1.0), 5.0);
        assert_eq!(m.predict(&[0.9], 1.0), 2.0);
        assert_eq!(m.predict(&[0.35], 1.0), 5.0, "nearest neighbor wins");
    }

    #[test]
    fn knn_tie_breaks_by_insertion_order() {
        let s = space1d();
        let mut a = Archive::new();
        a.append(rec1d(0.2, 1.0, 7.0, 0.0));
        a.append(rec1d(0.8, 1.0, 3.0, 0.1));
        let m = induce(SurrogateKind::Knn1, &s, &a, true, &mut rng_from(1)).unwrap();
        assert_eq!(m.predict(&[0.5], 1.0), 7.0, "equidistant: earliest record wins");
    }

    #[test]
    fn samworth_weights_match_closed_form_d2_k7() {
        let w = samworth_weights(7, 2);
        let expect: Vec<f64> = [13.0, 11.0, 9.0, 7.0, 5.0, 3.0, 1.0].iter().map(|v| v / 49.0).collect();
        for (a, b) in w.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{:?} vs {:?}", w, expect);
        }
    }

    #[test]
    fn samworth_weights_sum_one_nonincreasing_nonnegative() {
        for d in [1usize, 2, 5, 10] {
            let w = samworth_weights(7, d);
            let sum: f64 = w.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "d={} sum={}", d, sum);
            for i in 1..w.len() {
                assert!(w[i] <= w[i - 1] + 1e-15, "d={} not nonincreasing: {:?}", d, w);
                assert!(w[i] >= 0.0);
            }
        }
    }

    #[test]
    fn kknn7_weighted_mean_matches_hand_computation() {
        let s = space1d();
        let mut a = Archive::new();
        // three points; k = min(7,3) = 3, d(feature axes) = 1
        a.append(rec1d(0.0, 1.0, 1.0, 0.0));
        a.append(rec1d(0.5, 1.0, 2.0, 0.1));
        a.append(rec1d(1.0, 1.0, 4.0, 0.2));
        let m = induce(SurrogateKind::Kknn7, &s, &a, true, &mut rng_from(1)).unwrap();
        let w = samworth_weights(3, 1);
        let expect = w[0] * 1.0 + w[1] * 2.0 + w[2] * 4.0;
        assert!((m.predict(&[0.1], 1.0) - expect).abs() < 1e-12);
    }

    #[test]
    fn ratio_score_matches_grid_oracle() {
        // good = {0.2}, bad = {0.8}, bandwidth floored at 1e-3:
        // score(q) = log N(q;0.8,h) − log N(q;0.2,h) = ∓0.5·(0.6/0.001)² = ∓180000.
        let s = space1d();
        let mut a = Archive::new();
        a.append(rec1d(0.2, 1.0, 1.0, 0.0));
        a.append(rec1d(0.8, 1.0, 9.0, 0.1));
        let m = induce(SurrogateKind::Tpe, &s, &a, true, &mut rng_from(1)).unwrap();
        let s02 = m.predict(&[0.2], 1.0);
        let s08 = m.predict(&[0.8], 1.0);
        assert!((s02 + 180_000.0).abs() < 1e-6, "score(0.2) = {}", s02);
        assert!((s08 - 180_000.0).abs() < 1e-6, "score(0.8) = {}", s08);
        assert!(s02 < s08);
    }

    #[test]
    fn induce_errors_on_degenerate_archives() {
        let s = space1d();
        assert!(matches!(
            induce(SurrogateKind::Knn1, &s, &Archive::new(), true, &mut rng_from(1)),
            Err(SurrogateError::EmptyArchive)
        ));
        let mut a = Archive::new();
        a.append(rec1d(0.4, 0.5, 1.0, 0.0));
        a.append(rec1d(0.4, 1.0, 1.2, 0.1));
        assert!(matches!(
            induce(SurrogateKind::Tpe, &s, &a, true, &mut rng_from(1)),
            Err(SurrogateError::TooFewDistinct(1))
        ));
    }

    #[test]
    fn filter_mb_controls_fidelity_sensitivity() {
        let s = space1d();
        let mut a = Archive::new();
        a.append(rec1d(0.5, 0.25, 10.0, 0.0));
        a.append(rec1d(0.5, 1.0, 2.0, 0.1));
        a.append(rec1d(0.1, 1.0, 8.0, 0.2));
        let hi_only = induce(SurrogateKind::Knn1, &s, &a, true, &mut rng_from(1)).unwrap();
        assert_eq!(hi_only.predict(&[0.5], 0.25), 2.0, "low-fidelity row dropped, query r ignored");
        assert_eq!(hi_only.predict(&[0.5], 1.0), 2.0);
        let with_r = induce(SurrogateKind::Knn1, &s, &a, false, &mut rng_from(1)).unwrap();
        assert_eq!(with_r.predict(&[0.5], 0.25), 10.0, "fidelity feature selects the r=0.25 row");
        assert_eq!(with_r.predict(&[0.5], 1.0), 2.0);
    }

    #[test]
    fn rankings_invariant_under_affine_cost_transform() {
        let s = ParamSpace::new(vec![
            ParamDef::continuous("x", 0.0, 1.0, Scale::Linear),
            ParamDef::categorical("c", &["a", "b", "z"]),
        ])
        .unwrap();
        let mut rng = rng_from(5);
        let configs = s.sample_uniform(30, &mut rng);
        let mk_archive = |scale: f64, shift: f64| {
            let mut a = Archive::new();
            for (i, c) in configs.iter().enumerate() {
                let base = (i as f64 * 0.37) % 1.0;
                a.append(EvalRecord {
                    config: c.clone(),
                    r: 1.0,
                    y: scale * base + shift,
                    budget_at: i as f64 * 0.01,
                    batch_id: 0,
                    bracket_id: 0,
                    stage_id: 0,
                    seed_tag: 0,
                });
            }
            a
        };
        let a1 = mk_archive(1.0, 0.0);
        let a2 = mk_archive(4.0, -7.0);
        let cands = s.sample_uniform(15, &mut rng);
        for kind in [SurrogateKind::Knn1, SurrogateKind::Kknn7, SurrogateKind::Tpe, SurrogateKind::Rf] {
            let m1 = induce(kind, &s, &a1, true, &mut rng_from(99)).unwrap();
            let m2 = induce(kind, &s, &a2, true, &mut rng_from(99)).unwrap();
            let rank = |m: &Surrogate| {
                let mut idx: Vec<usize> = (0..cands.len()).collect();
                let scores: Vec<f64> = cands.iter().map(|c| m.predict(&s.encode(c).unwrap(), 1.0)).collect();
                idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));
                idx
            };
            assert_eq!(rank(&m1), rank(&m2), "ranking changed under affine transform for {:?}", kind);
        }
    }
}
