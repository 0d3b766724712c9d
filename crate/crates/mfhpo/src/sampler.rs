//! Candidate generation: generating distributions and the two
//! surrogate-filtered sampling subroutines.
//!
//! A batch request for μ configs first takes `interleave_count` draws straight
//! from the generating distribution, then fills the remaining μ′ slots through
//! one of two filters. The tournament filter runs ⌈μ′/n_trn⌉ rounds, each
//! scoring a fresh candidate set with the surrogate and keeping the best
//! n_trn. The progressive filter draws one fixed pool, scores it once, and
//! picks the best not-yet-selected entry within a growing prefix. Both reduce
//! to unfiltered sampling at ρ = 1, and both degrade to unfiltered sampling
//! (with an optional log line) when the archive cannot support a surrogate
//! yet.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::archive::Archive;
use crate::kde::ProductKde;
use crate::space::{Config, ParamSpace, ParamValue};
use crate::surrogate::{induce, SurrogateKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratingDist {
    Uniform,
    /// Density fit to the good split of the archive; falls back to uniform
    /// while fewer than `min_good` distinct configs exist.
    Kde { fraction: f64, min_good: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMethod {
    Tournament,
    Progressive,
}

/// Sampling parameters materialized for one batch (time-varying fields
/// already interpolated to scalars by the caller).
#[derive(Debug, Clone, Copy)]
pub struct SampleSpec {
    pub filter_method: FilterMethod,
    pub rho: f64,
    pub ns0: f64,
    pub ns1: f64,
    pub n_trn: usize,
    pub rho_random: bool,
    pub surrogate: SurrogateKind,
    pub filter_mb: bool,
    pub dist: GeneratingDist,
}

/// A materialized generating distribution.
pub enum Generator {
    Uniform,
    Kde(ProductKde),
}

impl Generator {
    /// Fits the KDE variant on the archive's good split, or falls back to
    /// uniform when the archive is still too small.
    pub fn materialize(dist: &GeneratingDist, space: &ParamSpace, archive: &Archive) -> Generator {
        match dist {
            GeneratingDist::Uniform => Generator::Uniform,
            GeneratingDist::Kde { fraction, min_good } => {
                let distinct = archive.per_config_best_fidelity().len();
                if distinct < (*min_good).max(1) {
                    return Generator::Uniform;
                }
                let (good, _) = archive.split_good_bad(*fraction, *min_good);
                let rows: Vec<Vec<f64>> = good
                    .iter()
                    .map(|rec| space.encode(&rec.config).expect("archived config encodes"))
                    .collect();
                Generator::Kde(ProductKde::fit(&space.axis_info(), rows))
            }
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Generator::Uniform)
    }

    /// Draws one valid config. The KDE variant picks a uniform donor row and
    /// perturbs it axis by axis, re-resolving activity top-down; axes the
    /// donor had inactive are drawn fresh.
    pub fn draw(&self, space: &ParamSpace, rng: &mut ChaCha8Rng) -> Config {
        match self {
            Generator::Uniform => space.sample_one(rng),
            Generator::Kde(kde) => {
                let donor = &kde.rows()[rng.random_range(0..kde.rows().len())];
                let mut values = vec![ParamValue::Inactive; space.dimension()];
                for &i in space.topo_order() {
                    if space.condition_met(&values, i) {
                        let u = kde.sample_axis(i, donor[i], rng);
                        values[i] = space.decode_axis(i, u).expect("sampled coordinate in range");
                    }
                }
                Config { values }
            }
        }
    }

    fn draw_n(&self, space: &ParamSpace, n: usize, rng: &mut ChaCha8Rng) -> Vec<Config> {
        (0..n).map(|_| self.draw(space, rng)).collect()
    }
}

/// How many of the μ requested configs bypass the surrogate filter.
/// Deterministic mode rounds ρ·μ to the nearest integer; random mode draws
/// Binomial(μ, ρ). ρ endpoints short-circuit without touching the RNG so
/// that ρ=1 stays bit-identical to unfiltered sampling.
pub fn interleave_count(mu: usize, rho: f64, rho_random: bool, rng: &mut ChaCha8Rng) -> usize {
    debug_assert!((0.0..=1.0).contains(&rho));
    if rho >= 1.0 {
        return mu;
    }
    if rho <= 0.0 {
        return 0;
    }
    if rho_random {
        let b = Binomial::new(mu as u64, rho).expect("valid binomial");
        (b.sample(rng) as usize).min(mu)
    } else {
        ((rho * mu as f64 + 0.5).floor() as usize).min(mu)
    }
}

/// Geometric interpolation schedule between Ns⁰ and Ns¹ over n rounds:
/// entry i (1-based) is ⌊(Ns⁰)^((n−i)/(n−1))·(Ns¹)^((i−1)/(n−1)) + 0.5⌋,
/// minimum 1; a single round uses the geometric mean.
pub fn ns_schedule(ns0: f64, ns1: f64, n: usize) -> Vec<usize> {
    assert!(n >= 1);
    assert!(ns0 >= 1.0 && ns1 >= 1.0, "schedule endpoints must be >= 1");
    if n == 1 {
        return vec![(((ns0 * ns1).sqrt() + 0.5).floor() as usize).max(1)];
    }
    (1..=n)
        .map(|i| {
            let a = (n - i) as f64 / (n - 1) as f64;
            let b = (i - 1) as f64 / (n - 1) as f64;
            ((ns0.powf(a) * ns1.powf(b) + 0.5).floor() as usize).max(1)
        })
        .collect()
}

fn log_degrade(reason: &str) {
    if std::env::var_os("MFHPO_LOG").is_some() {
        eprintln!("[mfhpo] surrogate filter disabled for this batch: {}", reason);
    }
}

fn score_all(
    s: &crate::surrogate::Surrogate,
    space: &ParamSpace,
    configs: &[Config],
    r: f64,
) -> Vec<f64> {
    configs
        .iter()
        .map(|c| s.predict(&space.encode(c).expect("sampled config encodes"), r))
        .collect()
}

/// Index order that sorts by (score ascending, index ascending).
fn rank_indices(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    idx
}

/// Tournament filtering: μ configs, the first `interleave_count` unfiltered.
pub fn sample_tournament(
    archive: &Archive,
    mu: usize,
    r: f64,
    spec: &SampleSpec,
    space: &ParamSpace,
    rng: &mut ChaCha8Rng,
) -> Vec<Config> {
    assert!(mu >= 1);
    let gen = Generator::materialize(&spec.dist, space, archive);
    let k_rand = interleave_count(mu, spec.rho, spec.rho_random, rng);
    let mut out = gen.draw_n(space, k_rand, rng);
    let mu_p = mu - k_rand;
    if mu_p == 0 {
        return out;
    }
    let surrogate = match induce(spec.surrogate, space, archive, spec.filter_mb, rng) {
        Ok(s) => s,
        Err(e) => {
            log_degrade(&e.to_string());
            out.extend(gen.draw_n(space, mu_p, rng));
            return out;
        }
    };
    let n_rounds = mu_p.div_ceil(spec.n_trn.max(1));
    let ns = ns_schedule(spec.ns0, spec.ns1, n_rounds);
    for i in 0..n_rounds {
        let remaining = mu_p - (out.len() - k_rand);
        let take = spec.n_trn.max(1).min(remaining);
        let cands = gen.draw_n(space, spec.n_trn.max(1) * ns[i], rng);
        let scores = score_all(&surrogate, space, &cands, r);
        for &j in rank_indices(&scores).iter().take(take) {
            out.push(cands[j].clone());
        }
    }
    debug_assert_eq!(out.len(), mu);
    out
}

/// Selection order for the progressive filter: pick `mu_p` indices from a
/// scored pool, the i-th (1-based) being the best not-yet-selected entry
/// among the first i·ns[i−1] pool positions.
pub fn progressive_select(scores: &[f64], mu_p: usize, ns: &[usize]) -> Vec<usize> {
    debug_assert_eq!(ns.len(), mu_p);
    let mut selected = vec![false; scores.len()];
    let mut out = Vec::with_capacity(mu_p);
    for i in 1..=mu_p {
        let prefix = (i * ns[i - 1]).min(scores.len());
        let mut best: Option<usize> = None;
        for j in 0..prefix {
            if selected[j] {
                continue;
            }
            if best.map_or(true, |b| scores[j] < scores[b]) {
                best = Some(j);
            }
        }
        let pick = best.expect("prefix always holds an unselected entry");
        selected[pick] = true;
        out.push(pick);
    }
    out
}

/// Progressive filtering: one pool of μ′·max(⌈Ns⁰⌉,⌈Ns¹⌉) candidates scored
/// once, selected through growing prefixes.
pub fn sample_progressive(
    archive: &Archive,
    mu: usize,
    r: f64,
    spec: &SampleSpec,
    space: &ParamSpace,
    rng: &mut ChaCha8Rng,
) -> Vec<Config> {
    assert!(mu >= 1);
    let gen = Generator::materialize(&spec.dist, space, archive);
    let k_rand = interleave_count(mu, spec.rho, spec.rho_random, rng);
    let mut out = gen.draw_n(space, k_rand, rng);
    let mu_p = mu - k_rand;
    if mu_p == 0 {
        return out;
    }
    let surrogate = match induce(spec.surrogate, space, archive, spec.filter_mb, rng) {
        Ok(s) => s,
        Err(e) => {
            log_degrade(&e.to_string());
            out.extend(gen.draw_n(space, mu_p, rng));
            return out;
        }
    };
    let pool_size = mu_p * (spec.ns0.ceil().max(spec.ns1.ceil()) as usize).max(1);
    let pool = gen.draw_n(space, pool_size, rng);
    let scores = score_all(&surrogate, space, &pool, r);
    let ns = ns_schedule(spec.ns0, spec.ns1, mu_p);
    for j in progressive_select(&scores, mu_p, &ns) {
        out.push(pool[j].clone());
    }
    debug_assert_eq!(out.len(), mu);
    out
}

/// Dispatches on the spec's filter method.
pub fn sample(
    archive: &Archive,
    mu: usize,
    r: f64,
    spec: &SampleSpec,
    space: &ParamSpace,
    rng: &mut ChaCha8Rng,
) -> Vec<Config> {
    match spec.filter_method {
        FilterMethod::Tournament => sample_tournament(archive, mu, r, spec, space, rng),
        FilterMethod::Progressive => sample_progressive(archive, mu, r, spec, space, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::EvalRecord;
    use crate::seed::rng_from;
    use crate::space::{ParamDef, Scale};

    fn space1d() -> ParamSpace {
        ParamSpace::new(vec![ParamDef::continuous("x", 0.0, 1.0, Scale::Linear)]).unwrap()
    }

    fn quad_archive(space: &ParamSpace, n: usize, seed: u64) -> Archive {
        let mut rng = rng_from(seed);
        let mut a = Archive::new();
        for (i, c) in space.sample_uniform(n, &mut rng).into_iter().enumerate() {
            let x = c.values[0].as_f64().unwrap();
            a.append(EvalRecord {
                config: c,
                r: 1.0,
                y: (x - 0.3) * (x - 0.3),
                budget_at: i as f64 * 0.001,
                batch_id: 0,
                bracket_id: 0,
                stage_id: 0,
                seed_tag: 0,
            });
        }
        a
    }

    fn base_spec() -> SampleSpec {
        SampleSpec {
            filter_method: FilterMethod::Tournament,
            rho: 0.0,
            ns0: 10.0,
            ns1: 10.0,
            n_trn: 1,
            rho_random: false,
            surrogate: SurrogateKind::Knn1,
            filter_mb: true,
            dist: GeneratingDist::Uniform,
        }
    }

    #[test]
    fn ns_schedule_matches_examples() {
        assert_eq!(ns_schedule(2.0, 32.0, 5), vec![2, 4, 8, 16, 32]);
        assert_eq!(ns_schedule(7.0, 7.0, 4), vec![7, 7, 7, 7]);
        assert_eq!(ns_schedule(1.0, 1.0, 3), vec![1, 1, 1]);
        assert_eq!(ns_schedule(2.0, 32.0, 1), vec![8], "single round takes the geometric mean");
        // endpoint exactness and monotonicity
        let s = ns_schedule(3.7, 900.0, 9);
        assert_eq!(s[0], 4);
        assert_eq!(s[8], 900);
        for w in s.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let dec = ns_schedule(50.0, 2.0, 6);
        for w in dec.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn interleave_count_endpoints_and_rounding() {
        let mut rng = rng_from(1);
        assert_eq!(interleave_count(10, 1.0, false, &mut rng), 10);
        assert_eq!(interleave_count(10, 1.0, true, &mut rng), 10);
        assert_eq!(interleave_count(10, 0.0, true, &mut rng), 0);
        assert_eq!(interleave_count(8, 0.25, false, &mut rng), 2);
        // endpoint short-circuits must not consume randomness
        let mut a = rng_from(42);
        let mut b = rng_from(42);
        interleave_count(10, 1.0, true, &mut a);
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn interleave_count_binomial_mean() {
        let mut rng = rng_from(2);
        let n = 4000;
        let mut acc = 0usize;
        for _ in 0..n {
            let k = interleave_count(20, 0.3, true, &mut rng);
            assert!(k <= 20);
            acc += k;
        }
        let mean = acc as f64 / n as f64;
        assert!((mean - 6.0).abs() < 0.15, "mean {}", mean);
    }

    #[test]
    fn progressive_select_matches_prefix_oracle() {
        // pool scores [9,1,5,7,2,8], mu'=3, ns=2 everywhere:
        // prefixes of 2, 4, 6 entries pick indices 1, 2, 4.
        let scores = [9.0, 1.0, 5.0, 7.0, 2.0, 8.0];
        assert_eq!(progressive_select(&scores, 3, &[2, 2, 2]), vec![1, 2, 4]);
        // ns=1: each prefix adds exactly one point, output is the pool order
        assert_eq!(progressive_select(&scores, 4, &[1, 1, 1, 1]), vec![0, 1, 2, 3]);
    }

    #[test]
    fn progressive_selection_is_prefix_optimal() {
        let mut rng = rng_from(3);
        let scores: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
        let ns = ns_schedule(2.0, 6.0, 10);
        let picks = progressive_select(&scores, 10, &ns);
        let mut selected = vec![false; scores.len()];
        for (i, &p) in picks.iter().enumerate() {
            let prefix = ((i + 1) * ns[i]).min(scores.len());
            for j in 0..prefix {
                if !selected[j] {
                    assert!(scores[p] <= scores[j], "pick {} not optimal in prefix {}", p, prefix);
                }
            }
            selected[p] = true;
        }
    }

    #[test]
    fn rho_one_is_bit_identical_to_unfiltered_draws() {
        let s = space1d();
        let a = quad_archive(&s, 30, 4);
        for method in [FilterMethod::Tournament, FilterMethod::Progressive] {
            for rho_random in [false, true] {
                let spec = SampleSpec { filter_method: method, rho: 1.0, rho_random, ..base_spec() };
                let got = sample(&a, 7, 0.5, &spec, &s, &mut rng_from(77));
                let mut rng = rng_from(77);
                let want = s.sample_uniform(7, &mut rng);
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn exact_output_sizes_for_all_round_splits() {
        let s = space1d();
        let a = quad_archive(&s, 25, 5);
        for (mu, n_trn) in [(5usize, 2usize), (4, 1), (9, 4), (1, 3), (6, 10)] {
            for method in [FilterMethod::Tournament, FilterMethod::Progressive] {
                let spec = SampleSpec { filter_method: method, n_trn, ns0: 3.0, ns1: 5.0, ..base_spec() };
                let out = sample(&a, mu, 1.0, &spec, &s, &mut rng_from(mu as u64 * 31 + n_trn as u64));
                assert_eq!(out.len(), mu);
                for c in &out {
                    s.validate_config(c).unwrap();
                }
            }
        }
    }

    #[test]
    fn degrades_to_unfiltered_on_empty_archive() {
        let s = space1d();
        let spec = base_spec();
        let out = sample_tournament(&Archive::new(), 5, 1.0, &spec, &s, &mut rng_from(6));
        assert_eq!(out.len(), 5);
        let mut rng = rng_from(6);
        assert_eq!(out, s.sample_uniform(5, &mut rng), "degraded call is pure uniform sampling");
    }

    #[test]
    fn kde_generator_falls_back_until_min_good_distinct() {
        let s = space1d();
        let dist = GeneratingDist::Kde { fraction: 0.15, min_good: 3 };
        let mut a = quad_archive(&s, 2, 7);
        assert!(Generator::materialize(&dist, &s, &a).is_uniform());
        let more = quad_archive(&s, 5, 8);
        for rec in more.records() {
            let mut r2 = rec.clone();
            r2.budget_at = 1.0;
            a.append(r2);
        }
        let g = Generator::materialize(&dist, &s, &a);
        assert!(!g.is_uniform());
        let mut rng = rng_from(9);
        for _ in 0..50 {
            s.validate_config(&g.draw(&s, &mut rng)).unwrap();
        }
    }

    #[test]
    fn kde_generator_concentrates_near_good_points() {
        let s = space1d();
        let a = quad_archive(&s, 100, 10);
        let dist = GeneratingDist::Kde { fraction: 0.15, min_good: 2 };
        let g = Generator::materialize(&dist, &s, &a);
        let mut rng = rng_from(11);
        let n = 3000;
        let near = (0..n)
            .filter(|_| (g.draw(&s, &mut rng).values[0].as_f64().unwrap() - 0.3).abs() < 0.2)
            .count();
        // uniform would give ~40%; the good-split KDE should be far higher
        assert!(near as f64 / n as f64 > 0.7, "only {}/{} near the optimum", near, n);
    }

    #[test]
    fn tournament_beats_uniform_on_quadratic_archive() {
        // mu=4 draws filtered from the good-split KDE land in the best decile
        // of a fresh uniform sample in at least 90 of 100 trials.
        let s = space1d();
        let spec = SampleSpec {
            ns0: 10.0,
            ns1: 10.0,
            dist: GeneratingDist::Kde { fraction: 0.15, min_good: 2 },
            ..base_spec()
        };
        let mut ok = 0;
        for trial in 0..100u64 {
            let a = quad_archive(&s, 50, 1000 + trial);
            let mut rng = rng_from(2000 + trial);
            let picks = sample_tournament(&a, 4, 1.0, &spec, &s, &mut rng);
            let mut refs: Vec<f64> = s
                .sample_uniform(1000, &mut rng)
                .iter()
                .map(|c| {
                    let x = c.values[0].as_f64().unwrap();
                    (x - 0.3) * (x - 0.3)
                })
                .collect();
            refs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let decile = refs[99];
            let all_good = picks.iter().all(|c| {
                let x = c.values[0].as_f64().unwrap();
                (x - 0.3) * (x - 0.3) <= decile
            });
            ok += all_good as usize;
        }
        assert!(ok >= 90, "only {}/100 trials had all picks in the best decile", ok);
    }
}
