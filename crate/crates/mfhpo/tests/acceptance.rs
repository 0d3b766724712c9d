//! End-to-end acceptance checks, one test per shipped guarantee. Each test
//! prints exactly one `acceptance NN <name>: PASS/FAIL` line (visible with
//! `--nocapture`) and enforces its own wall-clock bound.

use std::time::Instant;

use mfhpo::analysis;
use mfhpo::archive::{Archive, EvalRecord};
use mfhpo::baselines::{canonical_mu1, preset, PresetName};
use mfhpo::manifest::{ref_seed, schedule_block};
use mfhpo::metaopt::{search, MetaSearchSpace, TuneMethod, Variant};
use mfhpo::objectives::{make_scenario, Objective, ScenarioKind};
use mfhpo::optimizer::{self, hb_batch_sizes, stage_count, BatchMethod, OptimizerSpec, PLambda};
use mfhpo::sampler::{
    ns_schedule, progressive_select, sample_tournament, FilterMethod, GeneratingDist, Generator,
    SampleSpec,
};
use mfhpo::seed;
use mfhpo::space::{Config, ParamDef, ParamSpace, Scale};
use mfhpo::surrogate::{samworth_weights, SurrogateKind};

/// Collects failures for one criterion and prints the single verdict line.
struct Criterion {
    id: u32,
    name: &'static str,
    limit_secs: f64,
    started: Instant,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: u32, name: &'static str, limit_secs: f64) -> Criterion {
        Criterion { id, name, limit_secs, started: Instant::now(), failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 8 {
            self.failures.push(msg());
        }
    }

    fn failed(&self) -> bool {
        !self.failures.is_empty()
    }

    fn finish(mut self, detail: String) {
        let elapsed = self.started.elapsed().as_secs_f64();
        if elapsed > self.limit_secs {
            self.failures.push(format!(
                "exceeded the {:.0}s runtime bound ({:.1}s)",
                self.limit_secs, elapsed
            ));
        }
        if self.failures.is_empty() {
            println!(
                "acceptance {:02} {}: PASS ({:.2}s) {}",
                self.id, self.name, elapsed, detail
            );
        } else {
            let why = self.failures.join("; ");
            println!(
                "acceptance {:02} {}: FAIL ({:.2}s) {}",
                self.id, self.name, elapsed, why
            );
            panic!("criterion {} ({}) failed: {}", self.id, self.name, why);
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// One-sided sign-test p-value: P(Binomial(n, 1/2) >= wins).
fn sign_test_p(wins: u32, n: u32) -> f64 {
    let choose = |k: u32| -> f64 {
        let mut c = 1.0;
        for j in 0..k {
            c = c * (n - j) as f64 / (j + 1) as f64;
        }
        c
    };
    (wins..=n).map(choose).sum::<f64>() * 0.5f64.powi(n as i32)
}

fn final_cost(spec: &OptimizerSpec, obj: &dyn Objective, seed_val: u64) -> f64 {
    let mut rng = seed::rng_from(seed_val);
    let archive = optimizer::run(spec, obj, &mut rng).expect("run succeeds");
    optimizer::final_best(&archive).expect("archive nonempty").y
}

/// Final costs over the (instance, repetition) grid with independent
/// per-arm seed streams; `arm` keeps the two sides of a comparison apart.
fn arm_costs(spec: &OptimizerSpec, objs: &[&dyn Objective], reps: u64, root: u64, arm: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(objs.len() * reps as usize);
    for (i, obj) in objs.iter().enumerate() {
        for rep in 0..reps {
            out.push(final_cost(spec, *obj, seed::derive(root, "cell", &[arm, i as u64, rep])));
        }
    }
    out
}

fn paired_wins(a: &[f64], b: &[f64]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x < y).count() as u32
}

fn cell_regrets(costs: &[f64], refs: &[(f64, f64)], reps: usize) -> Vec<f64> {
    costs
        .iter()
        .enumerate()
        .map(|(idx, &y)| {
            let (mn, md) = refs[idx / reps];
            analysis::normalized_regret(y, mn, md)
        })
        .collect()
}

#[test]
fn c01_hyperband_reduction() {
    let mut c = Criterion::new(1, "hyperband reduction", 1.0);
    let eta = 3.0;
    let r_min = 1.0 / 27.0;

    let s = stage_count(eta, r_min);
    c.check(s == 4, || format!("stage count {} != 4", s));
    let mu1 = canonical_mu1(PresetName::Hb, eta, r_min);
    c.check(mu1 == 27, || format!("canonical mu1 {} != 27", mu1));

    let sizes = hb_batch_sizes(mu1, s, eta, eta);
    c.check(sizes == [27, 12, 6, 4], || format!("batch sizes {:?}", sizes));
    for b in 1..=s {
        let closed = (s as f64 * eta.powi((s - b) as i32) / (s - b + 1) as f64).ceil() as usize;
        c.check(sizes[b - 1] == closed, || {
            format!("mu({}) = {} differs from ceil formula {}", b, sizes[b - 1], closed)
        });
    }

    let spec = preset(PresetName::Hb, eta, r_min, mu1, 16.0);
    c.check(spec.rho == (1.0, 1.0), || "ladder preset is not pure random sampling".into());
    let block = schedule_block(&spec);
    c.check(block.stages == 4, || format!("schedule block stages {}", block.stages));
    c.check(block.batch_sizes == vec![27, 12, 6, 4], || {
        format!("schedule block sizes {:?}", block.batch_sizes)
    });
    for b in 1..=4i32 {
        let want = eta.powi(b - 4);
        c.check(block.start_fidelities[b as usize - 1] == want, || {
            format!("bracket {} start fidelity {} != {}", b, block.start_fidelities[b as usize - 1], want)
        });
    }

    // The emitted archive carries the same schedule: the first four batches
    // are brackets 1..4, then the ladder rotates back to bracket 1.
    let scen = make_scenario(ScenarioKind::Numeric7, 2, 11).expect("scenario");
    let obj = scen.instances[0].as_ref();
    let archive = optimizer::run(&spec, obj, &mut seed::rng_from(5)).expect("run");
    for k in 0..4u64 {
        let opening: Vec<&EvalRecord> = archive
            .records()
            .iter()
            .filter(|rec| rec.batch_id == k && rec.stage_id == 0)
            .collect();
        c.check(opening.len() == sizes[k as usize], || {
            format!("batch {} opens with {} configs, want {}", k, opening.len(), sizes[k as usize])
        });
        let want_r = eta.powi(k as i32 - 3);
        c.check(opening.iter().all(|rec| rec.r == want_r), || {
            format!("batch {} does not start at fidelity {}", k, want_r)
        });
        c.check(opening.iter().all(|rec| rec.bracket_id == k + 1), || {
            format!("batch {} is not bracket {}", k, k + 1)
        });
    }
    let rotated = archive.records().iter().any(|rec| rec.batch_id == 4 && rec.bracket_id == 1);
    c.check(rotated, || "ladder never rotated back to bracket 1".into());

    c.finish(format!("s=4, mu={:?}, starts 3^(b-4)", sizes));
}

#[test]
fn c02_preset_rows() {
    let mut c = Criterion::new(2, "preset row equality", 1.0);
    let eta = 3.0;
    let r_min = 1.0 / 27.0;

    // Row RS: single stage, everything at full fidelity, uniform proposals,
    // no filtering (rho = 1); survivor and fidelity ratios are inert.
    let rs = preset(PresetName::Rs, eta, r_min, 32, 40.0);
    c.check(stage_count(rs.eta_fid, rs.r_min) == 1, || "RS is not single-stage".into());
    c.check(rs.rho == (1.0, 1.0), || "RS filters its samples".into());
    c.check(matches!(rs.p_lambda, PLambda::Uniform), || "RS proposals are not uniform".into());

    // Rows HB and BOHB share the ladder geometry.
    for name in [PresetName::Hb, PresetName::Bohb] {
        let mu1 = canonical_mu1(name, eta, r_min);
        let spec = preset(name, eta, r_min, mu1, 40.0);
        let tag = name.token();
        c.check(matches!(spec.batch_method, BatchMethod::Hb), || format!("{} batch_method", tag));
        c.check(spec.eta_surv == eta && spec.eta_fid == eta, || format!("{} eta fields", tag));
        let s = stage_count(spec.eta_fid, spec.r_min);
        c.check(s == (-(r_min.log(eta))).floor() as usize + 1, || format!("{} stage count {}", tag, s));
        let sizes = hb_batch_sizes(mu1, s, spec.eta_surv, spec.eta_fid);
        for b in 1..=s {
            let closed = (s as f64 * eta.powi((s - b) as i32) / (s - b + 1) as f64).ceil() as usize;
            c.check(sizes[b - 1] == closed, || format!("{} mu({}) = {}", tag, b, sizes[b - 1]));
        }
    }

    let hb = preset(PresetName::Hb, eta, r_min, 27, 40.0);
    c.check(hb.rho == (1.0, 1.0), || "HB filters its samples".into());
    c.check(matches!(hb.p_lambda, PLambda::Uniform), || "HB proposals are not uniform".into());

    let bohb = preset(PresetName::Bohb, eta, r_min, 27, 40.0);
    c.check(matches!(bohb.surrogate, SurrogateKind::Tpe), || "BOHB surrogate is not TPE".into());
    c.check(matches!(bohb.p_lambda, PLambda::Kde), || "BOHB proposals are not KDE".into());
    c.check(bohb.rho == (1.0 / 3.0, 1.0 / 3.0), || "BOHB interleave fraction".into());
    c.check(bohb.ns0 == (64.0, 64.0) && bohb.ns1 == (64.0, 64.0), || "BOHB filtering rates".into());

    c.finish("RS/HB/BOHB fields match their documented rows".into());
}

#[test]
fn c03_budget_conservation() {
    let mut c = Criterion::new(3, "budget conservation", 120.0);
    let scen = make_scenario(ScenarioKind::Numeric7, 4, 101).expect("scenario");
    let mspace = MetaSearchSpace::new(Variant::GammaStar);
    let budget = 21.0;
    let mut total_records = 0usize;

    'outer: for g in 0..100u64 {
        let obj = scen.instances[g as usize % scen.instances.len()].as_ref();
        let point = mspace.space().sample_one(&mut seed::rng_from(seed::derive(4242, "gamma", &[g])));
        let spec = mspace.decode(&point, budget, obj.r_min()).expect("random point decodes");
        for rep in 0..5u64 {
            let mut rng = seed::rng_from(seed::derive(4242, "run", &[g, rep]));
            let archive = optimizer::run(&spec, obj, &mut rng).expect("run succeeds");
            let recs = archive.records();
            total_records += recs.len();

            let sum_r: f64 = recs.iter().map(|rec| rec.r).sum();
            let last = recs.last().expect("nonempty archive");
            let last_stage_sum: f64 = recs
                .iter()
                .filter(|rec| rec.batch_id == last.batch_id && rec.stage_id == last.stage_id)
                .map(|rec| rec.r)
                .sum();
            c.check(sum_r >= budget - 1e-9, || {
                format!("gamma {} rep {}: spent {} < budget {}", g, rep, sum_r, budget)
            });
            c.check(sum_r <= budget + last_stage_sum + 1e-9, || {
                format!(
                    "gamma {} rep {}: spent {} > {} + last stage {}",
                    g, rep, sum_r, budget, last_stage_sum
                )
            });
            let monotone = recs.windows(2).all(|w| w[1].budget_at >= w[0].budget_at);
            c.check(monotone, || format!("gamma {} rep {}: budget_at decreases", g, rep));
            if c.failed() {
                break 'outer;
            }
        }
    }

    c.finish(format!("500 runs, {} records, spend within one trailing stage", total_records));
}

#[test]
fn c04_multifidelity_advantage() {
    let mut c = Criterion::new(4, "multifidelity anytime advantage", 600.0);
    let scen = make_scenario(ScenarioKind::Numeric7, 10, 7).expect("scenario");
    let objs: Vec<&dyn Objective> = scen.test.iter().map(|&i| scen.instances[i].as_ref()).collect();
    let refs: Vec<(f64, f64)> = scen
        .test
        .iter()
        .map(|&i| analysis::reference_stats(scen.instances[i].as_ref(), 1000, ref_seed(7, i)))
        .collect();
    let budget = 10.0 * 7.0;
    let reps = 15u64;
    let root = 9009;

    let hb = preset(PresetName::Hb, 3.0, 1.0 / 32.0, 27, budget);
    let rs = preset(PresetName::Rs, 3.0, 1.0 / 32.0, 32, budget);
    let mut g1 = hb.clone();
    g1.eta_fid = f64::INFINITY;

    let hb_costs = arm_costs(&hb, &objs, reps, root, 0);
    let rs_costs = arm_costs(&rs, &objs, reps, root, 1);
    let g1_costs = arm_costs(&g1, &objs, reps, root, 1);
    let n = hb_costs.len() as u32;

    let hb_reg = cell_regrets(&hb_costs, &refs, reps as usize);
    let mut detail = Vec::new();
    for (label, opp_costs) in [("single-stage", &g1_costs), ("random search", &rs_costs)] {
        let opp_reg = cell_regrets(opp_costs, &refs, reps as usize);
        let w = paired_wins(&hb_costs, opp_costs);
        let p = sign_test_p(w, n);
        c.check(mean(&hb_reg) < mean(&opp_reg), || {
            format!("mean regret vs {}: {} !< {}", label, mean(&hb_reg), mean(&opp_reg))
        });
        c.check(p < 0.05, || format!("sign test vs {}: {}/{} wins, p={:.3}", label, w, n, p));
        detail.push(format!("vs {} {}/{} (p={:.1e})", label, w, n, p));
    }

    c.finish(detail.join(", "));
}

#[test]
fn c05_filtering_advantage() {
    let mut c = Criterion::new(5, "surrogate filtering advantage", 600.0);
    let scen = make_scenario(ScenarioKind::Numeric7, 10, 7).expect("scenario");
    let objs: Vec<&dyn Objective> = scen.test.iter().map(|&i| scen.instances[i].as_ref()).collect();
    let refs: Vec<(f64, f64)> = scen
        .test
        .iter()
        .map(|&i| analysis::reference_stats(scen.instances[i].as_ref(), 1000, ref_seed(7, i)))
        .collect();
    let budget = 30.0 * 7.0;
    let reps = 15u64;
    let root = 9100;

    let unfiltered = preset(PresetName::Hb, 3.0, 1.0 / 32.0, 27, budget);
    let mut filtered = unfiltered.clone();
    filtered.rho = (0.3, 0.3);

    let f_costs = arm_costs(&filtered, &objs, reps, root, 0);
    let u_costs = arm_costs(&unfiltered, &objs, reps, root, 1);
    let n = f_costs.len() as u32;
    let w = paired_wins(&f_costs, &u_costs);
    let p = sign_test_p(w, n);

    let f_reg = cell_regrets(&f_costs, &refs, reps as usize);
    let u_reg = cell_regrets(&u_costs, &refs, reps as usize);
    c.check(mean(&f_reg) < mean(&u_reg), || {
        format!("mean final regret {} !< {}", mean(&f_reg), mean(&u_reg))
    });
    c.check(p < 0.05, || format!("sign test: {}/{} wins, p={:.3}", w, n, p));

    c.finish(format!("filtered vs unfiltered {}/{} (p={:.1e})", w, n, p));
}

#[test]
fn c06_sampler_oracles() {
    let mut c = Criterion::new(6, "sampler oracles", 1.0);

    let sched = ns_schedule(2.0, 32.0, 5);
    c.check(sched == [2, 4, 8, 16, 32], || format!("ns schedule {:?}", sched));

    // Hand-simulated prefix selection on the six-point pool.
    let flat = ns_schedule(2.0, 2.0, 3);
    c.check(flat == [2, 2, 2], || format!("flat schedule {:?}", flat));
    let picked = progressive_select(&[9.0, 1.0, 5.0, 7.0, 2.0, 8.0], 3, &flat);
    c.check(picked == [1, 2, 4], || format!("progressive picks {:?}", picked));

    // Tournament with rho = 1 must be bit-identical to plain draws from the
    // generating distribution, for both distributions.
    let space = ParamSpace::new(vec![
        ParamDef::continuous("x", 0.0, 1.0, Scale::Linear),
        ParamDef::continuous("y", 0.0, 1.0, Scale::Linear),
    ])
    .expect("toy space");
    let mut archive = Archive::new();
    let mut fill = seed::rng_from(6001);
    for k in 0..12u64 {
        let config = space.sample_one(&mut fill);
        let x = config.values[0].as_f64().unwrap();
        let y = config.values[1].as_f64().unwrap();
        archive.append(EvalRecord {
            config,
            r: 1.0,
            y: (x - 0.4) * (x - 0.4) + (y - 0.6) * (y - 0.6),
            budget_at: k as f64 / 12.0,
            batch_id: k,
            bracket_id: 1,
            stage_id: 0,
            seed_tag: k,
        });
    }
    for (label, dist) in [
        ("uniform", GeneratingDist::Uniform),
        ("kde", GeneratingDist::Kde { fraction: 0.5, min_good: 4 }),
    ] {
        let spec = SampleSpec {
            filter_method: FilterMethod::Tournament,
            rho: 1.0,
            ns0: 8.0,
            ns1: 8.0,
            n_trn: 1,
            rho_random: true,
            surrogate: SurrogateKind::Knn1,
            filter_mb: true,
            dist,
        };
        let got = sample_tournament(&archive, 9, 0.5, &spec, &space, &mut seed::rng_from(606));
        let gen = Generator::materialize(&dist, &space, &archive);
        let mut rng = seed::rng_from(606);
        let want: Vec<Config> = (0..9).map(|_| gen.draw(&space, &mut rng)).collect();
        c.check(got == want, || format!("rho=1 tournament diverges from {} draws", label));
    }

    c.finish("schedule, prefix selection, and rho=1 identity all exact".into());
}

#[test]
fn c07_samworth_weights() {
    let mut c = Criterion::new(7, "nearest-neighbor weights", 1.0);
    for d in [1usize, 2, 5, 10] {
        let w = samworth_weights(7, d);
        c.check(w.len() == 7, || format!("d={}: {} weights", d, w.len()));
        let sum: f64 = w.iter().sum();
        c.check((sum - 1.0).abs() <= 1e-9, || format!("d={}: weights sum to {}", d, sum));
        let monotone = w.windows(2).all(|p| p[0] >= p[1] - 1e-12);
        c.check(monotone, || format!("d={}: weights increase somewhere: {:?}", d, w));
        c.check(w.iter().all(|&x| x >= -1e-12), || format!("d={}: negative weight", d));
    }
    c.finish("k=7 weights sum to one and are nonincreasing for d in {1,2,5,10}".into());
}

#[test]
fn c08_regret_normalization() {
    let mut c = Criterion::new(8, "regret normalization", 1.0);

    c.check(analysis::normalized_regret(3.25, 3.25, 11.5) == 0.0, || "min does not map to 0".into());
    c.check(analysis::normalized_regret(11.5, 3.25, 11.5) == 1.0, || "median does not map to 1".into());

    let scen = make_scenario(ScenarioKind::Numeric7, 2, 19).expect("scenario");
    let obj = scen.instances[0].as_ref();
    let (mn, md) = analysis::reference_stats(obj, 200, ref_seed(19, 0));
    c.check(analysis::normalized_regret(mn, mn, md) == 0.0, || "sampled min != 0".into());
    c.check(analysis::normalized_regret(md, mn, md) == 1.0, || "sampled median != 1".into());

    // An emitted curve: best-so-far regret on the checkpoint grid never rises.
    let budget = 35.0;
    let spec = preset(PresetName::Hb, 3.0, 1.0 / 32.0, 27, budget);
    let archive = optimizer::run(&spec, obj, &mut seed::rng_from(88)).expect("run");
    let cps = analysis::checkpoints(budget);
    let traj = analysis::trajectory(archive.records(), budget, &cps);
    let regs: Vec<Option<f64>> = traj
        .iter()
        .map(|o| o.map(|y| analysis::normalized_regret(y, mn, md)))
        .collect();
    let mut last: Option<f64> = None;
    for (i, r) in regs.iter().enumerate() {
        match (last, r) {
            (Some(_), None) => c.check(false, || format!("curve loses its value at point {}", i)),
            (Some(prev), Some(cur)) => {
                c.check(*cur <= prev + 1e-12, || {
                    format!("regret rises at point {}: {} -> {}", i, prev, cur)
                });
            }
            _ => {}
        }
        if r.is_some() {
            last = *r;
        }
    }
    c.check(last.is_some(), || "curve never becomes defined".into());

    c.finish("endpoints exact, emitted curve nonincreasing".into());
}

#[test]
fn c09_meta_tuning_sanity() {
    let mut c = Criterion::new(9, "meta-tuning sanity", 900.0);
    let space = ParamSpace::new(vec![
        ParamDef::continuous("x", 0.0, 1.0, Scale::Linear),
        ParamDef::continuous("y", 0.0, 1.0, Scale::Linear),
    ])
    .expect("toy space");
    let toy = |cfg: &Config| -> f64 {
        let x = cfg.values[0].as_f64().unwrap();
        let y = cfg.values[1].as_f64().unwrap();
        (x - 0.3) * (x - 0.3) + (y - 0.7) * (y - 0.7)
    };

    let mut bo = Vec::new();
    let mut rnd = Vec::new();
    for s in 0..10u64 {
        let (_, yb, _) = search(&space, 60, TuneMethod::BoLcb, 4200 + s, |_, cfg| Ok(toy(cfg)))
            .expect("search");
        let (_, yr, _) = search(&space, 60, TuneMethod::Random, 4200 + s, |_, cfg| Ok(toy(cfg)))
            .expect("search");
        bo.push(yb);
        rnd.push(yr);
    }
    let med_bo = analysis::median(&bo);
    let med_rnd = analysis::median(&rnd);
    c.check(med_bo < med_rnd, || {
        format!("model-based median {} !< random median {}", med_bo, med_rnd)
    });

    c.finish(format!("median best {:.2e} (model-based) vs {:.2e} (random)", med_bo, med_rnd));
}

#[test]
fn c10_determinism_suite() {
    let mut c = Criterion::new(10, "determinism suite", 60.0);
    let budget = 21.0;

    let numeric = make_scenario(ScenarioKind::Numeric7, 2, 11).expect("scenario");
    let hier = make_scenario(ScenarioKind::MixedHier, 2, 12).expect("scenario");
    let table = make_scenario(ScenarioKind::Categorical, 1, 13).expect("scenario");

    let mut progressive = OptimizerSpec::base(budget, 1.0 / 32.0);
    progressive.mu1 = 16;
    progressive.filter_method = FilterMethod::Progressive;
    progressive.surrogate = SurrogateKind::Rf;
    progressive.p_lambda = PLambda::Kde;
    progressive.rho = (0.3, 0.3);

    let cases: Vec<(&str, OptimizerSpec, &dyn Objective)> = vec![
        ("hb/numeric", preset(PresetName::Hb, 3.0, 1.0 / 32.0, 27, budget), numeric.instances[0].as_ref()),
        (
            "bohb/hierarchical",
            preset(
                PresetName::Bohb,
                3.0,
                hier.instances[0].r_min(),
                canonical_mu1(PresetName::Bohb, 3.0, hier.instances[0].r_min()),
                budget,
            ),
            hier.instances[0].as_ref(),
        ),
        ("progressive-rf/categorical", progressive, table.instances[0].as_ref()),
    ];

    let mut sizes = Vec::new();
    for (label, spec, obj) in &cases {
        let mut serialized = Vec::new();
        for _ in 0..2 {
            let archive = optimizer::run(spec, *obj, &mut seed::rng_from(31415)).expect("run");
            let mut bytes = Vec::new();
            mfhpo::archive::write_jsonl(obj.space(), &archive, &mut bytes).expect("serialize");
            serialized.push(bytes);
        }
        c.check(serialized[0] == serialized[1], || format!("{}: reruns differ", label));
        sizes.push(format!("{} {}B", label, serialized[0].len()));
    }

    c.finish(sizes.join(", "));
}
