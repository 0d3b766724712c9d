//! Command-line harness: single runs, benchmark sweeps, meta-tuning, rank
//! tables, and regret curves over the built-in synthetic scenarios.
//!
//! Seed tree. Every random decision descends from the two seed flags:
//!   - `--master-seed` generates the scenario (instance `i` is derived via
//!     ("inst", i)) and the per-instance regret references (("ref", i));
//!   - `--seed` drives the optimizer: `run` feeds it to the optimizer
//!     stream directly, `sweep` derives cell seeds via
//!     ("cell", algorithm-index, instance-index, repetition), and `tune`
//!     derives one meta-seed per repetition via ("tune", repetition).
//!
//! Semantic failures print one JSON object to stderr and exit nonzero.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use mfhpo::analysis;
use mfhpo::archive::{self, Archive, ArchiveError};
use mfhpo::baselines::{canonical_mu1, preset, PresetName};
use mfhpo::manifest::{ManifestError, RunManifest, ScenarioManifest};
use mfhpo::metaopt::{self, MetaArchive, MetaError, MetaSearchSpace, TuneMethod, Variant};
use mfhpo::objectives::{make_scenario, InstanceSet, ObjError, ScenarioKind};
use mfhpo::optimizer::{self, OptError, OptimizerSpec};
use mfhpo::seed;

#[derive(Parser)]
#[command(name = "mfhpo", version, about = "Multifidelity hyperparameter optimization harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one optimizer configuration on one scenario instance.
    Run(RunArgs),
    /// Run a grid of configurations over the test instances of a scenario.
    Sweep(SweepArgs),
    /// Search the meta-space for a good optimizer configuration.
    Tune(TuneArgs),
    /// Mean ranks per algorithm from sweep summaries.
    Ranks(RanksArgs),
    /// Normalized regret curve for one archived run.
    Regret(RegretArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario family: numeric7, mixed-hier, or categorical.
    #[arg(long, default_value = "numeric7")]
    scenario: String,
    /// Number of instances the scenario is generated with.
    #[arg(long, default_value_t = 10)]
    instances: usize,
    /// Master seed for instance generation and regret references.
    #[arg(long, default_value_t = 1)]
    master_seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Optimizer configuration file (`key = value` lines).
    #[arg(long)]
    config_file: Option<PathBuf>,
    /// Preset name: RS, SH, HB, or BOHB.
    #[arg(long)]
    preset: Option<String>,
    /// Replay a run manifest bit-exactly (ignores the other selectors).
    #[arg(long)]
    from_manifest: Option<PathBuf>,
    /// Instance index within the scenario.
    #[arg(long, default_value_t = 0)]
    instance: usize,
    /// Optimizer random seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Budget in full-fidelity evaluations per search-space dimension.
    #[arg(long, default_value_t = 30.0)]
    budget_mult: f64,
    /// Fidelity/survival ratio for ladder presets.
    #[arg(long, default_value_t = 3.0)]
    eta: f64,
    /// First-bracket batch size; defaults to the preset's canonical size.
    #[arg(long)]
    mu1: Option<usize>,
    /// Output directory for the archive and manifest.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Presets to include (repeatable).
    #[arg(long = "preset")]
    presets: Vec<String>,
    /// Configuration files to include (repeatable).
    #[arg(long = "config-file")]
    config_files: Vec<PathBuf>,
    /// Repetitions per (algorithm, instance) cell.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Root seed for the per-cell seed derivation.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 30.0)]
    budget_mult: f64,
    #[arg(long, default_value_t = 3.0)]
    eta: f64,
    /// Output directory (summary.csv, scenario.json, archives/).
    #[arg(long)]
    out_dir: PathBuf,
    /// Uniform sample size behind the regret references.
    #[arg(long, default_value_t = 1000)]
    ref_evals: usize,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Restriction variant: gamma-star or g1..g7.
    #[arg(long, default_value = "gamma-star")]
    variant: String,
    /// Search method: random or bo_lcb.
    #[arg(long, default_value = "bo_lcb")]
    method: String,
    /// Meta-evaluations per repetition.
    #[arg(long, default_value_t = 40)]
    n_evals: usize,
    /// Independent tuning repetitions, pooled into one result.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 30.0)]
    budget_mult: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory (meta_archive.jsonl, best.conf).
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RanksArgs {
    /// Sweep summary CSV files (repeatable).
    #[arg(long = "summary", required = true)]
    summaries: Vec<PathBuf>,
    /// Budget checkpoints to rank at: numbers and/or "final".
    #[arg(long, default_value = "1,100,final")]
    at: String,
}

#[derive(Args)]
struct RegretArgs {
    /// Manifest of the run to analyze.
    #[arg(long)]
    manifest: PathBuf,
    /// Archive written by that run.
    #[arg(long)]
    archive: PathBuf,
    /// Uniform sample size behind the regret references.
    #[arg(long, default_value_t = 1000)]
    ref_evals: usize,
}

// --- error plumbing ----------------------------------------------------------

struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> CliError {
        CliError { kind, message: message.into() }
    }
}

macro_rules! from_error {
    ($ty:ty, $kind:expr) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> CliError {
                CliError::new($kind, e.to_string())
            }
        }
    };
}

from_error!(OptError, "config");
from_error!(ObjError, "scenario");
from_error!(ManifestError, "manifest");
from_error!(MetaError, "meta");
from_error!(ArchiveError, "archive");
from_error!(std::io::Error, "io");
from_error!(csv::Error, "format");

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Tune(a) => cmd_tune(a),
        Cmd::Ranks(a) => cmd_ranks(a),
        Cmd::Regret(a) => cmd_regret(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let obj = serde_json::json!({ "error": e.kind, "message": e.message });
            eprintln!("{}", obj);
            ExitCode::FAILURE
        }
    }
}

// --- shared helpers ----------------------------------------------------------

fn parse_scenario(args: &ScenarioArgs) -> CliResult<(ScenarioKind, InstanceSet)> {
    let kind = ScenarioKind::from_token(&args.scenario)
        .ok_or_else(|| CliError::new("scenario", format!("unknown scenario {:?}", args.scenario)))?;
    let set = make_scenario(kind, args.instances, args.master_seed)?;
    Ok((kind, set))
}

fn parse_preset(token: &str) -> CliResult<PresetName> {
    PresetName::from_token(&token.to_uppercase())
        .ok_or_else(|| CliError::new("config", format!("unknown preset {:?} (RS, SH, HB, BOHB)", token)))
}

fn label_for(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "config".into())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(CliError::from)
}

/// Builds the spec an algorithm label stands for, at the given budget.
enum AlgoSource {
    Preset(PresetName),
    File(String),
}

impl AlgoSource {
    fn spec(&self, eta: f64, mu1: Option<usize>, budget: f64, r_min: f64) -> CliResult<OptimizerSpec> {
        match self {
            AlgoSource::Preset(name) => {
                let m = mu1.unwrap_or_else(|| canonical_mu1(*name, eta, r_min));
                Ok(preset(*name, eta, r_min, m, budget))
            }
            AlgoSource::File(text) => {
                let mut spec = optimizer::parse_spec(text, budget, r_min)?;
                spec.budget = budget;
                if spec.r_min < r_min {
                    spec.r_min = r_min;
                }
                spec.validate()?;
                Ok(spec)
            }
        }
    }
}

// --- run ---------------------------------------------------------------------

fn cmd_run(args: RunArgs) -> CliResult<()> {
    fs::create_dir_all(&args.out)?;

    if let Some(manifest_path) = &args.from_manifest {
        if args.config_file.is_some() || args.preset.is_some() {
            return Err(CliError::new(
                "config",
                "--from-manifest replaces --config-file/--preset; give only one source",
            ));
        }
        let man = RunManifest::load(manifest_path)?;
        let arch = man.replay()?;
        let kind = man.scenario_kind()?;
        let scen = make_scenario(kind, man.scenario_instances, man.scenario_seed)?;
        let space = scen.instances[man.instance].as_ref().space();
        let stem = format!("replay_{}_i{}_s{}", man.scenario, man.instance, man.run_seed);
        let archive_path = args.out.join(format!("{stem}.jsonl"));
        let mut buf = Vec::new();
        archive::write_jsonl(space, &arch, &mut buf)?;
        fs::write(&archive_path, &buf)?;
        man.save(&args.out.join(format!("{stem}.manifest.json")))?;
        println!(
            "replayed {} records -> {}",
            arch.len(),
            archive_path.display()
        );
        return Ok(());
    }

    let (kind, scen) = parse_scenario(&args.scenario)?;
    if args.instance >= scen.instances.len() {
        return Err(CliError::new(
            "scenario",
            format!("instance {} out of range (0..{})", args.instance, scen.instances.len()),
        ));
    }
    let obj = scen.instances[args.instance].as_ref();
    let budget = args.budget_mult * obj.space().dimension() as f64;

    let (label, source) = match (&args.config_file, &args.preset) {
        (Some(path), None) => (label_for(path), AlgoSource::File(fs::read_to_string(path)?)),
        (None, Some(p)) => {
            let name = parse_preset(p)?;
            (name.token().to_lowercase(), AlgoSource::Preset(name))
        }
        _ => {
            return Err(CliError::new(
                "config",
                "exactly one of --config-file and --preset is required",
            ))
        }
    };
    let spec = source.spec(args.eta, args.mu1, budget, obj.r_min())?;

    let mut rng = seed::rng_from(args.seed);
    let arch = optimizer::run(&spec, obj, &mut rng)?;

    let stem = format!("{}_{}_i{}_s{}", label, kind.token(), args.instance, args.seed);
    let archive_path = args.out.join(format!("{stem}.jsonl"));
    let mut buf = Vec::new();
    archive::write_jsonl(obj.space(), &arch, &mut buf)?;
    fs::write(&archive_path, &buf)?;

    let man = RunManifest::new(
        &spec,
        kind,
        args.scenario.master_seed,
        args.scenario.instances,
        args.instance,
        args.seed,
    );
    man.save(&args.out.join(format!("{stem}.manifest.json")))?;

    let best = optimizer::final_best(&arch).map(|r| r.y);
    match best {
        Some(y) => println!("{} records, best cost {} -> {}", arch.len(), y, archive_path.display()),
        None => println!("{} records -> {}", arch.len(), archive_path.display()),
    }
    Ok(())
}

// --- sweep -------------------------------------------------------------------

struct CellResult {
    rows: Vec<[String; 7]>,
    archive_name: String,
    archive_bytes: Vec<u8>,
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    if args.presets.is_empty() && args.config_files.is_empty() {
        return Err(CliError::new("config", "give at least one --preset or --config-file"));
    }
    let (kind, scen) = parse_scenario(&args.scenario)?;
    if scen.test.is_empty() {
        return Err(CliError::new("scenario", "scenario has no test instances"));
    }
    fs::create_dir_all(args.out_dir.join("archives"))?;

    let mut algos: Vec<(String, AlgoSource)> = Vec::new();
    for p in &args.presets {
        let name = parse_preset(p)?;
        algos.push((name.token().to_lowercase(), AlgoSource::Preset(name)));
    }
    for path in &args.config_files {
        algos.push((label_for(path), AlgoSource::File(fs::read_to_string(path)?)));
    }
    let mut seen = BTreeMap::new();
    for (label, _) in &algos {
        *seen.entry(label.clone()).or_insert(0usize) += 1;
    }
    let dups: Vec<_> = seen.iter().filter(|(_, &n)| n > 1).map(|(l, _)| l.clone()).collect();
    if !dups.is_empty() {
        return Err(CliError::new("config", format!("duplicate algorithm labels: {}", dups.join(", "))));
    }

    let sc_manifest =
        ScenarioManifest::build(kind, args.scenario.instances, args.scenario.master_seed, args.ref_evals)?;
    sc_manifest.save(&args.out_dir.join("scenario.json"))?;

    // Flatten the cell grid; each cell owns its summary rows so assembly
    // stays order-deterministic regardless of the worker schedule.
    let cells: Vec<(usize, usize, u64)> = (0..algos.len())
        .flat_map(|a| {
            scen.test.iter().flat_map(move |&inst| (0..args.seeds).map(move |rep| (a, inst, rep)))
        })
        .collect();

    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|&(a, inst, rep)| -> CellResult {
            let (label, source) = &algos[a];
            let obj = scen.instances[inst].as_ref();
            let budget = args.budget_mult * obj.space().dimension() as f64;
            let cps = analysis::checkpoints(budget);
            let cell_seed = seed::derive(args.seed, "cell", &[a as u64, inst as u64, rep]);
            let refs = &sc_manifest.references[inst];
            let archive_name = format!("{}_i{}_s{}.jsonl", label, inst, rep);

            let outcome = source.spec(args.eta, None, budget, obj.r_min()).and_then(|spec| {
                let mut rng = seed::rng_from(cell_seed);
                optimizer::run(&spec, obj, &mut rng).map_err(CliError::from)
            });
            match outcome {
                Ok(arch) => {
                    let traj = analysis::trajectory(arch.records(), budget, &cps);
                    let rows = cps
                        .iter()
                        .zip(&traj)
                        .map(|(cp, best)| {
                            let (b, g) = match best {
                                Some(y) => {
                                    let r = analysis::normalized_regret(*y, refs.min_ref, refs.median_ref);
                                    (format!("{y}"), format!("{r}"))
                                }
                                None => (String::new(), String::new()),
                            };
                            [
                                label.clone(),
                                inst.to_string(),
                                rep.to_string(),
                                format!("{cp}"),
                                b,
                                g,
                                "ok".into(),
                            ]
                        })
                        .collect();
                    let mut bytes = Vec::new();
                    let _ = archive::write_jsonl(obj.space(), &arch, &mut bytes);
                    CellResult { rows, archive_name, archive_bytes: bytes }
                }
                Err(e) => {
                    let rows = cps
                        .iter()
                        .map(|cp| {
                            [
                                label.clone(),
                                inst.to_string(),
                                rep.to_string(),
                                format!("{cp}"),
                                String::new(),
                                String::new(),
                                format!("failed: {}", e.message),
                            ]
                        })
                        .collect();
                    CellResult { rows, archive_name, archive_bytes: Vec::new() }
                }
            }
        })
        .collect();

    let summary_path = args.out_dir.join("summary.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["algo", "instance", "seed", "checkpoint", "best", "regret", "status"])
        .map_err(CliError::from)?;
    for cell in &results {
        for row in &cell.rows {
            w.write_record(row).map_err(CliError::from)?;
        }
        if !cell.archive_bytes.is_empty() {
            fs::write(args.out_dir.join("archives").join(&cell.archive_name), &cell.archive_bytes)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::new("format", e.to_string()))?;
    fs::write(&summary_path, bytes)?;

    let failed = results.iter().filter(|c| c.archive_bytes.is_empty()).count();
    println!(
        "{} cells ({} failed) -> {}",
        results.len(),
        failed,
        summary_path.display()
    );
    Ok(())
}

// --- tune --------------------------------------------------------------------

fn cmd_tune(args: TuneArgs) -> CliResult<()> {
    let (_, scen) = parse_scenario(&args.scenario)?;
    let variant = Variant::from_token(&args.variant)
        .ok_or_else(|| CliError::new("meta", format!("unknown variant {:?} (gamma-star, g1..g7)", args.variant)))?;
    let method = TuneMethod::from_token(&args.method)
        .ok_or_else(|| CliError::new("meta", format!("unknown method {:?} (random, bo_lcb)", args.method)))?;
    if args.repeats == 0 {
        return Err(CliError::new("meta", "need at least one repetition"));
    }
    fs::create_dir_all(&args.out_dir)?;

    let mspace = MetaSearchSpace::new(variant);
    let mut pooled = MetaArchive::default();
    let mut best: Option<(f64, OptimizerSpec)> = None;
    for rep in 0..args.repeats {
        let rep_seed = seed::derive(args.seed, "tune", &[rep as u64]);
        let (spec, arch) =
            metaopt::tune(&mspace, &scen, args.budget_mult, args.n_evals, method, rep_seed)?;
        let rep_best = arch
            .rows
            .iter()
            .map(|r| r.aggregate)
            .fold(f64::INFINITY, f64::min);
        println!("repetition {}: best aggregate {}", rep, rep_best);
        if best.as_ref().is_none_or(|(b, _)| rep_best < *b) {
            best = Some((rep_best, spec));
        }
        pooled.rows.extend(arch.rows);
    }
    let (best_aggregate, best_spec) = best.expect("repeats >= 1");

    let mut buf = Vec::new();
    pooled.write_jsonl(&mut buf)?;
    fs::write(args.out_dir.join("meta_archive.jsonl"), &buf)?;
    write_text(&args.out_dir.join("best.conf"), &optimizer::serialize_spec(&best_spec))?;

    println!(
        "pooled best aggregate {} over {} meta-evaluations -> {}",
        best_aggregate,
        pooled.rows.len(),
        args.out_dir.join("best.conf").display()
    );
    Ok(())
}

// --- ranks -------------------------------------------------------------------

#[derive(Debug, Clone)]
struct SummaryRow {
    algo: String,
    instance: usize,
    checkpoint: f64,
    best: Option<f64>,
}

fn read_summary(path: &Path) -> CliResult<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("").to_string();
        let best = rec.get(4).unwrap_or("");
        rows.push(SummaryRow {
            algo: get(0),
            instance: get(1)
                .parse()
                .map_err(|_| CliError::new("format", format!("bad instance field in {}", path.display())))?,
            checkpoint: get(3)
                .parse()
                .map_err(|_| CliError::new("format", format!("bad checkpoint field in {}", path.display())))?,
            best: if best.is_empty() { None } else { best.parse().ok() },
        });
    }
    Ok(rows)
}

fn cmd_ranks(args: RanksArgs) -> CliResult<()> {
    let mut rows = Vec::new();
    for path in &args.summaries {
        rows.extend(read_summary(path)?);
    }
    if rows.is_empty() {
        return Err(CliError::new("format", "summaries contain no data rows"));
    }

    // Algorithm order: first appearance; instances: sorted.
    let mut algo_order: Vec<String> = Vec::new();
    for r in &rows {
        if !algo_order.contains(&r.algo) {
            algo_order.push(r.algo.clone());
        }
    }
    let mut instances: Vec<usize> = rows.iter().map(|r| r.instance).collect();
    instances.sort_unstable();
    instances.dedup();

    // Every instance must carry every algorithm.
    let mut offenders = Vec::new();
    for &inst in &instances {
        for algo in &algo_order {
            if !rows.iter().any(|r| r.instance == inst && &r.algo == algo) {
                offenders.push(format!("instance {} missing {}", inst, algo));
            }
        }
    }
    if !offenders.is_empty() {
        return Err(CliError::new("mismatch", offenders.join("; ")));
    }

    let final_cp = rows.iter().map(|r| r.checkpoint).fold(f64::NEG_INFINITY, f64::max);
    let targets: Vec<(String, f64)> = args
        .at
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            if tok == "final" {
                Ok(("final".to_string(), final_cp))
            } else {
                tok.parse::<f64>()
                    .map(|v| (tok.to_string(), v))
                    .map_err(|_| CliError::new("format", format!("bad --at entry {:?}", tok)))
            }
        })
        .collect::<CliResult<_>>()?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "at,algo,mean_rank")?;
    for (at_label, at_value) in &targets {
        let mut sums = vec![0.0; algo_order.len()];
        for &inst in &instances {
            let values: Vec<f64> = algo_order
                .iter()
                .map(|algo| {
                    // Mean over repetitions of the best cost at the largest
                    // checkpoint not exceeding the target; cells with no
                    // completed evaluation rank last.
                    let cp = rows
                        .iter()
                        .filter(|r| &r.algo == algo && r.instance == inst && r.checkpoint <= at_value + 1e-9)
                        .map(|r| r.checkpoint)
                        .fold(f64::NEG_INFINITY, f64::max);
                    let vals: Vec<f64> = rows
                        .iter()
                        .filter(|r| {
                            &r.algo == algo
                                && r.instance == inst
                                && (r.checkpoint - cp).abs() < 1e-12
                        })
                        .map(|r| r.best.unwrap_or(f64::INFINITY))
                        .collect();
                    if vals.is_empty() {
                        f64::INFINITY
                    } else {
                        vals.iter().sum::<f64>() / vals.len() as f64
                    }
                })
                .collect();
            for (i, rank) in analysis::average_ranks(&values).iter().enumerate() {
                sums[i] += rank;
            }
        }
        for (algo, sum) in algo_order.iter().zip(&sums) {
            writeln!(out, "{},{},{}", at_label, algo, sum / instances.len() as f64)?;
        }
    }
    Ok(())
}

// --- regret ------------------------------------------------------------------

fn cmd_regret(args: RegretArgs) -> CliResult<()> {
    let man = RunManifest::load(&args.manifest)?;
    let spec = man.spec()?;
    let kind = man.scenario_kind()?;
    let scen = make_scenario(kind, man.scenario_instances, man.scenario_seed)?;
    if man.instance >= scen.instances.len() {
        return Err(CliError::new("manifest", format!("instance {} out of range", man.instance)));
    }
    let obj = scen.instances[man.instance].as_ref();

    let text = fs::read_to_string(&args.archive)?;
    let arch: Archive = archive::read_jsonl(obj.space(), &text)?;

    let (min_ref, med_ref) = analysis::reference_stats(
        obj,
        args.ref_evals,
        mfhpo::manifest::ref_seed(man.scenario_seed, man.instance),
    );
    if !(med_ref - min_ref).is_finite() || med_ref - min_ref <= 0.0 {
        return Err(CliError::new(
            "scenario",
            format!("degenerate regret references: min {} median {}", min_ref, med_ref),
        ));
    }

    let cps = analysis::checkpoints(spec.budget);
    let traj = analysis::trajectory(arch.records(), spec.budget, &cps);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "checkpoint,best,regret")?;
    for (cp, best) in cps.iter().zip(&traj) {
        match best {
            Some(y) => {
                let r = analysis::normalized_regret(*y, min_ref, med_ref);
                writeln!(out, "{},{},{}", cp, y, r)?;
            }
            None => writeln!(out, "{},,", cp)?,
        }
    }
    Ok(())
}
