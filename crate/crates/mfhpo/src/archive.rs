//! Append-only evaluation archive with JSONL/CSV serialization.
//!
//! Every evaluation lands here as an [`EvalRecord`]; insertion order is the
//! authoritative chronology. One optimizer run owns one archive (single
//! writer), and all queries (`best`, `split_good_bad`, surrogate training
//! sets) read from it.

use std::collections::HashMap;
use std::io::Write;

use serde_json::Value;
use thiserror::Error;

use crate::space::{Config, ParamKind, ParamSpace, ParamValue, SpaceError};

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("line {line}: {msg}")]
    Json { line: usize, msg: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One completed evaluation of a config at a fidelity.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub config: Config,
    /// Fidelity in (0, 1].
    pub r: f64,
    /// Observed cost, lower is better.
    pub y: f64,
    /// Cumulative budget fraction when this evaluation was scheduled.
    pub budget_at: f64,
    pub batch_id: u64,
    pub bracket_id: u64,
    pub stage_id: u64,
    /// Replication identifier for the evaluation noise stream.
    pub seed_tag: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Archive {
    records: Vec<EvalRecord>,
}

impl Archive {
    pub fn new() -> Self {
        Archive::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn append(&mut self, rec: EvalRecord) {
        debug_assert!(rec.r > 0.0 && rec.r <= 1.0, "fidelity {} outside (0,1]", rec.r);
        debug_assert!(
            self.records.last().map_or(true, |l| rec.budget_at >= l.budget_at),
            "budget_at must be nondecreasing"
        );
        self.records.push(rec);
    }

    /// Record with minimal y, ties broken by earliest insertion. With
    /// `at_full_fidelity` only r == 1 records are considered.
    pub fn best(&self, at_full_fidelity: bool) -> Option<&EvalRecord> {
        let mut out: Option<&EvalRecord> = None;
        for rec in &self.records {
            if at_full_fidelity && rec.r < 1.0 {
                continue;
            }
            if out.map_or(true, |b| rec.y < b.y) {
                out = Some(rec);
            }
        }
        out
    }

    /// One representative record per distinct config: the evaluation at its
    /// highest fidelity (the least-biased cost estimate), ties broken by the
    /// most recent evaluation.
    pub fn per_config_best_fidelity(&self) -> Vec<&EvalRecord> {
        let mut chosen: HashMap<Vec<u64>, usize> = HashMap::new();
        for (i, rec) in self.records.iter().enumerate() {
            let key = rec.config.identity_key();
            match chosen.get_mut(&key) {
                None => {
                    chosen.insert(key, i);
                }
                Some(j) => {
                    if rec.r >= self.records[*j].r {
                        *j = i;
                    }
                }
            }
        }
        let mut idxs: Vec<usize> = chosen.into_values().collect();
        idxs.sort_unstable();
        idxs.into_iter().map(|i| &self.records[i]).collect()
    }

    /// Partitions distinct configs (each at its highest evaluated fidelity)
    /// into the best max(⌈fraction·n⌉, min_good) by cost and the rest. Both
    /// halves come back sorted by (y, insertion order).
    pub fn split_good_bad(&self, fraction: f64, min_good: usize) -> (Vec<&EvalRecord>, Vec<&EvalRecord>) {
        let mut reps: Vec<(usize, &EvalRecord)> = self
            .per_config_best_fidelity()
            .into_iter()
            .enumerate()
            .collect();
        reps.sort_by(|(ia, a), (ib, b)| a.y.partial_cmp(&b.y).unwrap_or(std::cmp::Ordering::Equal).then(ia.cmp(ib)));
        let n = reps.len();
        let n_good = ((fraction * n as f64).ceil() as usize).max(min_good).min(n);
        let mut good = Vec::with_capacity(n_good);
        let mut bad = Vec::with_capacity(n - n_good);
        for (i, (_, rec)) in reps.into_iter().enumerate() {
            if i < n_good {
                good.push(rec);
            } else {
                bad.push(rec);
            }
        }
        (good, bad)
    }
}

// --- serialization --------------------------------------------------------
//
// JSONL: one record per line, fields in a fixed order so that identical runs
// produce byte-identical files:
//   {"config":{...declaration order...},"r":..,"y":..,"budget_at":..,
//    "batch_id":..,"bracket_id":..,"stage_id":..,"seed_tag":..}
// Inactive parameters serialize as null, categoricals as their level string.

fn json_num(v: f64) -> String {
    // serde_json's shortest round-trip formatting; keeps int/float distinct.
    serde_json::to_string(&v).unwrap_or_else(|_| "null".into())
}

pub fn record_to_json(space: &ParamSpace, rec: &EvalRecord) -> String {
    let mut s = String::from("{\"config\":{");
    for (i, p) in space.params().iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&serde_json::to_string(&p.name).unwrap());
        s.push(':');
        match (&p.kind, rec.config.values[i]) {
            (_, ParamValue::Inactive) => s.push_str("null"),
            (ParamKind::Categorical { levels }, ParamValue::Cat(l)) => {
                s.push_str(&serde_json::to_string(&levels[l]).unwrap())
            }
            (_, ParamValue::Int(v)) => s.push_str(&v.to_string()),
            (_, ParamValue::Float(v)) => s.push_str(&json_num(v)),
            (_, other) => panic!("config value {:?} does not match parameter {}", other, p.name),
        }
    }
    s.push_str("},\"r\":");
    s.push_str(&json_num(rec.r));
    s.push_str(",\"y\":");
    s.push_str(&json_num(rec.y));
    s.push_str(",\"budget_at\":");
    s.push_str(&json_num(rec.budget_at));
    s.push_str(",\"batch_id\":");
    s.push_str(&rec.batch_id.to_string());
    s.push_str(",\"bracket_id\":");
    s.push_str(&rec.bracket_id.to_string());
    s.push_str(",\"stage_id\":");
    s.push_str(&rec.stage_id.to_string());
    s.push_str(",\"seed_tag\":");
    s.push_str(&rec.seed_tag.to_string());
    s.push('}');
    s
}

pub fn record_from_json(space: &ParamSpace, line: &str, lineno: usize) -> Result<EvalRecord, ArchiveError> {
    let err = |msg: String| ArchiveError::Json { line: lineno, msg };
    let v: Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| err("record is not an object".into()))?;
    let cfg = obj
        .get("config")
        .and_then(Value::as_object)
        .ok_or_else(|| err("missing config object".into()))?;
    let mut values = Vec::with_capacity(space.dimension());
    for p in space.params() {
        let raw = cfg.get(&p.name).ok_or_else(|| err(format!("missing parameter {:?}", p.name)))?;
        values.push(match (raw, &p.kind) {
            (Value::Null, _) => ParamValue::Inactive,
            (Value::Number(n), ParamKind::Continuous { .. }) => {
                ParamValue::Float(n.as_f64().ok_or_else(|| err(format!("{}: bad number", p.name)))?)
            }
            (Value::Number(n), ParamKind::Integer { .. }) => {
                let x = n
                    .as_i64()
                    .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64))
                    .ok_or_else(|| err(format!("{}: expected integer", p.name)))?;
                ParamValue::Int(x)
            }
            (Value::String(s), ParamKind::Categorical { .. }) => {
                let i = space
                    .index_of(&p.name)
                    .and_then(|ax| space.level_index(ax, s))
                    .ok_or_else(|| err(format!("{}: unknown level {:?}", p.name, s)))?;
                ParamValue::Cat(i)
            }
            _ => return Err(err(format!("{}: value has the wrong type", p.name))),
        });
    }
    let config = Config { values };
    space.validate_config(&config)?;
    let fnum = |key: &str| -> Result<f64, ArchiveError> {
        obj.get(key).and_then(Value::as_f64).ok_or_else(|| err(format!("missing number {:?}", key)))
    };
    let fint = |key: &str| -> Result<u64, ArchiveError> {
        obj.get(key).and_then(Value::as_u64).ok_or_else(|| err(format!("missing counter {:?}", key)))
    };
    let rec = EvalRecord {
        config,
        r: fnum("r")?,
        y: fnum("y")?,
        budget_at: fnum("budget_at")?,
        batch_id: fint("batch_id")?,
        bracket_id: fint("bracket_id")?,
        stage_id: fint("stage_id")?,
        seed_tag: fint("seed_tag")?,
    };
    if !(rec.r > 0.0 && rec.r <= 1.0) {
        return Err(err(format!("fidelity {} outside (0,1]", rec.r)));
    }
    Ok(rec)
}

pub fn write_jsonl<W: Write>(space: &ParamSpace, archive: &Archive, mut w: W) -> Result<(), ArchiveError> {
    for rec in archive.records() {
        w.write_all(record_to_json(space, rec).as_bytes())?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(space: &ParamSpace, text: &str) -> Result<Archive, ArchiveError> {
    let mut a = Archive::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        a.append(record_from_json(space, line, i + 1)?);
    }
    Ok(a)
}

/// CSV export: one column per parameter (declaration order) followed by the
/// record fields; inactive parameters are empty cells.
pub fn write_csv<W: Write>(space: &ParamSpace, archive: &Archive, w: W) -> Result<(), ArchiveError> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = space.params().iter().map(|p| p.name.clone()).collect();
    header.extend(["r", "y", "budget_at", "batch_id", "bracket_id", "stage_id", "seed_tag"].map(String::from));
    wtr.write_record(&header)?;
    for rec in archive.records() {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for (i, p) in space.params().iter().enumerate() {
            row.push(match (&p.kind, rec.config.values[i]) {
                (_, ParamValue::Inactive) => String::new(),
                (ParamKind::Categorical { levels }, ParamValue::Cat(l)) => levels[l].clone(),
                (_, ParamValue::Int(v)) => v.to_string(),
                (_, ParamValue::Float(v)) => json_num(v),
                (_, other) => panic!("config value {:?} does not match parameter {}", other, p.name),
            });
        }
        row.push(json_num(rec.r));
        row.push(json_num(rec.y));
        row.push(json_num(rec.budget_at));
        row.push(rec.batch_id.to_string());
        row.push(rec.bracket_id.to_string());
        row.push(rec.stage_id.to_string());
        row.push(rec.seed_tag.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use crate::space::{ParamDef, Scale};

    fn space() -> ParamSpace {
        ParamSpace::new(vec![
            ParamDef::continuous("lr", 1e-3, 1.0, Scale::Log),
            ParamDef::integer("units", 2, 200, Scale::Log),
            ParamDef::categorical("algo", &["svm", "rf"]),
            ParamDef::continuous("gamma", 0.1, 10.0, Scale::Log).when("algo", &["svm"]),
        ])
        .unwrap()
    }

    fn rec(config: Config, r: f64, y: f64, budget_at: f64) -> EvalRecord {
        EvalRecord { config, r, y, budget_at, batch_id: 0, bracket_id: 0, stage_id: 0, seed_tag: 7 }
    }

    fn sample_archive(n: usize, seed: u64) -> (ParamSpace, Archive) {
        let s = space();
        let mut rng = rng_from(seed);
        let mut a = Archive::new();
        for (i, c) in s.sample_uniform(n, &mut rng).into_iter().enumerate() {
            a.append(rec(c, if i % 3 == 0 { 1.0 } else { 0.25 }, (i as f64 * 7.3) % 5.0, i as f64 * 0.01));
        }
        (s, a)
    }

    #[test]
    fn best_picks_min_y_with_earliest_tie() {
        let s = space();
        let mut rng = rng_from(1);
        let cs = s.sample_uniform(6, &mut rng);
        let mut a = Archive::new();
        for (c, (r, y)) in cs.into_iter().zip([(0.5, 3.0), (1.0, 1.0), (0.5, 2.0), (0.5, 1.0), (0.25, 5.0), (1.0, 4.0)])
        {
            a.append(rec(c, r, y, 0.0));
        }
        assert_eq!(a.best(false).unwrap().y, 1.0);
        assert_eq!(a.best(false).unwrap().r, 1.0, "tie broken by earlier insertion");
        assert_eq!(a.best(true).unwrap().y, 1.0);
        let mut only_low = Archive::new();
        let mut rng = rng_from(2);
        only_low.append(rec(s.sample_one(&mut rng), 0.5, 1.0, 0.0));
        assert!(only_low.best(true).is_none());
        assert!(Archive::new().best(false).is_none());
    }

    #[test]
    fn best_is_monotone_under_append() {
        let (_, a) = sample_archive(60, 3);
        let mut acc = Archive::new();
        let mut prev = f64::INFINITY;
        for r in a.records() {
            acc.append(r.clone());
            let b = acc.best(false).unwrap().y;
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn split_sizes_follow_ceiling_and_clamp() {
        let (_, a) = sample_archive(10, 4);
        let (good, bad) = a.split_good_bad(0.2, 1);
        assert_eq!(good.len(), 2);
        assert_eq!(bad.len(), 8);
        let (s, mut a3) = (space(), Archive::new());
        let mut rng = rng_from(5);
        for (i, c) in s.sample_uniform(3, &mut rng).into_iter().enumerate() {
            a3.append(rec(c, 1.0, i as f64, 0.0));
        }
        let (good, bad) = a3.split_good_bad(0.15, 4);
        assert_eq!(good.len(), 3, "min_good clamps to n");
        assert!(bad.is_empty());
    }

    #[test]
    fn split_dedups_to_highest_fidelity() {
        let s = space();
        let mut rng = rng_from(6);
        let c = s.sample_one(&mut rng);
        let other = s.sample_one(&mut rng);
        let mut a = Archive::new();
        a.append(rec(c.clone(), 0.25, 10.0, 0.0));
        a.append(rec(other, 1.0, 5.0, 0.1));
        a.append(rec(c, 1.0, 2.0, 0.2));
        let (good, bad) = a.split_good_bad(0.5, 1);
        assert_eq!(good.len() + bad.len(), 2, "two distinct configs");
        assert_eq!(good[0].y, 2.0, "the r=1 record represents the duplicated config");
    }

    #[test]
    fn split_partition_order_invariant() {
        let (_, a) = sample_archive(40, 7);
        let distinct = a.per_config_best_fidelity().len();
        for (frac, mg) in [(0.15, 1), (0.15, 5), (0.5, 1), (0.9, 2)] {
            let (good, bad) = a.split_good_bad(frac, mg);
            assert_eq!(good.len() + bad.len(), distinct);
            let forced = good.len() > (frac * distinct as f64).ceil() as usize;
            if !(good.is_empty() || bad.is_empty() || forced) {
                assert!(good.last().unwrap().y <= bad[0].y);
            }
        }
    }

    #[test]
    fn jsonl_round_trips_and_is_stable() {
        let (s, a) = sample_archive(25, 8);
        let mut buf = Vec::new();
        write_jsonl(&s, &a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = read_jsonl(&s, &text).unwrap();
        assert_eq!(back.records(), a.records());
        let mut buf2 = Vec::new();
        write_jsonl(&s, &back, &mut buf2).unwrap();
        assert_eq!(text.as_bytes(), buf2.as_slice(), "re-serialization is byte-identical");
        assert!(text.lines().next().unwrap().starts_with("{\"config\":{\"lr\":"));
    }

    #[test]
    fn jsonl_rejects_malformed_lines() {
        let s = space();
        assert!(read_jsonl(&s, "{\"config\":{}}\n").is_err());
        assert!(read_jsonl(&s, "not json\n").is_err());
        let (s2, a) = sample_archive(1, 9);
        let mut buf = Vec::new();
        write_jsonl(&s2, &a, &mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap().replace("\"r\":", "\"r\":9e9,\"old_r\":");
        assert!(read_jsonl(&s2, &line).is_err(), "fidelity outside (0,1] is rejected");
    }

    #[test]
    fn csv_export_has_one_row_per_record() {
        let (s, a) = sample_archive(12, 10);
        let mut buf = Vec::new();
        write_csv(&s, &a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 13);
        assert!(text.lines().next().unwrap().starts_with("lr,units,algo,gamma,r,y,"));
    }
}
