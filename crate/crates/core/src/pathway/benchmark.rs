//! Benchmark files and per-depth recovery.
//!
//! One record per line: `reactants | target | depth [| intermediate;...]`,
//! where the target is SMILES or a formula (see [`TargetSpec::parse`]).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chem::{parse_smiles, Molecule};
use crate::dataio::LineError;

use super::{search, SearchConfig, StepPredictor, TargetSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRecord {
    /// The record line, trimmed; also its journal key.
    pub text: String,
    pub reactants: Molecule,
    pub target: TargetSpec,
    pub depth: usize,
    pub intermediates: Vec<Molecule>,
}

pub fn parse_benchmark_line(line: &str) -> Result<BenchmarkRecord, String> {
    let fields: Vec<&str> = line.split('|').map(str::trim).collect();
    if !(3..=4).contains(&fields.len()) {
        return Err(format!("expected 3 or 4 '|'-separated fields, found {}", fields.len()));
    }
    let reactants = parse_smiles(fields[0]).map_err(|e| format!("reactants: {e}"))?;
    let target = TargetSpec::parse(fields[1]).map_err(|e| format!("target: {e}"))?;
    let depth: usize = fields[2].parse().map_err(|_| format!("bad depth '{}'", fields[2]))?;
    let mut intermediates = Vec::new();
    if let Some(list) = fields.get(3) {
        for s in list.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            intermediates.push(parse_smiles(s).map_err(|e| format!("intermediate '{s}': {e}"))?);
        }
    }
    Ok(BenchmarkRecord {
        text: line.trim().to_string(),
        reactants,
        target,
        depth,
        intermediates,
    })
}

/// Malformed records are logged, reported and skipped.
pub fn read_benchmark<R: Read>(reader: R) -> std::io::Result<(Vec<BenchmarkRecord>, Vec<LineError>)> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match parse_benchmark_line(t) {
            Ok(r) => out.push(r),
            Err(message) => {
                log::warn!("benchmark line {}: {message}", i + 1);
                errors.push(LineError {
                    line: i + 1,
                    text: t.to_string(),
                    message,
                });
            }
        }
    }
    Ok((out, errors))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub record: String,
    pub depth: usize,
    pub recovered: bool,
    pub found_depth: Option<usize>,
    pub expanded: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthRow {
    pub depth: usize,
    pub recovered: usize,
    pub total: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<DepthRow>,
    pub recovered: usize,
    pub total: usize,
    pub percent: f64,
    /// Per record, in input order.
    pub entries: Vec<JournalEntry>,
}

impl BenchmarkReport {
    fn from_entries(entries: Vec<JournalEntry>) -> BenchmarkReport {
        let mut by_depth: BTreeMap<usize, DepthRow> = BTreeMap::new();
        for e in &entries {
            let row = by_depth.entry(e.depth).or_insert(DepthRow {
                depth: e.depth,
                ..DepthRow::default()
            });
            row.total += 1;
            row.recovered += e.recovered as usize;
        }
        let total = entries.len();
        let recovered = entries.iter().filter(|e| e.recovered).count();
        BenchmarkReport {
            rows: by_depth.into_values().collect(),
            recovered,
            total,
            percent: if total == 0 { 0.0 } else { 100.0 * recovered as f64 / total as f64 },
            entries,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("depth,recovered,total\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.depth, r.recovered, r.total);
        }
        let _ = writeln!(s, "all,{},{}", self.recovered, self.total);
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

fn read_journal(path: &Path) -> std::io::Result<HashMap<String, JournalEntry>> {
    let mut done = HashMap::new();
    let Ok(file) = std::fs::File::open(path) else {
        return Ok(done);
    };
    for line in BufReader::new(file).lines() {
        let line = line?;
        // a torn last line from an interrupted run is ignored
        if let Ok(e) = serde_json::from_str::<JournalEntry>(&line) {
            done.insert(e.record.clone(), e);
        }
    }
    Ok(done)
}

/// Searches every record with `config` (its target and known intermediates
/// replaced per record). With a journal path, finished records are appended
/// as they complete and skipped on a rerun.
pub fn eval_benchmark(
    records: &[BenchmarkRecord],
    config: &SearchConfig,
    predictor: &dyn StepPredictor,
    journal: Option<&Path>,
) -> std::io::Result<BenchmarkReport> {
    let done = match journal {
        Some(p) => read_journal(p)?,
        None => HashMap::new(),
    };
    let mut sink = match journal {
        Some(p) => Some(std::fs::OpenOptions::new().create(true).append(true).open(p)?),
        None => None,
    };
    let mut entries = Vec::with_capacity(records.len());
    for rec in records {
        if let Some(e) = done.get(&rec.text) {
            entries.push(e.clone());
            continue;
        }
        let cfg = SearchConfig {
            target: rec.target.clone(),
            known_intermediates: rec.intermediates.clone(),
            ..config.clone()
        };
        let r = search(&rec.reactants, &cfg, predictor);
        let entry = JournalEntry {
            record: rec.text.clone(),
            depth: rec.depth,
            recovered: r.found(),
            found_depth: r.pathways.iter().map(|p| p.depth).min(),
            expanded: r.expanded,
        };
        log::info!("benchmark depth {}: recovered={} expanded={}", rec.depth, entry.recovered, entry.expanded);
        if let Some(f) = sink.as_mut() {
            writeln!(f, "{}", serde_json::to_string(&entry).expect("plain data"))?;
            f.flush()?;
        }
        entries.push(entry);
    }
    Ok(BenchmarkReport::from_entries(entries))
}
