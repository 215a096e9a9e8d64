//! Step-record datasets: loading, saving, splits, the mixed set, statistics
//! and top-N scoring.

mod accuracy;
mod stats;

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ptgen::sample_for_training;
use crate::reaction::{parse_step_record, write_step_record, ElementaryStep};

pub use accuracy::{top_n_accuracy, AccuracyTable, DEFAULT_NS};
pub use stats::{dataset_stats, DatasetStats};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {bad} of {total} lines malformed (limit {limit:.1}%)")]
    TooMalformed { path: String, bad: usize, total: usize, limit: f64 },
    #[error("split fractions must be non-negative and sum to 1, got {0:?}")]
    BadSplit([f64; 3]),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    #[default]
    Curated,
    Combinatorial,
    Mixed,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub kind: DatasetKind,
    pub records: Vec<ElementaryStep>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, kind: DatasetKind, records: Vec<ElementaryStep>) -> Dataset {
        Dataset {
            name: name.into(),
            kind,
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records whose products balance the reactants.
    pub fn balanced_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_balanced()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub text: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    /// Non-blank, non-comment lines seen.
    pub lines: usize,
    pub errors: Vec<LineError>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Loading fails when more than this percentage of lines is malformed.
    pub max_malformed_percent: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            max_malformed_percent: 10.0,
        }
    }
}

/// Parses step records, one per line. Blank lines and lines starting with
/// `#` are ignored; malformed lines are reported and skipped.
pub fn read_dataset<R: Read>(
    reader: R,
    name: &str,
    opts: &LoadOptions,
) -> Result<(Dataset, LoadReport), DataError> {
    let mut report = LoadReport::default();
    let mut records = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: name.to_string(),
            source,
        })?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        report.lines += 1;
        match parse_step_record(text) {
            Ok(step) => records.push(step),
            Err(e) => {
                log::warn!("{name}:{}: {e}", i + 1);
                report.errors.push(LineError {
                    line: i + 1,
                    text: text.to_string(),
                    message: e.to_string(),
                });
            }
        }
    }
    let bad = report.errors.len();
    if bad > 0 && 100.0 * bad as f64 > opts.max_malformed_percent * report.lines as f64 {
        return Err(DataError::TooMalformed {
            path: name.to_string(),
            bad,
            total: report.lines,
            limit: opts.max_malformed_percent,
        });
    }
    let kind = if !records.is_empty()
        && records
            .iter()
            .all(|r| r.provenance == crate::reaction::Provenance::Combinatorial)
    {
        DatasetKind::Combinatorial
    } else {
        DatasetKind::Curated
    };
    Ok((Dataset::new(name, kind, records), report))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<(Dataset, LoadReport), DataError> {
    load_dataset_with(path, &LoadOptions::default())
}

pub fn load_dataset_with(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<(Dataset, LoadReport), DataError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: name.clone(),
        source,
    })?;
    read_dataset(file, &name, opts)
}

pub fn write_dataset<W: Write>(mut w: W, dataset: &Dataset) -> std::io::Result<()> {
    for r in &dataset.records {
        writeln!(w, "{}", write_step_record(r))?;
    }
    w.flush()
}

pub fn save_dataset(path: impl AsRef<Path>, dataset: &Dataset) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset(std::io::BufWriter::new(file), dataset)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.8,
            val: 0.1,
            test: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        let f = [self.train, self.val, self.test];
        if f.iter().any(|x| !x.is_finite() || *x < 0.0) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(DataError::BadSplit(f));
        }
        Ok(())
    }

    /// Part sizes for `n` records: train and val are floored, test takes the rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let part = |f: f64| ((n as f64 * f + 1e-9).floor() as usize).min(n);
        let train = part(self.train);
        let val = part(self.val).min(n - train);
        (train, val, n - train - val)
    }
}

/// Seeded shuffle followed by a contiguous train/val/test partition.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset), DataError> {
    spec.validate()?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let (nt, nv, _) = spec.sizes(order.len());
    let part = |idx: &[usize], suffix: &str| {
        Dataset::new(
            format!("{}/{suffix}", dataset.name),
            dataset.kind,
            idx.iter().map(|&i| dataset.records[i].clone()).collect(),
        )
    };
    Ok((
        part(&order[..nt], "train"),
        part(&order[nt..nt + nv], "val"),
        part(&order[nt + nv..], "test"),
    ))
}

/// Training set plus a uniform sample of `n` steps from a combinatorial stream.
pub fn build_mixed(
    train: &Dataset,
    stream: impl IntoIterator<Item = ElementaryStep>,
    n: usize,
    seed: u64,
) -> Dataset {
    let mut records = train.records.clone();
    records.extend(sample_for_training(stream, n, seed));
    Dataset::new(format!("{}+mixed", train.name), DatasetKind::Mixed, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE: &str = "\
[CH3:1][Br:2].[OH-:3]>>[CH3:1][OH:3].[Br-:2] | LP:3>SS:1-2 | role=curated
# comment

[OH2:1].[H+:2]>>[OH3+:1] | LP:1>EO:2
[NH3:1].[H+:2]>>[NH4+:1] | LP:1>EO:2 | score=0.5
";

    fn load(text: &str) -> Result<(Dataset, LoadReport), DataError> {
        read_dataset(text.as_bytes(), "t", &LoadOptions::default())
    }

    #[test]
    fn empty_file_is_empty() {
        let (d, r) = load("").unwrap();
        assert!(d.is_empty());
        assert_eq!(r.lines, 0);
    }

    #[test]
    fn three_lines_in_order() {
        let (d, r) = load(THREE).unwrap();
        assert_eq!(d.len(), 3);
        assert!(r.errors.is_empty());
        assert_eq!(d.balanced_count(), 3);
        assert_eq!(d.records[2].score, Some(0.5));
        assert!(write_step_record(&d.records[1]).contains(">>[OH3+:1] | LP:1>EO:2"));
    }

    #[test]
    fn one_bad_line_in_ten_is_reported() {
        let mut text = String::new();
        for i in 0..10 {
            if i == 4 {
                text.push_str("C(C>>CC | LP:1>EO:2\n");
            } else {
                text.push_str("[OH2:1].[H+:2]>>[OH3+:1] | LP:1>EO:2\n");
            }
        }
        let (d, r) = load(&text).unwrap();
        assert_eq!(d.len(), 9);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].line, 5);
        let strict = LoadOptions {
            max_malformed_percent: 5.0,
        };
        assert!(matches!(
            read_dataset(text.as_bytes(), "t", &strict),
            Err(DataError::TooMalformed { bad: 1, total: 10, .. })
        ));
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(load_dataset("/nonexistent/x.steps"), Err(DataError::Io { .. })));
    }

    #[test]
    fn save_then_load_is_identity() {
        let (d, _) = load(THREE).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &d).unwrap();
        let (d2, _) = read_dataset(buf.as_slice(), "t", &LoadOptions::default()).unwrap();
        let text = |d: &Dataset| d.records.iter().map(write_step_record).collect::<Vec<_>>();
        assert_eq!(text(&d), text(&d2));
        assert_eq!(d.len(), d2.len());
    }

    fn numbered(n: usize) -> Dataset {
        let records = (0..n)
            .map(|i| {
                let mut s = parse_step_record("[OH2:1].[H+:2]>>[OH3+:1] | LP:1>EO:2").unwrap();
                s.meta.insert("i".into(), i.to_string());
                s
            })
            .collect();
        Dataset::new("n", DatasetKind::Curated, records)
    }

    fn ids(d: &Dataset) -> Vec<String> {
        d.records.iter().map(|r| r.meta["i"].clone()).collect()
    }

    #[test]
    fn ten_split_eight_one_one() {
        let (a, b, c) = split(&numbered(10), &SplitSpec::default()).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
        let (a2, ..) = split(&numbered(10), &SplitSpec::default()).unwrap();
        assert_eq!(ids(&a), ids(&a2));
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let spec = SplitSpec {
            train: 0.8,
            val: 0.3,
            ..SplitSpec::default()
        };
        assert!(split(&numbered(3), &spec).is_err());
    }

    #[test]
    fn mixed_adds_a_sample() {
        let train = numbered(5);
        let extra = numbered(20).records;
        assert_eq!(build_mixed(&train, extra.clone(), 0, 1).records, train.records);
        let m = build_mixed(&train, extra.clone(), 7, 1);
        assert_eq!(m.len(), 12);
        assert_eq!(m.kind, DatasetKind::Mixed);
        assert_eq!(build_mixed(&train, extra, 50, 1).len(), 25);
    }
}
