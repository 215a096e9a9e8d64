//! Top-N product accuracy.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::chem::{canonical_smiles, same_species, Molecule, SpeciesVerdict};

pub const DEFAULT_NS: [usize; 4] = [1, 3, 5, 10];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub ns: Vec<usize>,
    pub hits: Vec<usize>,
    pub total: usize,
    pub percent: Vec<f64>,
    pub resonance_tolerant: bool,
}

impl AccuracyTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,hits,total,percent\n");
        for ((n, h), p) in self.ns.iter().zip(&self.hits).zip(&self.percent) {
            let _ = writeln!(s, "{n},{h},{},{p:.2}", self.total);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

fn matches(candidate: &Molecule, reference: &Molecule, key: &str, resonance: bool) -> bool {
    if canonical_smiles(candidate) == key {
        return true;
    }
    resonance && same_species(&candidate.without_maps(), &reference.without_maps()) != SpeciesVerdict::Different
}

/// A record is a hit at N when one of its first N candidates equals the
/// reference product set (canonical form, maps ignored). With `resonance`,
/// resonance-equivalent sets also count.
pub fn top_n_accuracy(
    predictions: &[Vec<Molecule>],
    references: &[Molecule],
    ns: &[usize],
    resonance: bool,
) -> AccuracyTable {
    assert_eq!(predictions.len(), references.len(), "one candidate list per reference");
    let mut hits = vec![0; ns.len()];
    for (cands, reference) in predictions.iter().zip(references) {
        let key = canonical_smiles(reference);
        let rank = cands.iter().position(|c| matches(c, reference, &key, resonance));
        if let Some(r) = rank {
            for (h, &n) in hits.iter_mut().zip(ns) {
                if r < n {
                    *h += 1;
                }
            }
        }
    }
    let total = references.len();
    let percent = hits
        .iter()
        .map(|&h| if total == 0 { 0.0 } else { 100.0 * h as f64 / total as f64 })
        .collect();
    AccuracyTable {
        ns: ns.to_vec(),
        hits,
        total,
        percent,
        resonance_tolerant: resonance,
    }
}
