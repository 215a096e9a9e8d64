//! Reaction-size and element histograms.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::chem::molecular_formula;

use super::Dataset;

/// Sizes count every reactant atom, implicit hydrogens included.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub records: usize,
    /// Atoms per reaction -> number of reactions.
    pub size_histogram: BTreeMap<u32, usize>,
    /// Element symbol -> atoms across all reactions.
    pub elements: BTreeMap<String, u64>,
}

impl DatasetStats {
    /// `table,key,count` rows for both histograms.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("table,key,count\n");
        for (k, v) in &self.size_histogram {
            let _ = writeln!(s, "size,{k},{v}");
        }
        for (k, v) in &self.elements {
            let _ = writeln!(s, "element,{k},{v}");
        }
        s
    }
}

pub fn dataset_stats(dataset: &Dataset) -> DatasetStats {
    let mut st = DatasetStats {
        records: dataset.len(),
        ..DatasetStats::default()
    };
    for r in &dataset.records {
        let f = molecular_formula(&r.reactants);
        *st.size_histogram.entry(f.atom_total()).or_default() += 1;
        for (e, c) in f.counts() {
            *st.elements.entry(e.symbol().to_string()).or_default() += *c as u64;
        }
    }
    st
}
