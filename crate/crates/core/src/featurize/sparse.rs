use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Fixed-dimension sparse vector with strictly increasing indices and no
/// explicit zeros.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVec {
    dim: usize,
    entries: Vec<(u32, f32)>,
}

impl SparseVec {
    pub fn zeros(dim: usize) -> SparseVec {
        SparseVec { dim, entries: Vec::new() }
    }

    /// Sums duplicate indices; panics if an index is out of range.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (u32, f32)>) -> SparseVec {
        let mut acc: BTreeMap<u32, f32> = BTreeMap::new();
        for (i, v) in pairs {
            assert!((i as usize) < dim, "index {i} out of range for dimension {dim}");
            *acc.entry(i).or_insert(0.0) += v;
        }
        SparseVec {
            dim,
            entries: acc.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    pub fn from_dense(values: &[f32]) -> SparseVec {
        SparseVec {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v != 0.0)
                .map(|(i, &v)| (i as u32, v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f32)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize) -> f32 {
        self.entries
            .binary_search_by_key(&(i as u32), |&(j, _)| j)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f32> {
        let mut v = vec![0.0; self.dim];
        for &(i, x) in &self.entries {
            v[i as usize] = x;
        }
        v
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f32, other: &SparseVec) -> SparseVec {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let pairs = self
            .entries
            .iter()
            .copied()
            .chain(other.entries.iter().map(|&(i, v)| (i, scale * v)));
        SparseVec::from_pairs(self.dim, pairs)
    }

    /// Concatenation; indices of later parts are offset by earlier dimensions.
    pub fn concat(parts: &[&SparseVec]) -> SparseVec {
        let mut entries = Vec::new();
        let mut offset = 0u32;
        for p in parts {
            entries.extend(p.entries.iter().map(|&(i, v)| (i + offset, v)));
            offset += p.dim as u32;
        }
        SparseVec {
            dim: offset as usize,
            entries,
        }
    }
}
