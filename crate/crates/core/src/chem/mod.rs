//! Molecular graphs: SMILES I/O, canonical forms, formulas and resonance.

mod aromatic;
pub mod canon;
pub mod electrons;
pub mod element;
pub mod formula;
pub mod molecule;
pub mod resonance;
pub mod smiles;
pub mod writer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canon::{canonical_rank, symmetry_classes};
pub use element::{Element, ALL_ELEMENTS};
pub use formula::{molecular_formula, Formula};
pub use molecule::{Atom, Bond, Molecule};
pub use resonance::resonance_variants;
pub use smiles::parse_smiles;
pub use writer::{canonical_smiles, write_smiles};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChemError {
    #[error("SMILES error at position {pos}: {msg}")]
    Lexical { pos: usize, msg: String },
    #[error("unsupported element '{0}'")]
    UnsupportedElement(String),
    #[error("valence violation at atom {atom}: {detail}")]
    Valence { atom: usize, detail: String },
    #[error("cannot kekulize: {0}")]
    Kekulize(String),
    #[error("invalid graph: {0}")]
    Graph(String),
}

/// Cap on resonance structures explored per fragment when comparing species.
pub const RESONANCE_LIMIT: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeciesVerdict {
    Identical,
    ResonanceEquivalent,
    Different,
}

fn mapped_key(m: &Molecule) -> String {
    write_smiles(&m.fold_hydrogens(false))
}

/// Compares two molecule sets as multisets of species. Atom maps take part in
/// the comparison; strip them first (`Molecule::without_maps`) to compare
/// constitution only.
pub fn same_species(a: &Molecule, b: &Molecule) -> SpeciesVerdict {
    if mapped_key(a) == mapped_key(b) {
        return SpeciesVerdict::Identical;
    }
    let fa = a.fragments();
    let fb = b.fragments();
    if fa.len() != fb.len() || molecular_formula(a) != molecular_formula(b) {
        return SpeciesVerdict::Different;
    }
    let keys = |frags: &[Molecule]| -> Vec<(String, Vec<String>)> {
        frags
            .iter()
            .map(|f| {
                let own = mapped_key(f);
                let mut variants: Vec<String> =
                    resonance_variants(f, RESONANCE_LIMIT).iter().map(mapped_key).collect();
                variants.sort();
                variants.dedup();
                (own, variants)
            })
            .collect()
    };
    let ka = keys(&fa);
    let kb = keys(&fb);
    let n = ka.len();
    let compatible: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| ka[i].0 == kb[j].0 || kb[j].1.contains(&ka[i].0) || ka[i].1.contains(&kb[j].0))
                .collect()
        })
        .collect();
    if bipartite_perfect(&compatible) {
        SpeciesVerdict::ResonanceEquivalent
    } else {
        SpeciesVerdict::Different
    }
}

/// True when every left node can be matched to a distinct right node.
pub(crate) fn bipartite_perfect(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(u: usize, adj: &[Vec<bool>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for v in 0..adj[u].len() {
            if adj[u][v] && !seen[v] {
                seen[v] = true;
                if owner[v].map_or(true, |w| augment(w, adj, seen, owner)) {
                    owner[v] = Some(u);
                    return true;
                }
            }
        }
        false
    }
    (0..n).all(|u| {
        let mut seen = vec![false; n];
        augment(u, adj, &mut seen, &mut owner)
    })
}
