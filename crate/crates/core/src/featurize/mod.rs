//! Atom, molecule and reaction fingerprints.

mod atom;
mod dump;
mod env;
mod morgan;
mod sparse;

use thiserror::Error;

use crate::chem::Molecule;
use crate::reaction::{extract_label_atoms, ElementaryStep, ReactionError};

pub use atom::{atom_fingerprint, atom_fingerprints, physicochemical, AtomFingerprint};
pub use dump::{read_fingerprint_dump, write_fingerprint_dump, DUMP_MAGIC};
pub use env::fnv1a;
pub use morgan::morgan_fingerprint;
pub use sparse::SparseVec;

/// Hashed topological slots per atom.
pub const TOPO_LEN: usize = 6402;
/// Physicochemical descriptors per atom.
pub const PHYS_LEN: usize = 85;
pub const ATOM_FP_LEN: usize = TOPO_LEN + PHYS_LEN;
pub const MORGAN_BITS: usize = 2048;
pub const REACTION_FP_LEN: usize = 2 * ATOM_FP_LEN + MORGAN_BITS;
/// Neighborhood radius of the atom fingerprint.
pub const RADIUS: usize = 3;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Reaction(#[from] ReactionError),
    #[error("fingerprint dump: {0}")]
    Dump(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Source atom, sink atom and signed Morgan net change, concatenated.
#[derive(Clone, Debug, PartialEq)]
pub struct ReactionFingerprint(SparseVec);

impl ReactionFingerprint {
    pub fn sparse(&self) -> &SparseVec {
        &self.0
    }

    pub fn values(&self) -> Vec<f32> {
        self.0.to_dense()
    }

    pub fn into_sparse(self) -> SparseVec {
        self.0
    }

    /// The product-minus-reactant block.
    pub fn net_change(&self) -> SparseVec {
        let start = (2 * ATOM_FP_LEN) as u32;
        SparseVec::from_pairs(
            MORGAN_BITS,
            self.0
                .entries()
                .iter()
                .filter(|&&(i, _)| i >= start)
                .map(|&(i, v)| (i - start, v)),
        )
    }
}

pub fn reaction_fingerprint(step: &ElementaryStep) -> Result<ReactionFingerprint, FeatureError> {
    let products = step.products.as_ref().ok_or(ReactionError::MissingProducts)?;
    let (src, sink) = extract_label_atoms(step)?;
    Ok(ReactionFeaturizer::new(&step.reactants).fingerprint(src, sink, products))
}

/// Caches the reactant-side work when many candidate steps share one
/// reactant set.
pub struct ReactionFeaturizer {
    atoms: Vec<AtomFingerprint>,
    morgan: SparseVec,
}

impl ReactionFeaturizer {
    pub fn new(reactants: &Molecule) -> ReactionFeaturizer {
        ReactionFeaturizer {
            atoms: atom_fingerprints(reactants),
            morgan: morgan_fingerprint(reactants, MORGAN_BITS),
        }
    }

    pub fn atom(&self, i: usize) -> &AtomFingerprint {
        &self.atoms[i]
    }

    /// Fingerprint for source atom `src` and sink atom `sink` (reactant
    /// indices) leading to `products`.
    pub fn fingerprint(&self, src: usize, sink: usize, products: &Molecule) -> ReactionFingerprint {
        let net = morgan_fingerprint(products, MORGAN_BITS).axpy(-1.0, &self.morgan);
        let v = SparseVec::concat(&[self.atoms[src].sparse(), self.atoms[sink].sparse(), &net]);
        debug_assert_eq!(v.dim(), REACTION_FP_LEN);
        ReactionFingerprint(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::{parse_smiles, symmetry_classes, Molecule};
    use crate::reaction::parse_step_record;

    fn mol(s: &str) -> Molecule {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn lengths() {
        assert_eq!(ATOM_FP_LEN, 6487);
        assert_eq!(REACTION_FP_LEN, 15022);
        let fp = atom_fingerprint(&mol("CCO"), 0);
        assert_eq!(fp.values().len(), 6487);
    }

    #[test]
    fn isolated_atom_has_one_topological_slot() {
        let fp = atom_fingerprint(&mol("[Br-]"), 0);
        let topo = fp.sparse().entries().iter().filter(|&&(i, _)| (i as usize) < TOPO_LEN).count();
        assert_eq!(topo, 1);
    }

    #[test]
    fn methane_and_ethane_carbons_differ() {
        let a = atom_fingerprint(&mol("C"), 0);
        let b = atom_fingerprint(&mol("CC"), 0);
        assert_ne!(a, b);
        // heavy degree descriptor
        assert_ne!(a.sparse().get(TOPO_LEN + 5), b.sparse().get(TOPO_LEN + 5));
    }

    #[test]
    fn descriptor_block_has_fixed_width() {
        for s in ["[H+]", "C", "c1ccncc1", "[O-]C=O", "C[Li]", "[Se]1C=CC=C1"] {
            let m = mol(s);
            for a in 0..m.atom_count() {
                assert_eq!(physicochemical(&m, a).len(), PHYS_LEN, "{s}");
            }
        }
    }

    #[test]
    fn explicit_hydrogens_leave_heavy_atoms_unchanged() {
        let implicit = mol("CC(=O)O");
        let explicit = implicit.explicit_hydrogens();
        for a in 0..implicit.atom_count() {
            assert_eq!(atom_fingerprint(&implicit, a), atom_fingerprint(&explicit, a));
        }
    }

    #[test]
    fn benzene_morgan_slots_bounded_by_symmetry() {
        let b = mol("c1ccccc1");
        let classes = symmetry_classes(&b).into_iter().collect::<std::collections::HashSet<_>>().len();
        assert_eq!(classes, 1);
        assert!(morgan_fingerprint(&b, MORGAN_BITS).nnz() <= 3 * classes);
    }

    #[test]
    fn sn2_reaction_fingerprint() {
        let step = parse_step_record("[Br-:10].[CH3:20][Cl:30]>>[Br:10][CH3:20].[Cl-:30] | LP:10>SS:20-30").unwrap();
        let fp = reaction_fingerprint(&step).unwrap();
        assert_eq!(fp.values().len(), REACTION_FP_LEN);
        assert!(fp.net_change().nnz() > 0);
    }

    #[test]
    fn identity_step_has_zero_net_change() {
        let step = parse_step_record("[OH-:1].[CH3:2]Cl>>[OH-:1].[CH3:2]Cl | LP:1>SS:2-3").unwrap_err();
        assert!(matches!(step, ReactionError::UnresolvedMap(3)));
        let step = parse_step_record("[OH-:1].[CH3:2][Cl:3]>>[OH-:1].[CH3:2][Cl:3] | LP:1>SS:2-3").unwrap();
        assert_eq!(step.consistent, Some(false));
        assert_eq!(reaction_fingerprint(&step).unwrap().net_change().nnz(), 0);
    }
}
