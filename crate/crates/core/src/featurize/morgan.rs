use super::env::{fnv1a, View};
use super::sparse::SparseVec;
use crate::chem::Molecule;

const MORGAN_SALT: u64 = 0x6d6f_7267;
const MORGAN_RADIUS: usize = 2;

/// Count-valued circular fingerprint of radius 2, folded to `nbits`.
/// Computed on the hydrogen-folded, map-free graph, so it is additive over
/// disjoint molecules.
pub fn morgan_fingerprint(mol: &Molecule, nbits: usize) -> SparseVec {
    assert!(nbits > 0, "nbits must be positive");
    let folded = mol.fold_hydrogens(true);
    let view = View::new(&folded);
    let ids = view.environment_ids(MORGAN_RADIUS);
    let pairs = ids
        .iter()
        .flat_map(|layer| layer.iter())
        .map(|&id| ((fnv1a(&[MORGAN_SALT, id]) % nbits as u64) as u32, 1.0));
    SparseVec::from_pairs(nbits, pairs)
}
