//! Canonical atom ranking.
//!
//! Atoms start from the invariant (element, charge, degree, implicit H,
//! aromatic, map). Classes are refined from sorted neighbor (class, bond kind)
//! lists until the partition stops splitting. Remaining ties are broken by
//! promoting one atom of the lowest tied class and refining again.

use super::molecule::Molecule;

fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    let mut rank = 0;
    for w in 0..order.len() {
        if w > 0 && keys[order[w]] != keys[order[w - 1]] {
            rank = w;
        }
        ranks[order[w]] = rank;
    }
    ranks
}

fn distinct(ranks: &[usize]) -> usize {
    let mut v = ranks.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

fn refine(mol: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    let mut count = distinct(&ranks);
    loop {
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..mol.atom_count())
            .map(|i| {
                let mut nb: Vec<(usize, u8)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(n, b)| (ranks[n], mol.bonds()[b].kind_code()))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        let next = dense_ranks(&keys);
        let c = distinct(&next);
        ranks = next;
        if c == count {
            return ranks;
        }
        count = c;
    }
}

fn initial(mol: &Molecule, include_maps: bool) -> Vec<usize> {
    let keys: Vec<(u8, i8, usize, u8, bool, u32)> = mol
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                a.element.atomic_number(),
                a.charge,
                mol.degree(i),
                a.hydrogens,
                a.aromatic,
                if include_maps { a.map.unwrap_or(0) } else { 0 },
            )
        })
        .collect();
    dense_ranks(&keys)
}

/// Symmetry classes from refinement alone (maps ignored); equal values mark
/// atoms that are indistinguishable by the invariants.
pub fn symmetry_classes(mol: &Molecule) -> Vec<usize> {
    refine(mol, initial(mol, false))
}

pub(crate) fn ranks(mol: &Molecule, include_maps: bool) -> Vec<usize> {
    let n = mol.atom_count();
    let mut ranks = refine(mol, initial(mol, include_maps));
    while distinct(&ranks) < n {
        // lowest rank value shared by more than one atom
        let mut counts = vec![0usize; n];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = (0..n).find(|&r| counts[r] > 1).unwrap();
        let chosen = (0..n).find(|&i| ranks[i] == tied).unwrap();
        let bumped: Vec<usize> = (0..n)
            .map(|i| {
                if ranks[i] > tied || (ranks[i] == tied && i != chosen) {
                    2 * ranks[i] + 1
                } else {
                    2 * ranks[i]
                }
            })
            .collect();
        ranks = refine(mol, dense_ranks(&bumped));
    }
    ranks
}

/// Per-atom canonical ordering (0 = first). Invariant under input atom
/// permutation; atom maps participate so mapped molecules order by map.
pub fn canonical_rank(mol: &Molecule) -> Vec<usize> {
    ranks(mol, true)
}
