//! Circular environments shared by the atom and Morgan fingerprints.

use std::collections::VecDeque;

use crate::chem::{Element, Molecule};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over the little-endian bytes of each word.
pub fn fnv1a(words: &[u64]) -> u64 {
    let mut h = FNV_OFFSET;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Heavy-atom graph with hydrogen nodes hidden from traversal, so results do
/// not depend on whether hydrogens are explicit. A hydrogen node still sees
/// its own neighbor when it is the root.
pub(crate) struct View {
    pub inv: Vec<u64>,
    /// (neighbor, bond kind, bond index)
    pub adj: Vec<Vec<(usize, u8, usize)>>,
}

impl View {
    pub fn new(mol: &Molecule) -> View {
        let ring = mol.ring_atoms();
        let n = mol.atom_count();
        let is_h = |i: usize| mol.atom(i).element == Element::H;
        let mut adj = vec![Vec::new(); n];
        for (bi, b) in mol.bonds().iter().enumerate() {
            if !is_h(b.b) || is_h(b.a) {
                adj[b.a].push((b.b, b.kind_code(), bi));
            }
            if !is_h(b.a) || is_h(b.b) {
                adj[b.b].push((b.a, b.kind_code(), bi));
            }
        }
        let inv = (0..n)
            .map(|i| {
                let a = mol.atom(i);
                let heavy = mol.neighbors(i).iter().filter(|&&(j, _)| !is_h(j)).count();
                fnv1a(&[
                    a.element.atomic_number() as u64,
                    (a.charge as i64) as u64,
                    heavy as u64,
                    mol.total_hydrogens(i) as u64,
                    a.aromatic as u64,
                    ring[i] as u64,
                    mol.lone_pairs(i) as u64,
                ])
            })
            .collect();
        View { inv, adj }
    }

    /// Environment identifiers `ids[r][atom]` for r = 0..=radius.
    pub fn environment_ids(&self, radius: usize) -> Vec<Vec<u64>> {
        let mut ids = vec![self.inv.clone()];
        for r in 1..=radius {
            let prev = &ids[r - 1];
            let next = (0..self.inv.len())
                .map(|a| {
                    let mut nb: Vec<(u64, u64)> = self.adj[a].iter().map(|&(v, k, _)| (k as u64, prev[v])).collect();
                    nb.sort_unstable();
                    let mut words = Vec::with_capacity(2 + 2 * nb.len());
                    words.push(r as u64);
                    words.push(prev[a]);
                    for (k, id) in nb {
                        words.push(k);
                        words.push(id);
                    }
                    fnv1a(&words)
                })
                .collect();
            ids.push(next);
        }
        ids
    }

    /// Bonds reachable within each radius 0..=radius from `root`.
    pub fn bonds_within(&self, root: usize, radius: usize) -> Vec<usize> {
        let n = self.inv.len();
        let mut dist = vec![usize::MAX; n];
        dist[root] = 0;
        let mut q = VecDeque::from([root]);
        let mut seen_bond = std::collections::HashSet::new();
        let mut counts = vec![0usize; radius + 1];
        while let Some(u) = q.pop_front() {
            let d = dist[u];
            if d >= radius {
                continue;
            }
            for &(v, _, bi) in &self.adj[u] {
                if seen_bond.insert(bi) {
                    counts[d + 1] += 1;
                }
                if dist[v] == usize::MAX {
                    dist[v] = d + 1;
                    q.push_back(v);
                }
            }
        }
        for r in 1..=radius {
            counts[r] += counts[r - 1];
        }
        counts
    }
}
