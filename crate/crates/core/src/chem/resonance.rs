//! Bounded resonance enumeration by charge-adjacent pair shifts.

use std::collections::{HashSet, VecDeque};

use super::electrons::{collapse_pi, push, Acceptor, Donor};
use super::molecule::Molecule;
use super::writer::write_smiles;

fn pi_partners(mol: &Molecule, b: usize, exclude: usize) -> Vec<usize> {
    mol.neighbors(b)
        .iter()
        .filter(|&&(c, bi)| c != exclude && (mol.bonds()[bi].order >= 2 || mol.bonds()[bi].aromatic))
        .map(|&(c, _)| c)
        .collect()
}

/// Single resonance moves available from `mol`.
fn moves(mol: &Molecule) -> Vec<Molecule> {
    let mut out = Vec::new();
    for a in 0..mol.atom_count() {
        let charge = mol.atom(a).charge;
        let has_lp = mol.lone_pairs(a) > 0;
        for &(b, _) in mol.neighbors(a) {
            // anion lone pair into an adjacent pi bond: a(-)-b=c -> a=b-c(-)
            if charge < 0 && has_lp {
                for c in pi_partners(mol, b, a) {
                    out.extend(push(mol, Donor::LonePair(a), Acceptor::PiStar(b, c)).ok());
                }
            }
            // adjacent pi bond into a cationic vacancy: a(+)-b=c -> a=b-c(+)
            if charge > 0 && mol.has_empty_orbital(a) {
                for c in pi_partners(mol, b, a) {
                    out.extend(push(mol, Donor::Pi(b, c), Acceptor::Empty(a)).ok());
                }
            }
            // lone pair into an adjacent cationic vacancy: a-b(+) -> a(+)=b
            if has_lp && mol.atom(b).charge > 0 && mol.has_empty_orbital(b) {
                out.extend(push(mol, Donor::LonePair(a), Acceptor::Empty(b)).ok());
            }
        }
        // pi pair collapses onto a cationic atom: a(+)=b -> a-b(+)
        if charge > 0 {
            for &(b, bi) in mol.neighbors(a) {
                let bond = &mol.bonds()[bi];
                if bond.order >= 2 || bond.aromatic {
                    out.extend(collapse_pi(mol, a, b).ok());
                }
            }
        }
    }
    out
}

/// `mol` followed by structures reachable through resonance moves, deduplicated
/// by canonical form (maps included) and capped at `limit` entries.
pub fn resonance_variants(mol: &Molecule, limit: usize) -> Vec<Molecule> {
    let limit = limit.max(1);
    let mut seen = HashSet::new();
    seen.insert(write_smiles(mol));
    let mut out = vec![mol.clone()];
    let mut queue = VecDeque::from([mol.clone()]);
    while let Some(current) = queue.pop_front() {
        for next in moves(&current) {
            if out.len() >= limit {
                return out;
            }
            if seen.insert(write_smiles(&next)) {
                out.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    out
}
