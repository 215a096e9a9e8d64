//! Aromaticity perception over Kekulé structures, and Kekulé assignment for
//! aromatic input.

use super::molecule::Molecule;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum PiRole {
    /// Contributes one electron through a double bond to `partner`.
    Double { partner: usize },
    /// Contributes a lone pair.
    Donor,
    /// Contributes an empty p orbital.
    Vacant,
}

const MAX_RING: usize = 8;

fn pi_role(mol: &Molecule, i: usize, in_ring: &[bool]) -> Option<PiRole> {
    let atom = mol.atom(i);
    if !atom.element.can_be_aromatic() || !in_ring[i] || mol.is_radical(i) {
        return None;
    }
    let mut partner = None;
    for &(n, b) in mol.neighbors(i) {
        match mol.bonds()[b].order {
            1 => {}
            2 if partner.is_none() && in_ring[n] => partner = Some(n),
            _ => return None,
        }
    }
    match partner {
        Some(partner) => Some(PiRole::Double { partner }),
        None if mol.lone_pairs(i) > 0 => Some(PiRole::Donor),
        None if mol.has_empty_orbital(i) => Some(PiRole::Vacant),
        None => None,
    }
}

/// Marks atoms and bonds belonging to Hückel (4n+2) rings of sp2 atoms.
///
/// A double bond leaving a ring counts toward that ring only once the bond has
/// been marked aromatic by a neighboring ring, so fused systems are resolved by
/// iterating to a fixed point.
pub(crate) fn perceive(mol: &mut Molecule) {
    for a in mol.atoms_mut().iter_mut() {
        a.aromatic = false;
    }
    for b in mol.bonds_mut().iter_mut() {
        b.aromatic = false;
    }
    let in_ring = mol.ring_atoms();
    if !in_ring.iter().any(|&r| r) {
        return;
    }
    let roles: Vec<Option<PiRole>> = (0..mol.atom_count()).map(|i| pi_role(mol, i, &in_ring)).collect();
    let cycles: Vec<Vec<usize>> = mol
        .cycles(MAX_RING)
        .into_iter()
        .filter(|c| c.iter().all(|&a| roles[a].is_some()))
        .collect();
    let mut aromatic_bond = vec![false; mol.bonds().len()];
    let mut done = vec![false; cycles.len()];
    loop {
        let mut changed = false;
        for (ci, cycle) in cycles.iter().enumerate() {
            if done[ci] {
                continue;
            }
            let mut electrons = 0;
            let mut ok = true;
            for &a in cycle {
                match roles[a].unwrap() {
                    PiRole::Donor => electrons += 2,
                    PiRole::Vacant => {}
                    PiRole::Double { partner } => {
                        let b = mol.bond_between(a, partner).unwrap();
                        if cycle.contains(&partner) || aromatic_bond[b] {
                            electrons += 1;
                        } else {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            if ok && electrons % 4 == 2 {
                done[ci] = true;
                changed = true;
                for k in 0..cycle.len() {
                    let (u, v) = (cycle[k], cycle[(k + 1) % cycle.len()]);
                    aromatic_bond[mol.bond_between(u, v).unwrap()] = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for (bi, flag) in aromatic_bond.iter().enumerate() {
        if *flag {
            let (a, b) = (mol.bonds()[bi].a, mol.bonds()[bi].b);
            mol.bonds_mut()[bi].aromatic = true;
            mol.atoms_mut()[a].aromatic = true;
            mol.atoms_mut()[b].aromatic = true;
        }
    }
}

/// Finds a set of edges covering every atom flagged in `needs` exactly once.
/// Edges touching atoms not in `needs` are ignored. Deterministic.
pub(crate) fn perfect_matching(n: usize, needs: &[bool], edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ei, &(a, b)) in edges.iter().enumerate() {
        if needs[a] && needs[b] {
            incident[a].push(ei);
            incident[b].push(ei);
        }
    }
    let mut matched = vec![false; n];
    let mut chosen = Vec::new();
    if search(needs, edges, &incident, &mut matched, &mut chosen) {
        chosen.sort_unstable();
        Some(chosen)
    } else {
        None
    }
}

fn search(
    needs: &[bool],
    edges: &[(usize, usize)],
    incident: &[Vec<usize>],
    matched: &mut Vec<bool>,
    chosen: &mut Vec<usize>,
) -> bool {
    // most constrained unmatched atom first
    let mut best: Option<(usize, usize)> = None;
    for i in 0..needs.len() {
        if !needs[i] || matched[i] {
            continue;
        }
        let options = incident[i]
            .iter()
            .filter(|&&e| {
                let (a, b) = edges[e];
                !matched[if a == i { b } else { a }]
            })
            .count();
        if options == 0 {
            return false;
        }
        if best.map_or(true, |(_, o)| options < o) {
            best = Some((i, options));
        }
    }
    let Some((atom, _)) = best else {
        return true;
    };
    for &e in &incident[atom] {
        let (a, b) = edges[e];
        let other = if a == atom { b } else { a };
        if matched[other] {
            continue;
        }
        matched[atom] = true;
        matched[other] = true;
        chosen.push(e);
        if search(needs, edges, incident, matched, chosen) {
            return true;
        }
        chosen.pop();
        matched[atom] = false;
        matched[other] = false;
    }
    false
}

/// Bond orders for the aromatic system of `mol` with bond `forced` made
/// double, or `None` when no such Kekulé structure exists.
pub(crate) fn kekule_with_double(mol: &Molecule, forced: usize) -> Option<Vec<u8>> {
    let fb = &mol.bonds()[forced];
    if !fb.aromatic {
        return None;
    }
    let n = mol.atom_count();
    // atoms currently using a double bond inside the aromatic system
    let mut needs = vec![false; n];
    for b in mol.bonds() {
        if b.aromatic && b.order == 2 {
            needs[b.a] = true;
            needs[b.b] = true;
        }
    }
    if !needs[fb.a] || !needs[fb.b] {
        return None;
    }
    needs[fb.a] = false;
    needs[fb.b] = false;
    let bond_ids: Vec<usize> = (0..mol.bonds().len()).filter(|&i| mol.bonds()[i].aromatic).collect();
    let edges: Vec<(usize, usize)> = bond_ids.iter().map(|&i| (mol.bonds()[i].a, mol.bonds()[i].b)).collect();
    let chosen = perfect_matching(n, &needs, &edges)?;
    let mut orders: Vec<u8> = mol.bonds().iter().map(|b| b.order).collect();
    for &bi in &bond_ids {
        orders[bi] = 1;
    }
    for e in chosen {
        orders[bond_ids[e]] = 2;
    }
    orders[forced] = 2;
    Some(orders)
}

#[cfg(test)]
mod tests {
    use crate::chem::parse_smiles;

    fn aromatic_count(s: &str) -> usize {
        parse_smiles(s).unwrap().atoms().iter().filter(|a| a.aromatic).count()
    }

    #[test]
    fn perceives_common_aromatics() {
        assert_eq!(aromatic_count("C1=CC=CC=C1"), 6);
        assert_eq!(aromatic_count("c1ccncc1"), 6);
        assert_eq!(aromatic_count("c1cc[nH]c1"), 5);
        assert_eq!(aromatic_count("c1ccoc1"), 5);
        assert_eq!(aromatic_count("c1ccc2ccccc2c1"), 10);
        assert_eq!(aromatic_count("C1=CC2=CC=CC=C2C=C1"), 10);
        assert_eq!(aromatic_count("c1ccc2[nH]ccc2c1"), 9);
        assert_eq!(aromatic_count("[cH-]1cccc1"), 5);
    }

    #[test]
    fn rejects_non_aromatic_rings() {
        assert_eq!(aromatic_count("C1=CCC=C1"), 0);
        assert_eq!(aromatic_count("C1=CC=CC=CC=C1"), 0);
        assert_eq!(aromatic_count("O=C1C=CC(=O)C=C1"), 0);
        assert_eq!(aromatic_count("C1CCCCC1"), 0);
    }

    #[test]
    fn forced_double_bond_kekule() {
        let benzene = parse_smiles("C1=CC=CC=C1").unwrap();
        let single = benzene.bonds().iter().position(|b| b.order == 1).unwrap();
        let orders = super::kekule_with_double(&benzene, single).unwrap();
        assert_eq!(orders[single], 2);
        assert_eq!(orders.iter().filter(|&&o| o == 2).count(), 3);
    }
}
