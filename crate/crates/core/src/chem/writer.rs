use std::fmt::Write as _;

use super::canon;
use super::element::Element;
use super::molecule::Molecule;
use super::smiles::{aromatic_target, organic_implicit_h};

/// Canonical SMILES with atom maps and explicit hydrogen nodes preserved.
/// Fragments are written separately and joined in sorted order.
pub fn write_smiles(mol: &Molecule) -> String {
    let ranks = canon::ranks(mol, true);
    write_with_ranks(mol, &ranks)
}

/// Map-free canonical form with explicit hydrogens folded: the identity key
/// used for species comparison and deduplication.
pub fn canonical_smiles(mol: &Molecule) -> String {
    let folded = mol.fold_hydrogens(true);
    let ranks = canon::ranks(&folded, false);
    write_with_ranks(&folded, &ranks)
}

pub(crate) fn write_with_ranks(mol: &Molecule, ranks: &[usize]) -> String {
    let mut parts: Vec<String> = mol
        .components()
        .iter()
        .map(|comp| {
            let start = *comp.iter().min_by_key(|&&i| ranks[i]).unwrap();
            ComponentWriter::new(mol, ranks).write(start)
        })
        .collect();
    parts.sort();
    parts.join(".")
}

struct ComponentWriter<'a> {
    mol: &'a Molecule,
    ranks: &'a [usize],
    visited: Vec<bool>,
    bond_used: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    /// ring bonds per atom: (partner, bond)
    rings: Vec<Vec<(usize, usize)>>,
    order: Vec<usize>,
}

impl<'a> ComponentWriter<'a> {
    fn new(mol: &'a Molecule, ranks: &'a [usize]) -> Self {
        let n = mol.atom_count();
        ComponentWriter {
            mol,
            ranks,
            visited: vec![false; n],
            bond_used: vec![false; mol.bonds().len()],
            children: vec![Vec::new(); n],
            rings: vec![Vec::new(); n],
            order: vec![usize::MAX; n],
        }
    }

    fn sorted_neighbors(&self, u: usize) -> Vec<(usize, usize)> {
        let mut nb = self.mol.neighbors(u).to_vec();
        nb.sort_by_key(|&(v, _)| self.ranks[v]);
        nb
    }

    fn discover(&mut self, root: usize) {
        let mut counter = 0;
        let mut stack: Vec<(usize, Vec<(usize, usize)>, usize)> = Vec::new();
        self.visited[root] = true;
        self.order[root] = counter;
        counter += 1;
        stack.push((root, self.sorted_neighbors(root), 0));
        while let Some(top) = stack.last_mut() {
            let u = top.0;
            if top.2 >= top.1.len() {
                stack.pop();
                continue;
            }
            let (v, b) = top.1[top.2];
            top.2 += 1;
            if self.bond_used[b] {
                continue;
            }
            self.bond_used[b] = true;
            if self.visited[v] {
                self.rings[u].push((v, b));
                self.rings[v].push((u, b));
            } else {
                self.visited[v] = true;
                self.order[v] = counter;
                counter += 1;
                self.children[u].push((v, b));
                let nb = self.sorted_neighbors(v);
                stack.push((v, nb, 0));
            }
        }
    }

    fn write(mut self, root: usize) -> String {
        self.discover(root);
        let mut out = String::new();
        let mut digits: Vec<Option<usize>> = vec![None; self.mol.bonds().len()];
        let mut in_use: Vec<bool> = vec![false; 100];
        let mut stack: Vec<Frame> = vec![Frame::Atom(root, None)];
        while let Some(frame) = stack.pop() {
            match frame {
                Frame::Close => out.push(')'),
                Frame::Open => out.push('('),
                Frame::Atom(u, via) => {
                    if let Some(b) = via {
                        out.push_str(self.bond_symbol(b));
                    }
                    out.push_str(&atom_symbol(self.mol, u));
                    // closings first (partner written earlier), then openings by partner order
                    let mut ring = self.rings[u].clone();
                    ring.sort_by_key(|&(v, _)| (self.order[v] > self.order[u], self.order[v]));
                    for (v, b) in ring {
                        if self.order[v] < self.order[u] {
                            let d = digits[b].expect("ring opened before closing");
                            in_use[d] = false;
                            push_digit(&mut out, d);
                        } else {
                            let d = (1..100).find(|&d| !in_use[d]).expect("too many open rings");
                            in_use[d] = true;
                            digits[b] = Some(d);
                            out.push_str(self.bond_symbol(b));
                            push_digit(&mut out, d);
                        }
                    }
                    let kids = &self.children[u];
                    for (k, &(v, b)) in kids.iter().enumerate().rev() {
                        if k + 1 == kids.len() {
                            stack.push(Frame::Atom(v, Some(b)));
                        } else {
                            stack.push(Frame::Close);
                            stack.push(Frame::Atom(v, Some(b)));
                            stack.push(Frame::Open);
                        }
                    }
                }
            }
        }
        out
    }

    fn bond_symbol(&self, b: usize) -> &'static str {
        let bond = &self.mol.bonds()[b];
        let both_aromatic = self.mol.atom(bond.a).aromatic && self.mol.atom(bond.b).aromatic;
        if bond.aromatic {
            return "";
        }
        match bond.order {
            1 if both_aromatic => "-",
            1 => "",
            2 => "=",
            _ => "#",
        }
    }
}

enum Frame {
    Atom(usize, Option<usize>),
    Open,
    Close,
}

fn push_digit(out: &mut String, d: usize) {
    if d < 10 {
        let _ = write!(out, "{d}");
    } else {
        let _ = write!(out, "%{d:02}");
    }
}

/// Hydrogen count the reader would infer for this atom without brackets.
fn inferred_hydrogens(mol: &Molecule, i: usize) -> Option<u8> {
    let atom = mol.atom(i);
    atom.element.organic_valences()?;
    let sum: i32 = mol
        .neighbors(i)
        .iter()
        .map(|&(_, b)| {
            let bond = &mol.bonds()[b];
            if bond.aromatic {
                1
            } else {
                bond.order as i32
            }
        })
        .sum();
    if atom.aromatic {
        let remaining = aromatic_target(atom.element, 0) - sum;
        Some(if remaining >= 1 { (remaining - 1) as u8 } else { 0 })
    } else {
        Some(organic_implicit_h(atom.element, sum))
    }
}

fn atom_symbol(mol: &Molecule, i: usize) -> String {
    let atom = mol.atom(i);
    let lower = atom.aromatic && atom.element.can_be_aromatic();
    let plain = atom.charge == 0
        && atom.map.is_none()
        && atom.element != Element::Se
        && inferred_hydrogens(mol, i) == Some(atom.hydrogens);
    let sym = if lower {
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    if plain {
        return sym;
    }
    let mut s = String::with_capacity(8);
    s.push('[');
    s.push_str(&sym);
    match atom.hydrogens {
        0 => {}
        1 => s.push('H'),
        h => {
            let _ = write!(s, "H{h}");
        }
    }
    match atom.charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => {
            let _ = write!(s, "+{c}");
        }
        c => {
            let _ = write!(s, "-{}", -c);
        }
    }
    if let Some(m) = atom.map {
        let _ = write!(s, ":{m}");
    }
    s.push(']');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn canon(s: &str) -> String {
        canonical_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn methane() {
        assert_eq!(canon("C"), "C");
    }

    #[test]
    fn isomorphic_inputs_agree() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C1=CC=CC=C1"), canon("c1ccccc1"));
        assert_eq!(canon("c1ccccc1C"), canon("Cc1ccccc1"));
        assert_eq!(canon("[O-]C(C)=O"), canon("CC([O-])=O"));
    }

    #[test]
    fn writes_brackets_only_when_needed() {
        assert_eq!(canon("[CH4]"), "C");
        assert_eq!(canon("[Br-]"), "[Br-]");
        assert_eq!(canon("c1cc[nH]c1"), "c1cc[nH]c1");
        assert_eq!(canon("[Na+].[Cl-]"), "[Cl-].[Na+]");
    }

    #[test]
    fn maps_are_emitted_by_write_smiles() {
        let m = parse_smiles("[CH3:20][Cl:30]").unwrap();
        let s = write_smiles(&m);
        assert!(s.contains(":20") && s.contains(":30"));
        assert_eq!(canonical_smiles(&m), "CCl");
    }

    #[test]
    fn biphenyl_single_bond_is_explicit() {
        let s = canon("c1ccccc1-c1ccccc1");
        assert!(s.contains('-'), "{s}");
        assert_eq!(canon(&s), s);
    }

    #[test]
    fn explicit_hydrogen_nodes_fold_in_canonical_form() {
        assert_eq!(canon("[H]C([H])([H])[H]"), "C");
        assert_eq!(canon("[H][H]"), "[H][H]");
        let m = parse_smiles("[H:2][OH2+:1]").unwrap();
        assert_eq!(canonical_smiles(&m), "[OH3+]");
        assert_eq!(write_smiles(&m), "[H:2][OH2+:1]");
    }

    #[test]
    fn fixed_point_on_assorted_inputs() {
        for s in [
            "CC(=O)O",
            "c1ccc2ccccc2c1",
            "C1CC2CCC1CC2",
            "O=[N+]([O-])c1ccc(Cl)cc1",
            "CS(=O)(=O)Cl",
            "C#N",
            "[cH-]1cccc1",
            "C1CC1.C1CC1",
        ] {
            let once = canon(s);
            assert_eq!(canon(&once), once, "{s}");
        }
    }
}
