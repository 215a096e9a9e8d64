//! SMILES reader for the supported Daylight subset: organic-subset and bracket
//! atoms, branches, ring closures, charges, atom maps and lowercase aromatics.
//! Isotopes and wildcards are rejected.

use std::collections::BTreeMap;

use super::aromatic::perfect_matching;
use super::element::Element;
use super::molecule::{Atom, Bond, BondStereo, Chirality, Molecule};
use super::ChemError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BondSym {
    Implicit,
    Single,
    Double,
    Triple,
    Aromatic,
}

struct PendingBond {
    sym: BondSym,
    stereo: Option<BondStereo>,
}

struct RawAtom {
    atom: Atom,
    bracket: bool,
    aromatic: bool,
}

struct RawBond {
    a: usize,
    b: usize,
    sym: BondSym,
    stereo: Option<BondStereo>,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<RawAtom>,
    bonds: Vec<RawBond>,
}

fn lex(pos: usize, msg: impl Into<String>) -> ChemError {
    ChemError::Lexical { pos, msg: msg.into() }
}

/// Parses SMILES into a molecule (set). Aromatic input is kekulized; aromatic
/// flags are then re-derived from the Kekulé structure.
pub fn parse_smiles(text: &str) -> Result<Molecule, ChemError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Molecule::empty());
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
    };
    p.parse()?;
    p.finish()
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn parse(&mut self) -> Result<(), ChemError> {
        let mut prev: Option<usize> = None;
        let mut branches: Vec<Option<usize>> = Vec::new();
        let mut pending: Option<PendingBond> = None;
        let mut rings: BTreeMap<u32, (usize, Option<PendingBond>, usize)> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() {
                        return Err(lex(start, "branch opened before any atom"));
                    }
                    branches.push(prev);
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return Err(lex(start, "bond symbol before ')'"));
                    }
                    prev = branches.pop().ok_or_else(|| lex(start, "unbalanced ')'"))?;
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() {
                        return Err(lex(start, "bond symbol before '.'"));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if pending.is_some() {
                        return Err(lex(start, "two consecutive bond symbols"));
                    }
                    let (sym, stereo) = match c {
                        b'-' => (BondSym::Single, None),
                        b'=' => (BondSym::Double, None),
                        b'#' => (BondSym::Triple, None),
                        b':' => (BondSym::Aromatic, None),
                        b'/' => (BondSym::Single, Some(BondStereo::Up)),
                        _ => (BondSym::Single, Some(BondStereo::Down)),
                    };
                    pending = Some(PendingBond { sym, stereo });
                    self.pos += 1;
                }
                b'$' => return Err(lex(start, "quadruple bonds are not supported")),
                b'*' => return Err(lex(start, "wildcard atoms are not supported")),
                b'0'..=b'9' | b'%' => {
                    let Some(u) = prev else {
                        return Err(lex(start, "ring bond before any atom"));
                    };
                    let label = self.ring_label()?;
                    if let Some((v, open_bond, _)) = rings.remove(&label) {
                        if v == u {
                            return Err(lex(start, "ring closure onto the same atom"));
                        }
                        let sym = merge_ring_bond(open_bond.as_ref(), pending.as_ref(), start)?;
                        let stereo = pending.as_ref().and_then(|p| p.stereo);
                        pending = None;
                        self.bonds.push(RawBond { a: v, b: u, sym, stereo });
                    } else {
                        rings.insert(label, (u, pending.take(), start));
                    }
                }
                b'[' => {
                    let idx = self.bracket_atom()?;
                    self.link(prev, idx, pending.take());
                    prev = Some(idx);
                }
                _ => {
                    let idx = self.organic_atom()?;
                    self.link(prev, idx, pending.take());
                    prev = Some(idx);
                }
            }
        }
        if pending.is_some() {
            return Err(lex(self.pos, "dangling bond symbol"));
        }
        if !branches.is_empty() {
            return Err(lex(self.pos, "unclosed branch"));
        }
        if let Some((_, (_, _, pos))) = rings.into_iter().next() {
            return Err(lex(pos, "unclosed ring bond"));
        }
        Ok(())
    }

    fn link(&mut self, prev: Option<usize>, idx: usize, pending: Option<PendingBond>) {
        if let Some(p) = prev {
            let (sym, stereo) = pending.map_or((BondSym::Implicit, None), |b| (b.sym, b.stereo));
            self.bonds.push(RawBond { a: p, b: idx, sym, stereo });
        }
    }

    fn ring_label(&mut self) -> Result<u32, ChemError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            let digits = self.text.get(self.pos + 1..self.pos + 3).ok_or_else(|| lex(start, "'%' needs two digits"))?;
            if !digits.iter().all(u8::is_ascii_digit) {
                return Err(lex(start, "'%' needs two digits"));
            }
            self.pos += 3;
            Ok(((digits[0] - b'0') * 10 + (digits[1] - b'0')) as u32)
        } else {
            let d = self.peek().unwrap() - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn organic_atom(&mut self) -> Result<usize, ChemError> {
        let start = self.pos;
        let c = self.peek().unwrap();
        let next = self.text.get(self.pos + 1).copied();
        let (element, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => (Element::Cl, false, 2),
            (b'B', Some(b'r')) => (Element::Br, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            _ => {
                return Err(lex(start, format!("unexpected character '{}'", c as char)));
            }
        };
        self.pos += len;
        self.atoms.push(RawAtom {
            atom: Atom::new(element),
            bracket: false,
            aromatic,
        });
        Ok(self.atoms.len() - 1)
    }

    fn number(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            None
        } else {
            std::str::from_utf8(&self.text[start..self.pos]).ok()?.parse().ok()
        }
    }

    fn bracket_atom(&mut self) -> Result<usize, ChemError> {
        let open = self.pos;
        self.pos += 1;
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(lex(self.pos, "isotopes are not supported"));
        }
        let sym_start = self.pos;
        let (element, aromatic) = self.bracket_symbol()?;
        let mut atom = Atom::new(element);
        if self.peek() == Some(b'@') {
            self.pos += 1;
            atom.chirality = Some(if self.peek() == Some(b'@') {
                self.pos += 1;
                Chirality::Clockwise
            } else {
                Chirality::CounterClockwise
            });
        }
        if self.peek() == Some(b'H') {
            self.pos += 1;
            let h = self.number().unwrap_or(1);
            if h > 8 {
                return Err(lex(self.pos, "implausible hydrogen count"));
            }
            atom.hydrogens = h as u8;
        }
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let mut magnitude = 1i32;
            if let Some(n) = self.number() {
                magnitude = n as i32;
            } else {
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    magnitude += 1;
                }
            }
            if magnitude > 4 {
                return Err(lex(self.pos, "implausible formal charge"));
            }
            atom.charge = if sign == b'+' { magnitude as i8 } else { -(magnitude as i8) };
        }
        if self.peek() == Some(b':') {
            self.pos += 1;
            let m = self.number().ok_or_else(|| lex(self.pos, "atom map needs digits"))?;
            if m == 0 {
                return Err(lex(self.pos, "atom map 0 is reserved for unmapped atoms"));
            }
            atom.map = Some(m);
        }
        if self.peek() != Some(b']') {
            return Err(lex(self.pos, format!("unterminated bracket atom opened at {open}")));
        }
        self.pos += 1;
        if aromatic && !element.can_be_aromatic() {
            return Err(lex(sym_start, format!("{element} cannot be aromatic")));
        }
        self.atoms.push(RawAtom {
            atom,
            bracket: true,
            aromatic,
        });
        Ok(self.atoms.len() - 1)
    }

    fn bracket_symbol(&mut self) -> Result<(Element, bool), ChemError> {
        let start = self.pos;
        let c = self.peek().ok_or_else(|| lex(start, "empty bracket atom"))?;
        if c == b'*' {
            return Err(lex(start, "wildcard atoms are not supported"));
        }
        if c.is_ascii_lowercase() {
            if self.text.get(start..start + 2) == Some(b"se") {
                self.pos += 2;
                return Ok((Element::Se, true));
            }
            self.pos += 1;
            let sym = (c as char).to_ascii_uppercase().to_string();
            let e = Element::from_symbol(&sym).ok_or_else(|| lex(start, format!("unknown aromatic symbol '{}'", c as char)))?;
            return Ok((e, true));
        }
        if !c.is_ascii_uppercase() {
            return Err(lex(start, format!("unexpected character '{}'", c as char)));
        }
        if let Some(&l) = self.text.get(start + 1) {
            if l.is_ascii_lowercase() {
                let two = std::str::from_utf8(&self.text[start..start + 2]).unwrap();
                if let Some(e) = Element::from_symbol(two) {
                    self.pos += 2;
                    return Ok((e, false));
                }
                // letters such as 'Fe' or 'Cu' are real elements outside the model
                if is_known_symbol(two) {
                    return Err(ChemError::UnsupportedElement(two.to_string()));
                }
            }
        }
        let one = (c as char).to_string();
        self.pos += 1;
        match Element::from_symbol(&one) {
            Some(e) => Ok((e, false)),
            None => Err(ChemError::UnsupportedElement(one)),
        }
    }

    fn finish(self) -> Result<Molecule, ChemError> {
        let n = self.atoms.len();
        let aromatic: Vec<bool> = self.atoms.iter().map(|a| a.aromatic).collect();
        let syms: Vec<BondSym> = self
            .bonds
            .iter()
            .map(|b| match b.sym {
                BondSym::Implicit if aromatic[b.a] && aromatic[b.b] => BondSym::Aromatic,
                BondSym::Implicit => BondSym::Single,
                s => s,
            })
            .collect();
        let mut bond_sum = vec![0i32; n];
        for (b, s) in self.bonds.iter().zip(&syms) {
            let w = match s {
                BondSym::Double => 2,
                BondSym::Triple => 3,
                _ => 1,
            };
            bond_sum[b.a] += w;
            bond_sum[b.b] += w;
        }
        let mut atoms: Vec<Atom> = Vec::with_capacity(n);
        let mut needs = vec![false; n];
        for (i, raw) in self.atoms.iter().enumerate() {
            let mut atom = raw.atom.clone();
            let has_aromatic_bond = self
                .bonds
                .iter()
                .zip(&syms)
                .any(|(b, s)| *s == BondSym::Aromatic && (b.a == i || b.b == i));
            if raw.aromatic {
                let remaining = aromatic_target(atom.element, atom.charge) - bond_sum[i];
                if raw.bracket {
                    needs[i] = has_aromatic_bond && remaining - atom.hydrogens as i32 >= 1;
                } else if remaining >= 1 {
                    atom.hydrogens = (remaining - 1) as u8;
                    needs[i] = has_aromatic_bond;
                }
            } else if !raw.bracket {
                atom.hydrogens = organic_implicit_h(atom.element, bond_sum[i]);
            }
            atoms.push(atom);
        }
        let aromatic_edges: Vec<usize> = (0..self.bonds.len()).filter(|&i| syms[i] == BondSym::Aromatic).collect();
        let edges: Vec<(usize, usize)> = aromatic_edges.iter().map(|&i| (self.bonds[i].a, self.bonds[i].b)).collect();
        let doubles = perfect_matching(n, &needs, &edges).ok_or_else(|| {
            ChemError::Kekulize("no alternating single/double assignment for the aromatic system".into())
        })?;
        let mut orders: Vec<u8> = syms
            .iter()
            .map(|s| match s {
                BondSym::Double => 2,
                BondSym::Triple => 3,
                _ => 1,
            })
            .collect();
        for e in doubles {
            orders[aromatic_edges[e]] = 2;
        }
        let bonds: Vec<Bond> = self
            .bonds
            .iter()
            .zip(orders)
            .map(|(b, order)| Bond {
                a: b.a,
                b: b.b,
                order,
                aromatic: false,
                stereo: b.stereo,
            })
            .collect();
        Molecule::from_parts(atoms, bonds)
    }
}

fn merge_ring_bond(open: Option<&PendingBond>, close: Option<&PendingBond>, pos: usize) -> Result<BondSym, ChemError> {
    match (open.map(|b| b.sym), close.map(|b| b.sym)) {
        (None, None) => Ok(BondSym::Implicit),
        (Some(s), None) | (None, Some(s)) => Ok(s),
        (Some(a), Some(b)) if a == b => Ok(a),
        _ => Err(lex(pos, "conflicting ring-closure bond symbols")),
    }
}

/// Number of bonds (including hydrogens) an aromatic atom of this element and
/// charge forms, by isoelectronic analogy with the neutral main-group atom.
pub(crate) fn aromatic_target(element: Element, charge: i8) -> i32 {
    let e = element.valence_electrons() - charge as i32;
    if e <= 4 {
        e
    } else {
        8 - e
    }
}

/// Implicit hydrogens of an organic-subset atom written without brackets.
pub(crate) fn organic_implicit_h(element: Element, bond_sum: i32) -> u8 {
    element
        .organic_valences()
        .and_then(|vals| vals.iter().find(|&&v| v >= bond_sum))
        .map_or(0, |v| (v - bond_sum) as u8)
}

fn is_known_symbol(s: &str) -> bool {
    const OTHERS: &[&str] = &[
        "He", "Be", "Ne", "Al", "Ar", "Ca", "Sc", "Ti", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
        "Kr", "Rb", "Sr", "Zr", "Mo", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sb", "Te", "Xe", "Cs", "Ba", "Pt", "Au",
        "Hg", "Tl", "Pb", "Bi",
    ];
    OTHERS.contains(&s)
}
