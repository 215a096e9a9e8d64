use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::element::Element;
use super::molecule::Molecule;
use super::ChemError;

/// Element counts plus net charge. Rendered in Hill order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formula {
    counts: BTreeMap<Element, u32>,
    pub net_charge: i32,
}

impl Formula {
    pub fn new(counts: BTreeMap<Element, u32>, net_charge: i32) -> Formula {
        let counts = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        Formula { counts, net_charge }
    }

    pub fn count(&self, e: Element) -> u32 {
        self.counts.get(&e).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<Element, u32> {
        &self.counts
    }

    pub fn atom_total(&self) -> u32 {
        self.counts.values().sum()
    }

    /// Hill-ordered element string without the charge.
    pub fn hill(&self) -> String {
        let mut order: Vec<Element> = self.counts.keys().copied().collect();
        let has_carbon = self.counts.contains_key(&Element::C);
        order.sort_by(|a, b| {
            let rank = |e: &Element| -> u8 {
                match (has_carbon, e) {
                    (true, Element::C) => 0,
                    (true, Element::H) => 1,
                    _ => 2,
                }
            };
            rank(a).cmp(&rank(b)).then_with(|| a.symbol().cmp(b.symbol()))
        });
        let mut s = String::new();
        for e in order {
            s.push_str(e.symbol());
            let c = self.counts[&e];
            if c > 1 {
                s.push_str(&c.to_string());
            }
        }
        s
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hill())?;
        match self.net_charge {
            0 => Ok(()),
            1 => f.write_str("+"),
            -1 => f.write_str("-"),
            c if c > 0 => write!(f, "+{c}"),
            c => write!(f, "-{}", -c),
        }
    }
}

impl Add for &Formula {
    type Output = Formula;

    fn add(self, rhs: &Formula) -> Formula {
        let mut counts = self.counts.clone();
        for (&e, &c) in &rhs.counts {
            *counts.entry(e).or_insert(0) += c;
        }
        Formula::new(counts, self.net_charge + rhs.net_charge)
    }
}

impl FromStr for Formula {
    type Err = ChemError;

    /// Parses strings such as `C10H16N2O5S`, `HO-` or `C2H3O2-1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.trim().as_bytes();
        let mut counts = BTreeMap::new();
        let mut i = 0;
        let err = |pos: usize, msg: &str| ChemError::Lexical { pos, msg: msg.to_string() };
        while i < bytes.len() && bytes[i].is_ascii_uppercase() {
            let mut j = i + 1;
            if j < bytes.len() && bytes[j].is_ascii_lowercase() {
                j += 1;
            }
            let sym = std::str::from_utf8(&bytes[i..j]).unwrap();
            let e = Element::from_symbol(sym).ok_or_else(|| ChemError::UnsupportedElement(sym.to_string()))?;
            let mut k = j;
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            let n: u32 = if k > j {
                std::str::from_utf8(&bytes[j..k]).unwrap().parse().map_err(|_| err(j, "bad count"))?
            } else {
                1
            };
            *counts.entry(e).or_insert(0) += n;
            i = k;
        }
        if counts.is_empty() {
            return Err(err(0, "empty formula"));
        }
        let mut charge = 0i32;
        if i < bytes.len() {
            let sign = match bytes[i] {
                b'+' => 1,
                b'-' => -1,
                _ => return Err(err(i, "unexpected character in formula")),
            };
            let rest = std::str::from_utf8(&bytes[i + 1..]).unwrap();
            let mag: i32 = if rest.is_empty() {
                1
            } else {
                rest.parse().map_err(|_| err(i + 1, "bad charge"))?
            };
            charge = sign * mag;
        }
        Ok(Formula::new(counts, charge))
    }
}

/// Aggregate formula of a molecule set, implicit hydrogens included.
pub fn molecular_formula(mol: &Molecule) -> Formula {
    Formula::new(mol.element_counts(), mol.net_charge())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn f(s: &str) -> Formula {
        molecular_formula(&parse_smiles(s).unwrap())
    }

    #[test]
    fn hill_rendering() {
        assert_eq!(f("O").to_string(), "H2O");
        assert_eq!(f("[OH-]").to_string(), "HO-");
        assert_eq!(f("[OH-]").net_charge, -1);
        assert_eq!(f("CC(=O)O").to_string(), "C2H4O2");
        assert_eq!(f("Cl").to_string(), "ClH");
        assert_eq!(f("CBr").to_string(), "CH3Br");
    }

    #[test]
    fn parse_and_render_agree() {
        for s in ["C10H16N2O5S", "HO-", "C2H3O2-", "H3O+", "Mg+2"] {
            let parsed: Formula = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
    }

    #[test]
    fn additivity() {
        let a = f("CCO");
        let b = f("[Na+].[Cl-]");
        assert_eq!(&a + &b, f("CCO.[Na+].[Cl-]"));
    }
}
