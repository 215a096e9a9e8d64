//! Target specifications and matching.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chem::{molecular_formula, parse_smiles, same_species, write_smiles, ChemError, Formula, Molecule, SpeciesVerdict};

/// A target structure (every molecule must appear in the node) or a formula
/// (some single molecule of the node must have it, charge included).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "lowercase")]
pub enum TargetSpec {
    Structure(Molecule),
    Formula(Formula),
}

impl TargetSpec {
    /// `formula:C10H16N2O5S` is a formula; anything else is read as SMILES
    /// first and as a formula if that fails.
    pub fn parse(text: &str) -> Result<TargetSpec, ChemError> {
        let text = text.trim();
        if let Some(f) = text.strip_prefix("formula:") {
            return Ok(TargetSpec::Formula(f.parse()?));
        }
        match parse_smiles(text) {
            Ok(m) => Ok(TargetSpec::Structure(m)),
            Err(e) => text.parse().map(TargetSpec::Formula).map_err(|_| e),
        }
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Structure(m) => f.write_str(&write_smiles(m)),
            TargetSpec::Formula(x) => write!(f, "formula:{x}"),
        }
    }
}

fn same(a: &Molecule, b: &Molecule) -> bool {
    same_species(a, b) != SpeciesVerdict::Different
}

/// Whether `wanted` can be matched injectively onto molecules of `have`,
/// identical or resonance-equivalent, maps ignored.
pub fn contains_species(have: &Molecule, wanted: &Molecule) -> bool {
    let have: Vec<Molecule> = have.without_maps().fragments();
    let wanted: Vec<Molecule> = wanted.without_maps().fragments();
    if wanted.len() > have.len() {
        return false;
    }
    let fits: Vec<Vec<usize>> = wanted
        .iter()
        .map(|w| (0..have.len()).filter(|&h| same(&have[h], w)).collect())
        .collect();
    fn assign(i: usize, fits: &[Vec<usize>], used: &mut Vec<bool>) -> bool {
        if i == fits.len() {
            return true;
        }
        for &h in &fits[i] {
            if !used[h] {
                used[h] = true;
                if assign(i + 1, fits, used) {
                    return true;
                }
                used[h] = false;
            }
        }
        false
    }
    assign(0, &fits, &mut vec![false; have.len()])
}

pub fn match_target(node: &Molecule, spec: &TargetSpec) -> bool {
    match spec {
        TargetSpec::Structure(t) => contains_species(node, t),
        TargetSpec::Formula(f) => node.fragments().iter().any(|m| molecular_formula(m) == *f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Molecule {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn mesylate_formula() {
        let spec = TargetSpec::parse("C10H16N2O5S").unwrap();
        assert!(matches!(spec, TargetSpec::Formula(_)));
        let node = m("CS(=O)(=O)OCCCCn1cc(C)c(=O)[nH]c1=O.CC[NH+](CC)CC.[Cl-]");
        assert!(match_target(&node, &spec));
        assert!(!match_target(&m("CC[NH+](CC)CC.[Cl-]"), &spec));
        assert_eq!(spec.to_string(), "formula:C10H16N2O5S");
    }

    #[test]
    fn formula_prefix_and_charge() {
        let spec = TargetSpec::parse("formula:HO-").unwrap();
        assert!(match_target(&m("[OH-].C"), &spec));
        assert!(!match_target(&m("O"), &spec));
    }

    #[test]
    fn structure_subset_and_resonance() {
        let spec = TargetSpec::parse("[CH2-]C=O").unwrap();
        assert!(match_target(&m("C=C[O-].[Na+]"), &spec));
        assert!(!match_target(&m("[Na+]"), &spec));
        let two = TargetSpec::parse("O.O").unwrap();
        assert!(!match_target(&m("O.C"), &two));
        assert!(match_target(&m("O.C.O"), &two));
    }
}
