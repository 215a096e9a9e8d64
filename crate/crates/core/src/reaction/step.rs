use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::arrow::{apply_arrow, ArrowSpec};
use super::balance::{check_balance, BalanceReport};
use super::ReactionError;
use crate::chem::{parse_smiles, same_species, write_smiles, Molecule, SpeciesVerdict};

/// Where a step came from.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Provenance {
    #[default]
    Unspecified,
    Curated,
    Combinatorial,
    TwoStep,
    External(u32),
    Other(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Unspecified => f.write_str("unspecified"),
            Provenance::Curated => f.write_str("curated"),
            Provenance::Combinatorial => f.write_str("combinatorial"),
            Provenance::TwoStep => f.write_str("twostep"),
            Provenance::External(i) => write!(f, "external:{i}"),
            Provenance::Other(s) => f.write_str(s),
        }
    }
}

impl From<String> for Provenance {
    fn from(s: String) -> Provenance {
        match s.as_str() {
            "unspecified" | "" => Provenance::Unspecified,
            "curated" => Provenance::Curated,
            "combinatorial" => Provenance::Combinatorial,
            "twostep" => Provenance::TwoStep,
            _ => match s.strip_prefix("external:").and_then(|i| i.parse().ok()) {
                Some(i) => Provenance::External(i),
                None => Provenance::Other(s),
            },
        }
    }
}

impl From<Provenance> for String {
    fn from(p: Provenance) -> String {
        p.to_string()
    }
}

/// A single polar elementary step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementaryStep {
    pub reactants: Molecule,
    pub products: Option<Molecule>,
    pub arrow: Option<ArrowSpec>,
    pub score: Option<f64>,
    #[serde(default)]
    pub provenance: Provenance,
    /// Filled whenever products are present.
    pub balance: Option<BalanceReport>,
    /// Whether the recorded products agree with the arrow; `None` when either is absent.
    pub consistent: Option<bool>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl ElementaryStep {
    /// Builds a step, checking that the arrow resolves in the reactants and
    /// recording balance and arrow consistency.
    pub fn new(
        reactants: Molecule,
        products: Option<Molecule>,
        arrow: Option<ArrowSpec>,
    ) -> Result<ElementaryStep, ReactionError> {
        if let Some(a) = &arrow {
            a.resolve(&reactants)?;
        }
        let balance = products.as_ref().map(|p| check_balance(&reactants, p));
        let consistent = match (&arrow, &products) {
            (Some(a), Some(p)) => Some(match apply_arrow(&reactants, a) {
                Ok(derived) => products_agree(&derived, p),
                Err(_) => false,
            }),
            _ => None,
        };
        Ok(ElementaryStep {
            reactants,
            products,
            arrow,
            score: None,
            provenance: Provenance::Unspecified,
            balance,
            consistent,
            meta: BTreeMap::new(),
        })
    }

    /// Step whose products are derived from the arrow.
    pub fn from_arrow(reactants: Molecule, arrow: ArrowSpec) -> Result<ElementaryStep, ReactionError> {
        let products = apply_arrow(&reactants, &arrow)?;
        ElementaryStep::new(reactants, Some(products), Some(arrow))
    }

    pub fn with_score(mut self, score: f64) -> ElementaryStep {
        self.score = Some(score);
        self
    }

    pub fn with_provenance(mut self, p: Provenance) -> ElementaryStep {
        self.provenance = p;
        self
    }

    pub fn is_balanced(&self) -> bool {
        self.balance.as_ref().is_some_and(|b| b.is_balanced())
    }

    /// Reaction SMILES `reactants>>products` with maps.
    pub fn reaction_smiles(&self) -> String {
        let products = self.products.as_ref().map(write_smiles).unwrap_or_default();
        format!("{}>>{}", write_smiles(&self.reactants), products)
    }
}

/// Compares derived and recorded products, ignoring map numbers that the
/// record does not carry and tolerating a different resonance drawing.
fn products_agree(derived: &Molecule, recorded: &Molecule) -> bool {
    let kept: HashSet<u32> = recorded.atoms().iter().filter_map(|a| a.map).collect();
    let maps: Vec<Option<u32>> = derived.atoms().iter().map(|a| a.map.filter(|m| kept.contains(m))).collect();
    let Ok(derived) = derived.with_maps(&maps) else {
        return false;
    };
    same_species(&derived, recorded) != SpeciesVerdict::Different
}

/// Source and sink map numbers of a step's arrow.
pub fn extract_labels(step: &ElementaryStep) -> Result<(u32, u32), ReactionError> {
    step.arrow.as_ref().map(|a| a.labels()).ok_or(ReactionError::MissingArrow)
}

/// Source and sink atom indices in the step's reactants.
pub fn extract_label_atoms(step: &ElementaryStep) -> Result<(usize, usize), ReactionError> {
    let (s, t) = extract_labels(step)?;
    let idx = |m| step.reactants.atom_by_map(m).ok_or(ReactionError::UnresolvedMap(m));
    Ok((idx(s)?, idx(t)?))
}

/// Parses `reactants>>products | arrow [| metadata]`. The metadata field is a
/// bare score or whitespace-separated `key=value` pairs; `score` and `role`
/// are lifted into the step, other keys land in `meta`.
pub fn parse_step_record(text: &str) -> Result<ElementaryStep, ReactionError> {
    let mut fields = text.trim().split('|').map(str::trim);
    let rxn = fields.next().unwrap_or("");
    let arrow_field = fields.next().unwrap_or("");
    let meta_field = fields.next().unwrap_or("");
    if fields.next().is_some() {
        return Err(ReactionError::Record("too many '|' fields".into()));
    }
    let (lhs, rhs) = split_reaction(rxn)?;
    let reactants = parse_smiles(lhs)?;
    if reactants.is_empty() {
        return Err(ReactionError::Record("no reactants".into()));
    }
    let products = if rhs.is_empty() { None } else { Some(parse_smiles(rhs)?) };
    let arrow = if arrow_field.is_empty() {
        None
    } else {
        Some(arrow_field.parse()?)
    };
    let mut step = ElementaryStep::new(reactants, products, arrow)?;
    for tok in meta_field.split_whitespace() {
        match tok.split_once('=') {
            None => {
                step.score = Some(parse_score(tok)?);
            }
            Some(("score", v)) => step.score = Some(parse_score(v)?),
            Some(("role", v)) => step.provenance = Provenance::from(v.to_string()),
            Some((k, v)) => {
                step.meta.insert(k.to_string(), v.to_string());
            }
        }
    }
    Ok(step)
}

fn parse_score(s: &str) -> Result<f64, ReactionError> {
    s.parse::<f64>()
        .ok()
        .filter(|x| !x.is_nan())
        .ok_or_else(|| ReactionError::Record(format!("bad score '{s}'")))
}

fn split_reaction(rxn: &str) -> Result<(&str, &str), ReactionError> {
    let parts: Vec<&str> = rxn.split('>').collect();
    match parts.as_slice() {
        [l, "", r] => Ok((l.trim(), r.trim())),
        [_, _, _] => Err(ReactionError::Record("agents between '>' are not supported".into())),
        _ => Err(ReactionError::Record(format!("'{rxn}' is not reaction SMILES"))),
    }
}

/// Inverse of [`parse_step_record`]: molecules are written canonically with maps.
pub fn write_step_record(step: &ElementaryStep) -> String {
    let mut s = step.reaction_smiles();
    s.push_str(" | ");
    if let Some(a) = &step.arrow {
        s.push_str(&a.to_string());
    }
    let mut meta = Vec::new();
    if step.provenance != Provenance::Unspecified {
        meta.push(format!("role={}", step.provenance));
    }
    if let Some(x) = step.score {
        meta.push(format!("score={x}"));
    }
    for (k, v) in &step.meta {
        meta.push(format!("{k}={v}"));
    }
    if !meta.is_empty() {
        s.push_str(" | ");
        s.push_str(&meta.join(" "));
    }
    s
}

impl FromStr for ElementaryStep {
    type Err = ReactionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_step_record(s)
    }
}

impl fmt::Display for ElementaryStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_step_record(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SN2: &str = "[Br-:10].[CH3:20][Cl:30]>>[Br:10][CH3:20].[Cl-:30] | LP:10>SS:20-30";

    #[test]
    fn sn2_record() {
        let step = parse_step_record(SN2).unwrap();
        assert!(step.is_balanced());
        assert_eq!(step.consistent, Some(true));
        assert_eq!(extract_labels(&step).unwrap(), (10, 20));
    }

    #[test]
    fn inconsistent_products_are_flagged() {
        let text = "[Br-:10].[CH3:20][Cl:30]>>[Br:10][Cl:30].[CH3-:20] | LP:10>SS:20-30";
        let step = parse_step_record(text).unwrap();
        assert_eq!(step.consistent, Some(false));
        assert!(step.is_balanced());
    }

    #[test]
    fn empty_arrow_field() {
        let step = parse_step_record("CCO>>CCO |").unwrap();
        assert!(step.arrow.is_none());
        assert_eq!(extract_labels(&step), Err(ReactionError::MissingArrow));
        assert_eq!(step.consistent, None);
    }

    #[test]
    fn metadata_round_trip() {
        let text = format!("{SN2} | role=twostep score=1.198 k=1e10");
        let step = parse_step_record(&text).unwrap();
        assert_eq!(step.score, Some(1.198));
        assert_eq!(step.provenance, Provenance::TwoStep);
        assert_eq!(step.meta["k"], "1e10");
        let again = parse_step_record(&write_step_record(&step)).unwrap();
        assert_eq!(write_step_record(&again), write_step_record(&step));
        assert_eq!(again.score, step.score);
    }

    #[test]
    fn bare_score() {
        let step = parse_step_record(&format!("{SN2} | 0.08")).unwrap();
        assert_eq!(step.score, Some(0.08));
    }

    #[test]
    fn unknown_map_rejected() {
        let text = "[Br-:10].[CH3:20][Cl:30]>>[Br:10][CH3:20].[Cl-:30] | LP:11>SS:20-30";
        assert_eq!(parse_step_record(text).unwrap_err(), ReactionError::UnresolvedMap(11));
    }

    #[test]
    fn malformed_reaction() {
        assert!(parse_step_record("CCO | LP:1>EO:2").is_err());
        assert!(parse_step_record("C1CC>>C | ").is_err());
    }

    #[test]
    fn provenance_tags() {
        for s in ["curated", "twostep", "external:3", "planted"] {
            assert_eq!(Provenance::from(s.to_string()).to_string(), s);
        }
    }
}
