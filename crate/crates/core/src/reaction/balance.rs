use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chem::{Element, Molecule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Balanced,
    Unbalanced,
}

/// Product-minus-reactant differences. Only nonzero element deltas are kept.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub element_delta: BTreeMap<Element, i64>,
    pub charge_delta: i64,
    pub verdict: Verdict,
}

impl BalanceReport {
    pub fn is_balanced(&self) -> bool {
        self.verdict == Verdict::Balanced
    }
}

pub fn check_balance(reactants: &Molecule, products: &Molecule) -> BalanceReport {
    let mut delta: BTreeMap<Element, i64> = BTreeMap::new();
    for (e, c) in products.element_counts() {
        *delta.entry(e).or_insert(0) += c as i64;
    }
    for (e, c) in reactants.element_counts() {
        *delta.entry(e).or_insert(0) -= c as i64;
    }
    delta.retain(|_, d| *d != 0);
    let charge_delta = products.net_charge() as i64 - reactants.net_charge() as i64;
    let verdict = if delta.is_empty() && charge_delta == 0 {
        Verdict::Balanced
    } else {
        Verdict::Unbalanced
    };
    BalanceReport {
        element_delta: delta,
        charge_delta,
        verdict,
    }
}
