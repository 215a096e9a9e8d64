//! Step predictors used to expand search nodes.

use std::collections::HashMap;

use crate::chem::{canonical_smiles, parse_smiles, write_smiles, Molecule};
use crate::hybrid::{
    alchemy_filter, ensemble_merge, parse_candidates, query_ensemble, Predictor, RankedCandidate, ScoredProducts,
};
use crate::reaction::{parse_step_record, ElementaryStep, Provenance};
use crate::twostep::{two_step_predict, TwoStepModels};

/// Produces up to `k` ranked steps from a node. Each step's products become
/// a child node.
pub trait StepPredictor {
    fn predict_steps(&self, node: &Molecule, k: usize) -> Result<Vec<ElementaryStep>, String>;
}

/// Canned steps keyed by canonical node text.
#[derive(Default, Clone)]
pub struct TablePredictor {
    table: HashMap<String, Vec<ElementaryStep>>,
}

impl TablePredictor {
    pub fn new() -> TablePredictor {
        TablePredictor::default()
    }

    /// Adds a step from `node` to `products` with an optional score.
    pub fn add(&mut self, node: &str, products: &str, score: Option<f64>) -> Result<(), String> {
        let r = parse_smiles(node).map_err(|e| e.to_string())?;
        let p = parse_smiles(products).map_err(|e| e.to_string())?;
        let mut step = ElementaryStep::new(r.clone(), Some(p), None).map_err(|e| e.to_string())?;
        step.score = score;
        self.table.entry(canonical_smiles(&r)).or_default().push(step);
        Ok(())
    }

    /// Adds a full step record; its reactants are the node.
    pub fn add_record(&mut self, record: &str) -> Result<(), String> {
        let step = parse_step_record(record).map_err(|e| e.to_string())?;
        self.table.entry(canonical_smiles(&step.reactants)).or_default().push(step);
        Ok(())
    }
}

impl StepPredictor for TablePredictor {
    fn predict_steps(&self, node: &Molecule, k: usize) -> Result<Vec<ElementaryStep>, String> {
        let mut v = self.table.get(&canonical_smiles(node)).cloned().unwrap_or_default();
        v.truncate(k);
        Ok(v)
    }
}

pub struct TwoStepPredictor<'a> {
    pub models: &'a TwoStepModels,
    pub k_sites: usize,
}

impl StepPredictor for TwoStepPredictor<'_> {
    fn predict_steps(&self, node: &Molecule, k: usize) -> Result<Vec<ElementaryStep>, String> {
        let p = two_step_predict(self.models, node, self.k_sites, k).map_err(|e| e.to_string())?;
        Ok(p.candidates.into_iter().map(|c| c.step).collect())
    }
}

/// External ensemble, optionally with the alchemy filter and two-step
/// back-fill. Steps whose products the two-step models also propose take
/// that mechanism's arrow and ranker score; the rest stay unscored.
pub struct EnsemblePredictor<'a> {
    pub predictors: &'a [Box<dyn Predictor>],
    pub models: Option<&'a TwoStepModels>,
    pub k_sites: usize,
    /// Apply the alchemy filter (hybrid); off for adapter-only search.
    pub filter: bool,
    /// Two-step predictions consulted for back-fill and scores.
    pub pool: usize,
}

impl EnsemblePredictor<'_> {
    fn to_step(node: &Molecule, c: &RankedCandidate, known: &HashMap<String, ElementaryStep>) -> ElementaryStep {
        if let Some(s) = known.get(&c.key) {
            let mut s = s.clone();
            s.provenance = c.provenance.clone();
            return s;
        }
        let mut s = ElementaryStep::new(node.clone(), Some(c.products.clone()), None).expect("no arrow to resolve");
        s.provenance = c.provenance.clone();
        s
    }
}

impl StepPredictor for EnsemblePredictor<'_> {
    fn predict_steps(&self, node: &Molecule, k: usize) -> Result<Vec<ElementaryStep>, String> {
        let (raw, _) = query_ensemble(self.predictors, &write_smiles(node), k).map_err(|e| e.to_string())?;
        let outputs: Vec<Vec<ScoredProducts>> = raw.iter().map(|l| parse_candidates(l).0).collect();
        let merged = ensemble_merge(node, &outputs);
        let fallbacks = match self.models {
            Some(m) => two_step_predict(m, node, self.k_sites, self.pool.max(k)).map_err(|e| e.to_string())?.candidates,
            None => Vec::new(),
        };
        let known: HashMap<String, ElementaryStep> = fallbacks
            .iter()
            .map(|c| {
                let mut s = c.step.clone();
                s.provenance = Provenance::TwoStep;
                (c.product_key(), s)
            })
            .collect();
        let mut list = if self.filter {
            alchemy_filter(node, merged, &fallbacks)
        } else {
            merged
        };
        list.truncate(k);
        Ok(list.iter().map(|c| Self::to_step(node, c, &known)).collect())
    }
}
