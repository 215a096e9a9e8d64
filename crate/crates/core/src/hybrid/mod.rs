//! Ensemble of external predictors, alchemy filter and two-step back-fill.

mod adapter;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{canonical_smiles, parse_smiles, write_smiles, Molecule};
use crate::reaction::{check_balance, BalanceReport, Provenance};
use crate::twostep::{two_step_predict, MechanismCandidate, TwoStepError, TwoStepModels};

pub use adapter::{
    AdapterCandidate, AdapterRequest, AdapterResponse, EchoPredictor, Hello, MockPredictor, Predictor, PredictorError,
    ProcessAdapter, DEFAULT_DEADLINE,
};

/// Log-likelihoods are clamped to this range before exponentiation; NaN
/// counts as the lower bound.
pub const LOG_LIKELIHOOD_FLOOR: f64 = -700.0;

#[derive(Debug, Error)]
pub enum HybridError {
    #[error("every external predictor failed: {0:?}")]
    AllFailed(Vec<String>),
    #[error("no external predictors configured")]
    NoPredictors,
    #[error(transparent)]
    TwoStep(#[from] TwoStepError),
}

/// One external candidate with parsed products.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredProducts {
    pub products: Molecule,
    pub log_likelihood: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub products: Molecule,
    /// Natural log of `probability`.
    pub log_likelihood: f64,
    /// Summed probability over the models that proposed this product set.
    pub probability: f64,
    /// `external:i` for the first proposing model, or `twostep`.
    pub provenance: Provenance,
    /// Every external model that proposed it.
    pub models: Vec<u32>,
    pub balance: BalanceReport,
    /// Canonical product text.
    pub key: String,
}

impl RankedCandidate {
    pub fn smiles(&self) -> String {
        write_smiles(&self.products)
    }
}

pub fn likelihood(log_likelihood: f64) -> f64 {
    if log_likelihood.is_nan() {
        return 0.0;
    }
    log_likelihood.clamp(LOG_LIKELIHOOD_FLOOR, 0.0).exp()
}

/// Groups candidates by canonical product set and sums their likelihoods.
/// Sorted by summed likelihood, then canonical text. `reactants` only feeds
/// the balance report.
pub fn ensemble_merge(reactants: &Molecule, outputs: &[Vec<ScoredProducts>]) -> Vec<RankedCandidate> {
    struct Group {
        probs: Vec<f64>,
        models: Vec<u32>,
        products: Molecule,
        text: String,
    }
    let mut groups: BTreeMap<String, Group> = BTreeMap::new();
    for (m, list) in outputs.iter().enumerate() {
        for c in list {
            let key = canonical_smiles(&c.products);
            let text = write_smiles(&c.products);
            let g = groups.entry(key).or_insert_with(|| Group {
                probs: Vec::new(),
                models: Vec::new(),
                products: c.products.clone(),
                text: text.clone(),
            });
            g.probs.push(likelihood(c.log_likelihood));
            if !g.models.contains(&(m as u32)) {
                g.models.push(m as u32);
            }
            // representative independent of model order
            if text < g.text {
                g.text = text;
                g.products = c.products.clone();
            }
        }
    }
    let mut out: Vec<RankedCandidate> = groups
        .into_iter()
        .map(|(key, mut g)| {
            g.probs.sort_by(f64::total_cmp);
            let probability: f64 = g.probs.iter().sum();
            g.models.sort_unstable();
            RankedCandidate {
                balance: check_balance(reactants, &g.products),
                products: g.products,
                log_likelihood: probability.ln(),
                probability,
                provenance: Provenance::External(g.models[0]),
                models: g.models,
                key,
            }
        })
        .collect();
    out.sort_by(|a, b| b.probability.total_cmp(&a.probability).then_with(|| a.key.cmp(&b.key)));
    out
}

/// Replaces each unbalanced candidate with the next two-step prediction whose
/// product set is not already in the list; when none is left the slot is
/// dropped. Every returned candidate is balanced.
pub fn alchemy_filter(
    reactants: &Molecule,
    candidates: Vec<RankedCandidate>,
    fallbacks: &[MechanismCandidate],
) -> Vec<RankedCandidate> {
    let mut present: HashSet<String> = candidates
        .iter()
        .filter(|c| c.balance.is_balanced())
        .map(|c| c.key.clone())
        .collect();
    let mut next = 0;
    let mut out = Vec::with_capacity(candidates.len());
    for c in candidates {
        if c.balance.is_balanced() {
            out.push(c);
            continue;
        }
        let mut replaced = false;
        while next < fallbacks.len() {
            let f = &fallbacks[next];
            next += 1;
            let Some(products) = &f.step.products else {
                continue;
            };
            let products = products.fold_hydrogens(false);
            let balance = check_balance(reactants, &products);
            let key = canonical_smiles(&products);
            if !balance.is_balanced() || present.contains(&key) {
                continue;
            }
            log::debug!("slot '{}' replaced by two-step '{key}'", c.key);
            present.insert(key.clone());
            let probability = f.score().unwrap_or(0.0);
            out.push(RankedCandidate {
                products,
                log_likelihood: probability.ln(),
                probability,
                provenance: Provenance::TwoStep,
                models: Vec::new(),
                balance,
                key,
            });
            replaced = true;
            break;
        }
        if !replaced {
            log::debug!("slot '{}' dropped, no unused two-step prediction", c.key);
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HybridOutput {
    pub candidates: Vec<RankedCandidate>,
    /// (model index, error) for each predictor that failed.
    pub failures: Vec<(usize, String)>,
    /// Candidates whose products did not parse, per model.
    pub unparsable: usize,
}

/// Parses adapter candidates; unparsable products are skipped.
pub fn parse_candidates(list: &[AdapterCandidate]) -> (Vec<ScoredProducts>, usize) {
    let mut bad = 0;
    let mut out = Vec::with_capacity(list.len());
    for c in list {
        match parse_smiles(&c.products) {
            Ok(products) => out.push(ScoredProducts {
                products,
                log_likelihood: c.log_likelihood,
            }),
            Err(e) => {
                log::warn!("unparsable candidate '{}': {e}", c.products);
                bad += 1;
            }
        }
    }
    (out, bad)
}

/// Queries every predictor concurrently. Failed predictors are reported, not
/// fatal, unless all of them fail.
pub fn query_ensemble(
    predictors: &[Box<dyn Predictor>],
    reactants: &str,
    top_k: usize,
) -> Result<(Vec<Vec<AdapterCandidate>>, Vec<(usize, String)>), HybridError> {
    if predictors.is_empty() {
        return Err(HybridError::NoPredictors);
    }
    let results: Vec<Result<Vec<AdapterCandidate>, PredictorError>> = if predictors.len() == 1 {
        vec![predictors[0].predict(reactants, top_k)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = predictors
                .iter()
                .map(|p| s.spawn(move || p.predict(reactants, top_k)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(PredictorError::Protocol("predictor panicked".into()))))
                .collect()
        })
    };
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(list) => ok.push(list),
            Err(e) => {
                log::warn!("predictor {i} ({}) failed: {e}", predictors[i].name());
                failures.push((i, e.to_string()));
                ok.push(Vec::new());
            }
        }
    }
    if failures.len() == predictors.len() {
        return Err(HybridError::AllFailed(failures.into_iter().map(|f| f.1).collect()));
    }
    Ok((ok, failures))
}

/// Merge, filter and truncate given external outputs and two-step fallbacks.
pub fn hybrid_combine(
    reactants: &Molecule,
    outputs: &[Vec<ScoredProducts>],
    fallbacks: &[MechanismCandidate],
    k: usize,
) -> Vec<RankedCandidate> {
    let merged = ensemble_merge(reactants, outputs);
    let mut out = alchemy_filter(reactants, merged, fallbacks);
    out.truncate(k);
    out
}

/// Adapter fan-out, merge, alchemy filter with two-step back-fill, top `k`.
/// Without models, alchemical slots are dropped rather than replaced.
pub fn hybrid_predict(
    predictors: &[Box<dyn Predictor>],
    models: Option<&TwoStepModels>,
    reactants: &Molecule,
    k: usize,
    k_sites: usize,
) -> Result<HybridOutput, HybridError> {
    let text = write_smiles(reactants);
    let (raw, failures) = query_ensemble(predictors, &text, k)?;
    let mut unparsable = 0;
    let outputs: Vec<Vec<ScoredProducts>> = raw
        .iter()
        .map(|l| {
            let (v, bad) = parse_candidates(l);
            unparsable += bad;
            v
        })
        .collect();
    let merged = ensemble_merge(reactants, &outputs);
    let fallbacks = match models {
        Some(m) if merged.iter().any(|c| !c.balance.is_balanced()) => {
            two_step_predict(m, reactants, k_sites, merged.len() + k)?.candidates
        }
        _ => Vec::new(),
    };
    let mut candidates = alchemy_filter(reactants, merged, &fallbacks);
    candidates.truncate(k);
    Ok(HybridOutput {
        candidates,
        failures,
        unparsable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::ElementaryStep;

    fn sp(s: &str, p: f64) -> ScoredProducts {
        ScoredProducts {
            products: parse_smiles(s).unwrap(),
            log_likelihood: p.ln(),
        }
    }

    fn keys(v: &[RankedCandidate]) -> Vec<&str> {
        v.iter().map(|c| c.key.as_str()).collect()
    }

    fn reactants() -> Molecule {
        parse_smiles("CBr.[OH-]").unwrap()
    }

    #[test]
    fn single_model_keeps_order() {
        let out = ensemble_merge(&reactants(), &[vec![sp("CO.[Br-]", 0.5), sp("CBr.[OH-]", 0.3), sp("C=O", 0.1)]]);
        assert_eq!(keys(&out), vec!["CO.[Br-]", "CBr.[OH-]", "C=O"]);
        assert!((out[0].probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn agreement_outranks_a_single_vote() {
        let out = ensemble_merge(
            &reactants(),
            &[vec![sp("CO.[Br-]", 0.3), sp("C=O", 0.6)], vec![sp("[Br-].OC", 0.4)]],
        );
        assert_eq!(keys(&out), vec!["CO.[Br-]", "C=O"]);
        assert!((out[0].probability - 0.7).abs() < 1e-12);
        assert_eq!(out[0].models, vec![0, 1]);
    }

    #[test]
    fn merge_ignores_model_order() {
        let a = vec![sp("CO.[Br-]", 0.3), sp("C", 0.2)];
        let b = vec![sp("CO.[Br-]", 0.1), sp("N", 0.4)];
        let c = vec![sp("N", 0.05)];
        let x = ensemble_merge(&reactants(), &[a.clone(), b.clone(), c.clone()]);
        let y = ensemble_merge(&reactants(), &[c, a, b]);
        let strip = |v: &[RankedCandidate]| v.iter().map(|c| (c.key.clone(), c.probability)).collect::<Vec<_>>();
        assert_eq!(strip(&x), strip(&y));
    }

    #[test]
    fn likelihood_is_clamped() {
        assert_eq!(likelihood(f64::NAN), 0.0);
        assert_eq!(likelihood(3.0), 1.0);
        assert!(likelihood(-1e9) > 0.0);
    }

    fn fallback(products: &str, score: f64) -> MechanismCandidate {
        let mut step = ElementaryStep::new(reactants(), Some(parse_smiles(products).unwrap()), None).unwrap();
        step.score = Some(score);
        MechanismCandidate {
            step,
            source_probability: 1.0,
            sink_probability: 1.0,
        }
    }

    #[test]
    fn balanced_input_passes_through() {
        let r = reactants();
        let merged = ensemble_merge(&r, &[vec![sp("CO.[Br-]", 0.5), sp("CBr.[OH-]", 0.3)]]);
        let out = alchemy_filter(&r, merged.clone(), &[fallback("C[OH2+].[Br-].[OH-]", 1.0)]);
        assert_eq!(out, merged);
    }

    #[test]
    fn alchemical_slots_are_replaced_then_dropped() {
        let r = reactants();
        // missing an H, then an extra positive charge
        let merged = ensemble_merge(
            &r,
            &[vec![sp("CO.[Br-]", 0.5), sp("C[O].[Br-]", 0.4), sp("C[OH2+].[Br-]", 0.3), sp("C", 0.2)]],
        );
        assert_eq!(merged.iter().filter(|c| !c.balance.is_balanced()).count(), 3);
        let fb = [fallback("CO.[Br-]", 2.0), fallback("C=O.[Br-].[H][H]", 1.0)];
        let out = alchemy_filter(&r, merged, &fb);
        assert_eq!(keys(&out), vec!["CO.[Br-]", "C=O.[Br-].[H][H]"]);
        assert_eq!(out[1].provenance, Provenance::TwoStep);
        assert!(out.iter().all(|c| c.balance.is_balanced()));
    }

    #[test]
    fn all_predictors_failing_is_an_error() {
        let p: Vec<Box<dyn Predictor>> = vec![Box::new(MockPredictor::failing("down"))];
        assert!(matches!(query_ensemble(&p, "C", 3), Err(HybridError::AllFailed(_))));
        let p: Vec<Box<dyn Predictor>> = vec![Box::new(MockPredictor::failing("down")), Box::new(EchoPredictor)];
        let (out, failures) = query_ensemble(&p, "C", 3).unwrap();
        assert_eq!(failures.len(), 1);
        assert_eq!(out[1][0].products, "C");
    }
}
