//! Reactive-site prediction, mechanism enumeration and plausibility ranking.

mod enumerate;
mod train;

use std::cmp::Ordering;
use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{canonical_rank, canonical_smiles, symmetry_classes, Molecule};
use crate::featurize::{atom_fingerprints, FeatureError, ReactionFeaturizer, ATOM_FP_LEN, REACTION_FP_LEN};
use crate::nn::{load_model, save_model, Mlp, NnError};
use crate::reaction::{extract_label_atoms, write_step_record, ElementaryStep, ReactionError};

pub use enumerate::{
    enumerate_mechanisms, enumerate_scored, legal_pairs, pair_allowed, sink_orbitals, source_orbitals, Enumeration,
    DEFAULT_CAP,
};
pub use train::{build_ranker_pairs, build_site_examples, train_two_step, TwoStepTrainConfig};

#[derive(Debug, Error)]
pub enum TwoStepError {
    #[error("model {path}: {source}")]
    Model { path: String, source: NnError },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteRole {
    Source,
    Sink,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactiveSitePrediction {
    /// Atom index in the molecule the prediction was made on.
    pub atom: usize,
    pub map: Option<u32>,
    pub role: SiteRole,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MechanismCandidate {
    /// Carries reactants, products, arrow and (once ranked) the score.
    pub step: ElementaryStep,
    pub source_probability: f64,
    pub sink_probability: f64,
}

impl MechanismCandidate {
    pub fn site_product(&self) -> f64 {
        self.source_probability * self.sink_probability
    }

    pub fn score(&self) -> Option<f64> {
        self.step.score
    }

    /// Canonical text of the product set.
    pub fn product_key(&self) -> String {
        self.step.products.as_ref().map(canonical_smiles).unwrap_or_default()
    }

    /// Step record line with `role=twostep score=...`.
    pub fn record(&self) -> String {
        write_step_record(&self.step)
    }
}

/// Source classifier, sink classifier and pairwise ranker.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoStepModels {
    pub source: Mlp,
    pub sink: Mlp,
    pub ranker: Mlp,
}

pub const SOURCE_FILE: &str = "source.mlp";
pub const SINK_FILE: &str = "sink.mlp";
pub const RANKER_FILE: &str = "ranker.mlp";

impl TwoStepModels {
    pub fn new(source: Mlp, sink: Mlp, ranker: Mlp) -> Result<TwoStepModels, TwoStepError> {
        let m = TwoStepModels { source, sink, ranker };
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<(), NnError> {
        for (model, dim) in [
            (&self.source, ATOM_FP_LEN),
            (&self.sink, ATOM_FP_LEN),
            (&self.ranker, REACTION_FP_LEN),
        ] {
            if model.input_dim() != dim {
                return Err(NnError::Dimension {
                    expected: dim,
                    got: model.input_dim(),
                });
            }
        }
        Ok(())
    }

    /// Reads `source.mlp`, `sink.mlp` and `ranker.mlp` from `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<TwoStepModels, TwoStepError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            load_model(&path).map_err(|source| TwoStepError::Model {
                path: path.display().to_string(),
                source,
            })
        };
        TwoStepModels::new(read(SOURCE_FILE)?, read(SINK_FILE)?, read(RANKER_FILE)?)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), TwoStepError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(NnError::from)?;
        save_model(dir.join(SOURCE_FILE), &self.source)?;
        save_model(dir.join(SINK_FILE), &self.sink)?;
        save_model(dir.join(RANKER_FILE), &self.ranker)?;
        Ok(())
    }

    fn classifier(&self, role: SiteRole) -> &Mlp {
        match role {
            SiteRole::Source => &self.source,
            SiteRole::Sink => &self.sink,
        }
    }
}

/// Makes every hydrogen an explicit node and gives every atom a map number.
/// Existing atoms keep their indices and maps; new maps follow canonical rank.
pub fn prepare_reactants(mol: &Molecule) -> Molecule {
    let explicit = mol.explicit_hydrogens();
    let rank = canonical_rank(&explicit);
    let mut order: Vec<usize> = (0..explicit.atom_count()).collect();
    order.sort_by_key(|&i| rank[i]);
    explicit.map_all(&order)
}

fn by_probability(rank: &[usize]) -> impl Fn(&ReactiveSitePrediction, &ReactiveSitePrediction) -> Ordering + '_ {
    move |a, b| {
        b.probability
            .total_cmp(&a.probability)
            .then(rank[a.atom].cmp(&rank[b.atom]))
    }
}

/// Probability of every atom of `reactants` for `role`, sorted descending with
/// ties broken by canonical rank. Only explicit hydrogens are candidates.
pub fn site_probabilities(
    models: &TwoStepModels,
    reactants: &Molecule,
    role: SiteRole,
) -> Result<Vec<ReactiveSitePrediction>, TwoStepError> {
    rank_atoms(models.classifier(role), reactants, role)
}

pub(crate) fn rank_atoms(
    model: &Mlp,
    reactants: &Molecule,
    role: SiteRole,
) -> Result<Vec<ReactiveSitePrediction>, TwoStepError> {
    let fps = atom_fingerprints(reactants);
    let mut out = Vec::with_capacity(fps.len());
    for (atom, fp) in fps.iter().enumerate() {
        out.push(ReactiveSitePrediction {
            atom,
            map: reactants.atom(atom).map,
            role,
            probability: model.probability(fp.sparse())?,
        });
    }
    let rank = canonical_rank(reactants);
    out.sort_by(by_probability(&rank));
    Ok(out)
}

/// Top-`k` atoms for `role`.
pub fn predict_sites(
    models: &TwoStepModels,
    reactants: &Molecule,
    role: SiteRole,
    k: usize,
) -> Result<Vec<ReactiveSitePrediction>, TwoStepError> {
    let mut all = site_probabilities(models, reactants, role)?;
    all.truncate(k);
    Ok(all)
}

/// Scores every candidate with the ranker and sorts by score descending,
/// then canonical product text, then arrow text.
pub fn rank_mechanisms(ranker: &Mlp, candidates: Vec<MechanismCandidate>) -> Result<Vec<MechanismCandidate>, TwoStepError> {
    if ranker.input_dim() != REACTION_FP_LEN {
        return Err(NnError::Dimension {
            expected: REACTION_FP_LEN,
            got: ranker.input_dim(),
        }
        .into());
    }
    // keyed by structure so atom indices line up
    let mut cache: Vec<(Molecule, ReactionFeaturizer)> = Vec::new();
    let mut keyed = Vec::with_capacity(candidates.len());
    for mut c in candidates {
        let products = c.step.products.as_ref().ok_or(ReactionError::MissingProducts)?;
        let (src, sink) = extract_label_atoms(&c.step)?;
        let at = match cache.iter().position(|(m, _)| *m == c.step.reactants) {
            Some(i) => i,
            None => {
                cache.push((c.step.reactants.clone(), ReactionFeaturizer::new(&c.step.reactants)));
                cache.len() - 1
            }
        };
        let feat = &cache[at].1;
        let fp = feat.fingerprint(src, sink, products);
        c.step.score = Some(ranker.forward(fp.sparse())?);
        let arrow = c.step.arrow.map(|a| a.to_string()).unwrap_or_default();
        keyed.push((c.product_key(), arrow, c));
    }
    keyed.sort_by(|a, b| {
        b.2.step
            .score
            .unwrap_or(f64::NEG_INFINITY)
            .total_cmp(&a.2.step.score.unwrap_or(f64::NEG_INFINITY))
            .then_with(|| a.0.cmp(&b.0))
            .then_with(|| a.1.cmp(&b.1))
    });
    Ok(keyed.into_iter().map(|(_, _, c)| c).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepConfig {
    /// Sites kept per role.
    pub k_sites: usize,
    pub cap: usize,
    /// Keep one atom per symmetry class when picking sites.
    pub collapse_symmetric: bool,
}

impl Default for TwoStepConfig {
    fn default() -> Self {
        TwoStepConfig {
            k_sites: 5,
            cap: DEFAULT_CAP,
            collapse_symmetric: true,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct TwoStepPrediction {
    pub candidates: Vec<MechanismCandidate>,
    /// Valid mechanisms before ranking and truncation.
    pub enumerated: usize,
    pub overflow: usize,
    /// Why the list is empty, when it is.
    pub note: Option<String>,
}

fn top_sites(
    models: &TwoStepModels,
    mol: &Molecule,
    role: SiteRole,
    cfg: &TwoStepConfig,
    classes: &[usize],
) -> Result<Vec<ReactiveSitePrediction>, TwoStepError> {
    let all = site_probabilities(models, mol, role)?;
    if !cfg.collapse_symmetric {
        return Ok(all.into_iter().take(cfg.k_sites).collect());
    }
    let mut seen = HashSet::new();
    Ok(all
        .into_iter()
        .filter(|s| seen.insert(classes[s.atom]))
        .take(cfg.k_sites)
        .collect())
}

/// Sites, enumeration, ranking; the best-scored mechanism per distinct product
/// set is kept, up to `k_out`.
pub fn two_step_predict(
    models: &TwoStepModels,
    reactants: &Molecule,
    k_sites: usize,
    k_out: usize,
) -> Result<TwoStepPrediction, TwoStepError> {
    let cfg = TwoStepConfig {
        k_sites,
        ..TwoStepConfig::default()
    };
    two_step_predict_with(models, reactants, k_out, &cfg)
}

pub fn two_step_predict_with(
    models: &TwoStepModels,
    reactants: &Molecule,
    k_out: usize,
    cfg: &TwoStepConfig,
) -> Result<TwoStepPrediction, TwoStepError> {
    if k_out == 0 || cfg.k_sites == 0 {
        return Ok(TwoStepPrediction::default());
    }
    let mol = prepare_reactants(reactants);
    let classes = symmetry_classes(&mol);
    let sources = top_sites(models, &mol, SiteRole::Source, cfg, &classes)?;
    let sinks = top_sites(models, &mol, SiteRole::Sink, cfg, &classes)?;
    let e = enumerate_scored(&mol, &sources, &sinks, cfg.cap);
    let enumerated = e.candidates.len() + e.overflow;
    let ranked = rank_mechanisms(&models.ranker, e.candidates)?;
    let mut seen = HashSet::new();
    let candidates: Vec<MechanismCandidate> = ranked
        .into_iter()
        .filter(|c| seen.insert(c.product_key()))
        .take(k_out)
        .collect();
    let note = candidates
        .is_empty()
        .then(|| format!("no legal mechanism among {} source and {} sink sites", sources.len(), sinks.len()));
    if let Some(n) = &note {
        log::info!("{n}");
    }
    Ok(TwoStepPrediction {
        candidates,
        enumerated,
        overflow: e.overflow,
        note,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteAccuracy {
    pub ns: Vec<usize>,
    /// Steps whose source and sink both fall within the top N, per N.
    pub hits: Vec<usize>,
    pub total: usize,
    /// Steps whose labels could be extracted.
    pub labeled: usize,
}

impl SiteAccuracy {
    pub fn percent(&self) -> Vec<f64> {
        self.hits
            .iter()
            .map(|&h| if self.total == 0 { 0.0 } else { 100.0 * h as f64 / self.total as f64 })
            .collect()
    }
}

/// Joint top-N reactive-site accuracy. A predicted atom counts when it is
/// symmetry-equivalent to the labeled atom; steps without extractable labels
/// count as misses.
pub fn eval_reactive_sites(
    models: &TwoStepModels,
    steps: &[ElementaryStep],
    ns: &[usize],
) -> Result<SiteAccuracy, TwoStepError> {
    let mut hits = vec![0; ns.len()];
    let mut labeled = 0;
    for step in steps {
        let Ok((src, sink)) = extract_label_atoms(step) else {
            continue;
        };
        labeled += 1;
        let mol = prepare_reactants(&step.reactants);
        let classes = symmetry_classes(&mol);
        let rank_of = |role, truth: usize| -> Result<usize, TwoStepError> {
            let list = site_probabilities(models, &mol, role)?;
            Ok(list.iter().position(|s| classes[s.atom] == classes[truth]).unwrap_or(usize::MAX))
        };
        let rs = rank_of(SiteRole::Source, src)?;
        let rt = rank_of(SiteRole::Sink, sink)?;
        for (h, &n) in hits.iter_mut().zip(ns) {
            if rs < n && rt < n {
                *h += 1;
            }
        }
    }
    Ok(SiteAccuracy {
        ns: ns.to_vec(),
        hits,
        total: steps.len(),
        labeled,
    })
}
