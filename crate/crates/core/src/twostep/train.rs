//! Training data and training for the three two-step networks.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chem::{canonical_smiles, symmetry_classes};
use crate::featurize::{atom_fingerprints, ReactionFeaturizer, SparseVec, ATOM_FP_LEN, REACTION_FP_LEN};
use crate::nn::{train_classifier_weighted, train_siamese, Mlp, MlpConfig, NnError};
use crate::reaction::{apply_arrow, extract_label_atoms, ElementaryStep};

use super::{enumerate_scored, prepare_reactants, rank_atoms, ReactiveSitePrediction, SiteRole, TwoStepError, TwoStepModels};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStepTrainConfig {
    pub source: MlpConfig,
    pub sink: MlpConfig,
    pub ranker: MlpConfig,
    /// Decoy mechanisms paired with each true step.
    pub decoys_per_step: usize,
    /// Top classifier sites per role from which decoys are enumerated.
    pub decoy_sites: usize,
    pub seed: u64,
}

impl Default for TwoStepTrainConfig {
    fn default() -> Self {
        TwoStepTrainConfig {
            source: MlpConfig::site_classifier(ATOM_FP_LEN),
            sink: MlpConfig::site_classifier(ATOM_FP_LEN),
            ranker: MlpConfig::siamese_ranker(REACTION_FP_LEN),
            decoys_per_step: 8,
            decoy_sites: 5,
            seed: 0,
        }
    }
}

fn key(v: &SparseVec) -> Vec<(u32, u32)> {
    v.entries().iter().map(|&(i, x)| (i, x.to_bits())).collect()
}

/// One example per distinct (atom fingerprint, label), weighted by how often
/// it occurs. Atoms symmetry-equivalent to the labeled atom are positives.
/// Steps without an arrow are skipped.
pub fn build_site_examples(steps: &[ElementaryStep], role: SiteRole) -> Vec<(SparseVec, bool, f64)> {
    let mut index: HashMap<(Vec<(u32, u32)>, bool), usize> = HashMap::new();
    let mut out: Vec<(SparseVec, bool, f64)> = Vec::new();
    for step in steps {
        let Ok((src, sink)) = extract_label_atoms(step) else {
            continue;
        };
        let truth = if role == SiteRole::Source { src } else { sink };
        let mol = prepare_reactants(&step.reactants);
        let classes = symmetry_classes(&mol);
        for (a, fp) in atom_fingerprints(&mol).into_iter().enumerate() {
            let label = classes[a] == classes[truth];
            let fp = fp.into_sparse();
            match index.entry((key(&fp), label)) {
                std::collections::hash_map::Entry::Occupied(e) => out[*e.get()].2 += 1.0,
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(out.len());
                    out.push((fp, label, 1.0));
                }
            }
        }
    }
    out
}

fn with_truth(mut list: Vec<ReactiveSitePrediction>, k: usize, truth: usize) -> Vec<ReactiveSitePrediction> {
    list.truncate(k);
    if !list.iter().any(|s| s.atom == truth) {
        list.push(ReactiveSitePrediction {
            atom: truth,
            map: None,
            role: list.first().map(|s| s.role).unwrap_or(SiteRole::Source),
            probability: 1.0,
        });
    }
    list
}

/// (true step, decoy) fingerprint pairs. Decoys are mechanisms enumerated from
/// the classifiers' top sites (plus the true ones) whose product set differs
/// from the recorded one, sampled per step with a seeded generator.
pub fn build_ranker_pairs(
    source: &Mlp,
    sink: &Mlp,
    steps: &[ElementaryStep],
    cfg: &TwoStepTrainConfig,
) -> Result<Vec<(SparseVec, SparseVec)>, TwoStepError> {
    let mut pairs = Vec::new();
    for (n, step) in steps.iter().enumerate() {
        let (Some(arrow), Ok((src, snk))) = (step.arrow, extract_label_atoms(step)) else {
            continue;
        };
        let mol = prepare_reactants(&step.reactants);
        let Ok(products) = apply_arrow(&mol, &arrow) else {
            log::debug!("step {n}: arrow does not apply, skipped");
            continue;
        };
        let truth_key = canonical_smiles(&products);
        let sources = with_truth(rank_atoms(source, &mol, SiteRole::Source)?, cfg.decoy_sites, src);
        let sinks = with_truth(rank_atoms(sink, &mol, SiteRole::Sink)?, cfg.decoy_sites, snk);
        let decoys: Vec<_> = enumerate_scored(&mol, &sources, &sinks, usize::MAX)
            .candidates
            .into_iter()
            .filter(|c| c.product_key() != truth_key)
            .collect();
        if decoys.is_empty() {
            continue;
        }
        let feat = ReactionFeaturizer::new(&mol);
        let good = feat.fingerprint(src, snk, &products).into_sparse();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(n as u64));
        let mut picked = sample(&mut rng, decoys.len(), cfg.decoys_per_step.min(decoys.len())).into_vec();
        picked.sort_unstable();
        for i in picked {
            let d = &decoys[i];
            let (ds, dt) = extract_label_atoms(&d.step)?;
            let bad = feat.fingerprint(ds, dt, d.step.products.as_ref().unwrap()).into_sparse();
            pairs.push((good.clone(), bad));
        }
    }
    Ok(pairs)
}

/// Trains source and sink classifiers, then the ranker on decoys drawn from
/// those classifiers' top sites.
pub fn train_two_step(steps: &[ElementaryStep], cfg: &TwoStepTrainConfig) -> Result<TwoStepModels, TwoStepError> {
    let src_data = build_site_examples(steps, SiteRole::Source);
    log::info!("source classifier: {} distinct examples", src_data.len());
    let source = train_classifier_weighted(&src_data, &cfg.source)?;
    let sink_data = build_site_examples(steps, SiteRole::Sink);
    log::info!("sink classifier: {} distinct examples", sink_data.len());
    let sink = train_classifier_weighted(&sink_data, &cfg.sink)?;
    let pairs = build_ranker_pairs(&source, &sink, steps, cfg)?;
    if pairs.is_empty() {
        return Err(NnError::EmptyDataset.into());
    }
    log::info!("ranker: {} pairs", pairs.len());
    let ranker = train_siamese(&pairs, &cfg.ranker)?;
    TwoStepModels::new(source, sink, ranker)
}
