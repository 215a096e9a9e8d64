use mechrxn::chem::parse_smiles;
use mechrxn::hybrid::{ensemble_merge, hybrid_predict, likelihood, MockPredictor, Predictor, ScoredProducts};
use proptest::prelude::*;

// several spellings of the same product sets, plus unbalanced ones
const POOL: &[&str] = &["CO.[Br-]", "OC.[Br-]", "[Br-].CO", "CO", "C=O.[Br-]", "COC.[Br-]", "[Br-].[OH-].C"];

fn outputs(raw: &[Vec<(usize, f64)>]) -> Vec<Vec<ScoredProducts>> {
    raw.iter()
        .map(|l| {
            l.iter()
                .map(|&(i, lp)| ScoredProducts { products: parse_smiles(POOL[i]).unwrap(), log_likelihood: lp })
                .collect()
        })
        .collect()
}

fn model_lists() -> impl Strategy<Value = Vec<Vec<(usize, f64)>>> {
    prop::collection::vec(prop::collection::vec((0..POOL.len(), -8.0f64..0.0), 0..6), 1..5)
}

proptest! {
    #[test]
    fn merge_ignores_candidate_and_model_order(raw in model_lists(), seed: u64) {
        let r = parse_smiles("CBr.[OH-]").unwrap();
        let a = ensemble_merge(&r, &outputs(&raw));
        let mut shuffled = raw.clone();
        shuffled.reverse();
        for (i, l) in shuffled.iter_mut().enumerate() {
            let n = l.len().max(1);
            l.rotate_left((seed as usize + i) % n);
        }
        let b = ensemble_merge(&r, &outputs(&shuffled));
        prop_assert_eq!(a.len(), b.len());
        let m = raw.len() as u32;
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.key, &y.key);
            prop_assert_eq!(x.probability, y.probability);
            prop_assert_eq!(x.smiles(), y.smiles());
            let mut back: Vec<u32> = y.models.iter().map(|&i| m - 1 - i).collect();
            back.sort_unstable();
            prop_assert_eq!(&x.models, &back);
        }
    }

    #[test]
    fn merge_conserves_probability_mass(raw in model_lists()) {
        let r = parse_smiles("CBr.[OH-]").unwrap();
        let merged = ensemble_merge(&r, &outputs(&raw));
        let total: f64 = raw.iter().flatten().map(|&(_, lp)| likelihood(lp)).sum();
        let got: f64 = merged.iter().map(|c| c.probability).sum();
        prop_assert!((total - got).abs() <= 1e-12 * total.max(1.0));
        prop_assert!(merged.windows(2).all(|w| w[0].probability >= w[1].probability));
        let keys: std::collections::BTreeSet<_> = merged.iter().map(|c| &c.key).collect();
        prop_assert_eq!(keys.len(), merged.len());
    }

    #[test]
    fn hybrid_output_is_always_balanced(raw in model_lists(), k in 1usize..8) {
        let predictors: Vec<Box<dyn Predictor>> = raw
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let c: Vec<(&str, f64)> = l.iter().map(|&(j, lp)| (POOL[j], lp)).collect();
                Box::new(MockPredictor::new(&format!("m{i}")).with("CBr.[OH-]", &c)) as Box<dyn Predictor>
            })
            .collect();
        let out = hybrid_predict(&predictors, None, &parse_smiles("CBr.[OH-]").unwrap(), k, 5).unwrap();
        prop_assert!(out.candidates.len() <= k);
        prop_assert!(out.candidates.iter().all(|c| c.balance.is_balanced()));
    }
}

#[test]
fn failing_predictor_does_not_sink_the_ensemble() {
    let good = MockPredictor::new("good").with("CBr.[OH-]", &[("CO.[Br-]", -0.1)]);
    let predictors: Vec<Box<dyn Predictor>> = vec![Box::new(MockPredictor::failing("down")), Box::new(good)];
    let out = hybrid_predict(&predictors, None, &parse_smiles("CBr.[OH-]").unwrap(), 3, 5).unwrap();
    assert_eq!(out.candidates.len(), 1);
    assert_eq!(out.candidates[0].key, "CO.[Br-]");
}
