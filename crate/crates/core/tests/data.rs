mod common;

use std::sync::OnceLock;

use mechrxn::chem::{canonical_smiles, parse_smiles, Molecule};
use mechrxn::dataio::{read_dataset, split, top_n_accuracy, write_dataset, Dataset, DatasetKind, LoadOptions, SplitSpec};
use mechrxn::reaction::{parse_step_record, ElementaryStep};
use proptest::prelude::*;

fn steps() -> &'static [ElementaryStep] {
    static S: OnceLock<Vec<ElementaryStep>> = OnceLock::new();
    S.get_or_init(|| {
        ["sn2_train.steps", "snar_table.steps", "arrow_steps.txt"]
            .iter()
            .flat_map(|f| common::lines(f))
            .map(|l| parse_step_record(&l).unwrap())
            .collect()
    })
}

fn sample(idx: &[usize]) -> Dataset {
    let s = steps();
    Dataset::new("t", DatasetKind::Curated, idx.iter().map(|&i| s[i % s.len()].clone()).collect())
}

fn texts(d: &Dataset) -> Vec<String> {
    let mut v: Vec<String> = d.records.iter().map(|r| r.reaction_smiles()).collect();
    v.sort();
    v
}

proptest! {
    #[test]
    fn split_partitions(idx in prop::collection::vec(0usize..500, 0..300), a in 0.0f64..1.0, b in 0.0f64..1.0, seed: u64) {
        let (train, val) = (a * (1.0 - 1e-9), (1.0 - a) * b);
        let spec = SplitSpec { train, val, test: 1.0 - train - val, seed };
        let d = sample(&idx);
        let (tr, va, te) = split(&d, &spec).unwrap();
        prop_assert_eq!((tr.len(), va.len(), te.len()), spec.sizes(d.len()));
        let mut all = texts(&tr);
        all.extend(texts(&va));
        all.extend(texts(&te));
        all.sort();
        prop_assert_eq!(all, texts(&d));
        let again = split(&d, &spec).unwrap();
        prop_assert_eq!(again, (tr, va, te));
    }

    #[test]
    fn save_then_load_is_identity(idx in prop::collection::vec(0usize..500, 0..60)) {
        let d = sample(&idx);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &d).unwrap();
        let (back, report) = read_dataset(&buf[..], "t", &LoadOptions::default()).unwrap();
        prop_assert!(report.errors.is_empty());
        prop_assert_eq!(back.len(), d.len());
        for (a, b) in back.records.iter().zip(&d.records) {
            prop_assert_eq!(canonical_smiles(&a.reactants), canonical_smiles(&b.reactants));
            prop_assert_eq!(a.products.as_ref().map(canonical_smiles), b.products.as_ref().map(canonical_smiles));
            prop_assert_eq!((&a.arrow, a.score, &a.provenance, &a.meta), (&b.arrow, b.score, &b.provenance, &b.meta));
        }
        let mut again = Vec::new();
        write_dataset(&mut again, &back).unwrap();
        prop_assert_eq!(again, buf);
    }

    #[test]
    fn top_n_never_decreases(lists in prop::collection::vec((prop::collection::vec(0usize..6, 0..8), 0usize..6), 1..40)) {
        let pool: Vec<Molecule> = ["CO", "OC.[Br-]", "CC", "C=O", "[OH-]", "CCO"].iter().map(|s| parse_smiles(s).unwrap()).collect();
        let preds: Vec<Vec<Molecule>> = lists.iter().map(|(l, _)| l.iter().map(|&i| pool[i].clone()).collect()).collect();
        let refs: Vec<Molecule> = lists.iter().map(|(_, r)| pool[*r].clone()).collect();
        let ns = [1, 2, 3, 5, 10];
        let t = top_n_accuracy(&preds, &refs, &ns, false);
        prop_assert!(t.hits.windows(2).all(|w| w[0] <= w[1]));
        let anywhere = lists.iter().filter(|(l, r)| l.contains(r)).count();
        prop_assert_eq!(t.hits[4], anywhere);
    }
}

#[test]
fn malformed_lines_are_reported_with_line_numbers() {
    let mut text = String::new();
    for l in common::lines("sn2_train.steps").iter().take(20) {
        text.push_str(l);
        text.push('\n');
    }
    text.push_str("not a step\n");
    let (d, report) = read_dataset(text.as_bytes(), "t", &LoadOptions::default()).unwrap();
    assert_eq!(d.len(), 20);
    assert_eq!(report.errors.len(), 1);
    assert_eq!(report.errors[0].line, 21);
}
