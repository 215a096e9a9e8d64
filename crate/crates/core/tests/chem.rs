mod common;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use mechrxn::chem::{canonical_smiles, molecular_formula, parse_smiles, same_species, write_smiles, Molecule, SpeciesVerdict};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus() -> &'static [Molecule] {
    static C: OnceLock<Vec<Molecule>> = OnceLock::new();
    C.get_or_init(|| common::lines("corpus1000.smi").iter().map(|s| parse_smiles(s).unwrap()).collect())
}

proptest! {
    #[test]
    fn canonical_text_ignores_atom_order(i in 0usize..1000, seed: u64) {
        let m = &corpus()[i];
        let p = common::permuted(m, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(canonical_smiles(&p), canonical_smiles(m));
    }

    #[test]
    fn written_smiles_parses_back_to_same_species(i in 0usize..1000, seed: u64) {
        let p = common::permuted(&corpus()[i], &mut ChaCha8Rng::seed_from_u64(seed));
        let back = parse_smiles(&write_smiles(&p)).unwrap();
        prop_assert_eq!(canonical_smiles(&back), canonical_smiles(&p));
        prop_assert_eq!(same_species(&back, &p), SpeciesVerdict::Identical);
    }

    #[test]
    fn fragments_add_up(i in 0usize..1000, j in 0usize..1000) {
        let joined = parse_smiles(&format!("{}.{}", write_smiles(&corpus()[i]), write_smiles(&corpus()[j]))).unwrap();
        let mut sum: BTreeMap<_, u32> = BTreeMap::new();
        let mut charge = 0;
        for f in joined.fragments() {
            let fm = molecular_formula(&f);
            for (e, c) in fm.counts() {
                *sum.entry(*e).or_default() += c;
            }
            charge += f.net_charge();
        }
        let whole = molecular_formula(&joined);
        prop_assert_eq!(&sum, whole.counts());
        prop_assert_eq!(charge, joined.net_charge());
    }

    #[test]
    fn arbitrary_text_never_panics(s in "[A-Za-z0-9()\\[\\]=#+\\-.@/\\\\%:]{0,24}") {
        let _ = parse_smiles(&s);
    }
}

#[test]
fn bad_smiles_are_errors() {
    for s in ["C(", "C1CC", "[Xx]", "C))", "c1cccc1", "[C+"] {
        assert!(parse_smiles(s).is_err(), "{s}");
    }
}

#[test]
fn species_verdicts() {
    let a = parse_smiles("CC(=O)[O-]").unwrap();
    assert_eq!(same_species(&a, &parse_smiles("[O-]C(C)=O").unwrap()), SpeciesVerdict::Identical);
    assert_eq!(same_species(&a, &parse_smiles("CC([O-])=O").unwrap()), SpeciesVerdict::Identical);
    assert_eq!(same_species(&a, &parse_smiles("CC(=O)O").unwrap()), SpeciesVerdict::Different);
}
