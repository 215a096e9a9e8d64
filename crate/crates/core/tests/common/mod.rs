#![allow(dead_code)]

use std::path::PathBuf;

use mechrxn::chem::{Atom, Bond, Molecule};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn lines(name: &str) -> Vec<String> {
    std::fs::read_to_string(fixture(name))
        .unwrap()
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

/// Same graph with atoms, bonds and bond directions shuffled.
pub fn permuted(m: &Molecule, rng: &mut impl Rng) -> Molecule {
    let n = m.atom_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut new_index = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let atoms: Vec<Atom> = order.iter().map(|&i| m.atom(i).clone()).collect();
    let mut bonds: Vec<Bond> = m
        .bonds()
        .iter()
        .map(|b| {
            let (a, c) = (new_index[b.a], new_index[b.b]);
            let (a, c) = if rng.gen() { (a, c) } else { (c, a) };
            Bond { a, b: c, ..b.clone() }
        })
        .collect();
    bonds.shuffle(rng);
    Molecule::from_parts(atoms, bonds).unwrap()
}
