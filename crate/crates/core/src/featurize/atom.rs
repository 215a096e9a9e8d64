use super::env::{fnv1a, View};
use super::sparse::SparseVec;
use super::{ATOM_FP_LEN, PHYS_LEN, RADIUS, TOPO_LEN};
use crate::chem::{Element, Molecule, ALL_ELEMENTS};

const ENV_SALT: u64 = 0x656e_7669;
const PATH_SALT: u64 = 0x7061_7468;

/// Fingerprint of one atom: hashed topological counts followed by the
/// physicochemical descriptor block.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomFingerprint(SparseVec);

impl AtomFingerprint {
    pub fn sparse(&self) -> &SparseVec {
        &self.0
    }

    pub fn values(&self) -> Vec<f32> {
        self.0.to_dense()
    }

    pub fn into_sparse(self) -> SparseVec {
        self.0
    }
}

pub fn atom_fingerprint(mol: &Molecule, atom: usize) -> AtomFingerprint {
    assert!(atom < mol.atom_count(), "atom {atom} out of range");
    let view = View::new(mol);
    let ids = view.environment_ids(RADIUS);
    build(mol, &view, &ids, &RingInfo::new(mol), atom)
}

/// Fingerprints for every atom, sharing the environment computation.
pub fn atom_fingerprints(mol: &Molecule) -> Vec<AtomFingerprint> {
    let view = View::new(mol);
    let ids = view.environment_ids(RADIUS);
    let rings = RingInfo::new(mol);
    (0..mol.atom_count()).map(|a| build(mol, &view, &ids, &rings, a)).collect()
}

fn build(mol: &Molecule, view: &View, ids: &[Vec<u64>], rings: &RingInfo, atom: usize) -> AtomFingerprint {
    let mut pairs = topological(view, ids, atom);
    pairs.extend(
        descriptors(mol, rings, atom)
            .into_iter()
            .enumerate()
            .map(|(i, v)| ((TOPO_LEN + i) as u32, v)),
    );
    AtomFingerprint(SparseVec::from_pairs(ATOM_FP_LEN, pairs))
}

fn slot(h: u64) -> u32 {
    (h % TOPO_LEN as u64) as u32
}

fn topological(view: &View, ids: &[Vec<u64>], root: usize) -> Vec<(u32, f32)> {
    let mut out = Vec::new();
    let growth = view.bonds_within(root, RADIUS);
    for r in 0..=RADIUS {
        if r == 0 || growth[r] > growth[r - 1] {
            out.push((slot(fnv1a(&[ENV_SALT, ids[r][root]])), 1.0));
        }
    }
    // labeled simple paths of 1..=RADIUS bonds starting at the root
    let mut stack = vec![(root, vec![root], vec![PATH_SALT, view.inv[root]])];
    while let Some((u, path, label)) = stack.pop() {
        for &(v, kind, _) in &view.adj[u] {
            if path.contains(&v) {
                continue;
            }
            let mut l = label.clone();
            l.push(kind as u64);
            l.push(view.inv[v]);
            out.push((slot(fnv1a(&l)), 1.0));
            if path.len() < RADIUS {
                let mut p = path.clone();
                p.push(v);
                stack.push((v, p, l));
            }
        }
    }
    out
}

fn hybridization(mol: &Molecule, a: usize) -> usize {
    if mol.atom(a).element == Element::H {
        return 3;
    }
    // aromatic bonds are left out: their Kekulé orders depend on input order
    let mut pi = 0;
    let mut triple = false;
    for &(_, b) in mol.neighbors(a) {
        let bond = &mol.bonds()[b];
        if !bond.aromatic {
            triple |= bond.order == 3;
            pi += bond.order as i32 - 1;
        }
    }
    let domains = mol.electron_domains(a);
    if triple || pi >= 2 {
        0
    } else if pi == 1 || mol.atom(a).aromatic || (mol.has_empty_orbital(a) && domains == 3) {
        1
    } else {
        2
    }
}

fn one_hot(out: &mut Vec<f32>, len: usize, index: usize) {
    let start = out.len();
    out.resize(start + len, 0.0);
    out[start + index.min(len - 1)] = 1.0;
}

/// Ring data shared by all atoms of one molecule.
pub(crate) struct RingInfo {
    in_ring: Vec<bool>,
    smallest: Vec<usize>,
    cycles: Vec<Vec<usize>>,
}

impl RingInfo {
    pub fn new(mol: &Molecule) -> RingInfo {
        RingInfo {
            in_ring: mol.ring_atoms(),
            smallest: mol.smallest_ring_sizes(),
            cycles: mol.cycles(8),
        }
    }
}

/// The descriptor roster. Order and scaling are part of the model format.
pub fn physicochemical(mol: &Molecule, a: usize) -> Vec<f32> {
    descriptors(mol, &RingInfo::new(mol), a)
}

pub(crate) fn descriptors(mol: &Molecule, rings: &RingInfo, a: usize) -> Vec<f32> {
    let atom = mol.atom(a);
    let e = atom.element;
    let en = e.electronegativity();
    let is_h = |i: usize| mol.atom(i).element == Element::H;
    let heavy: Vec<(usize, usize)> = mol.neighbors(a).iter().copied().filter(|&(j, _)| !is_h(j)).collect();
    let ring = &rings.in_ring;
    let h = mol.total_hydrogens(a);
    let lp = mol.lone_pairs(a);
    let pi_bonds: f32 = mol
        .neighbors(a)
        .iter()
        .map(|&(_, b)| {
            let bond = &mol.bonds()[b];
            if bond.aromatic {
                0.5
            } else {
                bond.order as f32 - 1.0
            }
        })
        .sum();
    // hydrogens count the same whether implicit or graph nodes
    let en_diffs: Vec<f64> = heavy
        .iter()
        .map(|&(j, _)| mol.atom(j).element.electronegativity() - en)
        .chain((0..h).map(|_| Element::H.electronegativity() - en))
        .collect();
    let has_pi_elsewhere = |j: usize| {
        mol.neighbors(j).iter().any(|&(k, b)| {
            let bond = &mol.bonds()[b];
            k != a && (bond.order >= 2 || bond.aromatic)
        })
    };
    let carbonyl_carbon = |j: usize| {
        mol.atom(j).element == Element::C
            && mol
                .neighbors(j)
                .iter()
                .any(|&(k, b)| mol.bonds()[b].order == 2 && mol.atom(k).element == Element::O)
    };
    let halogen = |x: Element| matches!(x, Element::Cl | Element::Br | Element::I);
    let sp3_carbon = |j: usize| mol.atom(j).element == Element::C && hybridization(mol, j) == 2;
    let smallest = rings.smallest.get(a).copied().unwrap_or(0);
    let in_small = |size: usize| rings.cycles.iter().any(|c| c.len() == size && c.contains(&a));
    let ring_count = rings.cycles.iter().filter(|c| c.contains(&a)).count();
    let anion_conj = atom.charge < 0 && heavy.iter().any(|&(j, _)| has_pi_elsewhere(j));
    let cation_conj = atom.charge > 0
        && heavy
            .iter()
            .any(|&(j, _)| has_pi_elsewhere(j) || mol.lone_pairs(j) > 0);

    let mut v: Vec<f32> = Vec::with_capacity(PHYS_LEN);
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    v.push(e.atomic_number() as f32 / 10.0);
    v.push(e.valence_electrons() as f32 / 8.0);
    v.push(en as f32 / 4.0);
    v.push(e.period() as f32 / 5.0);
    v.push(atom.charge as f32);
    v.push(heavy.len() as f32 / 4.0);
    v.push(h as f32 / 4.0);
    v.push(lp as f32 / 3.0);
    v.push(b(atom.aromatic));
    v.push(b(ring[a]));
    v.push(b(mol.has_empty_orbital(a)));
    v.push(b(mol.is_radical(a)));
    v.push(mol.electron_domains(a) as f32 / 4.0);
    v.push((mol.bond_order_sum(a) + atom.hydrogens as i32) as f32 / 4.0);
    v.push(pi_bonds / 2.0);
    v.push(heavy.iter().filter(|&&(j, _)| mol.atom(j).aromatic).count() as f32 / 3.0);
    v.push(
        heavy
            .iter()
            .filter(|&&(j, _)| mol.atom(j).element != Element::C)
            .count() as f32
            / 4.0,
    );
    v.push(en_diffs.iter().sum::<f64>() as f32 / 4.0);
    v.push(en_diffs.iter().copied().fold(0.0, f64::max) as f32);
    v.push(en_diffs.iter().copied().fold(0.0, f64::min) as f32);
    v.push(mol.neighbors(a).iter().map(|&(j, _)| mol.atom(j).charge as f32).sum());
    v.push(b(mol.neighbors(a).iter().any(|&(j, _)| mol.atom(j).charge > 0)));
    v.push(b(mol.neighbors(a).iter().any(|&(j, _)| mol.atom(j).charge < 0)));
    v.push(b(heavy.iter().any(|&(j, _)| has_pi_elsewhere(j))));
    v.push(b(heavy.iter().any(|&(j, _)| carbonyl_carbon(j))));
    v.push(b(carbonyl_carbon(a)));
    v.push(b(e != Element::C
        && mol
            .neighbors(a)
            .iter()
            .any(|&(_, bi)| mol.bonds()[bi].order >= 2)));
    v.push(b(heavy.iter().any(|&(j, _)| halogen(mol.atom(j).element))));
    v.push(b(halogen(e) && heavy.iter().any(|&(j, _)| sp3_carbon(j))));
    let h_parent = if e == Element::H { heavy.first().map(|&(j, _)| j) } else { None };
    v.push(b(h_parent.is_some_and(|j| matches!(mol.atom(j).element, Element::O | Element::N | Element::S))));
    v.push(b(h_parent.is_some_and(|j| mol.atom(j).element == Element::C)));
    v.push(b(h_parent.is_some_and(|j| {
        mol.neighbors(j).iter().any(|&(k, _)| k != a && carbonyl_carbon(k))
    })));
    v.push(heavy.iter().map(|&(j, _)| mol.total_hydrogens(j)).sum::<u32>() as f32 / 6.0);
    v.push(smallest as f32 / 8.0);
    v.push(ring_count as f32 / 3.0);
    v.push(b(ring[a] && in_small(3)));
    v.push(b(ring[a] && in_small(4)));
    v.push(b(e.is_metal()));
    v.push(b(e.is_electropositive()));
    v.push(b(anion_conj));
    v.push(b(cation_conj));
    one_hot(&mut v, ALL_ELEMENTS.len(), e.index());
    one_hot(&mut v, 4, hybridization(mol, a));
    one_hot(&mut v, 5, (atom.charge as i32 + 2).clamp(0, 4) as usize);
    one_hot(&mut v, 5, heavy.len());
    one_hot(&mut v, 4, h as usize);
    one_hot(&mut v, 4, lp as usize);
    let max_bond = mol
        .neighbors(a)
        .iter()
        .map(|&(_, bi)| {
            let bond = &mol.bonds()[bi];
            if bond.aromatic {
                3
            } else {
                bond.order as usize - 1
            }
        })
        .max()
        .unwrap_or(0);
    one_hot(&mut v, 4, max_bond);
    debug_assert_eq!(v.len(), PHYS_LEN);
    v
}
