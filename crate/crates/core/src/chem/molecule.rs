use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::element::Element;
use super::ChemError;

/// Tetrahedral annotation carried through from the input. Ignored by equality and search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chirality {
    CounterClockwise,
    Clockwise,
}

/// Directional single-bond annotation (`/` or `\`). Ignored by equality and search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondStereo {
    Up,
    Down,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    /// Hydrogens attached to this atom that are not graph nodes.
    pub hydrogens: u8,
    pub map: Option<u32>,
    pub aromatic: bool,
    pub chirality: Option<Chirality>,
}

impl Atom {
    pub fn new(element: Element) -> Atom {
        Atom {
            element,
            charge: 0,
            hydrogens: 0,
            map: None,
            aromatic: false,
            chirality: None,
        }
    }

    pub fn with_charge(mut self, charge: i8) -> Atom {
        self.charge = charge;
        self
    }

    pub fn with_hydrogens(mut self, h: u8) -> Atom {
        self.hydrogens = h;
        self
    }

    pub fn with_map(mut self, map: u32) -> Atom {
        self.map = Some(map);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    /// Kekulé order: 1, 2 or 3.
    pub order: u8,
    pub aromatic: bool,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: u8) -> Bond {
        Bond {
            a,
            b,
            order,
            aromatic: false,
            stereo: None,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }

    /// Order used by canonical invariants: aromatic bonds collapse to one type.
    pub fn kind_code(&self) -> u8 {
        if self.aromatic {
            4
        } else {
            self.order
        }
    }
}

/// An immutable molecular graph. One `Molecule` may hold several disconnected
/// fragments; it then plays the role of a molecule set.
///
/// Serializes as mapped SMILES text; stereo annotations and the name are not
/// carried through serde.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    name: Option<String>,
}

impl PartialEq for Molecule {
    fn eq(&self, other: &Self) -> bool {
        self.atoms == other.atoms && self.bonds == other.bonds
    }
}

impl From<Molecule> for String {
    fn from(m: Molecule) -> String {
        super::writer::write_smiles(&m)
    }
}

impl TryFrom<String> for Molecule {
    type Error = ChemError;

    fn try_from(s: String) -> Result<Molecule, ChemError> {
        super::smiles::parse_smiles(&s)
    }
}

impl Molecule {
    /// Builds a molecule, checking graph simplicity, the valence model and map
    /// uniqueness, then perceiving aromaticity from the Kekulé orders.
    pub fn from_parts(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Molecule, ChemError> {
        let mut mol = Molecule::from_parts_unperceived(atoms, bonds)?;
        mol.validate()?;
        super::aromatic::perceive(&mut mol);
        Ok(mol)
    }

    pub(crate) fn from_parts_unperceived(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Molecule, ChemError> {
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for (i, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n {
                return Err(ChemError::Graph(format!("bond {i} references a missing atom")));
            }
            if bond.a == bond.b {
                return Err(ChemError::Graph(format!("self-bond on atom {}", bond.a)));
            }
            if !(1..=3).contains(&bond.order) {
                return Err(ChemError::Graph(format!("bond order {} unsupported", bond.order)));
            }
            let key = (bond.a.min(bond.b), bond.a.max(bond.b));
            if !seen.insert(key) {
                return Err(ChemError::Graph(format!("duplicate bond {}-{}", key.0, key.1)));
            }
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        let mut maps = HashSet::new();
        for atom in &atoms {
            if let Some(m) = atom.map {
                if m == 0 || !maps.insert(m) {
                    return Err(ChemError::Graph(format!("atom map {m} is zero or repeated")));
                }
            }
        }
        Ok(Molecule {
            atoms,
            bonds,
            adjacency,
            name: None,
        })
    }

    pub fn empty() -> Molecule {
        Molecule {
            atoms: Vec::new(),
            bonds: Vec::new(),
            adjacency: Vec::new(),
            name: None,
        }
    }

    fn validate(&self) -> Result<(), ChemError> {
        for i in 0..self.atoms.len() {
            let nb = self.nonbonding_electrons(i);
            let atom = &self.atoms[i];
            if nb < 0 {
                return Err(ChemError::Valence {
                    atom: i,
                    detail: format!(
                        "{} with charge {} has more bonds than valence electrons",
                        atom.element, atom.charge
                    ),
                });
            }
            if self.electron_domains(i) > atom.element.max_domains() {
                return Err(ChemError::Valence {
                    atom: i,
                    detail: format!("{} exceeds {} electron domains", atom.element, atom.element.max_domains()),
                });
            }
        }
        Ok(())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Molecule {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `(neighbor, bond index)` pairs.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|&&(n, _)| n == b).map(|&(_, bi)| bi)
    }

    /// Sum of Kekulé bond orders to graph neighbors (implicit H excluded).
    pub fn bond_order_sum(&self, i: usize) -> i32 {
        self.adjacency[i]
            .iter()
            .map(|&(_, b)| self.bonds[b].order as i32)
            .sum()
    }

    /// Hydrogens attached to the atom, whether implicit or explicit graph nodes.
    pub fn total_hydrogens(&self, i: usize) -> u32 {
        self.atoms[i].hydrogens as u32
            + self.adjacency[i]
                .iter()
                .filter(|&&(n, _)| self.atoms[n].element == Element::H)
                .count() as u32
    }

    pub fn nonbonding_electrons(&self, i: usize) -> i32 {
        let atom = &self.atoms[i];
        atom.element.valence_electrons() - atom.charge as i32 - self.bond_order_sum(i) - atom.hydrogens as i32
    }

    pub fn lone_pairs(&self, i: usize) -> u32 {
        (self.nonbonding_electrons(i).max(0) / 2) as u32
    }

    pub fn is_radical(&self, i: usize) -> bool {
        self.nonbonding_electrons(i) % 2 != 0
    }

    /// Sigma neighbors plus lone pairs (a lone electron occupies a domain).
    pub fn electron_domains(&self, i: usize) -> i32 {
        let nb = self.nonbonding_electrons(i).max(0);
        self.degree(i) as i32 + self.atoms[i].hydrogens as i32 + (nb + 1) / 2
    }

    /// True when the atom can accept an electron pair into a vacant orbital:
    /// bonding pairs (by bond order) plus lone pairs fall short of the octet
    /// (of the duet for hydrogen).
    pub fn has_empty_orbital(&self, i: usize) -> bool {
        let limit = self.atoms[i].element.max_domains().min(4);
        let nb = self.nonbonding_electrons(i).max(0);
        let pairs = self.bond_order_sum(i) + self.atoms[i].hydrogens as i32 + nb / 2;
        !self.is_radical(i) && pairs < limit
    }

    pub fn atom_by_map(&self, map: u32) -> Option<usize> {
        self.atoms.iter().position(|a| a.map == Some(map))
    }

    pub fn max_map(&self) -> u32 {
        self.atoms.iter().filter_map(|a| a.map).max().unwrap_or(0)
    }

    pub fn net_charge(&self) -> i32 {
        self.atoms.iter().map(|a| a.charge as i32).sum()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != Element::H).count()
    }

    /// Connected components as sorted atom-index lists, ordered by first atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on the given atoms (in the given order).
    pub fn subgraph(&self, atoms: &[usize]) -> Molecule {
        let mut index = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in atoms.iter().enumerate() {
            index[old] = new;
        }
        let new_atoms: Vec<Atom> = atoms.iter().map(|&i| self.atoms[i].clone()).collect();
        let new_bonds: Vec<Bond> = self
            .bonds
            .iter()
            .filter(|b| index[b.a] != usize::MAX && index[b.b] != usize::MAX)
            .map(|b| Bond {
                a: index[b.a],
                b: index[b.b],
                ..b.clone()
            })
            .collect();
        let mut adjacency = vec![Vec::new(); new_atoms.len()];
        for (i, b) in new_bonds.iter().enumerate() {
            adjacency[b.a].push((b.b, i));
            adjacency[b.b].push((b.a, i));
        }
        Molecule {
            atoms: new_atoms,
            bonds: new_bonds,
            adjacency,
            name: None,
        }
    }

    /// Splits into one molecule per connected component.
    pub fn fragments(&self) -> Vec<Molecule> {
        self.components().iter().map(|c| self.subgraph(c)).collect()
    }

    /// Disjoint union; atom maps must stay unique.
    pub fn combine<'a>(parts: impl IntoIterator<Item = &'a Molecule>) -> Result<Molecule, ChemError> {
        let mut atoms = Vec::new();
        let mut bonds = Vec::new();
        for part in parts {
            let offset = atoms.len();
            atoms.extend(part.atoms.iter().cloned());
            bonds.extend(part.bonds.iter().map(|b| Bond {
                a: b.a + offset,
                b: b.b + offset,
                ..b.clone()
            }));
        }
        let mut mol = Molecule::from_parts_unperceived(atoms, bonds)?;
        // parts are already perceived; perception is local to ring systems
        mol.name = None;
        Ok(mol)
    }

    /// Copy with every atom map removed.
    pub fn without_maps(&self) -> Molecule {
        let mut m = self.clone();
        for a in &mut m.atoms {
            a.map = None;
        }
        m
    }

    /// Copy with the given atoms re-mapped; `maps[i]` replaces atom i's map.
    pub fn with_maps(&self, maps: &[Option<u32>]) -> Result<Molecule, ChemError> {
        let mut atoms = self.atoms.clone();
        for (a, m) in atoms.iter_mut().zip(maps) {
            a.map = *m;
        }
        let mut mol = Molecule::from_parts_unperceived(atoms, self.bonds.clone())?;
        mol.name = self.name.clone();
        Ok(mol)
    }

    /// Collapses explicit hydrogen nodes into implicit counts on their heavy
    /// neighbor. Hydrogens that are charged, mapped (unless `drop_maps`),
    /// multiply bonded, or bonded to another hydrogen stay as nodes.
    pub fn fold_hydrogens(&self, drop_maps: bool) -> Molecule {
        let mut remove = vec![false; self.atoms.len()];
        let mut extra = vec![0u8; self.atoms.len()];
        for (i, atom) in self.atoms.iter().enumerate() {
            if atom.element != Element::H || atom.charge != 0 || atom.hydrogens != 0 {
                continue;
            }
            if atom.map.is_some() && !drop_maps {
                continue;
            }
            if self.adjacency[i].len() != 1 {
                continue;
            }
            let (n, b) = self.adjacency[i][0];
            if self.atoms[n].element == Element::H || self.bonds[b].order != 1 || remove[n] {
                continue;
            }
            remove[i] = true;
            extra[n] += 1;
        }
        let keep: Vec<usize> = (0..self.atoms.len()).filter(|&i| !remove[i]).collect();
        let mut out = self.subgraph(&keep);
        for (new, &old) in keep.iter().enumerate() {
            out.atoms[new].hydrogens += extra[old];
            if drop_maps {
                out.atoms[new].map = None;
            }
        }
        out.name = self.name.clone();
        out
    }

    /// Converts every implicit hydrogen into an explicit, unmapped graph node.
    pub fn explicit_hydrogens(&self) -> Molecule {
        let mut atoms = self.atoms.clone();
        let mut bonds = self.bonds.clone();
        for i in 0..self.atoms.len() {
            let h = atoms[i].hydrogens;
            atoms[i].hydrogens = 0;
            for _ in 0..h {
                let idx = atoms.len();
                atoms.push(Atom::new(Element::H));
                bonds.push(Bond::new(i, idx, 1));
            }
        }
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, b) in bonds.iter().enumerate() {
            adjacency[b.a].push((b.b, i));
            adjacency[b.b].push((b.a, i));
        }
        Molecule {
            atoms,
            bonds,
            adjacency,
            name: self.name.clone(),
        }
    }

    /// Assigns fresh map numbers to unmapped atoms in the given atom order.
    pub fn map_all(&self, order: &[usize]) -> Molecule {
        let mut next = self.max_map();
        let mut out = self.clone();
        for &i in order {
            if out.atoms[i].map.is_none() {
                next += 1;
                out.atoms[i].map = Some(next);
            }
        }
        out
    }

    /// Element counts including implicit hydrogens.
    pub fn element_counts(&self) -> BTreeMap<Element, u32> {
        let mut counts = BTreeMap::new();
        for atom in &self.atoms {
            *counts.entry(atom.element).or_insert(0) += 1;
            if atom.hydrogens > 0 {
                *counts.entry(Element::H).or_insert(0) += atom.hydrogens as u32;
            }
        }
        counts
    }

    /// Atoms lying on at least one cycle.
    pub fn ring_atoms(&self) -> Vec<bool> {
        let bridges = self.bridges();
        let mut in_ring = vec![false; self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            if !bridges[i] {
                in_ring[b.a] = true;
                in_ring[b.b] = true;
            }
        }
        in_ring
    }

    /// Bonds whose removal disconnects the graph.
    pub fn bridges(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut is_bridge = vec![false; self.bonds.len()];
        let mut timer = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // iterative DFS: (node, parent bond, next neighbor position)
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(&mut (u, pb, ref mut pos)) = stack.last_mut() {
                if *pos < self.adjacency[u].len() {
                    let (v, b) = self.adjacency[u][*pos];
                    *pos += 1;
                    if b == pb {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        stack.push((v, b, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            is_bridge[pb] = true;
                        }
                    }
                }
            }
        }
        is_bridge
    }

    /// Simple cycles up to `max_len` atoms, each listed once as an atom path.
    pub fn cycles(&self, max_len: usize) -> Vec<Vec<usize>> {
        let ring = self.ring_atoms();
        let mut out = Vec::new();
        let mut path = Vec::new();
        let mut on_path = vec![false; self.atoms.len()];
        for start in 0..self.atoms.len() {
            if !ring[start] {
                continue;
            }
            path.clear();
            path.push(start);
            on_path[start] = true;
            self.cycle_dfs(start, start, max_len, &ring, &mut path, &mut on_path, &mut out);
            on_path[start] = false;
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn cycle_dfs(
        &self,
        start: usize,
        u: usize,
        max_len: usize,
        ring: &[bool],
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        for &(v, _) in &self.adjacency[u] {
            if v == start && path.len() >= 3 && path[1] < path[path.len() - 1] {
                out.push(path.clone());
                continue;
            }
            if v <= start || on_path[v] || !ring[v] || path.len() >= max_len {
                continue;
            }
            on_path[v] = true;
            path.push(v);
            self.cycle_dfs(start, v, max_len, ring, path, on_path, out);
            path.pop();
            on_path[v] = false;
        }
    }

    /// Size of the smallest ring containing each atom (0 if acyclic).
    pub fn smallest_ring_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.atoms.len()];
        for cycle in self.cycles(8) {
            for &a in &cycle {
                if sizes[a] == 0 || cycle.len() < sizes[a] {
                    sizes[a] = cycle.len();
                }
            }
        }
        sizes
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut Vec<Atom> {
        &mut self.atoms
    }

    pub(crate) fn bonds_mut(&mut self) -> &mut Vec<Bond> {
        &mut self.bonds
    }

    /// Rebuilds adjacency after deserialization.
    pub fn reindex(&mut self) {
        let mut adjacency = vec![Vec::new(); self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            adjacency[b.a].push((b.b, i));
            adjacency[b.b].push((b.a, i));
        }
        self.adjacency = adjacency;
    }
}
