//! Orbital pairing between predicted source and sink atoms.
//!
//! Legality matrix (source orbital on atom `s`, sink orbital on atom `t`):
//!
//! | source | allowed when |
//! |---|---|
//! | `LP(s)` | `s` has a lone pair |
//! | `PI(s,n)` | bond `s-n` has a pi component (double, triple or aromatic) |
//! | `SB(s,n)` | plain single bond and one of: `n` is Li, Na, K, Mg, B, Si or Sn; `n` carries a negative charge; `s` is H or C and the sink is `EO(t)` with `t` bonded to `n` (1,2-shift) |
//!
//! | sink | allowed when |
//! |---|---|
//! | `EO(t)` | `t` has an empty valence orbital |
//! | `PS(t,d)` | bond `t-d` has a pi component and EN(d) >= EN(t) |
//! | `SS(t,d)` | plain single bond and EN(d) > EN(t), or `t` is H |
//!
//! Every source kind may meet every sink kind. A pair whose donor bond is the
//! acceptor bond is skipped, as is `s == t`. Pairs that pass the matrix are
//! pushed; failed pushes are dropped.

use std::collections::HashSet;

use crate::chem::electrons::{push, Acceptor, Donor};
use crate::chem::{canonical_smiles, Element, Molecule};
use crate::reaction::{check_balance, ArrowSpec, ElementaryStep, Provenance};

use super::{MechanismCandidate, ReactiveSitePrediction, SiteRole};

/// Default candidate cap per reaction.
pub const DEFAULT_CAP: usize = 5000;

fn has_pi(mol: &Molecule, a: usize, b: usize) -> bool {
    mol.bond_between(a, b)
        .map(|i| {
            let bond = &mol.bonds()[i];
            bond.order >= 2 || bond.aromatic
        })
        .unwrap_or(false)
}

fn plain_single(mol: &Molecule, a: usize, b: usize) -> bool {
    mol.bond_between(a, b)
        .map(|i| {
            let bond = &mol.bonds()[i];
            bond.order == 1 && !bond.aromatic
        })
        .unwrap_or(false)
}

fn en(mol: &Molecule, a: usize) -> f64 {
    mol.atom(a).element.electronegativity()
}

/// Filled orbitals on `s`, in a fixed order: lone pair, pi bonds, sigma bonds
/// (neighbors by index). Sigma bonds are listed without the sink-dependent
/// part of the matrix.
pub fn source_orbitals(mol: &Molecule, s: usize) -> Vec<Donor> {
    let mut out = Vec::new();
    if mol.lone_pairs(s) > 0 {
        out.push(Donor::LonePair(s));
    }
    let mut nbrs: Vec<usize> = mol.neighbors(s).iter().map(|&(n, _)| n).collect();
    nbrs.sort_unstable();
    for &n in &nbrs {
        if has_pi(mol, s, n) {
            out.push(Donor::Pi(s, n));
        }
    }
    for &n in &nbrs {
        if plain_single(mol, s, n) {
            out.push(Donor::Sigma(s, n));
        }
    }
    out
}

/// Vacant orbitals on `t` allowed by the matrix, in a fixed order.
pub fn sink_orbitals(mol: &Molecule, t: usize) -> Vec<Acceptor> {
    let mut out = Vec::new();
    if mol.has_empty_orbital(t) {
        out.push(Acceptor::Empty(t));
    }
    let mut nbrs: Vec<usize> = mol.neighbors(t).iter().map(|&(n, _)| n).collect();
    nbrs.sort_unstable();
    for &d in &nbrs {
        if has_pi(mol, t, d) && en(mol, d) >= en(mol, t) {
            out.push(Acceptor::PiStar(t, d));
        }
    }
    for &d in &nbrs {
        if plain_single(mol, t, d) && (en(mol, d) > en(mol, t) || mol.atom(t).element == Element::H) {
            out.push(Acceptor::SigmaStar(t, d));
        }
    }
    out
}

/// The pair-dependent part of the matrix.
pub fn pair_allowed(mol: &Molecule, donor: Donor, acceptor: Acceptor) -> bool {
    let s = donor.atom();
    let t = acceptor.atom();
    if s == t {
        return false;
    }
    let donor_bond = match donor {
        Donor::Pi(a, b) | Donor::Sigma(a, b) => Some((a.min(b), a.max(b))),
        Donor::LonePair(_) => None,
    };
    let acceptor_bond = match acceptor {
        Acceptor::PiStar(c, d) | Acceptor::SigmaStar(c, d) => Some((c.min(d), c.max(d))),
        Acceptor::Empty(_) => None,
    };
    if donor_bond.is_some() && donor_bond == acceptor_bond {
        return false;
    }
    if let Donor::Sigma(s, n) = donor {
        let partner = mol.atom(n);
        let shift = matches!(mol.atom(s).element, Element::H | Element::C)
            && matches!(acceptor, Acceptor::Empty(t) if t != n && mol.bond_between(t, n).is_some());
        return partner.element.is_electropositive() || partner.charge < 0 || shift;
    }
    true
}

/// Every legal orbital pair between atoms `s` and `t`.
pub fn legal_pairs(mol: &Molecule, s: usize, t: usize) -> Vec<(Donor, Acceptor)> {
    let sinks = sink_orbitals(mol, t);
    let mut out = Vec::new();
    for d in source_orbitals(mol, s) {
        for &a in &sinks {
            if pair_allowed(mol, d, a) {
                out.push((d, a));
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    /// Candidates in sources-major, sinks-minor order (after any overflow cut).
    pub candidates: Vec<MechanismCandidate>,
    /// Number of valid candidates dropped by the cap.
    pub overflow: usize,
}

fn uniform(atoms: &[usize], role: SiteRole) -> Vec<ReactiveSitePrediction> {
    atoms
        .iter()
        .map(|&atom| ReactiveSitePrediction {
            atom,
            map: None,
            role,
            probability: 1.0,
        })
        .collect()
}

/// Mechanisms for all source/sink atom pairs with the default cap.
/// Unmapped atoms receive fresh map numbers first, so candidate steps refer
/// to that mapped copy of `reactants`.
pub fn enumerate_mechanisms(reactants: &Molecule, sources: &[usize], sinks: &[usize]) -> Vec<MechanismCandidate> {
    enumerate_scored(
        reactants,
        &uniform(sources, SiteRole::Source),
        &uniform(sinks, SiteRole::Sink),
        DEFAULT_CAP,
    )
    .candidates
}

/// Mechanisms for scored site lists. Pairs are visited sources-major in the
/// given order. Above `cap` candidates, those with the highest product of
/// site probabilities are kept (stable, so ties keep pairing order).
pub fn enumerate_scored(
    reactants: &Molecule,
    sources: &[ReactiveSitePrediction],
    sinks: &[ReactiveSitePrediction],
    cap: usize,
) -> Enumeration {
    let order: Vec<usize> = (0..reactants.atom_count()).collect();
    let mol = reactants.map_all(&order);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for src in sources {
        for snk in sinks {
            if src.atom >= mol.atom_count() || snk.atom >= mol.atom_count() {
                continue;
            }
            for (donor, acceptor) in legal_pairs(&mol, src.atom, snk.atom) {
                let Ok(products) = push(&mol, donor, acceptor) else {
                    continue;
                };
                let Ok(arrow) = ArrowSpec::from_orbitals(&mol, donor, acceptor) else {
                    continue;
                };
                if !seen.insert((canonical_smiles(&products), arrow)) {
                    continue;
                }
                let balance = check_balance(&mol, &products);
                if !balance.is_balanced() {
                    continue;
                }
                // consistent by construction, so skip the re-derivation in ElementaryStep::new
                let step = ElementaryStep {
                    reactants: mol.clone(),
                    products: Some(products),
                    arrow: Some(arrow),
                    score: None,
                    provenance: Provenance::TwoStep,
                    balance: Some(balance),
                    consistent: Some(true),
                    meta: Default::default(),
                };
                out.push(MechanismCandidate {
                    step,
                    source_probability: src.probability,
                    sink_probability: snk.probability,
                });
            }
        }
    }
    let mut overflow = 0;
    if out.len() > cap {
        overflow = out.len() - cap;
        out.sort_by(|a, b| b.site_product().total_cmp(&a.site_product()));
        out.truncate(cap);
        log::info!("enumeration cap {cap} reached, {overflow} candidates dropped");
    }
    Enumeration {
        candidates: out,
        overflow,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn mol(s: &str) -> Molecule {
        parse_smiles(s).unwrap()
    }

    #[test]
    fn sn2_candidate_present() {
        let m = mol("[Br-:1].[CH3:2][Cl:3]");
        let c = enumerate_mechanisms(&m, &[0], &[1]);
        let arrows: Vec<String> = c.iter().map(|c| c.step.arrow.unwrap().to_string()).collect();
        assert!(arrows.contains(&"LP:1>SS:2-3".to_string()), "{arrows:?}");
        assert!(c.iter().all(|c| c.step.is_balanced()));
    }

    #[test]
    fn self_pair_is_empty() {
        let m = mol("[Br-:1].[CH3:2][Cl:3]");
        assert!(enumerate_mechanisms(&m, &[0], &[0]).is_empty());
    }

    #[test]
    fn sigma_donor_needs_a_reason() {
        // C-C sigma bond is not a donor toward a remote sigma*
        let m = mol("[CH3:1][CH3:2].[H:3][Cl:4]");
        assert!(enumerate_mechanisms(&m, &[0], &[2]).is_empty());
        // C-Li is
        let m = mol("[CH3:1][Li:2].[H:3][Cl:4]");
        assert_eq!(enumerate_mechanisms(&m, &[0], &[2]).len(), 1);
    }

    #[test]
    fn pi_star_points_to_the_electronegative_end() {
        let m = mol("[OH-:1].[CH3:2][CH:3]=[O:4]");
        let c = enumerate_mechanisms(&m, &[0], &[2]);
        let dbg: Vec<String> = c.iter().map(|c| c.record()).collect();
        assert_eq!(c.len(), 1, "{dbg:?}");
        assert_eq!(c[0].step.arrow.unwrap().to_string(), "LP:1>PS:3-4");
        assert!(enumerate_mechanisms(&m, &[0], &[3]).is_empty());
    }

    #[test]
    fn unmapped_atoms_get_maps() {
        let m = mol("[Br-].CCl");
        let c = enumerate_mechanisms(&m, &[0], &[1]);
        assert!(!c.is_empty());
        assert!(c[0].step.reactants.atoms().iter().all(|a| a.map.is_some()));
    }

    #[test]
    fn cap_keeps_most_probable_pairs() {
        let m = mol("[OH-:1].[NH2-:2].[CH3:3][Br:4]");
        let s = |atom, p| ReactiveSitePrediction {
            atom,
            map: None,
            role: SiteRole::Source,
            probability: p,
        };
        let t = ReactiveSitePrediction {
            atom: 2,
            map: None,
            role: SiteRole::Sink,
            probability: 1.0,
        };
        let e = enumerate_scored(&m, &[s(0, 0.2), s(1, 0.9)], &[t], 1);
        assert_eq!(e.overflow, 1);
        assert_eq!(e.candidates[0].step.arrow.unwrap().to_string(), "LP:2>SS:3-4");
    }
}
