use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ReactionError;
use crate::chem::electrons::{self, Acceptor, Donor};
use crate::chem::Molecule;

/// Orbital kinds. The first three donate, the last three accept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitalKind {
    LonePair,
    PiBond,
    SigmaBond,
    EmptyOrbital,
    PiStar,
    SigmaStar,
}

impl OrbitalKind {
    pub const SOURCES: [OrbitalKind; 3] = [OrbitalKind::LonePair, OrbitalKind::PiBond, OrbitalKind::SigmaBond];
    pub const SINKS: [OrbitalKind; 3] = [OrbitalKind::EmptyOrbital, OrbitalKind::PiStar, OrbitalKind::SigmaStar];

    pub fn code(self) -> &'static str {
        match self {
            OrbitalKind::LonePair => "LP",
            OrbitalKind::PiBond => "PI",
            OrbitalKind::SigmaBond => "SB",
            OrbitalKind::EmptyOrbital => "EO",
            OrbitalKind::PiStar => "PS",
            OrbitalKind::SigmaStar => "SS",
        }
    }

    pub fn from_code(code: &str) -> Option<OrbitalKind> {
        Some(match code {
            "LP" => OrbitalKind::LonePair,
            "PI" => OrbitalKind::PiBond,
            "SB" => OrbitalKind::SigmaBond,
            "EO" => OrbitalKind::EmptyOrbital,
            "PS" => OrbitalKind::PiStar,
            "SS" => OrbitalKind::SigmaStar,
            _ => return None,
        })
    }

    pub fn is_source(self) -> bool {
        Self::SOURCES.contains(&self)
    }

    pub fn is_bond(self) -> bool {
        !matches!(self, OrbitalKind::LonePair | OrbitalKind::EmptyOrbital)
    }
}

/// One orbital addressed by atom map numbers. Bond orbitals name the far end
/// in `secondary`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrbitalRef {
    pub kind: OrbitalKind,
    pub primary: u32,
    pub secondary: Option<u32>,
}

impl OrbitalRef {
    pub fn atom(kind: OrbitalKind, primary: u32) -> OrbitalRef {
        OrbitalRef {
            kind,
            primary,
            secondary: None,
        }
    }

    pub fn bond(kind: OrbitalKind, primary: u32, secondary: u32) -> OrbitalRef {
        OrbitalRef {
            kind,
            primary,
            secondary: Some(secondary),
        }
    }

    fn check(&self) -> Result<(), ReactionError> {
        if self.kind.is_bond() != self.secondary.is_some() {
            return Err(ReactionError::BadArrow(format!(
                "{} orbital {} a second atom",
                self.kind.code(),
                if self.kind.is_bond() { "needs" } else { "takes no" }
            )));
        }
        if self.primary == 0 || self.secondary == Some(0) {
            return Err(ReactionError::BadArrow("map number 0 is not addressable".into()));
        }
        if self.secondary == Some(self.primary) {
            return Err(ReactionError::BadArrow("bond orbital names the same atom twice".into()));
        }
        Ok(())
    }
}

impl fmt::Display for OrbitalRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.code(), self.primary)?;
        if let Some(s) = self.secondary {
            write!(f, "-{s}")?;
        }
        Ok(())
    }
}

impl FromStr for OrbitalRef {
    type Err = ReactionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ReactionError::BadArrow(format!("malformed orbital '{s}'"));
        let (code, atoms) = s.trim().split_once(':').ok_or_else(bad)?;
        let kind = OrbitalKind::from_code(code).ok_or_else(bad)?;
        let (p, sec) = match atoms.split_once('-') {
            Some((p, q)) => (p, Some(q.parse::<u32>().map_err(|_| bad())?)),
            None => (atoms, None),
        };
        let r = OrbitalRef {
            kind,
            primary: p.parse().map_err(|_| bad())?,
            secondary: sec,
        };
        r.check()?;
        Ok(r)
    }
}

/// One source orbital paired with one sink orbital, written `LP:10>SS:20-30`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ArrowSpec {
    pub source: OrbitalRef,
    pub sink: OrbitalRef,
}

impl ArrowSpec {
    pub fn new(source: OrbitalRef, sink: OrbitalRef) -> Result<ArrowSpec, ReactionError> {
        source.check()?;
        sink.check()?;
        if !source.kind.is_source() {
            return Err(ReactionError::BadArrow(format!("{} cannot donate", source.kind.code())));
        }
        if sink.kind.is_source() {
            return Err(ReactionError::BadArrow(format!("{} cannot accept", sink.kind.code())));
        }
        Ok(ArrowSpec { source, sink })
    }

    /// Map numbers of the donating and accepting atoms.
    pub fn labels(&self) -> (u32, u32) {
        (self.source.primary, self.sink.primary)
    }

    /// Resolves map numbers to atom indices of `mol`.
    pub fn resolve(&self, mol: &Molecule) -> Result<(Donor, Acceptor), ReactionError> {
        let idx = |m: u32| mol.atom_by_map(m).ok_or(ReactionError::UnresolvedMap(m));
        let s = &self.source;
        let t = &self.sink;
        let donor = match s.kind {
            OrbitalKind::LonePair => Donor::LonePair(idx(s.primary)?),
            OrbitalKind::PiBond => Donor::Pi(idx(s.primary)?, idx(s.secondary.unwrap())?),
            OrbitalKind::SigmaBond => Donor::Sigma(idx(s.primary)?, idx(s.secondary.unwrap())?),
            _ => unreachable!("validated at construction"),
        };
        let acceptor = match t.kind {
            OrbitalKind::EmptyOrbital => Acceptor::Empty(idx(t.primary)?),
            OrbitalKind::PiStar => Acceptor::PiStar(idx(t.primary)?, idx(t.secondary.unwrap())?),
            OrbitalKind::SigmaStar => Acceptor::SigmaStar(idx(t.primary)?, idx(t.secondary.unwrap())?),
            _ => unreachable!("validated at construction"),
        };
        Ok((donor, acceptor))
    }

    /// Builds the map-number form of an index-level orbital pair.
    pub fn from_orbitals(mol: &Molecule, donor: Donor, acceptor: Acceptor) -> Result<ArrowSpec, ReactionError> {
        let map = |i: usize| {
            mol.atoms()
                .get(i)
                .and_then(|a| a.map)
                .ok_or_else(|| ReactionError::BadArrow(format!("atom {i} carries no map number")))
        };
        let source = match donor {
            Donor::LonePair(a) => OrbitalRef::atom(OrbitalKind::LonePair, map(a)?),
            Donor::Pi(a, b) => OrbitalRef::bond(OrbitalKind::PiBond, map(a)?, map(b)?),
            Donor::Sigma(a, b) => OrbitalRef::bond(OrbitalKind::SigmaBond, map(a)?, map(b)?),
        };
        let sink = match acceptor {
            Acceptor::Empty(c) => OrbitalRef::atom(OrbitalKind::EmptyOrbital, map(c)?),
            Acceptor::PiStar(c, d) => OrbitalRef::bond(OrbitalKind::PiStar, map(c)?, map(d)?),
            Acceptor::SigmaStar(c, d) => OrbitalRef::bond(OrbitalKind::SigmaStar, map(c)?, map(d)?),
        };
        ArrowSpec::new(source, sink)
    }
}

impl fmt::Display for ArrowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}", self.source, self.sink)
    }
}

impl FromStr for ArrowSpec {
    type Err = ReactionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .trim()
            .split_once('>')
            .ok_or_else(|| ReactionError::BadArrow(format!("arrow '{s}' lacks '>'")))?;
        ArrowSpec::new(a.parse()?, b.parse()?)
    }
}

impl From<ArrowSpec> for String {
    fn from(a: ArrowSpec) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for ArrowSpec {
    type Error = ReactionError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Pushes the arrow's electron pair through `reactants`. Fragments that come
/// apart stay in the returned set as separate components.
pub fn apply_arrow(reactants: &Molecule, arrow: &ArrowSpec) -> Result<Molecule, ReactionError> {
    let (donor, acceptor) = arrow.resolve(reactants)?;
    Ok(electrons::push(reactants, donor, acceptor)?)
}
