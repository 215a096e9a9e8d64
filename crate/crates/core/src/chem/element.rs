use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Elements accepted by the valence model.
///
/// The set is deliberately small: organic elements, common heteroatoms and the
/// alkali/alkaline-earth counterions. Anything else is rejected at parse time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    H,
    Li,
    B,
    C,
    N,
    O,
    F,
    Na,
    Mg,
    Si,
    P,
    S,
    Cl,
    K,
    Se,
    Br,
    Sn,
    I,
}

pub const ALL_ELEMENTS: [Element; 18] = [
    Element::H,
    Element::Li,
    Element::B,
    Element::C,
    Element::N,
    Element::O,
    Element::F,
    Element::Na,
    Element::Mg,
    Element::Si,
    Element::P,
    Element::S,
    Element::Cl,
    Element::K,
    Element::Se,
    Element::Br,
    Element::Sn,
    Element::I,
];

impl Element {
    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::Li => 3,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::Na => 11,
            Element::Mg => 12,
            Element::Si => 14,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::K => 19,
            Element::Se => 34,
            Element::Br => 35,
            Element::Sn => 50,
            Element::I => 53,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::Li => "Li",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::Na => "Na",
            Element::Mg => "Mg",
            Element::Si => "Si",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::K => "K",
            Element::Se => "Se",
            Element::Br => "Br",
            Element::Sn => "Sn",
            Element::I => "I",
        }
    }

    /// Valence (outer-shell) electron count of the neutral atom.
    pub fn valence_electrons(self) -> i32 {
        match self {
            Element::H | Element::Li | Element::Na | Element::K => 1,
            Element::Mg => 2,
            Element::B => 3,
            Element::C | Element::Si | Element::Sn => 4,
            Element::N | Element::P => 5,
            Element::O | Element::S | Element::Se => 6,
            Element::F | Element::Cl | Element::Br | Element::I => 7,
        }
    }

    pub fn period(self) -> u8 {
        match self {
            Element::H => 1,
            Element::Li | Element::B | Element::C | Element::N | Element::O | Element::F => 2,
            Element::Na | Element::Mg | Element::Si | Element::P | Element::S | Element::Cl => 3,
            Element::K | Element::Se | Element::Br => 4,
            Element::Sn | Element::I => 5,
        }
    }

    /// Main-group number (1, 2, 13..17).
    pub fn group(self) -> u8 {
        match self.valence_electrons() {
            1 => 1,
            2 => 2,
            v => 10 + v as u8,
        }
    }

    /// Pauling electronegativity.
    pub fn electronegativity(self) -> f64 {
        match self {
            Element::H => 2.20,
            Element::Li => 0.98,
            Element::B => 2.04,
            Element::C => 2.55,
            Element::N => 3.04,
            Element::O => 3.44,
            Element::F => 3.98,
            Element::Na => 0.93,
            Element::Mg => 1.31,
            Element::Si => 1.90,
            Element::P => 2.19,
            Element::S => 2.58,
            Element::Cl => 3.16,
            Element::K => 0.82,
            Element::Se => 2.55,
            Element::Br => 2.96,
            Element::Sn => 1.96,
            Element::I => 2.66,
        }
    }

    /// Maximum number of electron domains (bonds plus lone pairs) around the atom.
    pub fn max_domains(self) -> i32 {
        match self.period() {
            1 => 1,
            2 => 4,
            _ => 6,
        }
    }

    /// Alkali and alkaline-earth counterions.
    pub fn is_metal(self) -> bool {
        matches!(self, Element::Li | Element::Na | Element::K | Element::Mg)
    }

    /// Elements whose bonds to carbon or hydrogen are polarized toward the partner,
    /// making the sigma bond a plausible electron source.
    pub fn is_electropositive(self) -> bool {
        matches!(
            self,
            Element::Li | Element::Na | Element::K | Element::Mg | Element::B | Element::Si | Element::Sn
        )
    }

    /// Default valences for atoms written outside brackets, `None` when the
    /// element is not part of the organic subset.
    pub fn organic_valences(self) -> Option<&'static [i32]> {
        match self {
            Element::B => Some(&[3]),
            Element::C => Some(&[4]),
            Element::N => Some(&[3, 5]),
            Element::O => Some(&[2]),
            Element::P => Some(&[3, 5]),
            Element::S => Some(&[2, 4, 6]),
            Element::F | Element::Cl | Element::Br | Element::I => Some(&[1]),
            _ => None,
        }
    }

    /// Elements that may be written in lowercase aromatic form.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S | Element::Se
        )
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        ALL_ELEMENTS.iter().copied().find(|e| e.symbol() == symbol)
    }

    pub fn index(self) -> usize {
        ALL_ELEMENTS.iter().position(|&e| e == self).unwrap()
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Element {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::from_symbol(s).ok_or_else(|| format!("unsupported element '{s}'"))
    }
}
