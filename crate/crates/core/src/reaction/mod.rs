//! Elementary steps, arrow codes, arrow application and balance checks.

mod arrow;
mod balance;
mod step;

use thiserror::Error;

use crate::chem::electrons::PushError;
use crate::chem::ChemError;

pub use arrow::{apply_arrow, ArrowSpec, OrbitalKind, OrbitalRef};
pub use balance::{check_balance, BalanceReport, Verdict};
pub use step::{
    extract_label_atoms, extract_labels, parse_step_record, write_step_record, ElementaryStep, Provenance,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReactionError {
    #[error("malformed arrow: {0}")]
    BadArrow(String),
    #[error("arrow references unknown map number {0}")]
    UnresolvedMap(u32),
    #[error("step has no arrow")]
    MissingArrow,
    #[error("step has no products")]
    MissingProducts,
    #[error("malformed step record: {0}")]
    Record(String),
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error(transparent)]
    Push(#[from] PushError),
}
