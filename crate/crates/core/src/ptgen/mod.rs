//! Combinatorial proton-transfer steps from acid/base pKa inventories.

mod generate;
mod inventory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::ChemError;
use crate::reaction::ReactionError;

pub use generate::{
    sample_for_training, write_sharded, Generator, Manifest, ProtonTransfer, ShardInfo, PROTON_TRANSFER_ARROW,
};
pub use inventory::{read_inventory, read_inventory_file, write_inventory, InventoryRecord};

pub type AcidRecord = InventoryRecord;
pub type BaseRecord = InventoryRecord;

/// Diffusion-limited rate constant, M^-1 s^-1.
pub const K_DIFF: f64 = 1e10;
pub const DEFAULT_HETEROATOM_CUTOFF: f64 = 1e3;
pub const DEFAULT_CARBON_CUTOFF: f64 = 1e-1;
/// Default intrinsic log10 rate constant for carbon acids.
pub const DEFAULT_LOG_K0: f64 = 2.0;

#[derive(Debug, Error)]
pub enum PtgenError {
    #[error("{path}:{line}: {message}")]
    Inventory { path: String, line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error(transparent)]
    Reaction(#[from] ReactionError),
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteClass {
    Heteroatom,
    Carbon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    Eigen,
    EigenSmooth,
    EigenBernasconi,
}

impl RateModel {
    pub fn tag(self) -> &'static str {
        match self {
            RateModel::Eigen => "eigen",
            RateModel::EigenSmooth => "eigen_smooth",
            RateModel::EigenBernasconi => "eigen_bernasconi",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// M^-1 s^-1.
    pub k: f64,
    pub model: RateModel,
    /// pKa(acid) - pKa(conjugate acid of the base).
    pub delta_pka: f64,
}

/// Sharp-elbow Eigen estimate: diffusion-limited when favorable, ten-fold
/// slower per unfavorable pKa unit.
pub fn eigen_rate(pka_acid: f64, pka_conj: f64) -> RateEstimate {
    let delta = pka_acid - pka_conj;
    RateEstimate {
        k: K_DIFF * 10f64.powf(-delta.max(0.0)),
        model: RateModel::Eigen,
        delta_pka: delta,
    }
}

/// Smooth Eigen curve `k_diff / (1 + 10^delta)`.
pub fn eigen_rate_smooth(pka_acid: f64, pka_conj: f64) -> RateEstimate {
    let delta = pka_acid - pka_conj;
    RateEstimate {
        k: K_DIFF / (1.0 + 10f64.powf(delta)),
        model: RateModel::EigenSmooth,
        delta_pka: delta,
    }
}

/// Carbon-acid estimate `log10 k = log_k0 - delta / 2`, capped at the
/// diffusion limit.
pub fn bernasconi_rate(pka_carbon_acid: f64, pka_conj: f64, intrinsic_log_k0: f64) -> RateEstimate {
    let delta = pka_carbon_acid - pka_conj;
    RateEstimate {
        k: 10f64.powf(intrinsic_log_k0 - delta / 2.0).min(K_DIFF),
        model: RateModel::EigenBernasconi,
        delta_pka: delta,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub heteroatom: f64,
    pub carbon: f64,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs {
            heteroatom: DEFAULT_HETEROATOM_CUTOFF,
            carbon: DEFAULT_CARBON_CUTOFF,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtgenConfig {
    #[serde(default)]
    pub cutoffs: Cutoffs,
    #[serde(default = "default_log_k0")]
    pub intrinsic_log_k0: f64,
    /// Use the smooth Eigen curve for heteroatom acids.
    #[serde(default)]
    pub smooth_eigen: bool,
}

fn default_log_k0() -> f64 {
    DEFAULT_LOG_K0
}

impl Default for PtgenConfig {
    fn default() -> Self {
        PtgenConfig {
            cutoffs: Cutoffs::default(),
            intrinsic_log_k0: DEFAULT_LOG_K0,
            smooth_eigen: false,
        }
    }
}

impl PtgenConfig {
    /// Rate for a pair; the acid's site class picks the model and cutoff.
    pub fn rate(&self, acid: &InventoryRecord, base: &InventoryRecord) -> RateEstimate {
        match acid.site_class {
            SiteClass::Carbon => bernasconi_rate(acid.pka, base.pka, self.intrinsic_log_k0),
            SiteClass::Heteroatom if self.smooth_eigen => eigen_rate_smooth(acid.pka, base.pka),
            SiteClass::Heteroatom => eigen_rate(acid.pka, base.pka),
        }
    }

    pub fn cutoff(&self, class: SiteClass) -> f64 {
        match class {
            SiteClass::Heteroatom => self.cutoffs.heteroatom,
            SiteClass::Carbon => self.cutoffs.carbon,
        }
    }

    /// Rate and whether it reaches the cutoff.
    pub fn admit(&self, acid: &InventoryRecord, base: &InventoryRecord) -> (RateEstimate, bool) {
        let r = self.rate(acid, base);
        (r, r.k >= self.cutoff(acid.site_class))
    }
}
