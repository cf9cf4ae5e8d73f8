//! Mutual information, partial information decomposition and the 16-atom
//! integrated information decomposition (ΦID) for two-variable systems.
//!
//! All quantities are computed in nats; [`Unit::Bits`] is applied only when
//! results are reported.

mod discrete;
mod gaussian;
mod lattice;
mod phiid;

pub use discrete::{
    entropy, mutual_information_discrete, pid_mmi, JointDistribution, PidAtoms, PidDistribution,
};
pub use gaussian::{
    copula_normal_scores, covariance_matrix, gaussian_mi_from_covariance,
    mutual_information_gaussian, zscore, DEFAULT_RIDGE,
};
pub use lattice::{Antichain, Source};
pub use phiid::{
    double_redundancy, phiid_atoms, phiid_from_distribution, phiid_from_series, BaseMi, Estimator,
    EstimateStatus, PairSeries, PhiAtoms,
};

use serde::{Deserialize, Serialize};

/// Reporting unit for information values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Nats,
    Bits,
}

impl Unit {
    /// Convert a value in nats to this unit.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Unit::Nats => nats,
            Unit::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        }
    }
}

impl std::str::FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nats" => Ok(Unit::Nats),
            "bits" => Ok(Unit::Bits),
            other => Err(format!("unknown unit {other:?} (expected bits or nats)")),
        }
    }
}
