//! Numerical checks of the weighted inequalities, the perturbed space-time estimate, and
//! the multiplier identities behind it.

mod multiplier;
mod perturbation;
mod sobolev;

pub use multiplier::{
    multiplier_constant, multiplier_identity_residual, perturbed_multiplier_balance,
    perturbed_multiplier_residual, MultiplierSample, MultiplierSpec, StaticBalance,
};
pub use perturbation::{
    apply_h, hidx, kss_inequality_check, symmetrize, KssSides, ManufacturedField,
    PerturbationTensor,
};
pub use sobolev::{sobolev_ratio, sobolev_sides, Inequality};

use crate::solver::DataFamily;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default smallness bound on `|h|`.
pub const DEFAULT_H_BOUND: f64 = 0.1;

/// Radial profiles used for the inequality suite.
pub fn sobolev_family() -> Vec<DataFamily> {
    vec![
        DataFamily::Gaussian { width: 1.0 },
        DataFamily::Gaussian { width: 0.5 },
        DataFamily::Gaussian { width: 2.0 },
        DataFamily::Bump { plateau: 1.0, support: 2.0 },
        DataFamily::Bump { plateau: 0.5, support: 3.0 },
        DataFamily::Ring { center: 3.0, width: 0.5 },
        DataFamily::Ring { center: 1.5, width: 0.5 },
    ]
}

/// Short label of a family member.
pub fn member_label(f: &DataFamily) -> String {
    match *f {
        DataFamily::Gaussian { width } => format!("gaussian(w={width})"),
        DataFamily::Bump { plateau, support } => format!("bump({plateau},{support})"),
        DataFamily::Ring { center, width } => format!("ring(c={center},w={width})"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One row of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRow {
    pub check: String,
    pub member: String,
    pub value: f64,
    pub grid: String,
    pub verdict: Verdict,
}

impl fmt::Display for VerificationRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        };
        write!(f, "{:<28} {:<36} {:>14.6e} {:<16} {}", self.check, self.member, self.value, self.grid, v)
    }
}
