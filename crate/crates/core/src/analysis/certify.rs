//! Checking an instance against the guarantee of its family.

use serde::{Deserialize, Serialize};

use crate::engine::{eval_family, EvaluationReport, Instance};
use crate::error::{Error, Result};
use crate::permutations::{verify_pairwise_independent, PermutationFamily};
use crate::thresholds::{e_threshold, golden_threshold, INV_PHI};

use super::lemma::ONE_MINUS_INV_E;

/// Slack allowed below the guaranteed ratio.
pub const CERTIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// `{ι, ρ}` with the median-of-max threshold at `φ⁻¹`.
    Golden,
    /// Pairwise-independent families with the `1/e` product threshold.
    E,
}

impl BoundMode {
    pub fn bound(self) -> f64 {
        match self {
            BoundMode::Golden => INV_PHI,
            BoundMode::E => ONE_MINUS_INV_E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundMode::Golden => "golden",
            BoundMode::E => "e",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub mode: BoundMode,
    pub bound: f64,
    pub passed: bool,
    pub report: EvaluationReport,
}

/// Evaluates the mode's prescribed threshold and compares the ratio with
/// the mode's bound. A zero prophet value passes trivially.
pub fn certify_tpr_lower(inst: &Instance, family: &PermutationFamily, mode: BoundMode) -> Result<Certification> {
    if family.n() != inst.n() {
        return Err(Error::SizeMismatch { expected: inst.n(), found: family.n() });
    }
    let threshold = match mode {
        BoundMode::Golden => {
            if !family.is_forward_reverse() {
                return Err(Error::FamilyModeMismatch {
                    mode: mode.name(),
                    reason: "family must be exactly the identity and its reverse".into(),
                });
            }
            golden_threshold(inst)?
        }
        BoundMode::E => {
            let check = verify_pairwise_independent(family);
            if !check.independent {
                let reason = match check.worst_pair {
                    Some((i, j)) => format!("pair ({i}, {j}) is not uniform over ordered position pairs"),
                    None => "family is not pairwise independent".into(),
                };
                return Err(Error::FamilyModeMismatch { mode: mode.name(), reason });
            }
            e_threshold(inst)?
        }
    };
    let report = eval_family(inst, family, threshold)?;
    let bound = mode.bound();
    let passed = report.ratio.is_none_or(|r| r >= bound - CERTIFY_TOLERANCE);
    Ok(Certification { mode, bound, passed, report })
}
