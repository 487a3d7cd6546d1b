//! Threshold stopping rules under constrained observation orders.
//!
//! Values `X_1, …, X_n` are independent with known distributions. A gambler
//! sees them in an order drawn uniformly from a permutation family and stops
//! at the first value clearing a fixed threshold; the prophet takes the
//! maximum. This crate evaluates both exactly, picks thresholds, builds the
//! families and instances of interest, and certifies ratio bounds.

pub mod analysis;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod io;
pub mod permutations;
pub mod quadrature;
pub mod simplex;
pub mod thresholds;

pub use distributions::{Atom, AugThreshold, Segment, ValueDistribution};
pub use engine::{eval_family, eval_threshold, prophet_value, EvaluationReport, FamilyEvaluator, Instance};
pub use error::{Error, Result};
pub use permutations::{Permutation, PermutationFamily, Provenance};
pub use thresholds::{e_threshold, golden_threshold, ratio_sweep, GridSpec, ThresholdTarget, INV_PHI};
