//! Adversarial instances that pin threshold rules near their worst case.

use crate::distributions::{Atom, ValueDistribution};
use crate::engine::Instance;
use crate::error::{Error, Result};
use crate::permutations::PermutationFamily;

use super::centered::CenterednessCertificate;

/// Weights at or below this are treated as absent from the witness.
const NEGLIGIBLE_WEIGHT: f64 = 1e-15;

const SQRT5_MINUS_1: f64 = 1.236_067_977_499_789_8;

/// Zero with probability `1 − δ`, `(√5 − 1)/δ` with probability `δ`.
fn spike(delta: f64) -> Result<ValueDistribution> {
    ValueDistribution::new(vec![Atom { x: 0.0, p: 1.0 - delta }, Atom { x: SQRT5_MINUS_1 / delta, p: delta }], vec![])
}

fn check_delta(delta: f64, upper: f64, range: &'static str) -> Result<()> {
    if delta > 0.0 && delta < upper {
        Ok(())
    } else {
        Err(Error::OutOfRange { name: "delta", value: delta, range })
    }
}

/// Three coordinates: `U[1−δ, 1]`, the spike, `U[1−δ, 1]`.
pub fn golden_hard_instance(delta: f64) -> Result<Instance> {
    check_delta(delta, 1.0, "(0, 1)")?;
    let flat = ValueDistribution::uniform(1.0 - delta, 1.0)?;
    Instance::new(vec![flat.clone(), spike(delta)?, flat])
}

/// The spike at `j`; every other `i` is `1 − min(Y_i, 1)` with
/// `Y_i ~ Exp(p_i/δ)`, or identically zero when `p_i` vanishes.
pub fn hard_instance_from_center(
    family: &PermutationFamily,
    j: usize,
    cert: &CenterednessCertificate,
    delta: f64,
) -> Result<Instance> {
    check_delta(delta, 0.07, "(0, 0.07)")?;
    let n = family.n();
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    if cert.j != j {
        return Err(Error::IndexOutOfRange { index: cert.j, n: j });
    }
    if cert.witness_p.len() != n {
        return Err(Error::SizeMismatch { expected: n, found: cert.witness_p.len() });
    }
    let dists = (1..=n)
        .map(|i| {
            if i == j {
                return spike(delta);
            }
            let p = cert.witness_p[i - 1];
            if p <= NEGLIGIBLE_WEIGHT {
                Ok(ValueDistribution::zero())
            } else {
                ValueDistribution::exp_capped(p / delta)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(dists)
}

/// `n` i.i.d. copies of the two-level mixture with parameter `h`.
pub fn iid_hard_instance(n: usize, h: f64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::OutOfRange { name: "n", value: 0.0, range: "at least 1" });
    }
    if !(h > 1.0 && h.is_finite()) {
        return Err(Error::OutOfRange { name: "H", value: h, range: "(1, ∞)" });
    }
    Instance::iid(ValueDistribution::two_level(h, n)?, n)
}
