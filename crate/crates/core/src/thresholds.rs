//! Threshold selection and threshold sweeps.
//!
//! Every target reduces to a value `Q` for the product
//! `G(θ, θ̃) = ∏_i Pr((X_i, X̃_i) < (θ, θ̃))`, which is nondecreasing in the
//! lexicographic order. Jumps of `G` sit at atoms; inside a jump the tie
//! fraction interpolates, so every `Q ∈ (0,1)` is hit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::AugThreshold;
use crate::engine::{FamilyEvaluator, Instance};
use crate::error::{Error, Result};
use crate::permutations::PermutationFamily;

/// Inverse golden ratio `(√5 − 1)/2`.
pub const INV_PHI: f64 = 0.618_033_988_749_894_9;

const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ThresholdTarget {
    /// `Pr((X_*, X̃_*) ≥ t) = p`.
    MaxSurvival(f64),
    /// `∏_i Pr((X_i, X̃_i) < t) = q`.
    ProductSurvival(f64),
}

impl ThresholdTarget {
    fn value(&self) -> f64 {
        match *self {
            ThresholdTarget::MaxSurvival(v) | ThresholdTarget::ProductSurvival(v) => v,
        }
    }

    /// The target expressed as a value of the pass-over product.
    pub fn product_target(&self) -> f64 {
        match *self {
            ThresholdTarget::MaxSurvival(p) => 1.0 - p,
            ThresholdTarget::ProductSurvival(q) => q,
        }
    }
}

/// `∏_i Pr((X_i, X̃_i) < t)`.
pub fn product_below(inst: &Instance, t: AugThreshold) -> f64 {
    inst.product_over(|d| d.below_aug(t))
}

/// `Pr((X_*, X̃_*) ≥ t)`.
pub fn max_survival(inst: &Instance, t: AugThreshold) -> f64 {
    1.0 - product_below(inst, t)
}

/// Solves `∏_c (lo_c + u·mass_c)^{k_c} = target` for the tie fraction.
fn solve_tie(parts: &[(f64, f64, usize)], target: f64) -> f64 {
    let jumping: Vec<usize> = (0..parts.len()).filter(|&c| parts[c].1 > 0.0).collect();
    if let [only] = jumping[..] {
        let rest: f64 = parts
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != only)
            .map(|(_, &(lo, _, k))| lo.powi(k as i32))
            .product();
        let (lo, mass, k) = parts[only];
        let u = ((target / rest).powf(1.0 / k as f64) - lo) / mass;
        return u.clamp(0.0, 1.0);
    }
    let g = |u: f64| parts.iter().map(|&(lo, m, k)| (lo + u * m).powi(k as i32)).product::<f64>();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if (g(lo) - target).abs() <= (g(hi) - target).abs() {
        lo
    } else {
        hi
    }
}

/// Finds `t` with `G(t) = Q` for the target's `Q`.
///
/// Atoms are tried first: if `Q` falls inside the jump of `G` at an atom,
/// the tie fraction is solved there. Otherwise `Q` is attained at a
/// continuity point, found by bisection on `[0, max support]`.
pub fn threshold_for(inst: &Instance, target: ThresholdTarget) -> Result<AugThreshold> {
    let v = target.value();
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::OutOfRange { name: "target", value: v, range: "(0, 1)" });
    }
    let q = target.product_target();

    let mut jumps: Vec<f64> = inst.classes().flat_map(|(d, _)| d.jump_locations()).collect();
    jumps.sort_by(f64::total_cmp);
    jumps.dedup();
    for &a in &jumps {
        let parts: Vec<(f64, f64, usize)> = inst.classes().map(|(d, k)| (d.cdf_left(a), d.prob_eq(a), k)).collect();
        let left: f64 = parts.iter().map(|&(lo, _, k)| lo.powi(k as i32)).product();
        let right: f64 = parts.iter().map(|&(lo, m, k)| (lo + m).powi(k as i32)).product();
        if right > left && left <= q && q <= right {
            return AugThreshold::new(a, solve_tie(&parts, q));
        }
    }

    let g = |theta: f64| product_below(inst, AugThreshold::at(theta));
    let (mut lo, mut hi) = (0.0f64, inst.max_support());
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = if (g(lo) - q).abs() <= (g(hi) - q).abs() { lo } else { hi };
    Ok(AugThreshold::at(theta))
}

/// Threshold with `Pr(X_* ≥ t) = φ⁻¹`, so the pass-over product is `φ⁻²`.
pub fn golden_threshold(inst: &Instance) -> Result<AugThreshold> {
    threshold_for(inst, ThresholdTarget::MaxSurvival(INV_PHI))
}

/// Threshold with pass-over product `1/e`.
pub fn e_threshold(inst: &Instance) -> Result<AugThreshold> {
    threshold_for(inst, ThresholdTarget::ProductSurvival((-1.0f64).exp()))
}

/// Threshold grid for sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Evenly spaced points on `[0, max support]`, and again across the
    /// support of every smooth piece when `refine_segments` is set.
    pub points: usize,
    pub refine_segments: bool,
    /// Tie fractions tried at every jump location.
    pub tie_fractions: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points: 2000, refine_segments: true, tie_fractions: 16 }
    }
}

impl GridSpec {
    pub fn with_points(points: usize) -> Self {
        GridSpec { points, ..Self::default() }
    }

    /// Sorted, deduplicated thresholds for `inst`.
    pub fn thresholds(&self, inst: &Instance) -> Result<Vec<AugThreshold>> {
        if self.points == 0 {
            return Err(Error::EmptyGrid);
        }
        let mut out = Vec::new();
        let spread = |out: &mut Vec<AugThreshold>, lo: f64, hi: f64| {
            if self.points == 1 {
                out.push(AugThreshold::at(lo));
                return;
            }
            let step = (hi - lo) / (self.points - 1) as f64;
            out.extend((0..self.points).map(|k| AugThreshold::at(if k + 1 == self.points { hi } else { lo + step * k as f64 })));
        };
        spread(&mut out, 0.0, inst.max_support());
        if self.refine_segments {
            let mut supports: Vec<(f64, f64)> =
                inst.classes().flat_map(|(d, _)| d.segments().iter().flat_map(|s| s.supports())).collect();
            supports.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            supports.dedup();
            for (lo, hi) in supports {
                spread(&mut out, lo, hi);
            }
        }
        let mut jumps: Vec<f64> = inst.classes().flat_map(|(d, _)| d.jump_locations()).collect();
        jumps.sort_by(f64::total_cmp);
        jumps.dedup();
        for a in jumps {
            for x in [a.next_down(), a.next_up()] {
                if x >= 0.0 {
                    out.push(AugThreshold::at(x));
                }
            }
            let k = self.tie_fractions.max(1);
            for j in 0..k {
                let tie = if k == 1 { 0.0 } else { j as f64 / (k - 1) as f64 };
                out.push(AugThreshold { theta: a, tie });
            }
        }
        out.sort_by(AugThreshold::lex_cmp);
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub tie: f64,
    pub gambler: f64,
    pub prophet: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Index of the best point (largest ratio, or gambler value when the
    /// prophet's value is zero). First one wins ties.
    pub argmax: usize,
}

impl Sweep {
    pub fn best(&self) -> &SweepPoint {
        &self.points[self.argmax]
    }

    /// Best point whose `θ` lies strictly inside `(lo, hi)`.
    pub fn best_within(&self, lo: f64, hi: f64) -> Option<&SweepPoint> {
        self.points
            .iter()
            .filter(|p| p.theta > lo && p.theta < hi)
            .fold(None, |best: Option<&SweepPoint>, p| match best {
                Some(b) if b.gambler >= p.gambler => Some(b),
                _ => Some(p),
            })
    }
}

/// Evaluates the family average at every grid threshold.
pub fn ratio_sweep(inst: &Instance, family: &PermutationFamily, grid: &GridSpec) -> Result<Sweep> {
    let eval = FamilyEvaluator::new(inst, family)?;
    sweep_with(&eval, &grid.thresholds(inst)?)
}

/// Sweep over explicit thresholds with a prepared evaluator.
pub fn sweep_with(eval: &FamilyEvaluator<'_>, thresholds: &[AugThreshold]) -> Result<Sweep> {
    if thresholds.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let prophet = eval.prophet();
    let points: Vec<SweepPoint> = thresholds
        .par_iter()
        .map(|&t| {
            let gambler = eval.gambler(t);
            SweepPoint { theta: t.theta, tie: t.tie, gambler, prophet, ratio: (prophet > 0.0).then(|| gambler / prophet) }
        })
        .collect();
    let argmax = points
        .iter()
        .enumerate()
        .fold(0, |best, (k, p)| if p.gambler > points[best].gambler { k } else { best });
    Ok(Sweep { points, argmax })
}
