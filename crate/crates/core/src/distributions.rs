//! Nonnegative value distributions as finite mixtures of closed-form pieces.
//!
//! A [`ValueDistribution`] is a list of point masses plus a list of smooth
//! segments. Every quantity the evaluators need (CDF, lexicographic survival,
//! truncated first moment) is a sum of per-piece closed forms, so nothing in
//! this module integrates numerically.
//!
//! Ties are broken with an auxiliary uniform `X̃ ∈ [0,1]` attached to every
//! sample: a sample `(x, x̃)` clears the threshold `(θ, θ̃)` when it is
//! lexicographically `≥`. Atoms are the only place the tie fraction matters.

use std::cmp::Ordering;

use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance on total mass and on the tie fraction range.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// `e − 2`, the normaliser of the two-level construction.
const E_MINUS_2: f64 = std::f64::consts::E - 2.0;

/// A point mass `p` at location `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub p: f64,
}

/// A smooth mixture component carrying weight `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// Uniform on `[a, b]`.
    Uniform { a: f64, b: f64, w: f64 },
    /// `X = 1 − min(Y, 1)` with `Y ~ Exp(rate)`. Supported on `[0, 1]`; the
    /// event `Y ≥ 1` is a point mass `w·e^{−rate}` at zero that the segment
    /// carries itself.
    ExpCapped { rate: f64, w: f64 },
    /// Mixture of `U[1, 1+1/h]` and `U[h+1, h+1+1/h]`, the upper piece with
    /// relative weight `1/((e−2)·n·h)`.
    TwoLevel { h: f64, n: usize, w: f64 },
}

impl Segment {
    pub fn weight(&self) -> f64 {
        match *self {
            Segment::Uniform { w, .. } | Segment::ExpCapped { w, .. } | Segment::TwoLevel { w, .. } => w,
        }
    }

    /// Left end of the support.
    pub fn left(&self) -> f64 {
        match *self {
            Segment::Uniform { a, .. } => a,
            Segment::ExpCapped { .. } => 0.0,
            Segment::TwoLevel { .. } => 1.0,
        }
    }

    /// Right end of the support.
    pub fn right(&self) -> f64 {
        match *self {
            Segment::Uniform { b, .. } => b,
            Segment::ExpCapped { .. } => 1.0,
            Segment::TwoLevel { h, .. } => h + 1.0 + 1.0 / h,
        }
    }

    /// Probability that one two-level sample lands in the upper piece.
    pub fn two_level_top_mass(h: f64, n: usize) -> f64 {
        1.0 / (E_MINUS_2 * n as f64 * h)
    }

    /// The uniform pieces `(a, b, weight)` this segment is made of, if any.
    fn uniform_pieces(&self) -> Option<[(f64, f64, f64); 2]> {
        match *self {
            Segment::Uniform { a, b, w } => Some([(a, b, w), (b, b, 0.0)]),
            Segment::TwoLevel { h, n, w } => {
                let top = Self::two_level_top_mass(h, n);
                Some([
                    (1.0, 1.0 + 1.0 / h, w * (1.0 - top)),
                    (h + 1.0, h + 1.0 + 1.0 / h, w * top),
                ])
            }
            Segment::ExpCapped { .. } => None,
        }
    }

    /// Supports of the smooth pieces, for sweep refinement and quadrature.
    pub fn supports(&self) -> Vec<(f64, f64)> {
        match self.uniform_pieces() {
            Some(pieces) => pieces.iter().filter(|p| p.2 > 0.0).map(|p| (p.0, p.1)).collect(),
            None => vec![(0.0, 1.0)],
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        let w = self.weight();
        if !(w > 0.0 && w <= 1.0 + MASS_TOLERANCE) {
            return bad(format!("segment weight {w} outside (0,1]"));
        }
        match *self {
            Segment::Uniform { a, b, .. } => {
                if !(a.is_finite() && b.is_finite() && a >= 0.0 && a < b) {
                    return bad(format!("uniform segment needs 0 <= a < b, got [{a}, {b}]"));
                }
            }
            Segment::ExpCapped { rate, .. } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return bad(format!("exp_capped rate must be positive, got {rate}"));
                }
            }
            Segment::TwoLevel { h, n, .. } => {
                if !(h.is_finite() && h > 1.0) || n == 0 {
                    return bad(format!("two_level needs H > 1 and n >= 1, got H={h}, n={n}"));
                }
                let top = Self::two_level_top_mass(h, n);
                if top >= 1.0 {
                    return bad(format!("two_level top mass 1/((e-2)nH) = {top} is not below 1"));
                }
            }
        }
        Ok(())
    }

    fn cdf(&self, x: f64) -> f64 {
        match *self {
            Segment::ExpCapped { rate, w } => {
                if x < 0.0 {
                    0.0
                } else if x >= 1.0 {
                    w
                } else {
                    w * (-rate * (1.0 - x)).exp()
                }
            }
            _ => self
                .uniform_pieces()
                .unwrap()
                .iter()
                .map(|&(a, b, wt)| wt * uniform_cdf(a, b, x))
                .sum(),
        }
    }

    fn prob_eq(&self, x: f64) -> f64 {
        match *self {
            Segment::ExpCapped { rate, w } if x == 0.0 => w * (-rate).exp(),
            _ => 0.0,
        }
    }

    fn prob_gt(&self, x: f64) -> f64 {
        self.weight() - self.cdf(x)
    }

    /// `E[X · 1{X > x}]` restricted to this component.
    fn partial_mean_gt(&self, x: f64) -> f64 {
        match *self {
            Segment::ExpCapped { rate, w } => {
                if x >= 1.0 {
                    return 0.0;
                }
                // Mass at zero contributes nothing, so θ < 0 and θ = 0 agree.
                let s = 1.0 - x.max(0.0);
                let z = rate * s;
                w * (-(-z).exp_m1() - one_minus_exp_times_poly(z) / rate)
            }
            _ => self
                .uniform_pieces()
                .unwrap()
                .iter()
                .map(|&(a, b, wt)| wt * uniform_partial_mean_gt(a, b, x))
                .sum(),
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            Segment::ExpCapped { rate, w } => w * (1.0 + (-rate).exp_m1() / rate),
            _ => self
                .uniform_pieces()
                .unwrap()
                .iter()
                .map(|&(a, b, wt)| wt * 0.5 * (a + b))
                .sum(),
        }
    }

    /// Draw from the normalised component.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Segment::Uniform { a, b, .. } => a + (b - a) * rng.gen::<f64>(),
            Segment::ExpCapped { rate, .. } => {
                let y = -(1.0 - rng.gen::<f64>()).ln() / rate;
                1.0 - y.min(1.0)
            }
            Segment::TwoLevel { h, n, .. } => {
                let top = Self::two_level_top_mass(h, n);
                let lo = if rng.gen::<f64>() < top { h + 1.0 } else { 1.0 };
                lo + rng.gen::<f64>() / h
            }
        }
    }
}

fn uniform_cdf(a: f64, b: f64, x: f64) -> f64 {
    if b <= a {
        return if x >= a { 1.0 } else { 0.0 };
    }
    ((x - a) / (b - a)).clamp(0.0, 1.0)
}

/// `∫_{max(x,a)}^{b} t dt / (b − a)`.
fn uniform_partial_mean_gt(a: f64, b: f64, x: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = x.clamp(a, b);
    (b - m) * (b + m) / (2.0 * (b - a))
}

/// `1 − e^{−z}(1 + z)` for `z ≥ 0`, without cancellation near zero.
fn one_minus_exp_times_poly(z: f64) -> f64 {
    if z > 0.5 {
        return 1.0 - (-z).exp() * (1.0 + z);
    }
    // Σ_{k≥2} (−1)^k (k−1) z^k / k!
    let mut term = -z; // (−z)^k / k! at k = 1
    let mut sum = 0.0;
    for k in 2..40 {
        term *= -z / k as f64;
        let add = (k as f64 - 1.0) * term;
        sum += add;
        if add.abs() < 1e-20 * sum.abs() {
            break;
        }
    }
    sum
}

/// A lexicographic threshold `(θ, θ̃) ∈ ℝ × [0,1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugThreshold {
    pub theta: f64,
    pub tie: f64,
}

impl AugThreshold {
    pub fn new(theta: f64, tie: f64) -> Result<Self> {
        if theta.is_nan() {
            return Err(Error::InvalidThreshold("theta is NaN".into()));
        }
        if !(0.0..=1.0).contains(&tie) {
            return Err(Error::InvalidThreshold(format!("tie fraction {tie} outside [0,1]")));
        }
        Ok(AugThreshold { theta, tie })
    }

    /// `(θ, 0)`: accepts every sample `≥ θ`.
    pub fn at(theta: f64) -> Self {
        AugThreshold { theta, tie: 0.0 }
    }

    /// A threshold every nonnegative sample clears.
    pub fn accept_all() -> Self {
        AugThreshold { theta: f64::NEG_INFINITY, tie: 0.0 }
    }

    /// Lexicographic comparison of the sample `(x, x_tie)` against `self`.
    pub fn compare(&self, x: f64, x_tie: f64) -> Ordering {
        x.partial_cmp(&self.theta)
            .unwrap_or(Ordering::Less)
            .then(x_tie.partial_cmp(&self.tie).unwrap_or(Ordering::Less))
    }

    /// Whether the stopping rule stops on `(x, x_tie)`.
    pub fn accepts(&self, x: f64, x_tie: f64) -> bool {
        self.compare(x, x_tie) != Ordering::Less
    }

    pub fn lex_cmp(&self, other: &AugThreshold) -> Ordering {
        self.theta
            .total_cmp(&other.theta)
            .then(self.tie.total_cmp(&other.tie))
    }
}

/// A distribution on `[0, ∞)`: point masses plus smooth segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueDistribution {
    atoms: Vec<Atom>,
    segments: Vec<Segment>,
}

impl ValueDistribution {
    /// Validates and normalises ordering. Mass must sum to one.
    pub fn new(atoms: Vec<Atom>, segments: Vec<Segment>) -> Result<Self> {
        let mut atoms = atoms;
        let mut segments = segments;
        for a in &atoms {
            if !(a.x.is_finite() && a.x >= 0.0) {
                return Err(Error::InvalidDistribution(format!("atom location {} is not a finite nonnegative number", a.x)));
            }
            if !(a.p > 0.0 && a.p <= 1.0 + MASS_TOLERANCE) {
                return Err(Error::InvalidDistribution(format!("atom mass {} outside (0,1]", a.p)));
            }
        }
        for s in &segments {
            s.validate()?;
        }
        let total: f64 = atoms.iter().map(|a| a.p).sum::<f64>() + segments.iter().map(Segment::weight).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("total mass {total} differs from 1")));
        }
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        segments.sort_by(|a, b| a.left().total_cmp(&b.left()));
        Ok(ValueDistribution { atoms, segments })
    }

    pub fn point(x: f64) -> Result<Self> {
        Self::new(vec![Atom { x, p: 1.0 }], vec![])
    }

    /// The identically-zero distribution.
    pub fn zero() -> Self {
        ValueDistribution { atoms: vec![Atom { x: 0.0, p: 1.0 }], segments: vec![] }
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![], vec![Segment::Uniform { a, b, w: 1.0 }])
    }

    pub fn exp_capped(rate: f64) -> Result<Self> {
        Self::new(vec![], vec![Segment::ExpCapped { rate, w: 1.0 }])
    }

    pub fn two_level(h: f64, n: usize) -> Result<Self> {
        Self::new(vec![], vec![Segment::TwoLevel { h, n, w: 1.0 }])
    }

    /// Point masses from `(x, p)` pairs.
    pub fn atoms_from(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(x, p)| Atom { x, p }).collect(), vec![])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// `Pr(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let a: f64 = self.atoms.iter().take_while(|a| a.x <= x).map(|a| a.p).sum();
        let s: f64 = self.segments.iter().map(|s| s.cdf(x)).sum();
        (a + s).min(1.0)
    }

    /// `Pr(X = x)`.
    pub fn prob_eq(&self, x: f64) -> f64 {
        let a: f64 = self.atoms.iter().filter(|a| a.x == x).map(|a| a.p).sum();
        let s: f64 = self.segments.iter().map(|s| s.prob_eq(x)).sum();
        a + s
    }

    /// `Pr(X > x)`.
    pub fn prob_gt(&self, x: f64) -> f64 {
        let a: f64 = self.atoms.iter().filter(|a| a.x > x).map(|a| a.p).sum();
        let s: f64 = self.segments.iter().map(|s| s.prob_gt(x)).sum();
        (a + s).clamp(0.0, 1.0)
    }

    /// `Pr(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        (1.0 - self.prob_gt(x) - self.prob_eq(x)).clamp(0.0, 1.0)
    }

    /// `Pr((X, X̃) ≥ t) = Pr(X > θ) + (1 − θ̃)·Pr(X = θ)`.
    pub fn survival_aug(&self, t: AugThreshold) -> f64 {
        (self.prob_gt(t.theta) + (1.0 - t.tie) * self.prob_eq(t.theta)).clamp(0.0, 1.0)
    }

    /// `Pr((X, X̃) < t)`, the probability the rule passes over this value.
    pub fn below_aug(&self, t: AugThreshold) -> f64 {
        (1.0 - self.survival_aug(t)).clamp(0.0, 1.0)
    }

    /// `E[X · 1{(X, X̃) ≥ t}]`.
    pub fn expected_above(&self, t: AugThreshold) -> f64 {
        let a: f64 = self.atoms.iter().filter(|a| a.x > t.theta).map(|a| a.x * a.p).sum();
        let s: f64 = self.segments.iter().map(|s| s.partial_mean_gt(t.theta)).sum();
        let tie = if t.theta.is_finite() { (1.0 - t.tie) * t.theta * self.prob_eq(t.theta) } else { 0.0 };
        a + s + tie
    }

    /// `E[(X − θ) · 1{(X, X̃) ≥ t}]`.
    pub fn expected_excess(&self, t: AugThreshold) -> f64 {
        if !t.theta.is_finite() {
            return self.mean() - t.theta.max(0.0);
        }
        self.expected_above(t) - t.theta * self.survival_aug(t)
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.x * a.p).sum::<f64>() + self.segments.iter().map(Segment::mean).sum::<f64>()
    }

    /// Largest point of the support.
    pub fn max_support(&self) -> f64 {
        let a = self.atoms.iter().map(|a| a.x).fold(0.0, f64::max);
        self.segments.iter().map(Segment::right).fold(a, f64::max)
    }

    /// Every location where the CDF has a kink or a jump: atoms and segment
    /// endpoints. Unsorted, may repeat.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.atoms.iter().map(|a| a.x).collect();
        for s in &self.segments {
            for (lo, hi) in s.supports() {
                out.push(lo);
                out.push(hi);
            }
        }
        out
    }

    /// Locations carrying positive point mass, including the implicit zero
    /// atom of capped-exponential segments. Sorted, deduplicated.
    pub fn jump_locations(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.atoms.iter().map(|a| a.x).collect();
        if self.segments.iter().any(|s| matches!(s, Segment::ExpCapped { .. })) {
            out.push(0.0);
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u = rng.gen::<f64>();
        for a in &self.atoms {
            if u < a.p {
                return a.x;
            }
            u -= a.p;
        }
        for s in &self.segments {
            if u < s.weight() {
                return s.sample(rng);
            }
            u -= s.weight();
        }
        // Mass rounding: fall back on the last component.
        match self.segments.last() {
            Some(s) => s.sample(rng),
            None => self.atoms.last().map_or(0.0, |a| a.x),
        }
    }
}
