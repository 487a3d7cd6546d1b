//! Gambler and prophet expected values.
//!
//! For a fixed augmented threshold `t` every coordinate reduces to two
//! numbers: the probability `q_i` that the rule passes over it and the
//! payoff `E[X_i·1{(X_i, X̃_i) ≥ t}]` collected when it stops there. The
//! gambler's value along an order `π` is then
//! `Σ_k (Π_{ℓ<k} q_{π(ℓ)}) · E[X_{π(k)}·1{≥t}]`, and an empty stop pays 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{AugThreshold, ValueDistribution};
use crate::error::{Error, Result};
use crate::permutations::{Permutation, PermutationFamily};
use crate::quadrature;

/// Absolute tolerance of the prophet integral.
pub const PROPHET_TOLERANCE: f64 = 1e-10;

/// Samples per Monte Carlo reduction chunk.
const MC_CHUNK: u64 = 4096;

/// An ordered list of independent value distributions `X_1, …, X_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    dists: Vec<ValueDistribution>,
    /// Representative index per class of identical distributions.
    class_rep: Vec<usize>,
    class_size: Vec<usize>,
    class_of: Vec<usize>,
}

impl Instance {
    pub fn new(dists: Vec<ValueDistribution>) -> Result<Self> {
        if dists.is_empty() {
            return Err(Error::InvalidDistribution("instance needs at least one coordinate".into()));
        }
        let mut class_rep: Vec<usize> = Vec::new();
        let mut class_size = Vec::new();
        let mut class_of = Vec::with_capacity(dists.len());
        for (i, d) in dists.iter().enumerate() {
            match class_rep.iter().position(|&r| dists[r] == *d) {
                Some(c) => {
                    class_size[c] += 1;
                    class_of.push(c);
                }
                None => {
                    class_of.push(class_rep.len());
                    class_rep.push(i);
                    class_size.push(1);
                }
            }
        }
        Ok(Instance { dists, class_rep, class_size, class_of })
    }

    /// `n` copies of one distribution.
    pub fn iid(dist: ValueDistribution, n: usize) -> Result<Self> {
        Self::new(vec![dist; n])
    }

    pub fn n(&self) -> usize {
        self.dists.len()
    }

    pub fn dists(&self) -> &[ValueDistribution] {
        &self.dists
    }

    pub fn dist(&self, i: usize) -> &ValueDistribution {
        &self.dists[i - 1]
    }

    pub fn max_support(&self) -> f64 {
        self.class_rep.iter().map(|&r| self.dists[r].max_support()).fold(0.0, f64::max)
    }

    /// Appends identically-zero coordinates up to `total` entries.
    pub fn pad_with_zeros(&self, total: usize) -> Result<Instance> {
        if total < self.n() {
            return Err(Error::SizeMismatch { expected: self.n(), found: total });
        }
        let mut dists = self.dists.clone();
        dists.resize(total, ValueDistribution::zero());
        Instance::new(dists)
    }

    /// Distinct distributions with their multiplicities.
    pub fn classes(&self) -> impl Iterator<Item = (&ValueDistribution, usize)> + '_ {
        self.class_rep.iter().zip(&self.class_size).map(|(&r, &c)| (&self.dists[r], c))
    }

    /// `∏_i f(X_i)` evaluated once per class.
    pub fn product_over<F: Fn(&ValueDistribution) -> f64>(&self, f: F) -> f64 {
        self.classes().map(|(d, c)| f(d).powi(c as i32)).product()
    }

    fn check_order(&self, pi: &Permutation) -> Result<()> {
        if pi.len() != self.n() {
            return Err(Error::SizeMismatch { expected: self.n(), found: pi.len() });
        }
        Ok(())
    }
}

/// Per-coordinate quantities at one threshold.
#[derive(Debug, Clone)]
struct ThresholdStats {
    /// `Pr((X_i, X̃_i) < t)`.
    below: Vec<f64>,
    /// `E[X_i · 1{(X_i, X̃_i) ≥ t}]`.
    payoff: Vec<f64>,
}

impl ThresholdStats {
    fn new(inst: &Instance, t: AugThreshold) -> Self {
        let per_class: Vec<(f64, f64)> =
            inst.class_rep.iter().map(|&r| (inst.dists[r].below_aug(t), inst.dists[r].expected_above(t))).collect();
        let below = inst.class_of.iter().map(|&c| per_class[c].0).collect();
        let payoff = inst.class_of.iter().map(|&c| per_class[c].1).collect();
        ThresholdStats { below, payoff }
    }

    fn along(&self, pi: &Permutation) -> f64 {
        let mut alive = 1.0;
        let mut value = 0.0;
        for &i in pi.as_slice() {
            value += alive * self.payoff[i - 1];
            alive *= self.below[i - 1];
        }
        value
    }
}

/// Exact `E X_{π,θ}`.
pub fn eval_threshold(inst: &Instance, pi: &Permutation, t: AugThreshold) -> Result<f64> {
    inst.check_order(pi)?;
    Ok(ThresholdStats::new(inst, t).along(pi))
}

/// Per-coordinate diagnostics of an [`EvaluationReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexDiagnostics {
    /// `Pr((X_i, X̃_i) < t)`.
    pub q: f64,
    /// Probability the rule is still running when `X_i` is observed,
    /// averaged over the family.
    pub c: f64,
    /// `∏_{j<i} q_j`.
    pub a: f64,
    /// `∏_{j>i} q_j`.
    pub b: f64,
    /// `E[(X_i − θ)·1{(X_i, X̃_i) ≥ t}]`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub theta: f64,
    pub tie: f64,
    /// Family average of `E X_{π,θ}`.
    pub gambler: f64,
    /// `E max_i X_i`.
    pub prophet: f64,
    /// `gambler / prophet`, absent when the prophet's value is zero.
    pub ratio: Option<f64>,
    /// `Pr((X_*, X̃_*) ≥ t)`.
    pub p: f64,
    /// `∏_j q_j = 1 − p`.
    pub q: f64,
    pub per_index: Vec<IndexDiagnostics>,
}

impl EvaluationReport {
    /// `p·θ + Σ_i c_i·E[(X_i − θ)·1{≥t}]`, which must equal `gambler`.
    pub fn decomposed_gambler(&self) -> f64 {
        let theta_term = if self.theta.is_finite() { self.p * self.theta } else { 0.0 };
        theta_term + self.per_index.iter().map(|d| d.c * d.excess).sum::<f64>()
    }
}

/// Evaluates one instance against one family, reusing the prophet value
/// across thresholds.
#[derive(Debug, Clone)]
pub struct FamilyEvaluator<'a> {
    inst: &'a Instance,
    family: &'a PermutationFamily,
    prophet: f64,
}

impl<'a> FamilyEvaluator<'a> {
    pub fn new(inst: &'a Instance, family: &'a PermutationFamily) -> Result<Self> {
        Self::with_prophet(inst, family, prophet_value(inst))
    }

    pub fn with_prophet(inst: &'a Instance, family: &'a PermutationFamily, prophet: f64) -> Result<Self> {
        if family.is_empty() {
            return Err(Error::EmptyFamily);
        }
        if family.n() != inst.n() {
            return Err(Error::SizeMismatch { expected: inst.n(), found: family.n() });
        }
        Ok(FamilyEvaluator { inst, family, prophet })
    }

    pub fn prophet(&self) -> f64 {
        self.prophet
    }

    pub fn instance(&self) -> &Instance {
        self.inst
    }

    pub fn family(&self) -> &PermutationFamily {
        self.family
    }

    /// Family-average gambler value only.
    pub fn gambler(&self, t: AugThreshold) -> f64 {
        let stats = ThresholdStats::new(self.inst, t);
        let total: f64 = self.family.perms().iter().map(|pi| stats.along(pi)).sum();
        total / self.family.len() as f64
    }

    pub fn report(&self, t: AugThreshold) -> EvaluationReport {
        let n = self.inst.n();
        let stats = ThresholdStats::new(self.inst, t);
        let mut c = vec![0.0; n];
        let mut total = 0.0;
        for pi in self.family.perms() {
            let mut alive = 1.0;
            for &i in pi.as_slice() {
                c[i - 1] += alive;
                total += alive * stats.payoff[i - 1];
                alive *= stats.below[i - 1];
            }
        }
        let m = self.family.len() as f64;
        let gambler = total / m;

        let mut prefix = vec![1.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] * stats.below[i];
        }
        let mut suffix = vec![1.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] * stats.below[i];
        }
        let q = prefix[n];
        let per_index = (0..n)
            .map(|i| {
                let excess = if t.theta.is_finite() {
                    stats.payoff[i] - t.theta * (1.0 - stats.below[i])
                } else {
                    stats.payoff[i]
                };
                IndexDiagnostics { q: stats.below[i], c: c[i] / m, a: prefix[i], b: suffix[i + 1], excess }
            })
            .collect();
        EvaluationReport {
            theta: t.theta,
            tie: t.tie,
            gambler,
            prophet: self.prophet,
            ratio: (self.prophet > 0.0).then(|| gambler / self.prophet),
            p: 1.0 - q,
            q,
            per_index,
        }
    }
}

/// Uniform average over the family of `E X_{π,θ}`, with diagnostics.
pub fn eval_family(inst: &Instance, family: &PermutationFamily, t: AugThreshold) -> Result<EvaluationReport> {
    Ok(FamilyEvaluator::new(inst, family)?.report(t))
}

/// `E max_i X_i = ∫_0^∞ (1 − ∏_i F_i(x)) dx`, split at every breakpoint of
/// every coordinate so each piece is smooth.
pub fn prophet_value(inst: &Instance) -> f64 {
    let mut cuts: Vec<f64> = inst.classes().flat_map(|(d, _)| d.breakpoints()).filter(|&x| x >= 0.0).collect();
    cuts.push(0.0);
    cuts.push(inst.max_support());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let integrand = |x: f64| 1.0 - inst.product_over(|d| d.cdf(x));
    cuts.windows(2).map(|w| quadrature::integrate(integrand, w[0], w[1], PROPHET_TOLERANCE * 0.01)).sum()
}

/// Unrestricted optimal stopping along `π`: `V_{n+1} = 0`,
/// `V_k = E max(X_{π(k)}, V_{k+1})`.
pub fn optimal_stopping_value(inst: &Instance, pi: &Permutation) -> Result<f64> {
    inst.check_order(pi)?;
    let mut v = 0.0;
    for &i in pi.as_slice().iter().rev() {
        let d = inst.dist(i);
        let strict = AugThreshold { theta: v, tie: 1.0 };
        v = d.expected_above(strict) + v * d.below_aug(strict);
    }
    Ok(v)
}

/// One joint draw of `(X_i, X̃_i)` for every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub values: Vec<f64>,
    pub ties: Vec<f64>,
}

impl Outcome {
    pub fn draw<R: Rng + ?Sized>(inst: &Instance, rng: &mut R) -> Self {
        let n = inst.n();
        let mut values = Vec::with_capacity(n);
        let mut ties = Vec::with_capacity(n);
        for d in inst.dists() {
            values.push(d.sample(rng));
            ties.push(rng.gen::<f64>());
        }
        Outcome { values, ties }
    }

    /// Realised `X_{π,θ}`: the first value along `π` clearing `t`, else 0.
    pub fn stopped_value(&self, pi: &Permutation, t: AugThreshold) -> f64 {
        pi.as_slice()
            .iter()
            .map(|&i| (self.values[i - 1], self.ties[i - 1]))
            .find(|&(x, u)| t.accepts(x, u))
            .map_or(0.0, |(x, _)| x)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Generator for sample `index` of stream `seed`. Each sample owns its own
/// ChaCha stream, so results do not depend on how samples are scheduled.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub samples: u64,
    pub gambler: f64,
    pub gambler_se: f64,
    pub prophet: f64,
    pub prophet_se: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    gambler: f64,
    gambler_sq: f64,
    prophet: f64,
    prophet_sq: f64,
}

/// Monte Carlo estimate of the family-average gambler value and the
/// prophet value. Each sample draws a member uniformly, then every
/// coordinate. Chunk sums are reduced in chunk order, so the result is
/// bit-identical for any thread count.
pub fn monte_carlo_eval(
    inst: &Instance,
    family: &PermutationFamily,
    t: AugThreshold,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::OutOfRange { name: "samples", value: 0.0, range: ">= 1" });
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if family.n() != inst.n() {
        return Err(Error::SizeMismatch { expected: inst.n(), found: family.n() });
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for s in c * MC_CHUNK..((c + 1) * MC_CHUNK).min(samples) {
                let mut rng = sample_rng(seed, s);
                let member = &family.perms()[rng.gen_range(0..family.len())];
                let outcome = Outcome::draw(inst, &mut rng);
                let g = outcome.stopped_value(member, t);
                let p = outcome.max();
                m.gambler += g;
                m.gambler_sq += g * g;
                m.prophet += p;
                m.prophet_sq += p * p;
            }
            m
        })
        .collect();
    let total = partial.iter().fold(Moments::default(), |a, b| Moments {
        gambler: a.gambler + b.gambler,
        gambler_sq: a.gambler_sq + b.gambler_sq,
        prophet: a.prophet + b.prophet,
        prophet_sq: a.prophet_sq + b.prophet_sq,
    });
    let n = samples as f64;
    let se = |sum: f64, sq: f64| {
        if samples < 2 {
            return 0.0;
        }
        let mean = sum / n;
        ((sq / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt()
    };
    Ok(MonteCarloEstimate {
        samples,
        gambler: total.gambler / n,
        gambler_se: se(total.gambler, total.gambler_sq),
        prophet: total.prophet / n,
        prophet_se: se(total.prophet, total.prophet_sq),
    })
}

/// Result of the coupled padding comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddingReport {
    pub samples: u64,
    /// Samples where the restricted order collected strictly less.
    pub violations: u64,
    /// Samples where the two realised values differ at all.
    pub differing: u64,
}

/// Pads `inst` with zero coordinates up to `order.len()`, then compares the
/// realised value along `order` on the padded instance with the realised
/// value along `order↓n` on `inst`, both computed from the same draw.
pub fn padding_coupled(
    inst: &Instance,
    order: &Permutation,
    t: AugThreshold,
    samples: u64,
    seed: u64,
) -> Result<PaddingReport> {
    let padded = inst.pad_with_zeros(order.len())?;
    let restricted = order.restrict(inst.n())?;
    let n = inst.n();
    let (violations, differing) = (0..samples)
        .into_par_iter()
        .map(|s| {
            let outcome = Outcome::draw(&padded, &mut sample_rng(seed, s));
            let big = outcome.stopped_value(order, t);
            let small_outcome = Outcome { values: outcome.values[..n].to_vec(), ties: outcome.ties[..n].to_vec() };
            let small = small_outcome.stopped_value(&restricted, t);
            ((small < big) as u64, (small != big) as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(PaddingReport { samples, violations, differing })
}
