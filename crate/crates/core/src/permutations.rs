//! Permutations of `[n] = {1, …, n}` and the observation-order families built
//! from them.
//!
//! A family member `π` is an observation order: the gambler sees
//! `X_{π(1)}, X_{π(2)}, …`. Its inverse `σ = π⁻¹` gives the time at which
//! each index is observed, and every independence notion below is stated in
//! terms of `σ`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// A bijection on `[n]`, stored 1-indexed: position `k` holds `π(k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    /// Validates a 1-indexed image vector.
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty permutation".into()));
        }
        let mut seen = vec![false; n];
        for &v in &map {
            if v == 0 || v > n || seen[v - 1] {
                return Err(Error::InvalidPermutation(format!("{map:?} is not a bijection on 1..={n}")));
            }
            seen[v - 1] = true;
        }
        Ok(Permutation { map })
    }

    /// `ι(k) = k`.
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPermutation("n must be at least 1".into()));
        }
        Ok(Permutation { map: (1..=n).collect() })
    }

    /// `ρ(k) = n + 1 − k`.
    pub fn reverse(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPermutation("n must be at least 1".into()));
        }
        Ok(Permutation { map: (1..=n).rev().collect() })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `π(k)` for 1-indexed `k`.
    pub fn apply(&self, k: usize) -> usize {
        self.map[k - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.map
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.map.len()];
        for (k, &v) in self.map.iter().enumerate() {
            inv[v - 1] = k + 1;
        }
        Permutation { map: inv }
    }

    /// `(self ∘ other)(k) = self(other(k))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch { expected: self.len(), found: other.len() });
        }
        Ok(Permutation { map: other.map.iter().map(|&k| self.map[k - 1]).collect() })
    }

    /// The order on `[n]` obtained by dropping every value above `n`, keeping
    /// the survivors in the order `self` visits them.
    pub fn restrict(&self, n: usize) -> Result<Permutation> {
        if n == 0 || n > self.len() {
            return Err(Error::OutOfRange { name: "n", value: n as f64, range: "1..=N" });
        }
        Ok(Permutation { map: self.map.iter().copied().filter(|&v| v <= n).collect() })
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(k, &v)| v == k + 1)
    }

    pub fn is_reverse(&self) -> bool {
        let n = self.map.len();
        self.map.iter().enumerate().all(|(k, &v)| v == n - k)
    }
}

/// How a family was produced. Serialised into family files.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Explicit,
    ForwardReverse,
    Affine,
    Sampled { seed: u64, epsilon: f64, delta: f64, m: usize, attempts: u32 },
    Padded { parent_n: usize, parent: Box<Provenance> },
}

/// A nonempty multiset of permutations of a common `[n]`. Uniform choice
/// over the members (with multiplicity) is the intended distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationFamily {
    n: usize,
    perms: Vec<Permutation>,
    provenance: Provenance,
}

impl PermutationFamily {
    pub fn new(perms: Vec<Permutation>, provenance: Provenance) -> Result<Self> {
        let n = perms.first().ok_or(Error::EmptyFamily)?.len();
        if let Some(p) = perms.iter().find(|p| p.len() != n) {
            return Err(Error::SizeMismatch { expected: n, found: p.len() });
        }
        Ok(PermutationFamily { n, perms, provenance })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `{ι}`.
    pub fn singleton(pi: Permutation) -> Self {
        PermutationFamily { n: pi.len(), perms: vec![pi], provenance: Provenance::Explicit }
    }

    /// `{ι, ρ}`.
    pub fn forward_reverse(n: usize) -> Result<Self> {
        Ok(PermutationFamily {
            n,
            perms: vec![Permutation::identity(n)?, Permutation::reverse(n)?],
            provenance: Provenance::ForwardReverse,
        })
    }

    /// Whether the members are exactly `ι` and `ρ`, one each.
    pub fn is_forward_reverse(&self) -> bool {
        if self.perms.len() != 2 {
            return false;
        }
        let (a, b) = (&self.perms[0], &self.perms[1]);
        (a.is_identity() && b.is_reverse()) || (a.is_reverse() && b.is_identity())
    }

    /// The inverses `σ = π⁻¹` of all members, in member order.
    pub fn positions(&self) -> Vec<Permutation> {
        self.perms.iter().map(Permutation::inverse).collect()
    }

    /// Memberwise restriction to `[n]`, multiplicities kept.
    pub fn restrict(&self, n: usize) -> Result<Self> {
        let perms = self.perms.iter().map(|p| p.restrict(n)).collect::<Result<Vec<_>>>()?;
        Ok(PermutationFamily {
            n,
            perms,
            provenance: Provenance::Padded { parent_n: self.n, parent: Box::new(self.provenance.clone()) },
        })
    }

    /// Collapse repeated members. Changes the uniform distribution, so only
    /// appropriate when the family is used as a set of allowed orders.
    pub fn dedup(&self) -> Self {
        let mut perms = self.perms.clone();
        perms.sort();
        perms.dedup();
        PermutationFamily { n: self.n, perms, provenance: self.provenance.clone() }
    }
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// `k ↦ a·k + b mod n`, with residue 0 written as `n`.
pub fn affine_map(n: usize, a: usize, b: usize) -> Permutation {
    let map = (1..=n)
        .map(|k| match (a * k + b) % n {
            0 => n,
            r => r,
        })
        .collect();
    Permutation { map }
}

/// All `n(n−1)` affine maps `k ↦ a·k + b mod n`, `a ∈ [n−1]`, `b ∈ [n]`, for
/// prime `n`. The set is closed under inversion, so it is pairwise
/// independent whether read as orders or as positions.
pub fn affine_family(n: usize) -> Result<PermutationFamily> {
    if !is_prime(n) {
        return Err(Error::NotPrime(n));
    }
    let perms = (1..n).flat_map(|a| (1..=n).map(move |b| affine_map(n, a, b))).collect();
    Ok(PermutationFamily { n, perms, provenance: Provenance::Affine })
}

/// Bucket geometry shared by sampling and almost-independence checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Buckets {
    /// `1/ε`.
    pub count: usize,
    /// `εn`, positions per bucket.
    pub width: usize,
}

impl Buckets {
    /// Requires `1/ε` integral and `n` a multiple of it.
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::OutOfRange { name: "epsilon", value: epsilon, range: "(0, 1]" });
        }
        let inv = 1.0 / epsilon;
        let count = inv.round();
        if (inv - count).abs() > 1e-9 * inv {
            return Err(Error::EpsilonNotReciprocalInteger(inv));
        }
        let count = count as usize;
        if !n.is_multiple_of(count) {
            return Err(Error::NotBucketMultiple { n, buckets: count });
        }
        Ok(Buckets { count, width: n / count })
    }

    /// `⌈k/(εn)⌉` as a 0-based bucket index.
    pub fn of(&self, position: usize) -> usize {
        (position - 1) / self.width
    }
}

/// `m = ⌈36 (εδ)^{−2} ln n⌉`.
pub fn sample_size(n: usize, epsilon: f64, delta: f64) -> usize {
    (36.0 / (epsilon * delta).powi(2) * (n as f64).ln()).ceil() as usize
}

/// Checks the hypotheses of the sampled construction.
pub fn check_sampling_hypotheses(n: usize, epsilon: f64, delta: f64) -> Result<Buckets> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange { name: "delta", value: delta, range: "(0, 1)" });
    }
    let buckets = Buckets::new(n, epsilon)?;
    let eps_n = buckets.width as f64;
    let bound = 2.0 / delta;
    if eps_n < bound * (1.0 - 1e-12) {
        return Err(Error::BucketTooSmall { eps_n, bound });
    }
    Ok(buckets)
}

/// `m` uniform permutations drawn with replacement from a ChaCha stream
/// seeded by `seed`. Does not verify the result; see [`verify_almost_pi`].
pub fn sample_family(n: usize, epsilon: f64, delta: f64, seed: u64) -> Result<PermutationFamily> {
    check_sampling_hypotheses(n, epsilon, delta)?;
    let m = sample_size(n, epsilon, delta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut base: Vec<usize> = (1..=n).collect();
    let perms = (0..m)
        .map(|_| {
            base.shuffle(&mut rng);
            Permutation { map: base.clone() }
        })
        .collect();
    Ok(PermutationFamily {
        n,
        perms,
        provenance: Provenance::Sampled { seed, epsilon, delta, m, attempts: 1 },
    })
}

/// Outcome of the exact pairwise-independence count.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseReport {
    pub independent: bool,
    /// Ordered index pair `(i, j)` with the most uneven histogram.
    pub worst_pair: Option<(usize, usize)>,
    /// Smallest and largest cell count for that pair.
    pub worst_min: usize,
    pub worst_max: usize,
}

/// For every ordered `i ≠ j`, counts `(σ(i), σ(j))` over the family and
/// requires all `n(n−1)` cells to be hit equally often.
pub fn verify_pairwise_independent(family: &PermutationFamily) -> PairwiseReport {
    let n = family.n();
    let m = family.len();
    if n < 2 {
        return PairwiseReport { independent: true, worst_pair: None, worst_min: m, worst_max: m };
    }
    let sigmas = family.positions();
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|i| (1..=n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let per_pair: Vec<(usize, usize, (usize, usize))> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut counts = vec![0usize; n * n];
            for s in &sigmas {
                counts[(s.apply(i) - 1) * n + (s.apply(j) - 1)] += 1;
            }
            let off_diag = (0..n * n).filter(|c| c / n != c % n).map(|c| counts[c]);
            let (lo, hi) = off_diag.fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c), hi.max(c)));
            (lo, hi, (i, j))
        })
        .collect();
    // Sequential reduction keeps the reported pair independent of scheduling.
    let worst = per_pair.iter().max_by_key(|(lo, hi, _)| hi - lo).copied().unwrap();
    let independent = per_pair.iter().all(|(lo, hi, _)| lo == hi);
    PairwiseReport { independent, worst_pair: Some(worst.2), worst_min: worst.0, worst_max: worst.1 }
}

/// Outcome of the bucketed total-variation check.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostPiReport {
    pub passed: bool,
    pub max_tv: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// Smallest empirical cell mass over all pairs and bucket cells.
    pub min_cell_mass: f64,
}

/// Total variation between each pair's bucket histogram
/// `(⌈σ(i)/εn⌉, ⌈σ(j)/εn⌉)` and the uniform law on `[1/ε]²`; passes when
/// the maximum over ordered pairs is at most `δ`.
///
/// Only the bucket geometry is required here (`1/ε` integral, `1/ε | n`);
/// `εn ≥ 2/δ` is a hypothesis of the construction, not of the check.
pub fn verify_almost_pi(family: &PermutationFamily, epsilon: f64, delta: f64) -> Result<AlmostPiReport> {
    let n = family.n();
    let buckets = Buckets::new(n, epsilon)?;
    if n < 2 {
        return Ok(AlmostPiReport { passed: true, max_tv: 0.0, worst_pair: None, min_cell_mass: 1.0 });
    }
    let k = buckets.count;
    let m = family.len() as f64;
    let target = 1.0 / (k * k) as f64;
    let bucket_rows: Vec<Vec<usize>> =
        family.positions().iter().map(|s| s.as_slice().iter().map(|&pos| buckets.of(pos)).collect()).collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let per_pair: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut counts = vec![0usize; k * k];
            for row in &bucket_rows {
                counts[row[i] * k + row[j]] += 1;
            }
            let tv: f64 = counts.iter().map(|&c| (target - c as f64 / m).max(0.0)).sum();
            let min_cell = counts.iter().copied().min().unwrap_or(0) as f64 / m;
            (tv, min_cell)
        })
        .collect();
    let mut max_tv = 0.0;
    let mut worst_pair = None;
    let mut min_cell_mass = f64::INFINITY;
    for (&(i, j), &(tv, cell)) in pairs.iter().zip(&per_pair) {
        if worst_pair.is_none() || tv > max_tv {
            max_tv = tv;
            worst_pair = Some((i + 1, j + 1));
        }
        min_cell_mass = min_cell_mass.min(cell);
    }
    Ok(AlmostPiReport { passed: max_tv <= delta, max_tv, worst_pair, min_cell_mass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    fn all_perms(n: usize) -> Vec<Permutation> {
        fn rec(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Permutation>) {
            if rest.is_empty() {
                out.push(Permutation { map: prefix.clone() });
                return;
            }
            for idx in 0..rest.len() {
                let v = rest.remove(idx);
                prefix.push(v);
                rec(prefix, rest, out);
                prefix.pop();
                rest.insert(idx, v);
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut (1..=n).collect(), &mut out);
        out
    }

    #[test]
    fn identity_and_reverse() {
        assert_eq!(Permutation::identity(3).unwrap().as_slice(), &[1, 2, 3]);
        assert_eq!(Permutation::reverse(3).unwrap().as_slice(), &[3, 2, 1]);
        assert_eq!(Permutation::reverse(1).unwrap().as_slice(), &[1]);
        assert!(Permutation::identity(0).is_err());
        assert!(Permutation::reverse(0).is_err());
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![1, 1, 2]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![1, 3]).is_err());
    }

    #[test]
    fn inverse_and_compose() {
        assert_eq!(perm(&[3, 1, 2]).inverse(), perm(&[2, 3, 1]));
        let rho = Permutation::reverse(4).unwrap();
        assert_eq!(Permutation::identity(4).unwrap().compose(&rho).unwrap(), rho);
        assert_eq!(perm(&[2, 1, 3]).compose(&perm(&[2, 1, 3])).unwrap(), perm(&[1, 2, 3]));
        assert!(perm(&[1, 2]).compose(&perm(&[1, 2, 3])).is_err());
    }

    #[test]
    fn affine_map_example() {
        assert_eq!(affine_map(5, 2, 3), perm(&[5, 2, 4, 1, 3]));
    }

    #[test]
    fn affine_family_sizes() {
        let f3 = affine_family(3).unwrap();
        assert_eq!(f3.len(), 6);
        let mut distinct = f3.perms().to_vec();
        distinct.sort();
        let mut s3 = all_perms(3);
        s3.sort();
        assert_eq!(distinct, s3);
        assert_eq!(affine_family(13).unwrap().len(), 156);
        assert_eq!(affine_family(4), Err(Error::NotPrime(4)));
    }

    #[test]
    fn affine_family_closed_under_inverse() {
        let f = affine_family(7).unwrap();
        let mut a = f.perms().to_vec();
        let mut b = f.positions();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn pairwise_independence_examples() {
        assert!(verify_pairwise_independent(&affine_family(5).unwrap()).independent);
        let single = PermutationFamily::singleton(Permutation::identity(3).unwrap());
        assert!(!verify_pairwise_independent(&single).independent);
        let fr = PermutationFamily::forward_reverse(3).unwrap();
        let rep = verify_pairwise_independent(&fr);
        assert!(!rep.independent);
        assert_eq!(rep.worst_min, 0);
    }

    #[test]
    fn affine_families_are_pairwise_independent_up_to_31() {
        for n in (2..=31).filter(|&n| is_prime(n)) {
            assert!(verify_pairwise_independent(&affine_family(n).unwrap()).independent, "n = {n}");
        }
    }

    #[test]
    fn sample_size_formula() {
        assert_eq!(sample_size(20, 0.25, 0.4), 10785);
    }

    #[test]
    fn sampling_hypotheses() {
        assert!(matches!(sample_family(20, 0.3, 0.4, 1), Err(Error::EpsilonNotReciprocalInteger(_))));
        assert!(matches!(sample_family(20, 0.25, 0.1, 1), Err(Error::BucketTooSmall { .. })));
        assert!(matches!(sample_family(18, 0.25, 0.4, 1), Err(Error::NotBucketMultiple { .. })));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let a = sample_family(20, 0.25, 0.8, 5).unwrap();
        let b = sample_family(20, 0.25, 0.8, 5).unwrap();
        let c = sample_family(20, 0.25, 0.8, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.perms(), c.perms());
    }

    #[test]
    fn almost_pi_full_symmetric_group() {
        let fam = PermutationFamily::new(all_perms(3), Provenance::Explicit).unwrap();
        let rep = verify_almost_pi(&fam, 1.0 / 3.0, 0.5).unwrap();
        assert!((rep.max_tv - 1.0 / 3.0).abs() < 1e-15);
        assert!(rep.passed);
        assert!(!verify_almost_pi(&fam, 1.0 / 3.0, 0.3).unwrap().passed);
    }

    #[test]
    fn almost_pi_affine_misses_diagonal() {
        let rep = verify_almost_pi(&affine_family(5).unwrap(), 0.2, 0.5).unwrap();
        assert!((rep.max_tv - 0.2).abs() < 1e-15);
    }

    #[test]
    fn almost_pi_singleton() {
        let fam = PermutationFamily::singleton(Permutation::identity(2).unwrap());
        let rep = verify_almost_pi(&fam, 0.5, 0.9).unwrap();
        assert!((rep.max_tv - 0.75).abs() < 1e-15);
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(perm(&[3, 5, 1, 4, 2]).restrict(3).unwrap(), perm(&[3, 1, 2]));
        assert_eq!(Permutation::identity(6).unwrap().restrict(4).unwrap(), Permutation::identity(4).unwrap());
        assert_eq!(Permutation::reverse(5).unwrap().restrict(3).unwrap(), perm(&[3, 2, 1]));
        assert!(perm(&[1, 2]).restrict(3).is_err());
        assert!(perm(&[1, 2]).restrict(0).is_err());
    }

    #[test]
    fn padded_family_keeps_size_and_dedup_shrinks() {
        let fam = affine_family(7).unwrap().restrict(3).unwrap();
        assert_eq!(fam.len(), 42);
        assert_eq!(fam.n(), 3);
        assert!(fam.dedup().len() <= 6);
        assert!(matches!(fam.provenance(), Provenance::Padded { parent_n: 7, .. }));
    }

    #[test]
    fn empty_family_rejected() {
        assert_eq!(PermutationFamily::new(vec![], Provenance::Explicit), Err(Error::EmptyFamily));
        assert!(PermutationFamily::new(vec![perm(&[1, 2]), perm(&[1])], Provenance::Explicit).is_err());
    }
}
