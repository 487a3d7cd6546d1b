//! Shared generators and brute-force oracles for integration tests.
#![allow(dead_code)]

use cop_core::{Atom, AugThreshold, Instance, Permutation, Segment, ValueDistribution};
use rand::seq::SliceRandom;
use rand::Rng;

/// Splits unit mass into `k` positive parts, the last absorbing rounding.
fn split_mass<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let head: f64 = w[..k - 1].iter().sum();
    w[k - 1] = 1.0 - head;
    w
}

/// Up to three atoms and up to two uniform segments, at least one piece.
pub fn random_mixed<R: Rng>(rng: &mut R) -> ValueDistribution {
    loop {
        let atoms = rng.gen_range(0..=3);
        let segs = rng.gen_range(0..=2);
        if atoms + segs == 0 {
            continue;
        }
        let w = split_mass(rng, atoms + segs);
        let a = (0..atoms).map(|k| Atom { x: rng.gen_range(0.0..10.0), p: w[k] }).collect();
        let s = (0..segs)
            .map(|k| {
                let lo = rng.gen_range(0.0..5.0);
                Segment::Uniform { a: lo, b: lo + rng.gen_range(0.01..5.0), w: w[atoms + k] }
            })
            .collect();
        if let Ok(d) = ValueDistribution::new(a, s) {
            return d;
        }
    }
}

pub fn random_mixed_instance<R: Rng>(rng: &mut R, n: usize) -> Instance {
    Instance::new((0..n).map(|_| random_mixed(rng)).collect()).unwrap()
}

/// Atoms on a coarse grid so that coordinates share locations.
pub fn random_atomic<R: Rng>(rng: &mut R, max_atoms: usize) -> ValueDistribution {
    let k = rng.gen_range(1..=max_atoms);
    let w = split_mass(rng, k);
    let pts: Vec<(f64, f64)> = w.iter().map(|&p| (rng.gen_range(0..8) as f64 * 0.5, p)).collect();
    // Merge coinciding locations.
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (x, p) in pts {
        match merged.iter_mut().find(|(y, _)| *y == x) {
            Some(e) => e.1 += p,
            None => merged.push((x, p)),
        }
    }
    ValueDistribution::atoms_from(&merged).unwrap()
}

pub fn random_atomic_instance<R: Rng>(rng: &mut R, n: usize, max_atoms: usize) -> Instance {
    Instance::new((0..n).map(|_| random_atomic(rng, max_atoms)).collect()).unwrap()
}

pub fn random_perm<R: Rng>(rng: &mut R, n: usize) -> Permutation {
    let mut v: Vec<usize> = (1..=n).collect();
    v.shuffle(rng);
    Permutation::new(v).unwrap()
}

/// Exact `(E X_{π,t}, E max)` for a purely atomic instance by walking every
/// joint outcome. An atom sitting exactly at `θ` is accepted with
/// probability `1 − tie`.
pub fn enumerate_atomic(inst: &Instance, order: &[usize], t: AugThreshold) -> (f64, f64) {
    // Per coordinate: (value, accepted, probability).
    let branches: Vec<Vec<(f64, bool, f64)>> = inst
        .dists()
        .iter()
        .map(|d| {
            assert!(d.segments().is_empty(), "oracle needs atoms only");
            let mut out = Vec::new();
            for a in d.atoms() {
                if a.x > t.theta {
                    out.push((a.x, true, a.p));
                } else if a.x < t.theta {
                    out.push((a.x, false, a.p));
                } else {
                    out.push((a.x, true, a.p * (1.0 - t.tie)));
                    out.push((a.x, false, a.p * t.tie));
                }
            }
            out
        })
        .collect();
    let n = branches.len();
    let mut idx = vec![0usize; n];
    let (mut gambler, mut prophet) = (0.0, 0.0);
    loop {
        let mut prob = 1.0;
        for (i, b) in branches.iter().enumerate() {
            prob *= b[idx[i]].2;
        }
        let stopped = order
            .iter()
            .map(|&i| branches[i - 1][idx[i - 1]])
            .find(|b| b.1)
            .map_or(0.0, |b| b.0);
        let best = (0..n).map(|i| branches[i][idx[i]].0).fold(0.0, f64::max);
        gambler += prob * stopped;
        prophet += prob * best;
        // Odometer increment.
        let mut k = 0;
        loop {
            if k == n {
                return (gambler, prophet);
            }
            idx[k] += 1;
            if idx[k] < branches[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// `max_k |Σ_{i≠j} p_i v_ijk|` with sign vectors built from scratch.
pub fn imbalance(orders: &[Vec<usize>], j: usize, p: &[f64]) -> f64 {
    orders
        .iter()
        .map(|order| {
            let pos = |x: usize| order.iter().position(|&y| y == x).unwrap();
            let pj = pos(j);
            (1..=order.len())
                .filter(|&i| i != j)
                .map(|i| if pos(i) > pj { p[i - 1] } else { -p[i - 1] })
                .sum::<f64>()
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Smallest imbalance over witness distributions on the grid of step
/// `1/steps`, halved to an epsilon.
pub fn grid_epsilon(orders: &[Vec<usize>], j: usize, steps: usize) -> f64 {
    let n = orders[0].len();
    let others: Vec<usize> = (1..=n).filter(|&i| i != j).collect();
    let mut best = f64::INFINITY;
    let mut counts = vec![0usize; others.len()];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        k: usize,
        left: usize,
        counts: &mut Vec<usize>,
        others: &[usize],
        orders: &[Vec<usize>],
        j: usize,
        steps: usize,
        best: &mut f64,
    ) {
        if k + 1 == counts.len() {
            counts[k] = left;
            let mut p = vec![0.0; orders[0].len()];
            for (c, &i) in counts.iter().zip(others) {
                p[i - 1] = *c as f64 / steps as f64;
            }
            *best = best.min(imbalance(orders, j, &p));
            return;
        }
        for c in 0..=left {
            counts[k] = c;
            rec(k + 1, left - c, counts, others, orders, j, steps, best);
        }
    }
    rec(0, steps, &mut counts, &others, orders, j, steps, &mut best);
    best / 2.0
}
