//! Exhaustive outcome enumeration for purely atomic instances.

use cop_core::{AugThreshold, Instance, PermutationFamily};

/// Largest `members × outcomes` product enumerated.
const MAX_WORK: usize = 20_000_000;

/// `(family-average gambler value, prophet value)`, or `None` when some
/// coordinate has a continuous part or the outcome space is too large.
pub fn enumerate(inst: &Instance, family: &PermutationFamily, t: AugThreshold) -> Option<(f64, f64)> {
    // (value, clears threshold, probability) per coordinate.
    let mut branches: Vec<Vec<(f64, bool, f64)>> = Vec::with_capacity(inst.n());
    let mut outcomes = 1usize;
    for d in inst.dists() {
        if !d.segments().is_empty() {
            return None;
        }
        let mut b = Vec::new();
        for a in d.atoms() {
            if a.x == t.theta {
                b.push((a.x, true, a.p * (1.0 - t.tie)));
                b.push((a.x, false, a.p * t.tie));
            } else {
                b.push((a.x, a.x > t.theta, a.p));
            }
        }
        outcomes = outcomes.checked_mul(b.len())?;
        branches.push(b);
    }
    if outcomes.checked_mul(family.len())? > MAX_WORK {
        return None;
    }

    let n = branches.len();
    let members = family.len() as f64;
    let mut pick = vec![0usize; n];
    let (mut gambler, mut prophet) = (0.0, 0.0);
    for _ in 0..outcomes {
        let prob: f64 = (0..n).map(|i| branches[i][pick[i]].2).product();
        let best = (0..n).map(|i| branches[i][pick[i]].0).fold(0.0, f64::max);
        prophet += prob * best;
        for pi in family.perms() {
            let got = pi.as_slice().iter().map(|&i| branches[i - 1][pick[i - 1]]).find(|b| b.1).map_or(0.0, |b| b.0);
            gambler += prob * got / members;
        }
        for i in 0..n {
            pick[i] += 1;
            if pick[i] < branches[i].len() {
                break;
            }
            pick[i] = 0;
        }
    }
    Some((gambler, prophet))
}
