//! Centeredness of an index with respect to a permutation family.
//!
//! Index `j` is ε-centered when some distribution `p` on the other indices
//! puts more than `1/2 − ε` of its mass on each side of `j` under every
//! member. Writing `v_ij` for the sign vector of `σ(i) − σ(j)` across
//! members, the smallest such ε is half of
//! `r* = min_p ‖Σ_i p_i v_ij‖_∞`. The LP below is solved in its dual form,
//! which has one row per index rather than two per member:
//!
//! ```text
//! max z   s.t.  z ≤ ⟨v_ij, x − y⟩ for i ≠ j,  Σ (x + y) = 1,  x, y, z ≥ 0
//! ```
//!
//! Its row multipliers are an optimal `p`, and `w = x − y` is the dual
//! witness. `z ≥ 0` loses nothing since `x = y` is always feasible.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::permutations::PermutationFamily;
use crate::simplex::{self, Constraint, LinearProgram, Relation};

/// Sign vectors `v_ij ∈ {±1}^m` for a fixed `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignVectorSet {
    j: usize,
    m: usize,
    /// `(i, v_ij)` for every `i ≠ j`, ascending in `i`.
    vectors: Vec<(usize, Vec<i8>)>,
}

impl SignVectorSet {
    pub fn new(family: &PermutationFamily, j: usize) -> Result<Self> {
        let n = family.n();
        if j == 0 || j > n {
            return Err(Error::IndexOutOfRange { index: j, n });
        }
        let sigma = family.positions();
        let vectors = (1..=n)
            .filter(|&i| i != j)
            .map(|i| {
                let v = sigma.iter().map(|s| if s.apply(i) > s.apply(j) { 1 } else { -1 }).collect();
                (i, v)
            })
            .collect();
        Ok(SignVectorSet { j, m: family.len(), vectors })
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vectors(&self) -> &[(usize, Vec<i8>)] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> Option<&[i8]> {
        self.vectors.iter().find(|(k, _)| *k == i).map(|(_, v)| v.as_slice())
    }

    /// `max_k |Σ_i p_i v_ik|` with `p` indexed by `i − 1`.
    pub fn imbalance(&self, p: &[f64]) -> f64 {
        let mut acc = vec![0.0; self.m];
        for (i, v) in &self.vectors {
            let w = p[i - 1];
            if w != 0.0 {
                for (a, &s) in acc.iter_mut().zip(v) {
                    *a += w * f64::from(s);
                }
            }
        }
        acc.into_iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// `min_i ⟨v_ij, w⟩`.
    pub fn worst_margin(&self, w: &[f64]) -> f64 {
        self.vectors
            .iter()
            .map(|(_, v)| v.iter().zip(w).map(|(&s, &x)| f64::from(s) * x).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Certificate that `j` is ε-centered for every `ε > epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterednessCertificate {
    pub j: usize,
    pub epsilon: f64,
    /// Length `n`, indexed by `i − 1`; entry `j − 1` is zero.
    pub witness_p: Vec<f64>,
    /// Length `m`, `‖w‖₁ ≤ 1`.
    pub dual_w: Vec<f64>,
    /// Imbalance at `witness_p` minus the worst margin at `dual_w`.
    pub lp_gap: f64,
}

impl CenterednessCertificate {
    /// `(mass before j, mass after j)` under each member, in member order.
    pub fn side_measures(&self, family: &PermutationFamily) -> Vec<(f64, f64)> {
        family
            .positions()
            .iter()
            .map(|s| {
                let sj = s.apply(self.j);
                let mut before = 0.0;
                let mut after = 0.0;
                for (k, &w) in self.witness_p.iter().enumerate() {
                    let i = k + 1;
                    if i == self.j {
                        continue;
                    }
                    if s.apply(i) < sj {
                        before += w;
                    } else {
                        after += w;
                    }
                }
                (before, after)
            })
            .collect()
    }

    /// Checks the definition directly: both sides exceed `1/2 − epsilon`.
    pub fn certifies(&self, family: &PermutationFamily, epsilon: f64) -> bool {
        let floor = 0.5 - epsilon;
        self.side_measures(family).iter().all(|&(b, a)| b > floor && a > floor)
    }
}

/// Solves the centeredness LP for index `j`.
pub fn centeredness_lp(family: &PermutationFamily, j: usize) -> Result<CenterednessCertificate> {
    let n = family.n();
    if n < 2 {
        return Err(Error::OutOfRange { name: "n", value: n as f64, range: "at least 2" });
    }
    let signs = SignVectorSet::new(family, j)?;
    let m = signs.m();

    // Columns: z, x_1..x_m, y_1..y_m.
    let cols = 1 + 2 * m;
    let mut objective = vec![0.0; cols];
    objective[0] = 1.0;
    let mut constraints: Vec<Constraint> = signs
        .vectors()
        .iter()
        .map(|(_, v)| {
            let mut coeffs = vec![0.0; cols];
            coeffs[0] = 1.0;
            for (k, &s) in v.iter().enumerate() {
                coeffs[1 + k] = -f64::from(s);
                coeffs[1 + m + k] = f64::from(s);
            }
            Constraint { coeffs, relation: Relation::Le, rhs: 0.0 }
        })
        .collect();
    let mut norm = vec![1.0; cols];
    norm[0] = 0.0;
    constraints.push(Constraint { coeffs: norm, relation: Relation::Eq, rhs: 1.0 });

    let sol = simplex::maximize(&LinearProgram { objective, constraints })?;

    let mut witness_p = vec![0.0; n];
    for ((i, _), &y) in signs.vectors().iter().zip(&sol.duals) {
        witness_p[i - 1] = y.max(0.0);
    }
    let total: f64 = witness_p.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Lp("dual multipliers vanish".into()));
    }
    for w in &mut witness_p {
        *w /= total;
    }
    let dual_w: Vec<f64> = (0..m).map(|k| sol.x[1 + k] - sol.x[1 + m + k]).collect();

    let primal = signs.imbalance(&witness_p);
    let dual = signs.worst_margin(&dual_w);
    Ok(CenterednessCertificate { j, epsilon: primal / 2.0, witness_p, dual_w, lp_gap: primal - dual })
}

/// Certificates for every index, in index order. Solves run in parallel.
pub fn centeredness_all(family: &PermutationFamily) -> Result<Vec<CenterednessCertificate>> {
    (1..=family.n()).into_par_iter().map(|j| centeredness_lp(family, j)).collect()
}

/// The index with the smallest epsilon (lowest index on ties).
pub fn most_centered_index(family: &PermutationFamily) -> Result<(usize, CenterednessCertificate)> {
    let certs = centeredness_all(family)?;
    let best = certs
        .into_iter()
        .reduce(|a, b| if b.epsilon < a.epsilon { b } else { a })
        .expect("n ≥ 2 gives at least two certificates");
    Ok((best.j, best))
}
