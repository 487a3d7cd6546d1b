//! The averaging inequality behind the `1 − 1/e` bound: if `r^k ≥ 1/e` then
//! `(1 + r + … + r^k)/(k+1) ≥ 1 − 1/e`. Equality in the hypothesis gives
//! `f(k)`, which decreases to `1 − 1/e`.

use crate::error::{Error, Result};

/// `1 − 1/e`.
pub const ONE_MINUS_INV_E: f64 = 0.632_120_558_828_557_7;

/// Above this `k` the average uses the closed geometric sum.
const DIRECT_SUM_LIMIT: usize = 4096;

/// Fixed slack when testing `r^k ≥ 1/e`. Rounding `r` near 1 moves
/// `k·ln r` by up to about `k·ε` on top of this.
const HYPOTHESIS_SLACK: f64 = 1e-12;

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::OutOfRange { name: "k", value: 0.0, range: "at least 1" })
    } else {
        Ok(())
    }
}

/// `f(k) = (1 − e^{−(k+1)/k}) / ((k+1)(1 − e^{−1/k}))`.
pub fn lemma_1e_f(k: usize) -> Result<f64> {
    check_k(k)?;
    let k = k as f64;
    Ok(-(-(k + 1.0) / k).exp_m1() / ((k + 1.0) * -(-1.0 / k).exp_m1()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaCheck {
    /// `(1 + r + … + r^k)/(k+1)`.
    pub average: f64,
    /// `r^k ≥ 1/e`.
    pub hypothesis: bool,
    /// `average ≥ 1 − 1/e`.
    pub conclusion: bool,
}

impl LemmaCheck {
    /// The implication holds.
    pub fn holds(&self) -> bool {
        !self.hypothesis || self.conclusion
    }
}

pub fn lemma_1e_check(k: usize, r: f64) -> Result<LemmaCheck> {
    check_k(k)?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::OutOfRange { name: "r", value: r, range: "(0, 1]" });
    }
    let ln_r = r.ln();
    let average = if r == 1.0 {
        1.0
    } else if k <= DIRECT_SUM_LIMIT {
        let mut term = 1.0;
        let mut sum = 1.0;
        for _ in 0..k {
            term *= r;
            sum += term;
        }
        sum / (k + 1) as f64
    } else {
        let kp1 = (k + 1) as f64;
        (kp1 * ln_r).exp_m1() / (kp1 * ln_r.exp_m1())
    };
    let hypothesis = k as f64 * ln_r >= -1.0 - HYPOTHESIS_SLACK - 2.0 * k as f64 * f64::EPSILON;
    Ok(LemmaCheck { average, hypothesis, conclusion: average >= ONE_MINUS_INV_E })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_one_at_inverse_e() {
        let c = lemma_1e_check(1, (-1f64).exp()).unwrap();
        assert!(c.hypothesis && c.conclusion);
        assert!((c.average - 0.683_939_720_585_721).abs() < 1e-12);
    }

    #[test]
    fn k_four() {
        let c = lemma_1e_check(4, (-0.25f64).exp()).unwrap();
        assert!(c.hypothesis && c.conclusion);
        assert!((c.average - 0.645).abs() < 1e-3, "{}", c.average);
        assert!((c.average - lemma_1e_f(4).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_direct_sum_at_the_switch() {
        let k = DIRECT_SUM_LIMIT + 1;
        let r = (-1.0 / k as f64).exp();
        let mut sum = 0.0;
        let mut term = 1.0;
        for _ in 0..=k {
            sum += term;
            term *= r;
        }
        let direct = sum / (k + 1) as f64;
        assert!((lemma_1e_check(k, r).unwrap().average - direct).abs() < 1e-12);
    }

    #[test]
    fn hypothesis_failure_is_vacuous() {
        let c = lemma_1e_check(10, 0.5).unwrap();
        assert!(!c.hypothesis && c.holds());
        assert!(lemma_1e_check(0, 0.5).is_err());
        assert!(lemma_1e_check(3, 0.0).is_err());
        assert!(lemma_1e_check(3, 1.5).is_err());
    }

    #[test]
    fn f_limit() {
        let f = lemma_1e_f(100_000).unwrap();
        assert!(f > ONE_MINUS_INV_E && f - ONE_MINUS_INV_E <= 1e-4);
    }
}
