//! Closed-form transition probabilities of the spider walk, the ballot
//! formula, Gaussian limit densities and a brute-force enumeration oracle.
//!
//! Half-step conventions follow the even-time lattice: `binom_walk_prob(n, k)`
//! is `P(S(2n) = 2k)`, and heights `j`, `i` denote radii `2j`, `2i`.

mod density;
mod oracle;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spider::{LegWeights, SpiderState};

pub use density::{
    density_cross, density_origin, density_same, lattice_density_cross, lattice_density_origin, lattice_density_same,
};
pub use oracle::{brute_force_distribution, brute_force_transition, brute_force_transition_exact, MAX_ORACLE_STEPS};

/// Half-step count above which binomial probabilities switch to log-gamma arithmetic.
pub const EXACT_HALF_STEPS: u64 = 500;

/// A probability carried both linearly and as a natural log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbValue {
    pub linear: f64,
    pub log: f64,
}

impl ProbValue {
    pub fn zero() -> Self {
        Self {
            linear: 0.0,
            log: f64::NEG_INFINITY,
        }
    }

    pub fn from_linear(linear: f64) -> Self {
        Self {
            linear,
            log: linear.ln(),
        }
    }

    pub fn from_log(log: f64) -> Self {
        Self { linear: log.exp(), log }
    }

    /// Multiplies by a nonnegative factor.
    fn scaled(self, factor: f64) -> Self {
        if factor == 0.0 || self.linear == 0.0 {
            return Self::zero();
        }
        Self {
            linear: self.linear * factor,
            log: self.log + factor.ln(),
        }
    }
}

fn binomial_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `P(S(m) = x)` for the simple symmetric walk, as an exact rational.
pub fn walk_prob_exact(m: u64, x: i64) -> BigRational {
    let ax = x.unsigned_abs();
    if ax > m || (m - ax) % 2 == 1 {
        return BigRational::zero();
    }
    let numer = binomial_exact(m, (m + ax) / 2);
    let denom = BigUint::one() << m;
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// `P(S(2n) = 2k)` exactly.
pub fn binom_walk_prob_exact(n: u64, k: i64) -> BigRational {
    walk_prob_exact(2 * n, 2 * k)
}

fn log_binom_walk(n: u64, k: u64) -> f64 {
    let n2 = 2.0 * n as f64;
    libm::lgamma(n2 + 1.0)
        - libm::lgamma((n + k) as f64 + 1.0)
        - libm::lgamma((n - k) as f64 + 1.0)
        - n2 * std::f64::consts::LN_2
}

/// `P(S(2n) = 2k) = C(2n, n+k) / 4^n`; zero when `|k| > n`.
pub fn binom_walk_prob(n: u64, k: i64) -> ProbValue {
    let ak = k.unsigned_abs();
    if ak > n {
        return ProbValue::zero();
    }
    if n <= EXACT_HALF_STEPS {
        let exact = binom_walk_prob_exact(n, k);
        let linear = exact.to_f64().unwrap_or(0.0);
        if linear > 0.0 && linear.is_normal() {
            return ProbValue::from_linear(linear);
        }
    }
    ProbValue::from_log(log_binom_walk(n, ak))
}

/// Ballot probability `P(S(1) > 0, ..., S(2n-1) > 0, S(2n) = 2k) = (k/n) P(S(2n) = 2k)`.
pub fn ballot_prob(n: u64, k: u64) -> Result<ProbValue> {
    if k < 1 || k > n {
        return Err(Error::OutOfRange(format!("ballot needs 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok(binom_walk_prob(n, k as i64).scaled(k as f64 / n as f64))
}

/// Exact ballot probability.
pub fn ballot_prob_exact(n: u64, k: u64) -> Result<BigRational> {
    if k < 1 || k > n {
        return Err(Error::OutOfRange(format!("ballot needs 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok(binom_walk_prob_exact(n, k as i64) * BigRational::new(BigInt::from(k), BigInt::from(n)))
}

/// From the origin to radius `2j` on a leg of weight `p` in `2n` steps.
pub fn trans_from_origin(n: u64, j: u64, p_leg: f64) -> ProbValue {
    if j < 1 || j > n {
        return ProbValue::zero();
    }
    binom_walk_prob(n, j as i64).scaled(2.0 * p_leg)
}

/// From radius `2j` on one leg to radius `2i` on a different leg of weight `p_target`.
pub fn trans_cross_leg(n: u64, j_start: u64, i_end: u64, p_target: f64) -> ProbValue {
    if j_start < 1 || i_end < 1 || i_end + j_start > n {
        return ProbValue::zero();
    }
    binom_walk_prob(n, (i_end + j_start) as i64).scaled(2.0 * p_target)
}

/// From radius `2j` to radius `2i` on the same leg of weight `p_leg`.
pub fn trans_same_leg(n: u64, j_start: u64, i_end: u64, p_leg: f64) -> ProbValue {
    if j_start < 1 || i_end < 1 {
        return ProbValue::zero();
    }
    let direct = binom_walk_prob(n, j_start as i64 - i_end as i64);
    let through = binom_walk_prob(n, (j_start + i_end) as i64);
    let value = direct.linear - (1.0 - 2.0 * p_leg) * through.linear;
    if value <= 0.0 {
        return ProbValue::zero();
    }
    // Keep the log form accurate when the first term dominates by many orders.
    let log = direct.log + (-(1.0 - 2.0 * p_leg) * (through.log - direct.log).exp()).ln_1p();
    ProbValue {
        linear: value,
        log: if log.is_finite() { log } else { value.ln() },
    }
}

/// From radius `2j` (zero for the origin) back to the origin in `2n` steps.
pub fn trans_to_origin(n: u64, j_start: u64) -> ProbValue {
    binom_walk_prob(n, j_start as i64)
}

/// Exact rational leg weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactWeights {
    p: Vec<BigRational>,
}

impl ExactWeights {
    pub fn new(p: Vec<BigRational>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidWeights("no legs".into()));
        }
        if p.iter().any(|x| x.is_negative()) {
            return Err(Error::InvalidWeights("negative weight".into()));
        }
        let total: BigRational = p.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidWeights(format!("exact weights sum to {total}")));
        }
        Ok(Self { p })
    }

    pub fn uniform(n_legs: u32) -> Result<Self> {
        if n_legs == 0 {
            return Err(Error::InvalidWeights("no legs".into()));
        }
        let share = BigRational::new(BigInt::one(), BigInt::from(n_legs));
        Self::new(vec![share; n_legs as usize])
    }

    /// Recovers small-denominator rationals from floating weights such as `0.3`.
    pub fn from_leg_weights(weights: &LegWeights) -> Result<Self> {
        let p = weights
            .probs()
            .iter()
            .map(|&x| rationalize(x, 1_000_000, 1e-12))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidWeights("weights have no small-denominator form".into()))?;
        Self::new(p)
    }

    pub fn n_legs(&self) -> u32 {
        self.p.len() as u32
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.p
    }

    pub fn to_leg_weights(&self) -> Result<LegWeights> {
        LegWeights::new(self.p.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
    }
}

/// Best rational approximation with denominator at most `max_denom`, if within `tol`.
fn rationalize(x: f64, max_denom: u64, tol: f64) -> Option<BigRational> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a > u32::MAX as f64 {
            break;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_denom {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= tol {
            return Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)));
        }
        let frac = rest - a as f64;
        if frac == 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    None
}

fn weight_exact(weights: &ExactWeights, state: SpiderState) -> BigRational {
    state
        .leg()
        .map(|l| weights.p[l.index() as usize - 1].clone())
        .unwrap_or_else(BigRational::zero)
}

/// Exact transition probability over `steps` steps between arbitrary states,
/// from the closed forms extended to any parity.
pub fn closed_form_transition_exact(
    steps: u64,
    start: SpiderState,
    end: SpiderState,
    weights: &ExactWeights,
) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    let a = start.radius() as i64;
    let b = end.radius() as i64;
    match (start.leg(), end.leg()) {
        (_, None) => walk_prob_exact(steps, a),
        (None, Some(_)) => two * weight_exact(weights, end) * walk_prob_exact(steps, b),
        (Some(ls), Some(le)) if ls != le => two * weight_exact(weights, end) * walk_prob_exact(steps, a + b),
        (Some(_), Some(_)) => {
            let q = BigRational::one() - two * weight_exact(weights, end);
            walk_prob_exact(steps, b - a) - q * walk_prob_exact(steps, a + b)
        }
    }
}

/// Floating counterpart of [`closed_form_transition_exact`].
pub fn closed_form_transition(steps: u64, start: SpiderState, end: SpiderState, weights: &LegWeights) -> f64 {
    let walk = |x: i64| -> f64 {
        let ax = x.unsigned_abs();
        if ax > steps || (steps - ax) % 2 == 1 {
            0.0
        } else if steps % 2 == 0 {
            binom_walk_prob(steps / 2, x / 2).linear
        } else {
            // One forced first step, then an even-length walk.
            0.5 * (binom_walk_prob(steps / 2, (x - 1) / 2).linear + binom_walk_prob(steps / 2, (x + 1) / 2).linear)
        }
    };
    let p = |s: SpiderState| s.leg().map(|l| weights.prob(l)).unwrap_or(0.0);
    let a = start.radius() as i64;
    let b = end.radius() as i64;
    match (start.leg(), end.leg()) {
        (_, None) => walk(a),
        (None, Some(_)) => 2.0 * p(end) * walk(b),
        (Some(ls), Some(le)) if ls != le => 2.0 * p(end) * walk(a + b),
        (Some(_), Some(_)) => (walk(b - a) - (1.0 - 2.0 * p(end)) * walk(a + b)).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Counts the ±1 sequences of length `m` ending at `x` directly.
    fn enumerate_walk(m: u32, x: i64) -> BigRational {
        let hits = (0u64..1 << m)
            .filter(|bits| {
                let ups = bits.count_ones() as i64;
                2 * ups - m as i64 == x
            })
            .count();
        BigRational::new((hits as i64).into(), BigInt::one() << m)
    }

    /// Counts sequences staying strictly positive before reaching `x` at step `m`.
    fn enumerate_ballot(m: u32, x: i64) -> BigRational {
        let hits = (0u64..1 << m)
            .filter(|bits| {
                let mut s = 0i64;
                for t in 0..m {
                    s += if bits >> t & 1 == 1 { 1 } else { -1 };
                    if t + 1 < m && s <= 0 {
                        return false;
                    }
                }
                s == x
            })
            .count();
        BigRational::new((hits as i64).into(), BigInt::one() << m)
    }

    #[test]
    fn binom_examples() {
        assert_eq!(binom_walk_prob_exact(2, 0), r(3, 8));
        assert!((binom_walk_prob(2, 0).linear - 0.375).abs() < 1e-15);
        assert_eq!(binom_walk_prob(1, 1).linear, 0.25);
        assert_eq!(binom_walk_prob(3, 4), ProbValue::zero());
        assert_eq!(binom_walk_prob(3, -4).linear, 0.0);
    }

    #[test]
    fn binom_matches_enumeration() {
        for n in 0..=8u32 {
            for k in -(n as i64) - 1..=n as i64 + 1 {
                assert_eq!(binom_walk_prob_exact(n as u64, k), enumerate_walk(2 * n, 2 * k));
            }
        }
    }

    #[test]
    fn ballot_examples_and_enumeration() {
        assert_eq!(ballot_prob(1, 1).unwrap().linear, 0.25);
        assert_eq!(ballot_prob_exact(2, 1).unwrap(), r(1, 8));
        assert_eq!(ballot_prob_exact(2, 2).unwrap(), r(1, 16));
        assert!(ballot_prob(2, 0).is_err());
        assert!(ballot_prob(2, 3).is_err());
        for n in 1..=8u64 {
            for k in 1..=n {
                assert_eq!(
                    ballot_prob_exact(n, k).unwrap(),
                    enumerate_ballot(2 * n as u32, 2 * k as i64)
                );
            }
        }
    }

    #[test]
    fn log_path_is_continuous_at_switch() {
        for k in [0i64, 1, 10, 40] {
            let exact = binom_walk_prob_exact(EXACT_HALF_STEPS, k).to_f64().unwrap();
            let via_log = log_binom_walk(EXACT_HALF_STEPS, k as u64).exp();
            assert!((exact - via_log).abs() / exact < 1e-11, "k={k}");
        }
    }

    #[test]
    fn large_n_matches_local_clt() {
        // Stirling-level agreement with exp(-k²/n)/sqrt(pi n).
        let n = 1_000_000u64;
        let k = 700i64;
        let p = binom_walk_prob(n, k);
        let approx = (-(k * k) as f64 / n as f64).exp() / (std::f64::consts::PI * n as f64).sqrt();
        assert!((p.linear / approx - 1.0).abs() < 1e-3);
        assert!((p.log.exp() - p.linear).abs() <= 1e-12 * p.linear);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(trans_from_origin(1, 1, 0.5).linear, 0.25);
        assert!((trans_from_origin(2, 1, 0.3).linear - 0.15).abs() < 1e-15);
        assert_eq!(trans_from_origin(1, 1, 1.0).linear, 0.5);
        assert_eq!(trans_cross_leg(2, 1, 1, 0.5).linear, 1.0 / 16.0);
        assert_eq!(trans_cross_leg(1, 1, 1, 0.7).linear, 0.0);
        assert!((trans_cross_leg(3, 1, 1, 0.25).linear - 3.0 / 64.0).abs() < 1e-15);
        assert!((trans_same_leg(1, 1, 1, 0.3).linear - 0.5).abs() < 1e-15);
        assert_eq!(trans_same_leg(2, 2, 2, 0.5).linear, 0.375);
        assert!((trans_same_leg(2, 1, 1, 0.2).linear - 0.3375).abs() < 1e-15);
    }

    #[test]
    fn rationalize_recovers_decimals() {
        assert_eq!(rationalize(0.3, 1_000_000, 1e-12), Some(r(3, 10)));
        assert_eq!(rationalize(1.0 / 3.0, 1_000_000, 1e-12), Some(r(1, 3)));
        assert_eq!(rationalize(0.0, 10, 1e-12), Some(r(0, 1)));
        assert_eq!(rationalize(1.0, 10, 1e-12), Some(r(1, 1)));
        assert!(rationalize(std::f64::consts::PI - 3.0, 1_000, 1e-12).is_none());
        let w = ExactWeights::from_leg_weights(&LegWeights::new(vec![0.5, 0.3, 0.2]).unwrap()).unwrap();
        assert_eq!(w.probs(), &[r(1, 2), r(3, 10), r(1, 5)]);
    }

    proptest! {
        #[test]
        fn cross_leg_symmetric(n in 0u64..400, j in 0u64..50, i in 0u64..50, p in 0.0f64..1.0) {
            prop_assert_eq!(trans_cross_leg(n, j, i, p), trans_cross_leg(n, i, j, p));
        }

        #[test]
        fn same_leg_is_a_probability(n in 0u64..2000, j in 1u64..80, i in 1u64..80, p in 0.0f64..1.0) {
            let v = trans_same_leg(n, j, i, p).linear;
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn log_form_consistent(n in 0u64..3000, k in -60i64..60) {
            let v = binom_walk_prob(n, k);
            if v.linear > 0.0 {
                prop_assert!((v.log.exp() - v.linear).abs() <= 1e-12 * v.linear);
            }
        }
    }
}
