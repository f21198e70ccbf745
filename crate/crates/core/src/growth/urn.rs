//! Equally likely urns and the Erdős–Rényi coupon-collector limit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{proportion_ci, run_trials, RngStream};

/// `exp(-exp(-x) / (m-1)!)`.
pub fn erdos_renyi_limit(m: u64, x: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::OutOfRange("threshold must be at least 1".into()));
    }
    let log_fact = libm::lgamma(m as f64);
    Ok((-(-x - log_fact).exp()).exp())
}

/// Ball count `N ln N + (m-1) N ln ln N + N x`, rounded to the nearest integer.
pub fn coupon_balls(n_urns: u64, m: u64, x: f64) -> Result<u64> {
    if n_urns < 3 {
        return Err(Error::OutOfRange("need at least 3 urns for ln ln N".into()));
    }
    let n = n_urns as f64;
    let balls = n * n.ln() + (m as f64 - 1.0) * n * n.ln().ln() + n * x;
    if !(balls >= 0.0) {
        return Err(Error::OutOfRange(format!("negative ball count {balls}")));
    }
    Ok(balls.round() as u64)
}

/// Throws `balls` balls into `n_urns` urns; true if every urn ends with at least `m`.
pub fn coupon_trial(n_urns: u64, balls: u64, m: u64, rng: &mut RngStream) -> bool {
    if m == 0 {
        return true;
    }
    let mut counts = vec![0u32; n_urns as usize];
    let mut short = n_urns;
    // One 32-bit draw per ball when the urn count allows it.
    let small = u32::try_from(n_urns).ok();
    for _ in 0..balls {
        let slot = match small {
            Some(n) => rng.random_range(0..n) as usize,
            None => rng.random_range(0..n_urns) as usize,
        };
        let c = &mut counts[slot];
        *c += 1;
        if *c as u64 == m {
            short -= 1;
            if short == 0 {
                return true;
            }
        }
    }
    false
}

/// Monte Carlo estimate of the all-urns-filled probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouponEstimate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    /// 95% Wilson interval.
    pub ci: (f64, f64),
}

/// Runs `trials` independent urn fillings.
pub fn coupon_simulate(n_urns: u64, balls: u64, m: u64, trials: u64, seed: u64) -> Result<CouponEstimate> {
    if n_urns == 0 || trials == 0 {
        return Err(Error::OutOfRange("urns and trials must be positive".into()));
    }
    let hits = run_trials(seed, trials, |_, rng| coupon_trial(n_urns, balls, m, rng));
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    Ok(CouponEstimate {
        successes,
        trials,
        estimate: successes as f64 / trials as f64,
        ci: proportion_ci(successes, trials, 0.95),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::binomial_sigma;

    #[test]
    fn limit_examples() {
        let e1 = (-1f64).exp();
        assert!((erdos_renyi_limit(1, 0.0).unwrap() - e1).abs() < 1e-15);
        assert!((erdos_renyi_limit(2, 0.0).unwrap() - e1).abs() < 1e-15);
        assert!((erdos_renyi_limit(1, 40.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((erdos_renyi_limit(3, 0.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert!(erdos_renyi_limit(0, 0.0).is_err());
    }

    #[test]
    fn single_urn_always_fills() {
        let est = coupon_simulate(1, 5, 3, 100, 0).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(coupon_simulate(1, 2, 3, 100, 0).unwrap().estimate, 0.0);
    }

    #[test]
    fn two_urns_two_balls() {
        let trials = 100_000;
        let est = coupon_simulate(2, 2, 1, trials, 3).unwrap();
        assert!((est.estimate - 0.5).abs() < 3.0 * binomial_sigma(0.5, trials));
        assert!(est.ci.0 < 0.5 && 0.5 < est.ci.1);
    }

    #[test]
    fn ball_count_formula() {
        let n = 10_000f64;
        assert_eq!(coupon_balls(10_000, 1, 0.0).unwrap(), (n * n.ln()).round() as u64);
        assert_eq!(
            coupon_balls(10_000, 2, 1.0).unwrap(),
            (n * n.ln() + n * n.ln().ln() + n).round() as u64
        );
        assert!(coupon_balls(2, 1, 0.0).is_err());
    }
}
