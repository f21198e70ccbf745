//! Hoeffding bounds and their empirical checks on tall-excursion counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::count_tall_excursions;
use crate::sim::simulate_ssrw;
use crate::stats::{binomial_sigma, run_trials, RngStream};

/// `2 exp(-2 k x^2)`: tail bound for a sum of at most `k` Bernoulli variables
/// deviating from its mean by `k x`.
pub fn hoeffding_bound(k: u64, x: f64) -> Result<f64> {
    if k == 0 || !(x > 0.0) {
        return Err(Error::OutOfRange(format!("need k >= 1 and x > 0, got k={k}, x={x}")));
    }
    Ok(2.0 * (-2.0 * k as f64 * x * x).exp())
}

/// `2 exp(-2 k^2 x^2 / sum (b_i - a_i)^2)` for summands bounded in `[a_i, b_i]`.
pub fn hoeffding_bound_general(x: f64, ranges: &[(f64, f64)]) -> Result<f64> {
    let spread: f64 = ranges.iter().map(|(a, b)| (b - a) * (b - a)).sum();
    if ranges.is_empty() || !(spread > 0.0) || !(x > 0.0) {
        return Err(Error::OutOfRange("need nondegenerate ranges and x > 0".into()));
    }
    let k = ranges.len() as f64;
    Ok(2.0 * (-2.0 * k * k * x * x / spread).exp())
}

/// Number of the first `excursions` excursions of a line walk that reach `|S| = height`.
///
/// Each excursion is walked until it reaches `height` or returns to 0; what it
/// does after reaching `height` cannot change the count and is not simulated.
pub fn sample_tall_count(height: u64, excursions: u64, rng: &mut RngStream) -> u64 {
    let mut tall = 0;
    let mut bits = 0u64;
    let mut left = 0u32;
    for _ in 0..excursions {
        let mut r = 1u64;
        while r != 0 && r < height {
            if left == 0 {
                bits = rand::RngCore::next_u64(rng);
                left = 64;
            }
            if bits & 1 == 1 {
                r += 1;
            } else {
                r -= 1;
            }
            bits >>= 1;
            left -= 1;
        }
        tall += (r >= height) as u64;
    }
    tall
}

/// Empirical tail of `zeta(L, rho(i))` against its Hoeffding bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationCheck {
    pub height: u64,
    pub excursions: u64,
    pub k: u64,
    pub x: f64,
    pub exceedances: u64,
    pub trials: u64,
    pub empirical: f64,
    pub bound: f64,
    /// Monte Carlo standard deviation of the empirical tail, evaluated at the bound.
    pub sigma: f64,
    pub holds: bool,
}

/// Estimates `P(|zeta(L, rho(i)) - i/L| >= k x)` and compares it with `2 exp(-2 k x^2)`.
///
/// The bound needs `i <= k`.
pub fn deviation_check(height: u64, excursions: u64, k: u64, x: f64, trials: u64, seed: u64) -> Result<DeviationCheck> {
    if height == 0 || excursions == 0 || trials == 0 {
        return Err(Error::OutOfRange(
            "height, excursions and trials must be positive".into(),
        ));
    }
    if excursions > k {
        return Err(Error::OutOfRange(format!(
            "bound needs i <= k, got i={excursions}, k={k}"
        )));
    }
    let bound = hoeffding_bound(k, x)?;
    let mean = excursions as f64 / height as f64;
    let threshold = k as f64 * x;
    let counts = run_trials(seed, trials, |_, rng| sample_tall_count(height, excursions, rng));
    let exceedances = counts.iter().filter(|&&c| (c as f64 - mean).abs() >= threshold).count() as u64;
    let empirical = exceedances as f64 / trials as f64;
    let sigma = binomial_sigma(bound.min(1.0), trials);
    Ok(DeviationCheck {
        height,
        excursions,
        k,
        x,
        exceedances,
        trials,
        empirical,
        bound,
        sigma,
        holds: empirical <= bound + 3.0 * sigma,
    })
}

/// `4 n^{1/4} (log n)^{3/4}`.
pub fn local_time_gap_threshold(n: u64) -> f64 {
    let n = n as f64;
    4.0 * n.powf(0.25) * n.ln().powf(0.75)
}

/// Empirical `P(|zeta(L, n) - xi(0, n)/L| >= 4 n^{1/4} (log n)^{3/4})` against `2/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeGapCheck {
    pub height: u64,
    pub n: u64,
    pub threshold: f64,
    pub exceedances: u64,
    pub trials: u64,
    pub empirical: f64,
    /// Largest deviation seen across trials.
    pub max_deviation: f64,
    pub bound: f64,
    pub sigma: f64,
    pub holds: bool,
}

/// Simulates `trials` walks of `n` steps and counts threshold exceedances.
pub fn local_time_gap_check(height: u64, n: u64, trials: u64, seed: u64) -> Result<LocalTimeGapCheck> {
    if height == 0 || n < 3 || trials == 0 {
        return Err(Error::OutOfRange("need height >= 1, n >= 3, trials >= 1".into()));
    }
    let threshold = local_time_gap_threshold(n);
    let deviations = run_trials(seed, trials, |_, rng| {
        let walk = simulate_ssrw(n, rng);
        let s = count_tall_excursions(&walk, height, n).expect("valid height and horizon");
        (s.zeta as f64 - s.xi0 as f64 / height as f64).abs()
    });
    let exceedances = deviations.iter().filter(|&&d| d >= threshold).count() as u64;
    let empirical = exceedances as f64 / trials as f64;
    let bound = 2.0 / n as f64;
    let sigma = binomial_sigma(bound, trials);
    Ok(LocalTimeGapCheck {
        height,
        n,
        threshold,
        exceedances,
        trials,
        empirical,
        max_deviation: deviations.iter().copied().fold(0.0, f64::max),
        bound,
        sigma,
        holds: empirical <= bound + 3.0 * sigma,
    })
}
