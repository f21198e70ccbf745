//! Monte Carlo estimates of `P(M(n, L))` and `P(A(n, L, k))` on spiders with
//! many equally likely legs.
//!
//! Only excursions that reach radius `L` can visit a height-`L` site, so the
//! sampler runs the reflected walk step by step inside `[0, L]`, replaces each
//! trip above `L` by an exact return-time draw, and picks a leg only when an
//! excursion first reaches `L`. The verdict has exactly the law it would have
//! under the full spider walk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::sample_return_time;
use crate::spider::LegWeights;
use crate::stats::{phi_upper, proportion_ci, run_trials, RngStream};

/// Scale factor in `n = floor((f L N log N)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scale {
    /// A fixed constant `c`.
    Constant(f64),
    /// `f(N) = log N`, growing with `N`.
    Up,
    /// `f(N) = 1 / log N`, shrinking with `N`.
    Down,
}

impl Scale {
    pub fn factor(self, n_legs: u32) -> f64 {
        let log_n = (n_legs as f64).ln();
        match self {
            Scale::Constant(c) => c,
            Scale::Up => log_n,
            Scale::Down => 1.0 / log_n,
        }
    }

    /// Limit of the event probability as `N` grows.
    pub fn reference(self) -> f64 {
        match self {
            Scale::Constant(c) => 2.0 * phi_upper(1.0 / c),
            Scale::Up => 1.0,
            Scale::Down => 0.0,
        }
    }
}

/// One growing-legs experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowingLegsConfig {
    pub n_legs: u32,
    /// Target height `L`.
    pub height: u64,
    pub scale: Scale,
    /// Required visits per leg; 1 gives the event `M`, larger values `A`.
    pub visits: u64,
    pub trials: u64,
    /// Reject `L > N / log N` unless cleared.
    pub enforce_regime: bool,
}

impl GrowingLegsConfig {
    pub fn new(n_legs: u32, height: u64, scale: Scale, trials: u64) -> Self {
        Self {
            n_legs,
            height,
            scale,
            visits: 1,
            trials,
            enforce_regime: true,
        }
    }

    /// Number of walk steps, `floor((f L N ln N)^2)`.
    pub fn steps(&self) -> u64 {
        let n = self.n_legs as f64;
        let base = self.scale.factor(self.n_legs) * self.height as f64 * n * n.ln();
        (base * base).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_legs < 2 {
            return Err(Error::OutOfRange("need at least 2 legs".into()));
        }
        if self.height == 0 || self.visits == 0 || self.trials == 0 {
            return Err(Error::OutOfRange("height, visits and trials must be positive".into()));
        }
        if let Scale::Constant(c) = self.scale {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::OutOfRange(format!("scale constant must be positive, got {c}")));
            }
        }
        let bound = self.n_legs as f64 / (self.n_legs as f64).ln();
        if self.enforce_regime && self.height as f64 > bound {
            return Err(Error::OutsideRegime {
                height: self.height,
                bound,
            });
        }
        Ok(())
    }
}

/// Fair coin flips drawn 64 at a time.
struct Coins {
    bits: u64,
    left: u32,
}

impl Coins {
    fn new() -> Self {
        Self { bits: 0, left: 0 }
    }

    fn flip(&mut self, rng: &mut RngStream) -> bool {
        if self.left == 0 {
            self.bits = rand::RngCore::next_u64(rng);
            self.left = 64;
        }
        let b = self.bits & 1 == 1;
        self.bits >>= 1;
        self.left -= 1;
        b
    }
}

/// Whether, within `steps` steps on `n_legs` equally likely legs, every
/// height-`height` site is visited at least `visits` times.
pub fn sample_visit_event(n_legs: u32, height: u64, visits: u64, steps: u64, rng: &mut RngStream) -> bool {
    use rand::Rng;
    let mut counts = vec![0u64; n_legs as usize];
    let mut short = n_legs as u64;
    let mut t = 0u64;
    let mut r = 0u64;
    let mut leg: Option<usize> = None;
    let mut coins = Coins::new();
    while t < steps {
        if r == 0 {
            r = 1;
            leg = None;
            t += 1;
        } else if r < height || !coins.flip(rng) {
            // Inside the strip, or stepping down from the top.
            if coins.flip(rng) || r >= height {
                r -= 1;
            } else {
                r += 1;
            }
            t += 1;
            if r == 0 {
                continue;
            }
        } else {
            // Up from the top: skip straight to the return to `height`.
            t += 1;
            match sample_return_time(rng, steps - t) {
                Some(back) => t += back,
                None => return false,
            }
        }
        if r == height {
            let slot = *leg.get_or_insert_with(|| rng.random_range(0..n_legs as usize));
            counts[slot] += 1;
            if counts[slot] == visits {
                short -= 1;
                if short == 0 {
                    return true;
                }
            }
        }
    }
    false
}

/// Estimate of a growing-legs event probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub steps: u64,
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    /// 95% Wilson interval.
    pub ci: (f64, f64),
    pub reference: f64,
}

/// Fraction of trials in which the event `M` (or `A` when `visits > 1`) occurs.
///
/// Only equal leg weights are supported.
pub fn estimate_m_probability(cfg: &GrowingLegsConfig, weights: &LegWeights, seed: u64) -> Result<GrowthEstimate> {
    cfg.validate()?;
    if !weights.is_uniform() || weights.n_legs() != cfg.n_legs {
        return Err(Error::NonUniformWeights);
    }
    let steps = cfg.steps();
    let hits = run_trials(seed, cfg.trials, |_, rng| {
        sample_visit_event(cfg.n_legs, cfg.height, cfg.visits, steps, rng)
    });
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    Ok(GrowthEstimate {
        steps,
        successes,
        trials: cfg.trials,
        estimate: successes as f64 / cfg.trials as f64,
        ci: proportion_ci(successes, cfg.trials, 0.95),
        reference: cfg.scale.reference(),
    })
}
