//! Many-legged spiders: tall-excursion counts, visit events at a fixed
//! height, the growing-legs experiments, coupon-collector urns and
//! Hoeffding-type deviation checks.

mod experiment;
mod hoeffding;
mod urn;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spider::{SpiderPath, SpiderState, WalkPath};

pub use experiment::{estimate_m_probability, sample_visit_event, GrowingLegsConfig, GrowthEstimate, Scale};
pub use hoeffding::{
    deviation_check, hoeffding_bound, hoeffding_bound_general, local_time_gap_check, local_time_gap_threshold,
    sample_tall_count, DeviationCheck, LocalTimeGapCheck,
};
pub use urn::{coupon_balls, coupon_simulate, coupon_trial, erdos_renyi_limit, CouponEstimate};

/// Which excursions `zeta(L, n)` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ZetaConvention {
    /// Excursions that reached `L` and returned to 0 by time `n`.
    #[default]
    Completed,
    /// Excursions leaving 0 at some `k < n` that reach `L` before returning,
    /// even if they do so after `n`.
    StartedBefore,
}

/// Zero-visit and tall-excursion statistics of a line walk up to time `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcursionCountSummary {
    /// `xi(0, n)`: returns to 0 in steps `1..=n`.
    pub xi0: u64,
    /// `zeta(L, n)`.
    pub zeta: u64,
    /// Return times `rho(0) = 0 < rho(1) < ...` over the whole path.
    pub rho: Vec<u64>,
    /// First return strictly after `n`, if the path contains one.
    pub h_n: Option<u64>,
}

/// Counts returns to zero and excursions reaching `|S| = l` by time `n`.
pub fn count_tall_excursions(path: &WalkPath, l: u64, n: u64) -> Result<ExcursionCountSummary> {
    count_tall_excursions_with(path, l, n, ZetaConvention::Completed)
}

/// [`count_tall_excursions`] with an explicit counting convention.
pub fn count_tall_excursions_with(
    path: &WalkPath,
    l: u64,
    n: u64,
    convention: ZetaConvention,
) -> Result<ExcursionCountSummary> {
    if l == 0 {
        return Err(Error::OutOfRange("height must be at least 1".into()));
    }
    if n > path.steps() {
        return Err(Error::BeyondPath {
            requested: n,
            len: path.steps(),
        });
    }
    let values = path.values();
    let mut rho = vec![0u64];
    rho.extend(
        values
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, &v)| v == 0)
            .map(|(k, _)| k as u64),
    );
    let xi0 = rho.iter().filter(|&&k| k >= 1 && k <= n).count() as u64;
    let h_n = rho.iter().copied().find(|&k| k > n);

    let mut zeta = 0;
    for w in rho
        .windows(2)
        .map(|w| (w[0], Some(w[1])))
        .chain(std::iter::once((*rho.last().unwrap(), None)))
    {
        let (start, end) = w;
        let counted = match convention {
            ZetaConvention::Completed => end.is_some_and(|e| e <= n),
            ZetaConvention::StartedBefore => start < n,
        };
        if !counted {
            continue;
        }
        let stop = end.unwrap_or(path.steps());
        let tall = values[start as usize..=stop as usize]
            .iter()
            .any(|v| v.unsigned_abs() >= l);
        if !tall && end.is_none() {
            // The cut-off excursion may still reach l later.
            return Err(Error::Undetermined { step: start });
        }
        zeta += tall as u64;
    }
    Ok(ExcursionCountSummary { xi0, zeta, rho, h_n })
}

/// Visits to radius `l` on each leg in steps `1..=n`.
pub fn visits_at_height(path: &SpiderPath, n_legs: u32, l: u64) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; n_legs as usize];
    for s in &path.states()[1..] {
        if let SpiderState::On { leg, r } = *s {
            if r == l {
                let slot = leg.index() as usize - 1;
                if slot >= counts.len() {
                    return Err(Error::InvalidLeg {
                        index: leg.index(),
                        n_legs,
                    });
                }
                counts[slot] += 1;
            }
        }
    }
    Ok(counts)
}

/// `(M, A)`: every leg's radius-`l` site visited at least once / at least `k` times.
pub fn check_min_visits(path: &SpiderPath, n_legs: u32, l: u64, k: u64) -> Result<(bool, bool)> {
    if l == 0 || k == 0 {
        return Err(Error::OutOfRange("height and visit count must be at least 1".into()));
    }
    let counts = visits_at_height(path, n_legs, l)?;
    let min = counts.iter().copied().min().unwrap_or(0);
    Ok((min >= 1, min >= k))
}
