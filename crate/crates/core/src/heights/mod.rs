//! Leg heights of the spider walk, their limit law, and rescaled traces.

mod strassen;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spider::{LegId, SpiderPath, SpiderState};
use crate::stats::phi_upper;

pub use strassen::{partition_energy, strassen_condition, strassen_energy, zigzag, PiecewiseLinearFn, Scalar};

/// Terms of the height series evaluated before giving up.
pub const SERIES_CAP: u64 = 1_000_000;

/// Heights reached by a spider path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightSummary {
    /// `H(j, n)`: highest radius visited on leg `j`, 0 if never visited.
    pub per_leg: Vec<u64>,
    pub h_max: u64,
    pub h_min: u64,
    /// Largest excursion heights, nonincreasing, cut-off final excursion included.
    pub ranked: Vec<u64>,
    /// Leg carrying each ranked excursion.
    pub ranked_legs: Vec<LegId>,
}

impl HeightSummary {
    /// Whether the `N` tallest excursions sit on `N` different legs.
    pub fn top_legs_distinct(&self) -> bool {
        let n = self.per_leg.len();
        if self.ranked_legs.len() < n {
            return false;
        }
        let mut seen = vec![false; n];
        self.ranked_legs[..n]
            .iter()
            .all(|l| !std::mem::replace(&mut seen[l.slot()], true))
    }

    /// `H_m(n) <= M_N(n)` when the top `N` excursions are on distinct legs; `None` otherwise.
    pub fn min_below_ranked(&self) -> Option<bool> {
        self.top_legs_distinct()
            .then(|| self.h_min <= self.ranked[self.per_leg.len() - 1])
    }
}

#[derive(Debug, Clone, Copy)]
struct Excursion {
    height: u64,
    start: u64,
    leg: LegId,
}

/// Streaming height tracker shared by [`compute_heights`] and the traces.
struct Tracker {
    per_leg: Vec<u64>,
    done: Vec<Excursion>,
    open: Option<Excursion>,
}

impl Tracker {
    fn new(n_legs: u32) -> Self {
        Self {
            per_leg: vec![0; n_legs as usize],
            done: Vec::new(),
            open: None,
        }
    }

    fn push(&mut self, k: u64, s: SpiderState) -> Result<()> {
        match s {
            SpiderState::Origin => {
                if let Some(e) = self.open.take() {
                    self.done.push(e);
                }
            }
            SpiderState::On { leg, r } => {
                if leg.slot() >= self.per_leg.len() {
                    return Err(Error::InvalidLeg {
                        index: leg.index(),
                        n_legs: self.per_leg.len() as u32,
                    });
                }
                let h = &mut self.per_leg[leg.slot()];
                *h = (*h).max(r);
                let e = self.open.get_or_insert(Excursion {
                    height: 0,
                    start: k - 1,
                    leg,
                });
                e.height = e.height.max(r);
            }
        }
        Ok(())
    }

    fn ranked(&self, depth: usize) -> Vec<Excursion> {
        let mut all: Vec<Excursion> = self.done.iter().copied().chain(self.open).collect();
        // Ties go to the earlier excursion.
        all.sort_by(|a, b| b.height.cmp(&a.height).then(a.start.cmp(&b.start)));
        all.truncate(depth);
        all
    }

    fn summary(&self, depth: usize) -> HeightSummary {
        let ranked = self.ranked(depth);
        HeightSummary {
            h_max: self.per_leg.iter().copied().max().unwrap_or(0),
            h_min: self.per_leg.iter().copied().min().unwrap_or(0),
            per_leg: self.per_leg.clone(),
            ranked: ranked.iter().map(|e| e.height).collect(),
            ranked_legs: ranked.iter().map(|e| e.leg).collect(),
        }
    }
}

/// Heights of `path` on an `n_legs`-leg spider, keeping the `depth` tallest excursions.
pub fn compute_heights(path: &SpiderPath, n_legs: u32, depth: usize) -> Result<HeightSummary> {
    let mut t = Tracker::new(n_legs);
    for (k, &s) in path.states().iter().enumerate().skip(1) {
        t.push(k as u64, s)?;
    }
    Ok(t.summary(depth))
}

/// Limit of `P(H(j, n) < y sqrt(n))` for a leg of weight `p_leg`.
///
/// Evaluated as `1 - 4p sum_k (1-2p)^(k-1) (1 - Phi((2k-1)y))`, which avoids the
/// cancellation of the direct form; terms are added until the remaining tail is
/// provably below `tol`.
pub fn limit_height_cdf(y: f64, p_leg: f64, tol: f64) -> Result<f64> {
    if !(p_leg > 0.0) || p_leg > 1.0 {
        return Err(Error::OutOfRange(format!("leg weight must lie in (0, 1], got {p_leg}")));
    }
    if !(tol > 0.0) {
        return Err(Error::OutOfRange(format!("tolerance must be positive, got {tol}")));
    }
    if y.is_nan() || y < 0.0 {
        return Err(Error::OutOfRange(format!("scaled height must be nonnegative, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let q = 1.0 - 2.0 * p_leg;
    let mut tail = 0.0;
    let mut weight = 1.0;
    for k in 1..=SERIES_CAP {
        tail += weight * phi_upper((2 * k - 1) as f64 * y);
        weight *= q;
        let next = weight.abs() * phi_upper((2 * k + 1) as f64 * y);
        // Geometric bound for q >= 0; alternating decreasing terms for q < 0.
        let bound = if q >= 0.0 { 2.0 * next } else { 4.0 * p_leg * next };
        if bound < tol {
            return Ok((1.0 - 4.0 * p_leg * tail).clamp(0.0, 1.0));
        }
    }
    Err(Error::SeriesCap { cap: SERIES_CAP })
}

/// Rescaled heights of a path at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub n: u64,
    /// `H(j, n) / sqrt(2 n log log n)` per leg.
    pub a: Vec<f64>,
    pub a_min: f64,
    pub a_max: f64,
    /// `2 sum a - max a` on the rescaled vector.
    pub strassen: f64,
    /// `(M_1 + 2 (M_2 + ... + M_N)) / sqrt(2 n log log n)`.
    pub ranked_functional: f64,
    pub top_legs_distinct: bool,
    pub h_min: u64,
    pub min_below_ranked: Option<bool>,
}

fn lil_scale(n: u64) -> f64 {
    let n = n as f64;
    (2.0 * n * n.ln().ln()).sqrt()
}

/// Rescaled heights of `path` at each checkpoint (each at least 3, at most the path length).
pub fn rescaled_height_trace(path: &SpiderPath, n_legs: u32, checkpoints: &[u64]) -> Result<Vec<TracePoint>> {
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&c) = sorted.first() {
        if c < 3 {
            return Err(Error::OutOfRange(format!("checkpoint {c} is below 3")));
        }
    }
    if let Some(&c) = sorted.last() {
        if c > path.steps() {
            return Err(Error::BeyondPath {
                requested: c,
                len: path.steps(),
            });
        }
    }
    let mut t = Tracker::new(n_legs);
    let mut out = Vec::with_capacity(sorted.len());
    let mut next = sorted.iter().peekable();
    for (k, &s) in path.states().iter().enumerate().skip(1) {
        t.push(k as u64, s)?;
        while next.peek() == Some(&&(k as u64)) {
            let n = *next.next().unwrap();
            let summary = t.summary(n_legs as usize);
            let scale = lil_scale(n);
            let a: Vec<f64> = summary.per_leg.iter().map(|&h| h as f64 / scale).collect();
            let (strassen, _) = strassen_condition(&a)?;
            let ranked_sum: u64 = summary
                .ranked
                .iter()
                .enumerate()
                .map(|(i, &h)| if i == 0 { h } else { 2 * h })
                .sum();
            out.push(TracePoint {
                n,
                a_min: summary.h_min as f64 / scale,
                a_max: summary.h_max as f64 / scale,
                a,
                strassen,
                ranked_functional: ranked_sum as f64 / scale,
                top_legs_distinct: summary.top_legs_distinct(),
                h_min: summary.h_min,
                min_below_ranked: summary.min_below_ranked(),
            });
        }
    }
    Ok(out)
}

/// `H_m(n) / (sqrt(n) g(n))` at each checkpoint, for a user-supplied nonincreasing `g`.
pub fn hirsch_trace<G: Fn(f64) -> f64>(
    path: &SpiderPath,
    n_legs: u32,
    checkpoints: &[u64],
    g: G,
) -> Result<Vec<(u64, f64)>> {
    Ok(rescaled_height_trace(path, n_legs, checkpoints)?
        .into_iter()
        .map(|p| (p.n, p.h_min as f64 / ((p.n as f64).sqrt() * g(p.n as f64))))
        .collect())
}
