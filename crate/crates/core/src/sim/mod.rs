//! Monte Carlo generation of line walks, spider walks and coupled Brownian paths.

mod brownian;
mod passage;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spider::{step, LegId, LegWeights, SpiderPath, SpiderState, WalkPath};

pub use brownian::{
    build_coupled_pair, couple, coupling_scale, embed_streaming, simulate_bm_grid, skorokhod_embed,
    BrownianSpiderPoint, CoupledPair, CouplingRecord, GridBrownianPath, SNAP_GUARD_FACTOR,
};
pub use passage::{sample_return_time, sample_zero_count, survival_prob};

/// One excursion of the radial process away from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    /// Index of the zero the excursion leaves from.
    pub start_idx: u64,
    /// Index of the returning zero, or the last index when the excursion is cut off.
    pub end_idx: u64,
    pub height: u64,
    pub complete: bool,
    pub leg: Option<LegId>,
}

/// Simple symmetric random walk of `n` steps.
pub fn simulate_ssrw<R: RngCore + ?Sized>(n: u64, rng: &mut R) -> WalkPath {
    let mut values = Vec::with_capacity(n as usize + 1);
    values.push(0i64);
    let mut s = 0i64;
    let mut left = n;
    while left > 0 {
        let take = left.min(64);
        let mut bits = rng.next_u64();
        for _ in 0..take {
            s += ((bits & 1) as i64) * 2 - 1;
            bits >>= 1;
            values.push(s);
        }
        left -= take;
    }
    WalkPath::from_trusted(values)
}

/// Excursions of a nonnegative lattice path that starts at zero.
pub(crate) fn decompose_radial<I: IntoIterator<Item = u64>>(radial: I) -> Vec<ExcursionRecord> {
    let mut out = Vec::new();
    let mut open: Option<ExcursionRecord> = None;
    let mut last = 0u64;
    for (idx, r) in radial.into_iter().enumerate() {
        let idx = idx as u64;
        last = idx;
        match (&mut open, r) {
            (Some(e), 0) => {
                e.end_idx = idx;
                e.complete = true;
                out.push(*e);
                open = None;
            }
            (Some(e), r) => e.height = e.height.max(r),
            (None, 0) => {}
            (None, r) => {
                open = Some(ExcursionRecord {
                    start_idx: idx - 1,
                    end_idx: idx,
                    height: r,
                    complete: false,
                    leg: None,
                })
            }
        }
    }
    if let Some(mut e) = open {
        e.end_idx = last;
        out.push(e);
    }
    out
}

/// Maximal excursions of `|S|` away from zero, including a cut-off final one.
pub fn decompose_excursions(path: &WalkPath) -> Vec<ExcursionRecord> {
    decompose_radial(path.values().iter().map(|v| v.unsigned_abs()))
}

/// Places each excursion of `path` on a leg drawn independently from `weights`.
///
/// `excursions` must be the decomposition of `path`; the drawn legs are written back.
pub fn assign_legs<R: Rng + ?Sized>(
    path: &WalkPath,
    excursions: &mut [ExcursionRecord],
    weights: &LegWeights,
    rng: &mut R,
) -> Result<SpiderPath> {
    let expected = decompose_excursions(path);
    let matches = expected.len() == excursions.len()
        && expected.iter().zip(excursions.iter()).all(|(a, b)| {
            (a.start_idx, a.end_idx, a.height, a.complete) == (b.start_idx, b.end_idx, b.height, b.complete)
        });
    if !matches {
        return Err(Error::Invariant("excursions do not decompose the given path".into()));
    }
    let values = path.values();
    let mut states = vec![SpiderState::Origin; values.len()];
    for e in excursions.iter_mut() {
        let leg = weights.sample(rng);
        e.leg = Some(leg);
        for k in e.start_idx + 1..=e.end_idx {
            states[k as usize] = SpiderState::at(values[k as usize].unsigned_abs(), leg);
        }
    }
    Ok(SpiderPath::from_trusted(states))
}

/// Spider walk built from a line walk by leg assignment per excursion.
pub fn simulate_spider_excursions<R: Rng + ?Sized>(
    n: u64,
    weights: &LegWeights,
    rng: &mut R,
) -> (SpiderPath, Vec<ExcursionRecord>) {
    let walk = simulate_ssrw(n, rng);
    let mut excursions = decompose_excursions(&walk);
    let path = assign_legs(&walk, &mut excursions, weights, rng).expect("decomposition of the same path");
    (path, excursions)
}

/// Spider walk by iterating the one-step transition.
pub fn simulate_spider_direct<R: Rng + ?Sized>(n: u64, weights: &LegWeights, rng: &mut R) -> SpiderPath {
    let mut states = Vec::with_capacity(n as usize + 1);
    let mut s = SpiderState::Origin;
    states.push(s);
    for _ in 0..n {
        s = step(s, weights, rng);
        states.push(s);
    }
    SpiderPath::from_trusted(states)
}
