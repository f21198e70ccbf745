//! Spider geometry: legs, states, weights, paths and single-step dynamics.
//!
//! The spider `SP(N)` is `N` half-lines glued at a single origin. Positions
//! are lattice distances from the origin; the origin itself carries no leg.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-based leg index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LegId(u32);

impl LegId {
    pub fn new(index: u32, n_legs: u32) -> Result<Self> {
        if index == 0 || index > n_legs {
            return Err(Error::InvalidLeg { index, n_legs });
        }
        Ok(Self(index))
    }

    /// Leg from a zero-based slot, as used by weight vectors.
    pub(crate) fn from_zero_based(slot: usize) -> Self {
        Self(slot as u32 + 1)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    pub(crate) fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for LegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A vertex of the spider.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpiderState {
    Origin,
    /// Distance `r >= 1` out along `leg`.
    On {
        leg: LegId,
        r: u64,
    },
}

impl SpiderState {
    /// Builds a state, collapsing `r = 0` to the origin.
    pub fn at(r: u64, leg: LegId) -> Self {
        if r == 0 {
            SpiderState::Origin
        } else {
            SpiderState::On { leg, r }
        }
    }

    pub fn radius(self) -> u64 {
        match self {
            SpiderState::Origin => 0,
            SpiderState::On { r, .. } => r,
        }
    }

    pub fn leg(self) -> Option<LegId> {
        match self {
            SpiderState::Origin => None,
            SpiderState::On { leg, .. } => Some(leg),
        }
    }

    pub fn is_origin(self) -> bool {
        matches!(self, SpiderState::Origin)
    }
}

impl fmt::Display for SpiderState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpiderState::Origin => write!(f, "O"),
            SpiderState::On { leg, r } => write!(f, "({r},{leg})"),
        }
    }
}

/// Leg-selection probabilities used whenever the walk leaves the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegWeights {
    p: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
    #[serde(skip)]
    uniform: bool,
}

impl LegWeights {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidWeights("no legs".into()));
        }
        if p.len() > u32::MAX as usize {
            return Err(Error::InvalidWeights("too many legs".into()));
        }
        if let Some(bad) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidWeights(format!("weight {bad} is not a probability")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = p
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        let uniform = p.iter().all(|&x| x == p[0]);
        Ok(Self { p, cumulative, uniform })
    }

    pub fn uniform(n_legs: u32) -> Result<Self> {
        if n_legs == 0 {
            return Err(Error::InvalidWeights("no legs".into()));
        }
        Self::new(vec![1.0 / n_legs as f64; n_legs as usize])
    }

    pub fn n_legs(&self) -> u32 {
        self.p.len() as u32
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn prob(&self, leg: LegId) -> f64 {
        self.p[leg.slot()]
    }

    /// True when every leg is reachable.
    pub fn all_positive(&self) -> bool {
        self.p.iter().all(|&x| x > 0.0)
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn leg(&self, index: u32) -> Result<LegId> {
        LegId::new(index, self.n_legs())
    }

    /// Draws a leg with probability `p_j`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LegId {
        if self.uniform {
            return LegId::from_zero_based(rng.random_range(0..self.p.len()));
        }
        let u: f64 = rng.random();
        let slot = self.cumulative.partition_point(|&c| c <= u).min(self.p.len() - 1);
        // Rounding in the cumulative sums must never select a zero-weight leg.
        let slot = (0..=slot).rev().find(|&s| self.p[s] > 0.0).unwrap_or_else(|| {
            (slot..self.p.len())
                .find(|&s| self.p[s] > 0.0)
                .expect("weights sum to 1")
        });
        LegId::from_zero_based(slot)
    }
}

/// Lattice distance on the spider.
///
/// Same leg (or either point at the origin): `|r_a - r_b|`; different legs: `r_a + r_b`.
pub fn spider_distance(a: SpiderState, b: SpiderState) -> u64 {
    match (a.leg(), b.leg()) {
        (Some(la), Some(lb)) if la != lb => a.radius() + b.radius(),
        _ => a.radius().abs_diff(b.radius()),
    }
}

/// One step of the spider walk.
pub fn step<R: Rng + ?Sized>(state: SpiderState, weights: &LegWeights, rng: &mut R) -> SpiderState {
    match state {
        SpiderState::Origin => SpiderState::On {
            leg: weights.sample(rng),
            r: 1,
        },
        SpiderState::On { leg, r } => {
            if rng.random::<bool>() {
                SpiderState::On { leg, r: r + 1 }
            } else {
                SpiderState::at(r - 1, leg)
            }
        }
    }
}

fn adjacent(a: SpiderState, b: SpiderState) -> bool {
    match (a, b) {
        (SpiderState::Origin, SpiderState::Origin) => false,
        (SpiderState::Origin, SpiderState::On { r, .. }) | (SpiderState::On { r, .. }, SpiderState::Origin) => r == 1,
        (SpiderState::On { leg: la, r: ra }, SpiderState::On { leg: lb, r: rb }) => la == lb && ra.abs_diff(rb) == 1,
    }
}

/// Trajectory `S_0 = O, S_1, ..., S_n` of the spider walk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpiderPath {
    states: Vec<SpiderState>,
}

impl SpiderPath {
    pub fn new(states: Vec<SpiderState>) -> Result<Self> {
        match states.first() {
            Some(SpiderState::Origin) => {}
            _ => return Err(Error::NotAdjacent { step: 0 }),
        }
        if let Some(step) = states.windows(2).position(|w| !adjacent(w[0], w[1])) {
            return Err(Error::NotAdjacent { step });
        }
        Ok(Self { states })
    }

    /// Caller guarantees adjacency (used by the simulators).
    pub(crate) fn from_trusted(states: Vec<SpiderState>) -> Self {
        debug_assert!(Self::new(states.clone()).is_ok());
        Self { states }
    }

    pub fn states(&self) -> &[SpiderState] {
        &self.states
    }

    /// Number of steps `n`.
    pub fn steps(&self) -> u64 {
        self.states.len() as u64 - 1
    }

    pub fn radial(&self) -> impl Iterator<Item = u64> + '_ {
        self.states.iter().map(|s| s.radius())
    }

    /// Prefix `S_0..S_n`.
    pub fn truncated(&self, n: u64) -> Result<Self> {
        if n > self.steps() {
            return Err(Error::BeyondPath {
                requested: n,
                len: self.steps(),
            });
        }
        Ok(Self {
            states: self.states[..=n as usize].to_vec(),
        })
    }
}

/// Trajectory `S(0) = 0, ..., S(n)` of the simple symmetric walk on the line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkPath {
    values: Vec<i64>,
}

impl WalkPath {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        if values.first() != Some(&0) {
            return Err(Error::InvalidWalk { step: 0 });
        }
        if let Some(step) = values.windows(2).position(|w| w[0].abs_diff(w[1]) != 1) {
            return Err(Error::InvalidWalk { step });
        }
        Ok(Self { values })
    }

    pub(crate) fn from_trusted(values: Vec<i64>) -> Self {
        debug_assert!(Self::new(values.clone()).is_ok());
        Self { values }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn steps(&self) -> u64 {
        self.values.len() as u64 - 1
    }
}

/// Visits to `site` at steps `0 < k <= n`.
pub fn local_time(path: &SpiderPath, site: SpiderState, n: u64) -> Result<u64> {
    if n > path.steps() {
        return Err(Error::BeyondPath {
            requested: n,
            len: path.steps(),
        });
    }
    Ok(path.states[1..=n as usize].iter().filter(|&&s| s == site).count() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::RngStream;
    use proptest::prelude::*;

    fn leg(i: u32) -> LegId {
        LegId::new(i, 5).unwrap()
    }

    fn on(r: u64, l: u32) -> SpiderState {
        SpiderState::at(r, leg(l))
    }

    #[test]
    fn distance_examples() {
        assert_eq!(spider_distance(on(3, 1), on(2, 1)), 1);
        assert_eq!(spider_distance(on(3, 1), on(2, 2)), 5);
        assert_eq!(spider_distance(SpiderState::Origin, on(4, 2)), 4);
    }

    #[test]
    fn origin_is_canonical() {
        assert_eq!(SpiderState::at(0, leg(1)), SpiderState::at(0, leg(3)));
        assert_eq!(SpiderState::at(0, leg(2)).leg(), None);
    }

    #[test]
    fn leg_ids_are_range_checked() {
        assert!(LegId::new(0, 3).is_err());
        assert!(LegId::new(4, 3).is_err());
        assert_eq!(LegId::new(3, 3).unwrap().index(), 3);
    }

    #[test]
    fn weights_validation() {
        assert!(LegWeights::new(vec![]).is_err());
        assert!(LegWeights::new(vec![0.5, 0.6]).is_err());
        assert!(LegWeights::new(vec![-0.1, 1.1]).is_err());
        assert!(LegWeights::new(vec![0.5, 0.3, 0.2]).is_ok());
        let w = LegWeights::new(vec![0.0, 1.0]).unwrap();
        assert!(!w.all_positive());
        assert!(LegWeights::uniform(7).unwrap().is_uniform());
    }

    #[test]
    fn zero_weight_leg_never_drawn() {
        let w = LegWeights::new(vec![0.0, 0.25, 0.0, 0.75, 0.0]).unwrap();
        let mut s = RngStream::new(1, 0);
        for _ in 0..20_000 {
            let l = w.sample(&mut s);
            assert!(l.index() == 2 || l.index() == 4);
        }
    }

    #[test]
    fn single_leg_always_leaves_to_leg_one() {
        let w = LegWeights::uniform(1).unwrap();
        let mut s = RngStream::new(2, 0);
        for _ in 0..100 {
            assert_eq!(step(SpiderState::Origin, &w, &mut s), on(1, 1));
        }
    }

    #[test]
    fn step_from_one_is_a_fair_coin() {
        let w = LegWeights::uniform(3).unwrap();
        let mut s = RngStream::new(3, 0);
        let trials = 1_000_000u64;
        let mut down = 0u64;
        for _ in 0..trials {
            match step(on(1, 2), &w, &mut s) {
                SpiderState::Origin => down += 1,
                other => assert_eq!(other, on(2, 2)),
            }
        }
        let sigma = (0.25 / trials as f64).sqrt();
        assert!((down as f64 / trials as f64 - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn step_leg_frequencies_follow_weights() {
        let w = LegWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        let mut s = RngStream::new(4, 0);
        let trials = 300_000;
        let mut counts = [0u64; 3];
        for _ in 0..trials {
            counts[step(SpiderState::Origin, &w, &mut s).leg().unwrap().slot()] += 1;
        }
        let stat = crate::stats::chi_square_statistic(&counts, w.probs());
        assert!(crate::stats::chi_square_sf(stat, 2.0) > 0.001);
    }

    #[test]
    fn local_time_examples() {
        let path = SpiderPath::new(vec![
            SpiderState::Origin,
            on(1, 2),
            on(2, 2),
            on(1, 2),
            SpiderState::Origin,
        ])
        .unwrap();
        assert_eq!(local_time(&path, on(1, 2), 4).unwrap(), 2);
        assert_eq!(local_time(&path, SpiderState::Origin, 4).unwrap(), 1);
        assert_eq!(local_time(&path, on(3, 1), 4).unwrap(), 0);
        assert!(matches!(
            local_time(&path, SpiderState::Origin, 5),
            Err(Error::BeyondPath { .. })
        ));
    }

    #[test]
    fn path_validation() {
        assert!(SpiderPath::new(vec![on(1, 1)]).is_err());
        assert_eq!(
            SpiderPath::new(vec![SpiderState::Origin, on(1, 1), on(2, 2)]),
            Err(Error::NotAdjacent { step: 1 })
        );
        assert!(SpiderPath::new(vec![SpiderState::Origin, SpiderState::Origin]).is_err());
        assert!(WalkPath::new(vec![0, 1, 0, -1, -2]).is_ok());
        assert_eq!(WalkPath::new(vec![0, 2]), Err(Error::InvalidWalk { step: 0 }));
        assert!(WalkPath::new(vec![1, 0]).is_err());
    }

    fn all_states(max_r: u64, n_legs: u32) -> Vec<SpiderState> {
        let mut v = vec![SpiderState::Origin];
        for l in 1..=n_legs {
            for r in 1..=max_r {
                v.push(SpiderState::at(r, LegId::new(l, n_legs).unwrap()));
            }
        }
        v
    }

    #[test]
    fn metric_axioms_exhaustive() {
        let states = all_states(20, 5);
        for &a in &states {
            for &b in &states {
                let d = spider_distance(a, b);
                assert_eq!(d, spider_distance(b, a));
                assert_eq!(d == 0, a == b);
            }
        }
        // Triangle inequality on a thinned grid keeps the triple loop cheap.
        let thin = all_states(10, 4);
        for &a in &thin {
            for &b in &thin {
                for &c in &thin {
                    assert!(spider_distance(a, c) <= spider_distance(a, b) + spider_distance(b, c));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn stepped_paths_are_adjacent_and_parity_consistent(seed in any::<u64>(), n_legs in 1u32..6, n in 0usize..300) {
            let w = LegWeights::uniform(n_legs).unwrap();
            let mut s = RngStream::new(seed, 0);
            let mut states = vec![SpiderState::Origin];
            for _ in 0..n {
                let next = step(*states.last().unwrap(), &w, &mut s);
                states.push(next);
            }
            for (k, st) in states.iter().enumerate() {
                prop_assert_eq!(st.radius() % 2, k as u64 % 2);
            }
            prop_assert!(SpiderPath::new(states).is_ok());
        }
    }
}
