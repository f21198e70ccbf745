//! Grid Brownian motion, its Skorokhod embedding of the line walk, and the
//! coupled pair (spider walk, Brownian spider) sharing leg assignments.
//!
//! Exits are detected on the grid relative to the current lattice value of the
//! embedded walk, so the embedded walk is exactly `±1` and grid overshoot does
//! not accumulate from one band to the next.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spider::{LegId, LegWeights, SpiderPath, SpiderState, WalkPath};
use crate::stats::RngStream;

/// A band exit may overshoot the lattice value by at most this many `sqrt(dt)`.
pub const SNAP_GUARD_FACTOR: f64 = 8.0;

/// Brownian motion sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBrownianPath {
    dt: f64,
    values: Vec<f64>,
}

impl GridBrownianPath {
    /// Wraps existing grid values; `values[0]` must be 0.
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::OutOfRange(format!("grid step must be positive, got {dt}")));
        }
        if values.first() != Some(&0.0) {
            return Err(Error::OutOfRange("Brownian path must start at 0".into()));
        }
        Ok(Self { dt, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }
}

fn grid_len(horizon: f64, dt: f64) -> Result<u64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::OutOfRange(format!("grid step must be positive, got {dt}")));
    }
    if !(horizon >= dt) || !horizon.is_finite() {
        return Err(Error::OutOfRange(format!(
            "horizon {horizon} shorter than grid step {dt}"
        )));
    }
    Ok((horizon / dt + 1e-9).floor() as u64)
}

fn steps_per_unit(dt: f64) -> Result<u64> {
    let k = (1.0 / dt).round();
    if k < 1.0 || (k * dt - 1.0).abs() > 1e-9 {
        return Err(Error::OutOfRange(format!("grid step {dt} is not 1/k for an integer k")));
    }
    Ok(k as u64)
}

/// Brownian path on `[0, horizon]` with Gaussian increments of variance `dt`.
pub fn simulate_bm_grid(horizon: f64, dt: f64, rng: &mut RngStream) -> Result<GridBrownianPath> {
    let steps = grid_len(horizon, dt)?;
    let sd = dt.sqrt();
    let mut values = Vec::with_capacity(steps as usize + 1);
    let mut b = 0.0f64;
    values.push(b);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        b += sd * z;
        values.push(b);
    }
    GridBrownianPath::new(dt, values)
}

/// Embedded walk and the bookkeeping needed to couple it with the Brownian spider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub dt: f64,
    /// Grid index of the `i`-th band exit; entry 0 is time 0.
    pub tau: Vec<u64>,
    /// `S(i) = B(tau_i)` snapped to the lattice.
    pub embedded: WalkPath,
    /// Brownian excursion containing each `tau_i`.
    pub tau_excursion: Vec<u64>,
    /// `B` at integer times `0, 1, 2, ...`.
    pub unit_values: Vec<f64>,
    /// Brownian excursion containing each integer time.
    pub unit_excursion: Vec<u64>,
    /// Largest overshoot of a band edge seen at an exit.
    pub max_overshoot: f64,
    /// Leg of each Brownian excursion that received one, sorted by excursion.
    pub assignments: Vec<(u64, LegId)>,
}

impl CouplingRecord {
    /// Number of embedded steps.
    pub fn steps(&self) -> u64 {
        self.embedded.steps()
    }

    /// `tau_n / n` in time units.
    pub fn tau_ratio(&self, n: u64) -> Result<f64> {
        if n == 0 || n > self.steps() {
            return Err(Error::ShortEmbedding {
                needed: n,
                available: self.steps(),
            });
        }
        Ok(self.tau[n as usize] as f64 * self.dt / n as f64)
    }
}

struct Embedder {
    per_unit: u64,
    guard: f64,
    target: u64,
    anchor: i64,
    positive: bool,
    excursion: u64,
    g: u64,
    tau: Vec<u64>,
    walk: Vec<i64>,
    tau_excursion: Vec<u64>,
    unit_values: Vec<f64>,
    unit_excursion: Vec<u64>,
    max_overshoot: f64,
}

impl Embedder {
    fn new(dt: f64, target: u64) -> Result<Self> {
        Ok(Self {
            per_unit: steps_per_unit(dt)?,
            guard: SNAP_GUARD_FACTOR * dt.sqrt(),
            target,
            anchor: 0,
            positive: false,
            excursion: 0,
            g: 0,
            tau: vec![0],
            walk: vec![0],
            tau_excursion: vec![0],
            unit_values: Vec::new(),
            unit_excursion: Vec::new(),
            max_overshoot: 0.0,
        })
    }

    fn push(&mut self, b: f64) -> Result<()> {
        let positive = b > 0.0;
        if self.g > 0 && positive != self.positive {
            self.excursion += 1;
        }
        self.positive = positive;
        if self.g % self.per_unit == 0 {
            self.unit_values.push(b);
            self.unit_excursion.push(self.excursion);
        }
        let dev = b - self.anchor as f64;
        if self.found() < self.target && dev.abs() >= 1.0 {
            let over = dev.abs() - 1.0;
            if over > self.guard {
                return Err(Error::SnapGuard {
                    index: self.tau.len(),
                    value: b,
                    deviation: over,
                    guard: self.guard,
                });
            }
            self.max_overshoot = self.max_overshoot.max(over);
            self.anchor += if dev > 0.0 { 1 } else { -1 };
            self.tau.push(self.g);
            self.walk.push(self.anchor);
            self.tau_excursion.push(self.excursion);
        }
        self.g += 1;
        Ok(())
    }

    fn found(&self) -> u64 {
        self.tau.len() as u64 - 1
    }

    fn finish(self, dt: f64) -> CouplingRecord {
        CouplingRecord {
            dt,
            tau: self.tau,
            embedded: WalkPath::from_trusted(self.walk),
            tau_excursion: self.tau_excursion,
            unit_values: self.unit_values,
            unit_excursion: self.unit_excursion,
            max_overshoot: self.max_overshoot,
            assignments: Vec::new(),
        }
    }
}

/// Every unit-band exit time of a materialized path.
///
/// Running out of grid is not an error; the record holds however many exits were found.
pub fn skorokhod_embed(bm: &GridBrownianPath) -> Result<CouplingRecord> {
    let mut e = Embedder::new(bm.dt, u64::MAX)?;
    for &b in &bm.values {
        e.push(b)?;
    }
    Ok(e.finish(bm.dt))
}

/// Embeds `n_steps` walk steps while generating the Brownian path on the fly.
///
/// Draws increments exactly as [`simulate_bm_grid`] does but keeps only the
/// integer-time samples, so memory stays proportional to `n_steps`.
pub fn embed_streaming(n_steps: u64, dt: f64, horizon: f64, rng: &mut RngStream) -> Result<CouplingRecord> {
    let steps = grid_len(horizon, dt)?;
    let mut e = Embedder::new(dt, n_steps)?;
    let sd = dt.sqrt();
    let last_unit = n_steps * e.per_unit;
    let mut b = 0.0f64;
    e.push(b)?;
    for _ in 0..steps {
        if e.found() >= n_steps && e.g > last_unit {
            break;
        }
        let z: f64 = rng.sample(StandardNormal);
        b += sd * z;
        e.push(b)?;
    }
    if e.found() < n_steps || e.g <= last_unit {
        return Err(Error::ShortEmbedding {
            needed: n_steps,
            available: e.found(),
        });
    }
    Ok(e.finish(dt))
}

/// The Brownian spider at an integer time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrownianSpiderPoint {
    pub radius: f64,
    pub leg: Option<LegId>,
    pub excursion: u64,
}

/// Spider walk and Brownian spider built on one Brownian path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPair {
    pub walk: SpiderPath,
    pub brownian: Vec<BrownianSpiderPoint>,
    pub record: CouplingRecord,
}

/// `(n log log n)^{1/4} (log n)^{1/2}`, the coupling-rate scale.
pub fn coupling_scale(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::OutOfRange(format!("coupling scale needs n >= 3, got {n}")));
    }
    let n = n as f64;
    Ok((n * n.ln().ln()).powf(0.25) * n.ln().sqrt())
}

impl CoupledPair {
    /// Spider distance between the walk at step `m` and the Brownian spider at time `m`.
    pub fn distance(&self, m: u64) -> f64 {
        let s = self.walk.states()[m as usize];
        let w = self.brownian[m as usize];
        let rs = s.radius() as f64;
        match (s.leg(), w.leg) {
            (Some(a), Some(b)) if a != b => rs + w.radius,
            _ => (rs - w.radius).abs(),
        }
    }

    /// `max_{m <= n}` of [`CoupledPair::distance`].
    pub fn sup_distance(&self, n: u64) -> Result<f64> {
        if n > self.walk.steps() {
            return Err(Error::BeyondPath {
                requested: n,
                len: self.walk.steps(),
            });
        }
        Ok((0..=n).map(|m| self.distance(m)).fold(0.0, f64::max))
    }

    /// Sup-distance divided by [`coupling_scale`].
    pub fn normalized_ratio(&self, n: u64) -> Result<f64> {
        Ok(self.sup_distance(n)? / coupling_scale(n)?)
    }

    /// Checks that both processes sit on the same leg whenever they are inside
    /// the same Brownian excursion; returns how many steps were compared.
    pub fn leg_agreement(&self) -> Result<u64> {
        let mut shared = 0;
        for (m, (s, w)) in self.walk.states().iter().zip(&self.brownian).enumerate() {
            if s.is_origin() || w.leg.is_none() || self.record.tau_excursion[m] != w.excursion {
                continue;
            }
            shared += 1;
            if s.leg() != w.leg {
                return Err(Error::Invariant(format!(
                    "legs differ at step {m} inside a shared excursion"
                )));
            }
        }
        Ok(shared)
    }
}

/// Assigns legs and builds the first `n` steps of both spiders.
///
/// Brownian excursions containing a nonzero embedded value draw legs from
/// `rng` in excursion order; the walk inherits them. Excursions too small to
/// contain one draw lazily from an auxiliary stream when an integer time lands
/// in them.
pub fn couple(mut record: CouplingRecord, n: u64, weights: &LegWeights, rng: &mut RngStream) -> Result<CoupledPair> {
    if record.steps() < n || (record.unit_values.len() as u64) <= n {
        return Err(Error::ShortEmbedding {
            needed: n,
            available: record.steps().min(record.unit_values.len() as u64 - 1),
        });
    }
    let values = record.embedded.values();

    // Each walk excursion must map to a single Brownian excursion, and distinct ones to distinct ones.
    let mut owner: HashMap<u64, u64> = HashMap::new();
    let mut walk_excursion = 0u64;
    for i in 1..values.len() {
        if values[i - 1] == 0 {
            walk_excursion += 1;
        }
        if values[i] == 0 {
            continue;
        }
        let id = record.tau_excursion[i];
        if *owner.entry(id).or_insert(walk_excursion) != walk_excursion {
            return Err(Error::Invariant(format!(
                "Brownian excursion {id} carries two walk excursions (step {i})"
            )));
        }
    }
    let mut ids: Vec<u64> = owner.keys().copied().collect();
    ids.sort_unstable();
    let mut legs: HashMap<u64, LegId> = HashMap::with_capacity(ids.len());
    for &id in &ids {
        legs.insert(id, weights.sample(rng));
    }
    // Walk excursions are contiguous in time, so one Brownian id never reappears later.
    for i in 1..values.len() {
        if values[i] != 0 && values[i - 1] != 0 && record.tau_excursion[i] != record.tau_excursion[i - 1] {
            return Err(Error::Invariant(format!(
                "walk excursion split across Brownian excursions at step {i}"
            )));
        }
    }

    let mut aux = rng.auxiliary(1);
    let mut brownian = Vec::with_capacity(n as usize + 1);
    for m in 0..=n as usize {
        let b = record.unit_values[m];
        let id = record.unit_excursion[m];
        let leg = if b == 0.0 {
            None
        } else {
            Some(*legs.entry(id).or_insert_with(|| weights.sample(&mut aux)))
        };
        brownian.push(BrownianSpiderPoint {
            radius: b.abs(),
            leg,
            excursion: id,
        });
    }
    let states = (0..=n as usize)
        .map(|i| {
            let r = values[i].unsigned_abs();
            match r {
                0 => SpiderState::Origin,
                _ => SpiderState::On {
                    leg: legs[&record.tau_excursion[i]],
                    r,
                },
            }
        })
        .collect();
    let mut assignments: Vec<(u64, LegId)> = legs.into_iter().collect();
    assignments.sort_unstable();
    record.assignments = assignments;
    Ok(CoupledPair {
        walk: SpiderPath::from_trusted(states),
        brownian,
        record,
    })
}

/// Embeds `bm` and couples its first `n` steps.
pub fn build_coupled_pair(
    bm: &GridBrownianPath,
    n: u64,
    weights: &LegWeights,
    rng: &mut RngStream,
) -> Result<CoupledPair> {
    couple(skorokhod_embed(bm)?, n, weights, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean_sd, run_trials};

    #[test]
    fn grid_validation() {
        let mut s = RngStream::new(1, 0);
        assert!(simulate_bm_grid(1.0, 0.0, &mut s).is_err());
        assert!(simulate_bm_grid(1.0, -0.1, &mut s).is_err());
        assert!(simulate_bm_grid(0.001, 0.01, &mut s).is_err());
        let p = simulate_bm_grid(1.0, 0.01, &mut s).unwrap();
        assert_eq!(p.values().len(), 101);
        assert_eq!(p.values()[0], 0.0);
        assert!((p.horizon() - 1.0).abs() < 1e-12);
        assert!(skorokhod_embed(&GridBrownianPath::new(0.3, vec![0.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn endpoint_variance_is_horizon() {
        let trials = 100_000u64;
        let t = 2.0;
        let ends = run_trials(2, trials, |_, s| {
            *simulate_bm_grid(t, 0.02, s).unwrap().values().last().unwrap()
        });
        let var = ends.iter().map(|x| x * x).sum::<f64>() / trials as f64;
        // Var of the sample second moment is 2 T² / trials.
        assert!((var - t).abs() < 3.0 * (2.0 * t * t / trials as f64).sqrt());
    }

    #[test]
    fn disjoint_increments_uncorrelated() {
        let trials = 50_000u64;
        let pairs = run_trials(3, trials, |_, s| {
            let p = simulate_bm_grid(2.0, 0.01, s).unwrap();
            let v = p.values();
            (v[100] - v[0], v[200] - v[100])
        });
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in pairs {
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let rho = sxy / (sxx * syy).sqrt();
        assert!(rho.abs() < 3.0 / (trials as f64).sqrt());
    }

    #[test]
    fn monotone_path_exits_at_first_crossing() {
        let values: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let rec = skorokhod_embed(&GridBrownianPath::new(0.1, values).unwrap()).unwrap();
        assert_eq!(rec.tau[1], 10);
        assert_eq!(&rec.embedded.values()[..4], &[0, 1, 2, 3]);
    }

    #[test]
    fn snap_guard_trips_on_a_jump() {
        let bm = GridBrownianPath::new(0.01, vec![0.0, 0.5, 2.5]).unwrap();
        assert!(matches!(skorokhod_embed(&bm), Err(Error::SnapGuard { .. })));
    }

    #[test]
    fn partial_record_when_horizon_runs_out() {
        let bm = GridBrownianPath::new(0.5, vec![0.0, 0.5, 0.0]).unwrap();
        let rec = skorokhod_embed(&bm).unwrap();
        assert_eq!(rec.steps(), 0);
        let w = LegWeights::uniform(2).unwrap();
        assert!(matches!(
            couple(rec, 1, &w, &mut RngStream::new(0, 0)),
            Err(Error::ShortEmbedding { .. })
        ));
    }

    #[test]
    fn streaming_matches_materialized() {
        let dt = 1e-3;
        let bm = simulate_bm_grid(300.0, dt, &mut RngStream::new(7, 7)).unwrap();
        let full = skorokhod_embed(&bm).unwrap();
        let n = 100;
        let stream = embed_streaming(n, dt, 300.0, &mut RngStream::new(7, 7)).unwrap();
        assert_eq!(&full.tau[..=n as usize], &stream.tau[..]);
        assert_eq!(&full.embedded.values()[..=n as usize], stream.embedded.values());
        assert_eq!(&full.unit_values[..stream.unit_values.len()], &stream.unit_values[..]);
        assert!(matches!(
            embed_streaming(n, dt, 5.0, &mut RngStream::new(7, 7)),
            Err(Error::ShortEmbedding { .. })
        ));
    }

    #[test]
    fn exit_durations_have_mean_one() {
        let n = 200u64;
        let trials = 400u64;
        let ratios = run_trials(5, trials, |_, s| {
            embed_streaming(n, 1e-3, 4.0 * n as f64, s)
                .unwrap()
                .tau_ratio(n)
                .unwrap()
        });
        let (mean, _) = mean_sd(&ratios);
        // Band-exit times have variance 2/3. Grid detection overshoots each band
        // edge by about 0.58 sqrt(dt), which lengthens exits by roughly twice that.
        let sigma = (2.0 / 3.0 / (n * trials) as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sigma + 1.5 * 1e-3f64.sqrt(), "mean {mean}");
    }

    #[test]
    fn single_leg_distance_is_radial_gap() {
        let w = LegWeights::uniform(1).unwrap();
        let mut s = RngStream::new(8, 0);
        let rec = embed_streaming(300, 1e-3, 2000.0, &mut s).unwrap();
        let pair = couple(rec, 300, &w, &mut s).unwrap();
        for m in 0..=300u64 {
            let expected = (pair.record.embedded.values()[m as usize].abs() as f64
                - pair.record.unit_values[m as usize].abs())
            .abs();
            assert!((pair.distance(m) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn coupled_pair_invariants() {
        let w = LegWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        for seed in 0..10 {
            let mut s = RngStream::new(seed, 0);
            let rec = embed_streaming(500, 1e-3, 3000.0, &mut s).unwrap();
            let pair = couple(rec, 500, &w, &mut s).unwrap();
            assert!(SpiderPath::new(pair.walk.states().to_vec()).is_ok());
            assert!(pair.leg_agreement().unwrap() > 0);
            for m in 0..=500u64 {
                let st = pair.walk.states()[m as usize];
                let pt = pair.brownian[m as usize];
                if st.leg().is_some() && st.leg() == pt.leg {
                    assert!((pair.distance(m) - (st.radius() as f64 - pt.radius).abs()).abs() < 1e-12);
                }
            }
            let r = pair.record.max_overshoot;
            assert!(r <= SNAP_GUARD_FACTOR * 1e-3f64.sqrt());
        }
    }

    #[test]
    fn coupling_is_deterministic() {
        let w = LegWeights::uniform(3).unwrap();
        let run = || {
            let mut s = RngStream::new(99, 3);
            let rec = embed_streaming(200, 1e-3, 2000.0, &mut s).unwrap();
            couple(rec, 200, &w, &mut s).unwrap()
        };
        assert_eq!(run(), run());
    }
}
