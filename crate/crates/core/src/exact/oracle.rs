//! Exhaustive enumeration of spider-walk step sequences.
//!
//! Every admissible sequence is walked explicitly. Sequences sharing an end
//! state, a number of fair-coin steps and a leg-choice histogram have equal
//! probability, so the search only counts them and multiplies out at the end.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

use super::ExactWeights;
use crate::error::{Error, Result};
use crate::spider::{LegId, LegWeights, SpiderState};

/// Largest step count the oracle accepts.
pub const MAX_ORACLE_STEPS: u64 = 14;

type Key = (SpiderState, u32, Vec<u8>);

struct Search<'a> {
    weights: &'a ExactWeights,
    counts: HashMap<Key, u64>,
    legs: Vec<u8>,
}

impl Search<'_> {
    fn walk(&mut self, state: SpiderState, remaining: u64, halves: u32) {
        if remaining == 0 {
            *self.counts.entry((state, halves, self.legs.clone())).or_insert(0) += 1;
            return;
        }
        match state {
            SpiderState::Origin => {
                for slot in 0..self.weights.n_legs() as usize {
                    if self.weights.probs()[slot].is_zero() {
                        continue;
                    }
                    self.legs[slot] += 1;
                    let next = SpiderState::On {
                        leg: LegId::from_zero_based(slot),
                        r: 1,
                    };
                    self.walk(next, remaining - 1, halves);
                    self.legs[slot] -= 1;
                }
            }
            SpiderState::On { leg, r } => {
                self.walk(SpiderState::On { leg, r: r + 1 }, remaining - 1, halves + 1);
                self.walk(SpiderState::at(r - 1, leg), remaining - 1, halves + 1);
            }
        }
    }
}

/// Exact law of the state after `n_steps` steps from `start`.
pub fn brute_force_distribution(
    n_steps: u64,
    start: SpiderState,
    weights: &ExactWeights,
) -> Result<BTreeMap<SpiderState, BigRational>> {
    if n_steps > MAX_ORACLE_STEPS {
        return Err(Error::TooManySteps {
            requested: n_steps,
            max: MAX_ORACLE_STEPS,
        });
    }
    if let Some(leg) = start.leg() {
        LegId::new(leg.index(), weights.n_legs())?;
    }
    let mut search = Search {
        weights,
        counts: HashMap::new(),
        legs: vec![0; weights.n_legs() as usize],
    };
    search.walk(start, n_steps, 0);

    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut law: BTreeMap<SpiderState, BigRational> = BTreeMap::new();
    for ((state, halves, legs), count) in search.counts {
        let mut prob = BigRational::from_integer(BigInt::from(count)) * Pow::pow(&half, halves);
        for (slot, &c) in legs.iter().enumerate() {
            if c > 0 {
                prob *= Pow::pow(&weights.probs()[slot], c as u32);
            }
        }
        *law.entry(state).or_insert_with(BigRational::zero) += prob;
    }
    Ok(law)
}

/// Exact `P(S_{n_steps} = end | S_0 = start)` by enumeration.
pub fn brute_force_transition_exact(
    n_steps: u64,
    start: SpiderState,
    end: SpiderState,
    weights: &ExactWeights,
) -> Result<BigRational> {
    if let Some(leg) = end.leg() {
        LegId::new(leg.index(), weights.n_legs())?;
    }
    let law = brute_force_distribution(n_steps, start, weights)?;
    Ok(law.get(&end).cloned().unwrap_or_else(BigRational::zero))
}

/// Enumeration oracle for floating weights, which must have small-denominator rational forms.
pub fn brute_force_transition(
    n_steps: u64,
    start: SpiderState,
    end: SpiderState,
    weights: &LegWeights,
) -> Result<BigRational> {
    brute_force_transition_exact(n_steps, start, end, &ExactWeights::from_leg_weights(weights)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leg(i: u32, n: u32) -> LegId {
        LegId::new(i, n).unwrap()
    }

    #[test]
    fn two_steps_from_origin() {
        let w = LegWeights::new(vec![0.5, 0.3, 0.2]).unwrap();
        let back = brute_force_transition(2, SpiderState::Origin, SpiderState::Origin, &w).unwrap();
        assert_eq!(back, BigRational::new(1.into(), 2.into()));
        for j in 1..=3 {
            let up = brute_force_transition(2, SpiderState::Origin, SpiderState::at(2, leg(j, 3)), &w).unwrap();
            let pj = ExactWeights::from_leg_weights(&w).unwrap().probs()[j as usize - 1].clone();
            assert_eq!(up, pj / BigInt::from(2));
        }
    }

    #[test]
    fn total_mass_is_one() {
        for n_legs in 1..=4u32 {
            let w = ExactWeights::uniform(n_legs).unwrap();
            for n in 0..=10 {
                for start in [SpiderState::Origin, SpiderState::at(3, leg(n_legs, n_legs))] {
                    let total: BigRational = brute_force_distribution(n, start, &w).unwrap().values().sum();
                    assert!(total.is_one(), "N={n_legs} n={n}");
                }
            }
        }
    }

    #[test]
    fn zero_weight_leg_unreachable_from_origin() {
        let w = ExactWeights::from_leg_weights(&LegWeights::new(vec![0.0, 1.0]).unwrap()).unwrap();
        let law = brute_force_distribution(6, SpiderState::Origin, &w).unwrap();
        assert!(law.keys().all(|s| s.leg() != Some(leg(1, 2))));
    }

    #[test]
    fn rejects_large_step_counts_and_foreign_legs() {
        let w = ExactWeights::uniform(2).unwrap();
        assert!(matches!(
            brute_force_distribution(15, SpiderState::Origin, &w),
            Err(Error::TooManySteps { .. })
        ));
        let far = SpiderState::at(1, LegId::new(3, 3).unwrap());
        assert!(brute_force_distribution(2, far, &w).is_err());
    }
}
