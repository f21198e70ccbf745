//! Random walks and Brownian motion on an `N`-leg spider.
//!
//! The crate covers exact lattice transition probabilities, simulation of the
//! spider walk (directly and via excursion-to-leg assignment), a Skorokhod
//! coupling with the Brownian spider, height statistics, and the
//! growing-legs experiments that reduce to coupon collecting.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod growth;
pub mod heights;
pub mod sim;
pub mod spider;
pub mod stats;

pub use error::{Error, Result};
pub use spider::{local_time, spider_distance, step, LegId, LegWeights, SpiderPath, SpiderState, WalkPath};
