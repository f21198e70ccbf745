//! Gaussian transition densities of the Brownian spider and their lattice-scaled forms.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check(t: f64, x: f64, y: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::OutOfRange(format!("time must be positive, got {t}")));
    }
    if x < 0.0 || y < 0.0 {
        return Err(Error::OutOfRange(format!("radii must be nonnegative, got {x}, {y}")));
    }
    Ok(())
}

fn heat(t: f64, d: f64) -> f64 {
    (-d * d / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// Density at radius `y` on a leg of weight `p_leg` at time `t`, starting from the origin.
pub fn density_origin(t: f64, y: f64, p_leg: f64) -> Result<f64> {
    check(t, 0.0, y)?;
    Ok(2.0 * p_leg * heat(t, y))
}

/// Density at radius `y` on another leg of weight `p_target`, starting at radius `x`.
pub fn density_cross(t: f64, x: f64, y: f64, p_target: f64) -> Result<f64> {
    check(t, x, y)?;
    Ok(2.0 * p_target * heat(t, x + y))
}

/// Density at radius `y` on the starting leg (weight `p_leg`), starting at radius `x`.
pub fn density_same(t: f64, x: f64, y: f64, p_leg: f64) -> Result<f64> {
    check(t, x, y)?;
    Ok(heat(t, x - y) - (1.0 - 2.0 * p_leg) * heat(t, x + y))
}

// Over 2[nt] steps the walk has spent time 2t in units of n, and even sites
// are 2 apart, so each lattice limit is 2 * density(2t, 2x, 2y).

/// Limit of `sqrt(n) P(origin -> radius 2[y sqrt n])` over `2[nt]` steps.
pub fn lattice_density_origin(t: f64, y: f64, p_leg: f64) -> Result<f64> {
    check(t, 0.0, y)?;
    Ok(2.0 * p_leg * (-y * y / t).exp() / (PI * t).sqrt())
}

/// Cross-leg lattice limit.
pub fn lattice_density_cross(t: f64, x: f64, y: f64, p_target: f64) -> Result<f64> {
    check(t, x, y)?;
    Ok(2.0 * p_target * (-(x + y).powi(2) / t).exp() / (PI * t).sqrt())
}

/// Same-leg lattice limit.
pub fn lattice_density_same(t: f64, x: f64, y: f64, p_leg: f64) -> Result<f64> {
    check(t, x, y)?;
    let norm = (PI * t).sqrt();
    Ok((-(x - y).powi(2) / t).exp() / norm - (1.0 - 2.0 * p_leg) * (-(x + y).powi(2) / t).exp() / norm)
}
