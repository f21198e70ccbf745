//! Exact samplers for return times of the simple symmetric walk.
//!
//! From height 1, the time `T` to first reach 0 is odd and satisfies
//! `P(T >= 2m + 1) = u(m) = C(2m, m) / 4^m`, so `T` is drawn by inverting `u`.

use std::sync::OnceLock;

use crate::stats::RngStream;

const TABLE_LEN: usize = 1025;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        let mut u = 1.0f64;
        t.push(u);
        for m in 1..TABLE_LEN {
            u *= (2 * m - 1) as f64 / (2 * m) as f64;
            t.push(u);
        }
        t
    })
}

/// `ln u(m)` from the asymptotic expansion; accurate to ~1e-16 once `m > 1000`.
fn log_survival_asymptotic(m: f64) -> f64 {
    let inv = 1.0 / m;
    let inv3 = inv * inv * inv;
    -0.5 * (std::f64::consts::PI * m).ln() - inv / 8.0 + inv3 / 192.0 - inv3 * inv * inv / 640.0
}

/// `u(m) = C(2m, m) / 4^m`: the chance a walk from 1 has not hit 0 by time `2m`.
pub fn survival_prob(m: u64) -> f64 {
    if (m as usize) < TABLE_LEN {
        table()[m as usize]
    } else {
        log_survival_asymptotic(m as f64).exp()
    }
}

/// Largest `m` with `u(m) >= target`, or `None` if it exceeds `max_m`.
fn invert_survival(target: f64, max_m: u64) -> Option<u64> {
    let t = table();
    if target > t[TABLE_LEN - 1] {
        // u is decreasing: count the entries that are still >= target.
        let m = t.partition_point(|&u| u >= target) as u64 - 1;
        return (m <= max_m).then_some(m);
    }
    let log_target = target.ln();
    let guess = 1.0 / (std::f64::consts::PI * target * target) - 0.25;
    if guess > max_m as f64 + 2.0 {
        return None;
    }
    let mut m = (guess.floor() as u64).max(TABLE_LEN as u64 - 1);
    let above = |m: u64| {
        m < TABLE_LEN as u64 && t[m as usize] >= target
            || m >= TABLE_LEN as u64 && log_survival_asymptotic(m as f64) >= log_target
    };
    while !above(m) {
        m -= 1;
    }
    while above(m + 1) {
        m += 1;
    }
    (m <= max_m).then_some(m)
}

/// Time for a walk at height 1 to first reach 0, if at most `cap`.
pub fn sample_return_time(rng: &mut RngStream, cap: u64) -> Option<u64> {
    if cap == 0 {
        return None;
    }
    let m = invert_survival(rng.open_unit(), (cap - 1) / 2)?;
    Some(2 * m + 1)
}

/// Number of returns to zero in steps `1..=n` of a walk started at zero.
pub fn sample_zero_count(n: u64, rng: &mut RngStream) -> u64 {
    let mut t = 0u64;
    let mut count = 0u64;
    // Each excursion spends one step leaving zero, then a return time from height 1.
    while t < n {
        t += 1;
        match sample_return_time(rng, n - t) {
            Some(back) => {
                t += back;
                count += 1;
            }
            None => break,
        }
    }
    count
}
