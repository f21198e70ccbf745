use crate::error::{Error, Result};

/// Empirical distribution function over a sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::OutOfRange("sample contains NaN".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Right-continuous step function `#{x_i <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }
}

/// Kolmogorov-Smirnov distance between an empirical CDF and a continuous CDF.
///
/// Both one-sided gaps are taken at every sample point, so ties contribute
/// the full height of their jump.
pub fn ks_distance<F: Fn(f64) -> f64>(ecdf: &EmpiricalCdf, cdf: F) -> f64 {
    let n = ecdf.sorted.len() as f64;
    ecdf.sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{phi, RngStream};
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn empty_sample_is_rejected() {
        assert_eq!(EmpiricalCdf::new(vec![]), Err(Error::EmptySample));
    }

    #[test]
    fn single_point_against_uniform() {
        let e = EmpiricalCdf::new(vec![0.5]).unwrap();
        assert!((ks_distance(&e, |x| x.clamp(0.0, 1.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_is_right_continuous() {
        let e = EmpiricalCdf::new(vec![2.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.eval(0.9), 0.0);
        assert_eq!(e.eval(1.0), 0.25);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(2.5), 0.75);
        assert_eq!(e.eval(3.0), 1.0);
    }

    #[test]
    fn ties_count_full_jump() {
        let e = EmpiricalCdf::new(vec![0.5; 10]).unwrap();
        assert!((ks_distance(&e, |x| x.clamp(0.0, 1.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_distance_when_reference_matches_steps() {
        // A CDF that agrees with the ecdf at each sample point from both sides
        // is impossible for a continuous reference; the bound is 1/(2n).
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let e = EmpiricalCdf::new(xs).unwrap();
        let d = ks_distance(&e, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn sample_from_reference_passes_kolmogorov_bound() {
        let mut s = RngStream::new(11, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut s)).collect();
        let e = EmpiricalCdf::new(xs).unwrap();
        let d = ks_distance(&e, phi);
        // 99% asymptotic Kolmogorov quantile.
        assert!(d < 1.63 / 100.0, "D = {d}");
        assert!((0.0..=1.0).contains(&d));
    }
}
