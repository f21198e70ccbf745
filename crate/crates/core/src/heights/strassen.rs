//! The limit-set functional `2 sum a - max a` and the energy `int f'^2` of
//! piecewise linear paths, generic over `f64` and exact rationals.

use num_rational::BigRational;
use num_traits::{Num, Zero};

use crate::error::{Error, Result};

/// Number type for energy computations.
pub trait Scalar: Num + Clone + PartialOrd {
    /// Slack allowed when comparing against 1.
    fn slack() -> Self;
}

impl Scalar for f64 {
    fn slack() -> Self {
        1e-12
    }
}

impl Scalar for BigRational {
    fn slack() -> Self {
        BigRational::zero()
    }
}

fn at_most_one<T: Scalar>(x: &T) -> bool {
    *x <= T::one() + T::slack()
}

/// `A(N) = 2 sum a(j) - max a(j)` and whether it is at most 1.
pub fn strassen_condition<T: Scalar>(a: &[T]) -> Result<(T, bool)> {
    if a.iter().any(|x| *x < T::zero()) {
        return Err(Error::OutOfRange("scaled heights must be nonnegative".into()));
    }
    let mut sum = T::zero();
    let mut max = T::zero();
    for x in a {
        sum = sum + x.clone();
        if *x > max {
            max = x.clone();
        }
    }
    let value = sum.clone() + sum - max;
    let ok = at_most_one(&value);
    Ok((value, ok))
}

/// Continuous piecewise linear function on `[0, 1]` with `f(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFn<T> {
    knots: Vec<(T, T)>,
}

impl<T: Scalar> PiecewiseLinearFn<T> {
    /// Knots must run from `(0, 0)` to `x = 1` with nondecreasing abscissae.
    pub fn new(knots: Vec<(T, T)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::OutOfRange("need at least two knots".into()));
        }
        if !(knots[0].0.is_zero() && knots[0].1.is_zero()) {
            return Err(Error::OutOfRange("first knot must be (0, 0)".into()));
        }
        if !knots.last().unwrap().0.is_one() {
            return Err(Error::OutOfRange("last knot must sit at x = 1".into()));
        }
        if knots.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::OutOfRange("knot abscissae must be nondecreasing".into()));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    /// Linear interpolation at `x` in `[0, 1]`.
    pub fn eval(&self, x: &T) -> Result<T> {
        if *x < T::zero() || *x > T::one() {
            return Err(Error::OutOfRange("evaluation point outside [0, 1]".into()));
        }
        let i = self.knots.partition_point(|k| k.0 <= *x).clamp(1, self.knots.len() - 1);
        let (x0, y0) = &self.knots[i - 1];
        let (x1, y1) = &self.knots[i];
        if x1 == x0 {
            return Ok(y1.clone());
        }
        Ok(y0.clone() + (y1.clone() - y0.clone()) * (x.clone() - x0.clone()) / (x1.clone() - x0.clone()))
    }
}

/// `sum (df)^2 / dx` over the segments, which is `int f'^2` for piecewise linear `f`.
pub fn strassen_energy<T: Scalar>(f: &PiecewiseLinearFn<T>) -> Result<(T, bool)> {
    let mut total = T::zero();
    for (i, w) in f.knots.windows(2).enumerate() {
        let dx = w[1].0.clone() - w[0].0.clone();
        if dx.is_zero() {
            return Err(Error::OutOfRange(format!("segment {i} has zero length")));
        }
        let df = w[1].1.clone() - w[0].1.clone();
        total = total + df.clone() * df / dx;
    }
    let ok = at_most_one(&total);
    Ok((total, ok))
}

/// `sum (f(t_i) - f(t_{i-1}))^2 / (t_i - t_{i-1})` over a strictly increasing partition of `[0, 1]`.
pub fn partition_energy<T: Scalar>(f: &PiecewiseLinearFn<T>, points: &[T]) -> Result<T> {
    if points.len() < 2 || !points[0].is_zero() || !points.last().unwrap().is_one() {
        return Err(Error::OutOfRange("partition must run from 0 to 1".into()));
    }
    let mut total = T::zero();
    let mut prev = f.eval(&points[0])?;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::OutOfRange("partition must be strictly increasing".into()));
        }
        let cur = f.eval(&w[1])?;
        let df = cur.clone() - prev;
        total = total + df.clone() * df / (w[1].clone() - w[0].clone());
        prev = cur;
    }
    Ok(total)
}

/// Zig-zag path that climbs to each positive `a(j)` in turn, alternating sign,
/// with the largest visited last and a flat tail up to `x = 1`.
///
/// Its energy equals `2 sum a - max a`, so this fails when that exceeds 1.
pub fn zigzag<T: Scalar>(a: &[T]) -> Result<PiecewiseLinearFn<T>> {
    let (value, ok) = strassen_condition(a)?;
    if !ok || value > T::one() {
        return Err(Error::OutOfRange("heights violate 2 sum a - max a <= 1".into()));
    }
    let mut order: Vec<usize> = (0..a.len()).filter(|&i| a[i] > T::zero()).collect();
    if let Some(top) = order
        .iter()
        .copied()
        .reduce(|best, i| if a[i] > a[best] { i } else { best })
    {
        order.retain(|&i| i != top);
        order.push(top);
    }
    let mut knots = vec![(T::zero(), T::zero())];
    let mut climbed = T::zero();
    let mut up = true;
    for &i in &order {
        let x = climbed.clone() + climbed.clone() + a[i].clone();
        let y = if up { a[i].clone() } else { T::zero() - a[i].clone() };
        knots.push((x, y));
        climbed = climbed + a[i].clone();
        up = !up;
    }
    let last = knots.last().unwrap().clone();
    if last.0 < T::one() {
        knots.push((T::one(), last.1));
    }
    PiecewiseLinearFn::new(knots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn condition_examples() {
        assert_eq!(strassen_condition(&[0.0; 4]).unwrap(), (0.0, true));
        assert_eq!(strassen_condition(&[1.0, 0.0, 0.0]).unwrap(), (1.0, true));
        for n in 1..=6i64 {
            let a = vec![r(1, 2 * n - 1); n as usize];
            assert_eq!(strassen_condition(&a).unwrap(), (r(1, 1), true));
        }
        assert!(!strassen_condition(&[0.5, 0.5]).unwrap().1);
        assert!(strassen_condition(&[-0.1]).is_err());
    }

    #[test]
    fn energy_examples() {
        let flat = PiecewiseLinearFn::new(vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(strassen_energy(&flat).unwrap(), (0.0, true));
        let diag = PiecewiseLinearFn::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(strassen_energy(&diag).unwrap(), (1.0, true));
        let kinked = PiecewiseLinearFn::new(vec![(0.0, 0.0), (0.5, 0.5), (0.5, 0.2), (1.0, 0.0)]).unwrap();
        assert!(strassen_energy(&kinked).is_err());
        assert!(PiecewiseLinearFn::new(vec![(0.0, 0.1), (1.0, 0.0)]).is_err());
        assert!(PiecewiseLinearFn::new(vec![(0.0, 0.0), (0.9, 0.0)]).is_err());
    }

    #[test]
    fn zigzag_two_leg_example() {
        // a = (0.3, 0.2): the larger 0.3 goes last.
        let f = zigzag(&[r(3, 10), r(1, 5)]).unwrap();
        assert_eq!(
            f.knots(),
            &[
                (r(0, 1), r(0, 1)),
                (r(1, 5), r(1, 5)),
                (r(7, 10), r(-3, 10)),
                (r(1, 1), r(-3, 10))
            ]
        );
        // Segments: 0.2²/0.2 + 0.5²/0.5 + 0 = 0.7 = 2(0.5) - 0.3.
        assert_eq!(strassen_energy(&f).unwrap(), (r(7, 10), true));
    }

    #[test]
    fn zigzag_rejects_outside_the_limit_set() {
        assert!(zigzag(&[0.6, 0.6]).is_err());
        let f = zigzag(&[0.0, 0.0]).unwrap();
        assert_eq!(f.knots().len(), 2);
    }

    fn rational_vector() -> impl Strategy<Value = Vec<BigRational>> {
        (1usize..=5)
            .prop_flat_map(|n| prop::collection::vec((0i64..=40, 1i64..=60), n))
            .prop_map(|v| {
                let a: Vec<BigRational> = v.into_iter().map(|(p, q)| r(p, q)).collect();
                // Scale into the limit set when needed.
                let (value, _) = strassen_condition(&a).unwrap();
                if value > BigRational::from_integer(1.into()) {
                    a.into_iter().map(|x| x / value.clone()).collect()
                } else {
                    a
                }
            })
    }

    proptest! {
        #[test]
        fn zigzag_energy_equals_functional(a in rational_vector()) {
            let (value, ok) = strassen_condition(&a).unwrap();
            prop_assert!(ok);
            let f = zigzag(&a).unwrap();
            prop_assert_eq!(strassen_energy(&f).unwrap().0, value);
        }

        #[test]
        fn partitions_never_exceed_energy(a in rational_vector(), cuts in prop::collection::btree_set(1i64..1000, 0..8)) {
            let f = zigzag(&a).unwrap();
            let mut points = vec![r(0, 1)];
            points.extend(cuts.into_iter().map(|c| r(c, 1000)));
            points.push(r(1, 1));
            let energy = strassen_energy(&f).unwrap().0;
            prop_assert!(partition_energy(&f, &points).unwrap() <= energy);
            let knot_points: Vec<BigRational> = {
                let mut v: Vec<BigRational> = f.knots().iter().map(|k| k.0.clone()).collect();
                v.dedup();
                v
            };
            prop_assert_eq!(partition_energy(&f, &knot_points).unwrap(), energy);
        }
    }
}
