use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A piecewise constant function on ℝ with finitely many breakpoints.
///
/// `values[0]` holds on `(-∞, t_1)`, `values[i]` on `(t_i, t_{i+1})` and
/// `values[k]` on `(t_k, ∞)`. Adjacent equal pieces are merged, so the
/// representation is canonical. At a breakpoint [`evaluate`](Self::evaluate)
/// returns the larger adjacent value, which makes `χ_[0,1]` take the value 1 on
/// the closed interval.
#[derive(Clone, PartialEq)]
pub struct StepFunction<S> {
    breakpoints: Vec<S>,
    values: Vec<S>,
}

impl<S: Scalar> StepFunction<S> {
    pub fn new(breakpoints: Vec<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(Error::Malformed(format!(
                "step function with {} breakpoints needs {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Unsorted);
        }
        let mut f = StepFunction { breakpoints, values };
        f.canonicalize();
        Ok(f)
    }

    fn canonicalize(&mut self) {
        let mut bps = Vec::with_capacity(self.breakpoints.len());
        let mut vals = vec![self.values[0].clone()];
        for (t, v) in self.breakpoints.drain(..).zip(self.values.drain(..).skip(1)) {
            if vals.last() != Some(&v) {
                bps.push(t);
                vals.push(v);
            }
        }
        self.breakpoints = bps;
        self.values = vals;
    }

    pub fn constant(c: S) -> Self {
        StepFunction { breakpoints: vec![], values: vec![c] }
    }

    /// `c · χ_[lo,hi]`.
    pub fn indicator(lo: S, hi: S, c: S) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidInterval { lo: lo.to_string(), hi: hi.to_string() });
        }
        Self::new(vec![lo, hi], vec![S::zero(), c, S::zero()])
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn left_tail(&self) -> &S {
        &self.values[0]
    }

    pub fn right_tail(&self) -> &S {
        &self.values[self.values.len() - 1]
    }

    pub fn has_zero_tails(&self) -> bool {
        self.left_tail().is_zero() && self.right_tail().is_zero()
    }

    /// Smallest and largest breakpoint, if any.
    pub fn hull(&self) -> Option<(S, S)> {
        Some((self.breakpoints.first()?.clone(), self.breakpoints.last()?.clone()))
    }

    /// Index of the piece containing `x` in its interior, or `Err(i)` when `x = t_i`.
    pub fn locate(&self, x: &S) -> std::result::Result<usize, usize> {
        match self.breakpoints.binary_search_by(|t| t.partial_cmp(x).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => Err(i),
            Err(i) => Ok(i),
        }
    }

    pub fn evaluate(&self, x: &S) -> S {
        match self.locate(x) {
            Ok(i) => self.values[i].clone(),
            Err(i) => S::max_of(self.values[i].clone(), self.values[i + 1].clone()),
        }
    }

    /// Largest adjacent `|value|` at `x`: the limit of averages of `|f|` over windows shrinking to `x`.
    pub fn shrink_limit_abs(&self, x: &S) -> S {
        match self.locate(x) {
            Ok(i) => self.values[i].abs(),
            Err(i) => S::max_of(self.values[i].abs(), self.values[i + 1].abs()),
        }
    }

    pub fn map(&self, op: impl Fn(&S) -> S) -> Self {
        let mut f = StepFunction {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(op).collect(),
        };
        f.canonicalize();
        f
    }

    pub fn zip_with(&self, other: &Self, op: impl Fn(&S, &S) -> S) -> Self {
        let mut cuts: Vec<S> = self.breakpoints.iter().chain(other.breakpoints.iter()).cloned().collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        cuts.dedup();
        let mut values = Vec::with_capacity(cuts.len() + 1);
        // sample each open piece at an interior point
        let probe = |i: usize| -> S {
            let two = S::int(2);
            match (i.checked_sub(1).map(|k| &cuts[k]), cuts.get(i)) {
                (None, Some(t)) => t.clone() - S::one(),
                (Some(t), None) => t.clone() + S::one(),
                (Some(a), Some(b)) => (a.clone() + b.clone()) / two,
                (None, None) => S::zero(),
            }
        };
        for i in 0..=cuts.len() {
            let x = probe(i);
            values.push(op(&self.evaluate_open(&x), &other.evaluate_open(&x)));
        }
        let mut f = StepFunction { breakpoints: cuts, values };
        f.canonicalize();
        f
    }

    fn evaluate_open(&self, x: &S) -> S {
        match self.locate(x) {
            Ok(i) => self.values[i].clone(),
            Err(i) => self.values[i].clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    /// `x ↦ f(-x)`.
    pub fn reflect(&self) -> Self {
        StepFunction {
            breakpoints: self.breakpoints.iter().rev().map(|t| -t.clone()).collect(),
            values: self.values.iter().rev().cloned().collect(),
        }
    }

    /// Exact `∫_L^R |f|`.
    pub fn integral_abs(&self, l: &S, r: &S) -> Result<S> {
        if l > r {
            return Err(Error::InvalidInterval { lo: l.to_string(), hi: r.to_string() });
        }
        let mut total = S::zero();
        for (i, v) in self.values.iter().enumerate() {
            let lo = if i == 0 { l.clone() } else { S::max_of(self.breakpoints[i - 1].clone(), l.clone()) };
            let hi = if i == self.breakpoints.len() { r.clone() } else { S::min_of(self.breakpoints[i].clone(), r.clone()) };
            if lo < hi {
                total = total + v.abs() * (hi - lo);
            }
        }
        Ok(total)
    }

    pub fn convert<T: Scalar>(&self) -> StepFunction<T> {
        use crate::scalar::convert;
        StepFunction {
            breakpoints: self.breakpoints.iter().map(convert).collect(),
            values: self.values.iter().map(convert).collect(),
        }
    }
}

impl<S: Scalar> fmt::Debug for StepFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Step[{}", self.values[0])?;
        for (t, v) in self.breakpoints.iter().zip(self.values.iter().skip(1)) {
            write!(f, " |{t}| {v}")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn chi01() -> StepFunction<Rational> {
        StepFunction::indicator(q(0, 1), q(1, 1), q(1, 1)).unwrap()
    }

    #[test]
    fn indicator_integrals() {
        let f = chi01();
        assert_eq!(f.integral_abs(&q(0, 1), &q(2, 1)).unwrap(), q(1, 1));
        assert_eq!(f.integral_abs(&q(-1, 1), &q(1, 2)).unwrap(), q(1, 2));
        assert!(f.integral_abs(&q(1, 1), &q(0, 1)).is_err());
        assert_eq!(f.evaluate(&q(0, 1)), q(1, 1));
        assert_eq!(f.evaluate(&q(1, 1)), q(1, 1));
        assert_eq!(f.evaluate(&q(3, 2)), q(0, 1));
    }

    #[test]
    fn pieces_merge() {
        let f = StepFunction::new(vec![q(0, 1), q(1, 1), q(2, 1)], vec![q(0, 1), q(1, 1), q(1, 1), q(0, 1)]).unwrap();
        assert_eq!(f.breakpoints(), &[q(0, 1), q(2, 1)]);
        assert!(StepFunction::new(vec![q(1, 1), q(0, 1)], vec![q(0, 1); 3]).is_err());
    }

    #[test]
    fn sum_of_indicators() {
        let f = chi01();
        let g = StepFunction::indicator(q(0, 1), q(5, 1), q(1, 4)).unwrap();
        let s = f.add(&g);
        assert_eq!(s.breakpoints(), &[q(0, 1), q(1, 1), q(5, 1)]);
        assert_eq!(s.values(), &[q(0, 1), q(5, 4), q(1, 4), q(0, 1)]);
        assert_eq!(s.sub(&f), g);
        assert_eq!(f.reflect().integral_abs(&q(-1, 1), &q(0, 1)).unwrap(), q(1, 1));
    }
}
