use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A maximal block of equal values inside the core.
#[derive(Clone, Debug, PartialEq)]
pub struct Run<S> {
    pub start: i64,
    pub end: i64,
    pub value: S,
}

impl<S> Run<S> {
    pub fn len(&self) -> i64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }
}

/// An eventually constant function `ℤ → S`: `a` left of the core, `b` right of it.
///
/// The core is stored run-length encoded and kept canonical (adjacent runs differ,
/// redundant cells at either end are trimmed), so two functions are equal exactly
/// when their fields are equal. Wide cores with few distinct runs, such as
/// `δ + c·χ_[0,h]` for large `h`, stay cheap.
#[derive(Clone, PartialEq)]
pub struct DiscreteBVFunction<S> {
    runs: Vec<Run<S>>,
    left_tail: S,
    right_tail: S,
}

impl<S: Scalar> DiscreteBVFunction<S> {
    /// Builds `f` from dense core values starting at `core_lo`.
    pub fn new(core_lo: i64, values: Vec<S>, left_tail: S, right_tail: S) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Malformed("discrete function needs at least one core value".into()));
        }
        let runs = values
            .into_iter()
            .enumerate()
            .map(|(i, value)| Run { start: core_lo + i as i64, end: core_lo + i as i64, value })
            .collect();
        Ok(Self::from_runs_unchecked(runs, left_tail, right_tail))
    }

    /// Builds `f` from contiguous runs. Runs must be nonempty, ordered and adjacent.
    pub fn from_runs(runs: Vec<Run<S>>, left_tail: S, right_tail: S) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::Malformed("discrete function needs at least one run".into()));
        }
        for (i, r) in runs.iter().enumerate() {
            if r.is_empty() {
                return Err(Error::Malformed(format!("run {i} is empty")));
            }
            if i > 0 && runs[i - 1].end + 1 != r.start {
                return Err(Error::Malformed(format!("run {i} is not adjacent to its predecessor")));
            }
        }
        Ok(Self::from_runs_unchecked(runs, left_tail, right_tail))
    }

    fn from_runs_unchecked(runs: Vec<Run<S>>, left_tail: S, right_tail: S) -> Self {
        let mut f = DiscreteBVFunction { runs, left_tail, right_tail };
        f.canonicalize();
        f
    }

    fn canonicalize(&mut self) {
        let mut merged: Vec<Run<S>> = Vec::with_capacity(self.runs.len());
        for r in self.runs.drain(..) {
            match merged.last_mut() {
                Some(last) if last.value == r.value => last.end = r.end,
                _ => merged.push(r),
            }
        }
        if merged.len() > 1 && merged[0].value == self.left_tail {
            merged.remove(0);
        }
        if merged.len() > 1 && merged[merged.len() - 1].value == self.right_tail {
            merged.pop();
        }
        if merged.len() == 1 {
            let r = &mut merged[0];
            let eq_left = r.value == self.left_tail;
            let eq_right = r.value == self.right_tail;
            if eq_left && eq_right {
                r.start = 0;
                r.end = 0;
            } else if eq_left {
                r.start = r.end;
            } else if eq_right {
                r.end = r.start;
            }
        }
        self.runs = merged;
    }

    pub fn constant(c: S) -> Self {
        Self::from_runs_unchecked(vec![Run { start: 0, end: 0, value: c.clone() }], c.clone(), c)
    }

    pub fn zero() -> Self {
        Self::constant(S::zero())
    }

    /// `f(0) = 1`, `f(n) = 0` elsewhere.
    pub fn delta_at_origin() -> Self {
        Self::from_runs_unchecked(vec![Run { start: 0, end: 0, value: S::one() }], S::zero(), S::zero())
    }

    /// `c · χ_[lo,hi]`.
    pub fn indicator(lo: i64, hi: i64, c: S) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInterval { lo: lo.to_string(), hi: hi.to_string() });
        }
        Ok(Self::from_runs_unchecked(vec![Run { start: lo, end: hi, value: c }], S::zero(), S::zero()))
    }

    /// `n ↦ f(n) + c·χ_[lo,hi](n)`.
    pub fn add_indicator(&self, lo: i64, hi: i64, c: S) -> Result<Self> {
        Ok(self.add(&Self::indicator(lo, hi, c)?))
    }

    pub fn core_lo(&self) -> i64 {
        self.runs[0].start
    }

    pub fn core_hi(&self) -> i64 {
        self.runs[self.runs.len() - 1].end
    }

    pub fn width(&self) -> i64 {
        self.core_hi() - self.core_lo() + 1
    }

    pub fn left_tail(&self) -> &S {
        &self.left_tail
    }

    pub fn right_tail(&self) -> &S {
        &self.right_tail
    }

    pub fn runs(&self) -> &[Run<S>] {
        &self.runs
    }

    /// Dense copy of the core values. Allocates `width()` entries.
    pub fn core_values(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.width() as usize);
        for r in &self.runs {
            for _ in 0..r.len() {
                out.push(r.value.clone());
            }
        }
        out
    }

    pub fn is_constant(&self) -> bool {
        self.runs.len() == 1 && self.runs[0].value == self.left_tail && self.left_tail == self.right_tail
    }

    pub fn evaluate(&self, n: i64) -> S {
        if n < self.core_lo() {
            return self.left_tail.clone();
        }
        if n > self.core_hi() {
            return self.right_tail.clone();
        }
        let i = self.runs.partition_point(|r| r.start <= n) - 1;
        self.runs[i].value.clone()
    }

    pub fn map(&self, op: impl Fn(&S) -> S) -> Self {
        let runs = self
            .runs
            .iter()
            .map(|r| Run { start: r.start, end: r.end, value: op(&r.value) })
            .collect();
        Self::from_runs_unchecked(runs, op(&self.left_tail), op(&self.right_tail))
    }

    /// Pointwise combination `n ↦ op(f(n), g(n))`.
    pub fn zip_with(&self, other: &Self, op: impl Fn(&S, &S) -> S) -> Self {
        let mut cuts: Vec<i64> = self
            .runs
            .iter()
            .chain(other.runs.iter())
            .flat_map(|r| [r.start, r.end + 1])
            .collect();
        cuts.sort_unstable();
        cuts.dedup();
        let runs = cuts
            .windows(2)
            .map(|w| Run {
                start: w[0],
                end: w[1] - 1,
                value: op(&self.evaluate(w[0]), &other.evaluate(w[0])),
            })
            .collect();
        Self::from_runs_unchecked(
            runs,
            op(&self.left_tail, &other.left_tail),
            op(&self.right_tail, &other.right_tail),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    /// `n ↦ f(-n)`.
    pub fn reflect(&self) -> Self {
        let runs = self
            .runs
            .iter()
            .rev()
            .map(|r| Run { start: -r.end, end: -r.start, value: r.value.clone() })
            .collect();
        Self::from_runs_unchecked(runs, self.right_tail.clone(), self.left_tail.clone())
    }

    /// `n ↦ f(n - k)`.
    pub fn shift(&self, k: i64) -> Self {
        let runs = self
            .runs
            .iter()
            .map(|r| Run { start: r.start + k, end: r.end + k, value: r.value.clone() })
            .collect();
        Self::from_runs_unchecked(runs, self.left_tail.clone(), self.right_tail.clone())
    }

    /// `Σ_{k=l}^{r} |f(k)|` for `l ≤ r`, in closed form over runs and tails.
    pub fn abs_sum(&self, l: i64, r: i64) -> S {
        if l > r {
            return S::zero();
        }
        let mut total = S::zero();
        let (lo, hi) = (self.core_lo(), self.core_hi());
        if l < lo {
            let cnt = r.min(lo - 1) - l + 1;
            total = total + self.left_tail.abs() * S::int(cnt);
        }
        if r > hi {
            let cnt = r - l.max(hi + 1) + 1;
            total = total + self.right_tail.abs() * S::int(cnt);
        }
        for run in &self.runs {
            let (s, e) = (run.start.max(l), run.end.min(r));
            if s <= e {
                total = total + run.value.abs() * S::int(e - s + 1);
            }
        }
        total
    }

    pub fn to_f64(&self) -> DiscreteBVFunction<f64> {
        self.convert()
    }

    pub fn convert<T: Scalar>(&self) -> DiscreteBVFunction<T> {
        let runs = self
            .runs
            .iter()
            .map(|r| Run { start: r.start, end: r.end, value: crate::scalar::convert(&r.value) })
            .collect();
        DiscreteBVFunction::from_runs_unchecked(
            runs,
            crate::scalar::convert(&self.left_tail),
            crate::scalar::convert(&self.right_tail),
        )
    }
}

impl<S: Scalar> fmt::Debug for DiscreteBVFunction<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Discrete[{} | ", self.left_tail)?;
        for (i, r) in self.runs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if r.start == r.end {
                write!(f, "{}:{}", r.start, r.value)?;
            } else {
                write!(f, "{}..={}:{}", r.start, r.end, r.value)?;
            }
        }
        write!(f, " | {}]", self.right_tail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    type F = DiscreteBVFunction<Rational>;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn delta_has_unit_core() {
        let d = F::delta_at_origin();
        assert_eq!((d.core_lo(), d.core_hi()), (0, 0));
        assert_eq!(d.evaluate(0), q(1, 1));
        assert_eq!(d.evaluate(5), q(0, 1));
        assert_eq!(d.evaluate(-3), q(0, 1));
    }

    #[test]
    fn trimming_is_canonical() {
        let f = F::new(-2, vec![q(0, 1), q(0, 1), q(3, 1), q(1, 1), q(1, 1)], q(0, 1), q(1, 1)).unwrap();
        assert_eq!((f.core_lo(), f.core_hi()), (0, 0));
        assert_eq!(f.evaluate(1), q(1, 1));
        let g = F::new(0, vec![q(3, 1)], q(0, 1), q(1, 1)).unwrap();
        assert_eq!(f, g);
        let c = F::new(7, vec![q(2, 1); 4], q(2, 1), q(2, 1)).unwrap();
        assert_eq!(c, F::constant(q(2, 1)));
        assert!(c.is_constant());
    }

    #[test]
    fn step_between_tails_keeps_position() {
        let f = F::new(0, vec![q(0, 1), q(0, 1), q(1, 1)], q(0, 1), q(1, 1)).unwrap();
        assert_eq!(f.evaluate(1), q(0, 1));
        assert_eq!(f.evaluate(2), q(1, 1));
        assert_eq!(f.width(), 1);
    }

    #[test]
    fn add_indicator_matches_pointwise_sum() {
        let d = F::delta_at_origin();
        let fj = d.add_indicator(0, 4, q(1, 2)).unwrap();
        assert_eq!(fj.evaluate(0), q(3, 2));
        assert_eq!(fj.evaluate(4), q(1, 2));
        assert_eq!(fj.evaluate(5), q(0, 1));
        assert_eq!(fj.runs().len(), 2);
        assert_eq!(d.add_indicator(0, 0, q(0, 1)).unwrap(), d);
        assert!(d.add_indicator(3, 2, q(1, 1)).is_err());
    }

    #[test]
    fn abs_and_abs_sum() {
        let f = F::new(0, vec![q(-1, 1), q(2, 1), q(-3, 1)], q(-1, 2), q(1, 1)).unwrap();
        let a = f.abs();
        assert_eq!(a.evaluate(0), q(1, 1));
        assert_eq!(a.evaluate(-10), q(1, 2));
        assert_eq!(f.abs_sum(-2, 4), q(1, 1) + q(6, 1) + q(2, 1));
        assert_eq!(a.abs(), a);
    }

    #[test]
    fn reflect_and_shift() {
        let f = F::new(1, vec![q(1, 1), q(2, 1)], q(0, 1), q(5, 1)).unwrap();
        let r = f.reflect();
        for n in -5..5 {
            assert_eq!(r.evaluate(n), f.evaluate(-n));
            assert_eq!(f.shift(3).evaluate(n), f.evaluate(n - 3));
        }
    }

    #[test]
    fn wide_indicator_stays_compact() {
        let f = F::indicator(0, 10_000_000, q(1, 40)).unwrap();
        assert_eq!(f.runs().len(), 1);
        assert_eq!(f.abs_sum(-5, 20_000_000), q(10_000_001, 40));
    }
}
