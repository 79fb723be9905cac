//! Total variation, q-variation and BV norms, discrete and continuous.

use std::fmt;

use crate::error::{Error, Result};
use crate::functions::{DiscreteBVFunction, PiecewiseLinearFunction, StepFunction};
use crate::scalar::{Rational, Scalar};

/// An integer interval `[a, b]` whose ends may be infinite (`None`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct IntervalZ {
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

impl IntervalZ {
    pub const ALL: IntervalZ = IntervalZ { lo: None, hi: None };

    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInterval { lo: lo.to_string(), hi: hi.to_string() });
        }
        Ok(IntervalZ { lo: Some(lo), hi: Some(hi) })
    }

    /// `[a, +∞)`.
    pub fn from(lo: i64) -> Self {
        IntervalZ { lo: Some(lo), hi: None }
    }

    /// `(-∞, b]`.
    pub fn up_to(hi: i64) -> Self {
        IntervalZ { lo: None, hi: Some(hi) }
    }

    pub fn contains(&self, n: i64) -> bool {
        self.lo.map_or(true, |a| a <= n) && self.hi.map_or(true, |b| n <= b)
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    /// Whether the difference `g(n+1) - g(n)` counts towards `Var_[a,b]`.
    pub fn counts_step(&self, n: i64) -> bool {
        self.lo.map_or(true, |a| a <= n) && self.hi.map_or(true, |b| n < b)
    }
}

impl fmt::Display for IntervalZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lo {
            Some(a) => write!(f, "[{a}, ")?,
            None => write!(f, "(-inf, ")?,
        }
        match self.hi {
            Some(b) => write!(f, "{b}]"),
            None => write!(f, "+inf)"),
        }
    }
}

/// The nonzero differences `(n, f(n+1) - f(n))` of a discrete function, in order.
pub fn jumps<S: Scalar>(f: &DiscreteBVFunction<S>) -> Vec<(i64, S)> {
    let mut out = Vec::with_capacity(f.runs().len() + 1);
    let mut prev = (f.core_lo() - 1, f.left_tail().clone());
    for r in f.runs() {
        if r.value != prev.1 {
            out.push((prev.0, r.value.clone() - prev.1.clone()));
        }
        prev = (r.end, r.value.clone());
    }
    if *f.right_tail() != prev.1 {
        out.push((prev.0, f.right_tail().clone() - prev.1));
    }
    out
}

/// `Σ_{n=a}^{b-1} |f(n+1) - f(n)|`.
pub fn var_discrete<S: Scalar>(f: &DiscreteBVFunction<S>, window: IntervalZ) -> S {
    jumps(f)
        .into_iter()
        .filter(|(n, _)| window.counts_step(*n))
        .fold(S::zero(), |acc, (_, d)| acc + d.abs())
}

/// `Σ |f(n+1) - f(n)|^k` for an integer power `k`, exactly.
pub fn jump_power_sum<S: Scalar>(f: &DiscreteBVFunction<S>, k: u32) -> S {
    jumps(f)
        .into_iter()
        .fold(S::zero(), |acc, (_, d)| acc + num_traits::pow(d.abs(), k as usize))
}

/// `‖f'‖_{ℓ^q}`.
pub fn varq_discrete<S: Scalar>(f: &DiscreteBVFunction<S>, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("q must be at least 1, got {q}")));
    }
    let sum: f64 = jumps(f).iter().map(|(_, d)| d.abs().to_f64().powf(q)).sum();
    Ok(sum.powf(1.0 / q))
}

/// `|f(-∞)| + Var(f)`.
pub fn bvnorm_discrete<S: Scalar>(f: &DiscreteBVFunction<S>) -> S {
    f.left_tail().abs() + var_discrete(f, IntervalZ::ALL)
}

/// A real interval `[L, R]` restricting a continuous variation; `None` means the whole line.
pub type RealRange<S> = Option<(S, S)>;

/// Total variation of a step function: the sum of its jumps inside the window.
pub fn var_step<S: Scalar>(f: &StepFunction<S>, window: RealRange<S>) -> S {
    let values = f.values();
    f.breakpoints()
        .iter()
        .enumerate()
        .filter(|(_, t)| window.as_ref().map_or(true, |(l, r)| l <= *t && *t <= r))
        .fold(S::zero(), |acc, (i, _)| acc + (values[i + 1].clone() - values[i].clone()).abs())
}

/// `‖f'‖_{L^1}` of a piecewise linear function over the window.
pub fn var_pwl<S: Scalar>(f: &PiecewiseLinearFunction<S>, window: RealRange<S>) -> S {
    let mut total = S::zero();
    for ((x0, y0), (x1, y1)) in f.segments() {
        let (a, b) = match &window {
            Some((l, r)) => (S::max_of(x0.clone(), l.clone()), S::min_of(x1.clone(), r.clone())),
            None => (x0.clone(), x1.clone()),
        };
        if a >= b {
            continue;
        }
        let slope = (y1.clone() - y0.clone()) / (x1.clone() - x0.clone());
        total = total + slope.abs() * (b - a);
    }
    total
}

/// Finite sorted samples `(x_n, g(x_n))` of a real function.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledProfile<S> {
    points: Vec<(S, S)>,
}

impl<S: Scalar> SampledProfile<S> {
    pub fn new(points: Vec<(S, S)>) -> Result<Self> {
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Unsorted);
        }
        Ok(SampledProfile { points })
    }

    pub fn points(&self) -> &[(S, S)] {
        &self.points
    }

    pub fn values(&self) -> impl Iterator<Item = &S> {
        self.points.iter().map(|(_, y)| y)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ |g(x_{n+1}) - g(x_n)|`, a lower bound for the total variation.
    pub fn variation(&self) -> S {
        self.points
            .windows(2)
            .fold(S::zero(), |acc, w| acc + (w[1].1.clone() - w[0].1.clone()).abs())
    }

    /// `Σ |Δg|^k / |Δx|^{k-1}` for an integer `k`, exactly in the scalar's arithmetic.
    pub fn riesz_power_sum(&self, k: u32) -> S {
        self.points.windows(2).fold(S::zero(), |acc, w| {
            let dy = (w[1].1.clone() - w[0].1.clone()).abs();
            let dx = w[1].0.clone() - w[0].0.clone();
            acc + num_traits::pow(dy, k as usize) / num_traits::pow(dx, k as usize - 1)
        })
    }

    pub fn to_f64(&self) -> SampledProfile<f64> {
        SampledProfile { points: self.points.iter().map(|(x, y)| (x.to_f64(), y.to_f64())).collect() }
    }
}

/// Inputs accepted by [`varq_riesz`].
pub enum RieszInput<'a, S> {
    Pwl(&'a PiecewiseLinearFunction<S>),
    Sampled(&'a SampledProfile<S>),
}

/// Riesz q-variation: closed form `(Σ |slope|^q · len)^{1/q}` for piecewise linear
/// input, the partition sum over the sample points (a lower bound) otherwise.
pub fn varq_riesz<S: Scalar>(g: RieszInput<'_, S>, q: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::InvalidParameter(format!("q must exceed 1, got {q}")));
    }
    let sum: f64 = match g {
        RieszInput::Pwl(f) => f
            .segments()
            .map(|((x0, y0), (x1, y1))| {
                let len = (x1.clone() - x0.clone()).to_f64();
                let slope = (y1.clone() - y0.clone()).to_f64() / len;
                slope.abs().powf(q) * len
            })
            .sum(),
        RieszInput::Sampled(p) => p
            .points()
            .windows(2)
            .map(|w| {
                let dy = (w[1].1.clone() - w[0].1.clone()).to_f64().abs();
                let dx = (w[1].0.clone() - w[0].0.clone()).to_f64();
                dy.powf(q) / dx.powf(q - 1.0)
            })
            .sum(),
    };
    Ok(sum.powf(1.0 / q))
}

/// Exact `q`-th power of the Riesz partition sum when `q` is an integer.
pub fn riesz_power_sum_exact<S: Scalar>(p: &SampledProfile<S>, q: &Rational) -> Option<S> {
    if !q.is_integer() {
        return None;
    }
    let k: u32 = num_traits::ToPrimitive::to_u32(&q.to_integer())?;
    (k >= 1).then(|| p.riesz_power_sum(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn delta_variations() {
        let d = DiscreteBVFunction::<Rational>::delta_at_origin();
        assert_eq!(var_discrete(&d, IntervalZ::ALL), q(2, 1));
        assert_eq!(var_discrete(&d, IntervalZ::up_to(0)), q(1, 1));
        assert_eq!(var_discrete(&d, IntervalZ::from(0)), q(1, 1));
        assert_eq!(bvnorm_discrete(&d), q(2, 1));
        assert!((varq_discrete(&d, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(varq_discrete(&d, 0.5).is_err());
    }

    #[test]
    fn constant_norm_and_indicator() {
        assert_eq!(bvnorm_discrete(&DiscreteBVFunction::constant(q(1, 1))), q(1, 1));
        let ind = DiscreteBVFunction::<Rational>::zero().add_indicator(0, 3, q(1, 1)).unwrap();
        assert_eq!(var_discrete(&ind, IntervalZ::ALL), q(2, 1));
    }

    #[test]
    fn continuous_variations() {
        let chi = StepFunction::indicator(q(0, 1), q(1, 1), q(1, 1)).unwrap();
        assert_eq!(var_step(&chi, None), q(2, 1));
        assert_eq!(var_step(&chi, Some((q(1, 2), q(2, 1)))), q(1, 1));
        let tent = PiecewiseLinearFunction::<Rational>::tent();
        assert_eq!(var_pwl(&tent, None), q(2, 1));
        assert_eq!(var_pwl(&tent, Some((q(0, 1), q(1, 2)))), q(1, 2));
    }

    #[test]
    fn riesz_ramp_and_two_points() {
        let ramp = PiecewiseLinearFunction::<Rational>::new(vec![(q(0, 1), q(0, 1)), (q(1, 1), q(1, 1))]).unwrap();
        assert!((varq_riesz(RieszInput::Pwl(&ramp), 2.0).unwrap() - 1.0).abs() < 1e-15);
        let two = SampledProfile::new(vec![(0.0, 0.25), (2.0, 1.0)]).unwrap();
        let expect = (0.75f64.powi(3) / 4.0).powf(1.0 / 3.0);
        assert!((varq_riesz(RieszInput::Sampled(&two), 3.0).unwrap() - expect).abs() < 1e-15);
        assert!(SampledProfile::new(vec![(1.0, 0.0), (0.0, 0.0)]).is_err());
        assert!(varq_riesz(RieszInput::Sampled(&two), 1.0).is_err());
    }
}
