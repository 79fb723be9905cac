//! Continuous maximal operators on step and piecewise linear functions.
//!
//! Windows are optimized over a finite candidate set. For a step function the
//! primitive `P` of `|f|` is piecewise linear, and along one piece the objective
//! `u^(β-1)·(c + m·u)` has a single critical point, a minimum. So the supremum
//! sits at breakpoints, at the point itself, or in a limit.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{PiecewiseLinearFunction, StepFunction};
use crate::operator::{MaxEvaluation, OperatorVariant, Side};
use crate::scalar::{Average, Beta, Scalar};
use crate::variation::SampledProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Attained,
    LeftTailLimit,
    RightTailLimit,
    /// Windows shrinking to the point.
    ShrinkLimit,
    /// Centered windows growing without bound.
    CenteredTailLimit,
}

/// The window `[l, r]` realizing a continuous supremum. Limits store `l = r = x`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealWindow<S> {
    pub l: S,
    pub r: S,
    pub kind: WindowKind,
}

impl<S: Scalar> RealWindow<S> {
    fn attained(l: S, r: S) -> Self {
        RealWindow { l, r, kind: WindowKind::Attained }
    }

    fn limit(x: &S, kind: WindowKind) -> Self {
        RealWindow { l: x.clone(), r: x.clone(), kind }
    }

    fn reflect(self) -> Self {
        RealWindow { l: -self.r, r: -self.l, kind: self.kind }
    }
}

impl<S: Scalar> fmt::Display for RealWindow<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            WindowKind::Attained => write!(f, "[{},{}]", self.l, self.r),
            WindowKind::LeftTailLimit => f.write_str("left-limit"),
            WindowKind::RightTailLimit => f.write_str("right-limit"),
            WindowKind::ShrinkLimit => f.write_str("shrink-limit"),
            WindowKind::CenteredTailLimit => f.write_str("centered-limit"),
        }
    }
}

pub type ContinuousEvaluation<S> = MaxEvaluation<S, RealWindow<S>>;

/// Functions with an exact `∫_L^R |f|`.
pub trait AbsIntegral<S> {
    fn integral_abs(&self, l: &S, r: &S) -> Result<S>;
}

impl<S: Scalar> AbsIntegral<S> for StepFunction<S> {
    fn integral_abs(&self, l: &S, r: &S) -> Result<S> {
        StepFunction::integral_abs(self, l, r)
    }
}

impl<S: Scalar> AbsIntegral<S> for PiecewiseLinearFunction<S> {
    fn integral_abs(&self, l: &S, r: &S) -> Result<S> {
        PiecewiseLinearFunction::integral_abs(self, l, r)
    }
}

/// `(r+s)^(β-1) ∫_{x-r}^{x+s} |f|`; the empty window is zero when `β > 0`.
pub fn window_average_continuous<S: Scalar, F: AbsIntegral<S>>(
    f: &F,
    x: &S,
    r: &S,
    s: &S,
    beta: Beta,
) -> Result<Average<S>> {
    if r.is_negative() || s.is_negative() {
        return Err(Error::InvalidParameter(format!("window offsets must be nonnegative, got r={r}, s={s}")));
    }
    let len = r.clone() + s.clone();
    if len.is_zero() {
        if beta.is_classical() {
            return Err(Error::InvalidParameter("the classical average over an empty window is undefined".into()));
        }
        return Ok(Average::zero(beta));
    }
    let mass = f.integral_abs(&(x.clone() - r.clone()), &(x.clone() + s.clone()))?;
    Ok(Average::new(mass, len, beta))
}

/// Running maximum; ties go to the shorter window, then the leftmost.
struct Best<S> {
    value: Option<Average<S>>,
    window: Option<RealWindow<S>>,
}

impl<S: Scalar> Best<S> {
    fn new() -> Self {
        Best { value: None, window: None }
    }

    fn offer_window(&mut self, avg: Average<S>, l: S, r: S) {
        let better = match (&self.value, &self.window) {
            (Some(cur), Some(w)) => match avg.compare(cur) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => {
                    w.kind == WindowKind::Attained && {
                        let (len, cur_len) = (r.clone() - l.clone(), w.r.clone() - w.l.clone());
                        len < cur_len || (len == cur_len && l < w.l)
                    }
                }
            },
            _ => true,
        };
        if better {
            self.value = Some(avg);
            self.window = Some(RealWindow::attained(l, r));
        }
    }

    /// Limits replace the current best only when strictly larger.
    fn offer_limit(&mut self, avg: Average<S>, window: RealWindow<S>) {
        if self.value.as_ref().map_or(true, |cur| avg.compare(cur) == Ordering::Greater) {
            self.value = Some(avg);
            self.window = Some(window);
        }
    }

    fn finish(self, x: &S, beta: Beta) -> ContinuousEvaluation<S> {
        match (self.value, self.window) {
            (Some(value), Some(witness)) => MaxEvaluation::Finite { value, witness },
            _ => MaxEvaluation::Finite { value: Average::zero(beta), witness: RealWindow::limit(x, WindowKind::ShrinkLimit) },
        }
    }
}

/// Prefix integrals of `|f|` at the breakpoints of a step function.
struct StepIndex<'a, S> {
    t: &'a [S],
    v: Vec<S>,
    cum: Vec<S>,
}

impl<'a, S: Scalar> StepIndex<'a, S> {
    fn new(f: &'a StepFunction<S>) -> Self {
        let t = f.breakpoints();
        let v: Vec<S> = f.values().iter().map(|v| v.abs()).collect();
        let mut cum = Vec::with_capacity(t.len());
        let mut acc = S::zero();
        for (i, ti) in t.iter().enumerate() {
            if i > 0 {
                acc = acc + v[i].clone() * (ti.clone() - t[i - 1].clone());
            }
            cum.push(acc.clone());
        }
        StepIndex { t, v, cum }
    }

    /// A primitive of `|f|`, zero at the first breakpoint.
    fn primitive(&self, y: &S) -> S {
        if self.t.is_empty() {
            return self.v[0].clone() * y.clone();
        }
        let i = self.t.partition_point(|ti| ti <= y);
        if i == 0 {
            return -(self.v[0].clone() * (self.t[0].clone() - y.clone()));
        }
        self.cum[i - 1].clone() + self.v[i].clone() * (y.clone() - self.t[i - 1].clone())
    }

    fn average(&self, l: &S, r: &S, beta: Beta) -> Average<S> {
        Average::new(self.primitive(r) - self.primitive(l), r.clone() - l.clone(), beta)
    }

    /// `|f|` just left and just right of `x`.
    fn sides(&self, x: &S) -> (S, S) {
        match self.t.binary_search_by(|t| t.partial_cmp(x).unwrap_or(Ordering::Less)) {
            Ok(i) => (self.v[i].clone(), self.v[i + 1].clone()),
            Err(i) => (self.v[i].clone(), self.v[i].clone()),
        }
    }

    /// Piece `j` as `(start, end)`, with `None` for an infinite end.
    fn piece(&self, j: usize) -> (Option<&S>, Option<&S>) {
        (j.checked_sub(1).map(|k| &self.t[k]), self.t.get(j))
    }
}

fn beta_scalar<S: Scalar>(beta: Beta) -> S {
    S::from_ratio(beta.numer() as i64, beta.denom() as i64)
}

/// The critical point `u = (1-β)c/(βm)` of `u^(β-1)(c + m u)`, if positive.
fn critical_length<S: Scalar>(c: S, m: &S, beta: Beta) -> Option<S> {
    if beta.is_classical() || !m.is_positive() || !c.is_positive() {
        return None;
    }
    let b = beta_scalar::<S>(beta);
    Some((S::one() - b.clone()) * c / (b * m.clone()))
}

fn inside<S: Scalar>(y: &S, lo: Option<&S>, hi: Option<&S>) -> bool {
    lo.map_or(true, |a| a < y) && hi.map_or(true, |b| y < b)
}

fn check_step<S: Scalar>(f: &StepFunction<S>, variant: &OperatorVariant) -> Result<bool> {
    variant.validate()?;
    Ok(!variant.beta.is_classical() && !f.has_zero_tails())
}

/// The maximal function of a step function at `x`, for every operator variant.
pub fn step_max_continuous<S: Scalar>(
    f: &StepFunction<S>,
    x: &S,
    variant: &OperatorVariant,
) -> Result<ContinuousEvaluation<S>> {
    if check_step(f, variant)? {
        return Ok(MaxEvaluation::Divergent);
    }
    let idx = StepIndex::new(f);
    Ok(if variant.centered { step_centered(&idx, x, variant.beta) } else { step_uncentered(&idx, x, variant) })
}

fn step_uncentered<S: Scalar>(idx: &StepIndex<'_, S>, x: &S, variant: &OperatorVariant) -> ContinuousEvaluation<S> {
    let beta = variant.beta;
    let mut ls: Vec<S> = vec![x.clone()];
    let mut rs: Vec<S> = vec![x.clone()];
    if variant.side != Side::Right {
        ls.extend(idx.t.iter().filter(|t| *t < x).cloned());
    }
    if variant.side != Side::Left {
        rs.extend(idx.t.iter().filter(|t| *t > x).cloned());
    }
    let mut best = Best::new();
    for l in &ls {
        for r in &rs {
            if l < r {
                best.offer_window(idx.average(l, r, beta), l.clone(), r.clone());
            }
        }
    }
    // interior critical points of one free endpoint; never maxima, kept as a guard
    if !beta.is_classical() {
        for j in 0..idx.v.len() {
            let (a, b) = idx.piece(j);
            let m = &idx.v[j];
            for l in &ls {
                let base = a.map_or_else(|| x.clone(), |a| S::max_of(a.clone(), x.clone()));
                let c = idx.primitive(&base) - idx.primitive(l) - m.clone() * (base.clone() - l.clone());
                if let Some(u) = critical_length(c, m, beta) {
                    let r = l.clone() + u;
                    if r > *x && inside(&r, Some(&base), b) && variant.side != Side::Left {
                        best.offer_window(idx.average(l, &r, beta), l.clone(), r);
                    }
                }
            }
            for r in &rs {
                let top = b.map_or_else(|| x.clone(), |b| S::min_of(b.clone(), x.clone()));
                let c = idx.primitive(r) - idx.primitive(&top) - m.clone() * (r.clone() - top.clone());
                if let Some(u) = critical_length(c, m, beta) {
                    let l = r.clone() - u;
                    if l < *x && inside(&l, a, Some(&top)) && variant.side != Side::Right {
                        best.offer_window(idx.average(&l, r, beta), l, r.clone());
                    }
                }
            }
        }
    }
    if beta.is_classical() {
        let (left, right) = idx.sides(x);
        let shrink = match variant.side {
            Side::TwoSided => S::max_of(left, right),
            Side::Left => left,
            Side::Right => right,
        };
        best.offer_limit(Average::of_value(shrink, beta), RealWindow::limit(x, WindowKind::ShrinkLimit));
        if variant.side != Side::Right {
            best.offer_limit(Average::of_value(idx.v[0].clone(), beta), RealWindow::limit(x, WindowKind::LeftTailLimit));
        }
        if variant.side != Side::Left {
            let last = idx.v[idx.v.len() - 1].clone();
            best.offer_limit(Average::of_value(last, beta), RealWindow::limit(x, WindowKind::RightTailLimit));
        }
    }
    best.finish(x, beta)
}

fn step_centered<S: Scalar>(idx: &StepIndex<'_, S>, x: &S, beta: Beta) -> ContinuousEvaluation<S> {
    let two = S::int(2);
    let mut radii: Vec<S> = idx.t.iter().map(|t| (t.clone() - x.clone()).abs()).filter(|r| r.is_positive()).collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    radii.dedup();
    let mut best = Best::new();
    for r in &radii {
        let (l, rr) = (x.clone() - r.clone(), x.clone() + r.clone());
        best.offer_window(idx.average(&l, &rr, beta), l, rr);
    }
    if !beta.is_classical() {
        // the mass grows with slope |f(x-r)| + |f(x+r)| between radii
        let mut stops = vec![S::zero()];
        stops.extend(radii.iter().cloned());
        for (k, lo) in stops.iter().enumerate() {
            let hi = stops.get(k + 1);
            let probe = match hi {
                Some(h) => (lo.clone() + h.clone()) / two.clone(),
                None => lo.clone() + S::one(),
            };
            let (_, vr) = idx.sides(&(x.clone() + probe.clone()));
            let (vl, _) = idx.sides(&(x.clone() - probe));
            let m = vl + vr;
            let mass_lo = idx.primitive(&(x.clone() + lo.clone())) - idx.primitive(&(x.clone() - lo.clone()));
            let c = mass_lo - m.clone() * lo.clone();
            if let Some(u) = critical_length(c, &(m / two.clone()), beta) {
                let r = u / two.clone();
                if inside(&r, Some(lo), hi) {
                    let (l, rr) = (x.clone() - r.clone(), x.clone() + r);
                    best.offer_window(idx.average(&l, &rr, beta), l, rr);
                }
            }
        }
    }
    if beta.is_classical() {
        let (left, right) = idx.sides(x);
        let shrink = (left + right) / two.clone();
        best.offer_limit(Average::of_value(shrink, beta), RealWindow::limit(x, WindowKind::ShrinkLimit));
        let far = (idx.v[0].clone() + idx.v[idx.v.len() - 1].clone()) / two;
        best.offer_limit(Average::of_value(far, beta), RealWindow::limit(x, WindowKind::CenteredTailLimit));
    }
    best.finish(x, beta)
}

/// `M_R f(x)` or `M_L f(x)` for a piecewise linear `f` with zero tails.
///
/// On each linear piece of `|f|` the first-order condition `|f|(x+u)·u = ∫_x^{x+u}|f|`
/// reduces to `u² = d² + 2(I - g·d)/m`, with `d` the piece start, `g = |f|(x+d)`,
/// `I = ∫_x^{x+d}|f|` and `m` the slope. Irrational roots are rounded through `f64`.
pub fn one_sided_max<S: Scalar>(f: &PiecewiseLinearFunction<S>, x: &S, side: Side) -> Result<ContinuousEvaluation<S>> {
    if !f.is_w11() {
        return Err(Error::NonzeroTails);
    }
    match side {
        Side::Right => Ok(right_max(&f.abs(), x)),
        Side::Left => {
            let e = right_max(&f.abs().reflect(), &-x.clone());
            Ok(match e {
                MaxEvaluation::Finite { value, witness } => MaxEvaluation::Finite { value, witness: witness.reflect() },
                MaxEvaluation::Divergent => MaxEvaluation::Divergent,
            })
        }
        Side::TwoSided => uncentered_max_continuous(f, x),
    }
}

/// Radii and averages of every candidate for `M_R` of `g = |f|` at `x`; radius zero is the shrink limit.
fn right_candidates<S: Scalar>(g: &PiecewiseLinearFunction<S>, x: &S) -> Vec<(S, Average<S>)> {
    let beta = Beta::ZERO;
    let gx = g.evaluate(x);
    // nodes of |f| right of x, as (distance, value)
    let mut pts: Vec<(S, S)> = vec![(S::zero(), gx.clone())];
    pts.extend(g.nodes().iter().filter(|(t, _)| t > x).map(|(t, y)| (t.clone() - x.clone(), y.clone())));
    let mut out = Vec::with_capacity(2 * pts.len());
    let mut integral = S::zero();
    let two = S::int(2);
    for w in pts.windows(2) {
        let ((d0, g0), (d1, g1)) = (&w[0], &w[1]);
        let m = (g1.clone() - g0.clone()) / (d1.clone() - d0.clone());
        if !m.is_zero() {
            let disc = d0.clone() * d0.clone() + two.clone() * (integral.clone() - g0.clone() * d0.clone()) / m.clone();
            if disc.is_positive() {
                if let Some(u) = S::from_f64(disc.to_f64().sqrt()) {
                    if &u > d0 && &u < d1 {
                        let du = u.clone() - d0.clone();
                        let mass = integral.clone() + (g0.clone() + g0.clone() + m.clone() * du.clone()) * du / two.clone();
                        out.push((u.clone(), Average::new(mass, u, beta)));
                    }
                }
            }
        }
        integral = integral + (g0.clone() + g1.clone()) * (d1.clone() - d0.clone()) / two.clone();
        out.push((d1.clone(), Average::new(integral.clone(), d1.clone(), beta)));
    }
    out.push((S::zero(), Average::of_value(gx, beta)));
    out
}

fn right_max<S: Scalar>(g: &PiecewiseLinearFunction<S>, x: &S) -> ContinuousEvaluation<S> {
    let mut best = Best::new();
    for (u, avg) in right_candidates(g, x) {
        if u.is_zero() {
            best.offer_limit(avg, RealWindow::limit(x, WindowKind::ShrinkLimit));
        } else {
            best.offer_window(avg, x.clone(), x.clone() + u);
        }
    }
    best.finish(x, Beta::ZERO)
}

/// The candidate radii examined by [`one_sided_max`] with their averages.
pub fn one_sided_candidates<S: Scalar>(
    f: &PiecewiseLinearFunction<S>,
    x: &S,
    side: Side,
) -> Result<Vec<(S, Average<S>)>> {
    if !f.is_w11() {
        return Err(Error::NonzeroTails);
    }
    match side {
        Side::Right => Ok(right_candidates(&f.abs(), x)),
        Side::Left => Ok(right_candidates(&f.abs().reflect(), &-x.clone())),
        Side::TwoSided => Err(Error::UnsupportedVariant("candidates are listed per side".into())),
    }
}

/// `M̃f(x) = max(M_R f(x), M_L f(x))`.
pub fn uncentered_max_continuous<S: Scalar>(f: &PiecewiseLinearFunction<S>, x: &S) -> Result<ContinuousEvaluation<S>> {
    let r = one_sided_max(f, x, Side::Right)?;
    let l = one_sided_max(f, x, Side::Left)?;
    let (rv, lv) = (r.average().expect("finite"), l.average().expect("finite"));
    Ok(match lv.compare(rv) {
        Ordering::Greater => l,
        Ordering::Less => r,
        Ordering::Equal => {
            let len = |e: &ContinuousEvaluation<S>| {
                let w = e.witness().expect("finite");
                w.r.clone() - w.l.clone()
            };
            if len(&l) <= len(&r) {
                l
            } else {
                r
            }
        }
    })
}

/// Inputs for continuous profiles.
pub enum ContinuousInput<'a, S> {
    Step(&'a StepFunction<S>),
    Pwl(&'a PiecewiseLinearFunction<S>),
}

impl<S> Clone for ContinuousInput<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for ContinuousInput<'_, S> {}

/// Evaluates any supported continuous operator at one point.
pub fn max_continuous<S: Scalar>(
    f: ContinuousInput<'_, S>,
    x: &S,
    variant: &OperatorVariant,
) -> Result<ContinuousEvaluation<S>> {
    match f {
        ContinuousInput::Step(g) => step_max_continuous(g, x, variant),
        ContinuousInput::Pwl(g) => {
            variant.validate()?;
            if variant.centered || !variant.beta.is_classical() {
                return Err(Error::UnsupportedVariant(
                    "piecewise linear inputs support only the classical uncentered and one-sided operators".into(),
                ));
            }
            one_sided_max(g, x, variant.side)
        }
    }
}

/// Values of the maximal function on a sorted grid, evaluated in parallel.
pub fn profile_continuous<S: Scalar>(
    f: ContinuousInput<'_, S>,
    grid: &[S],
    variant: &OperatorVariant,
) -> Result<SampledProfile<S>> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Unsorted);
    }
    let points = grid
        .par_iter()
        .map(|x| {
            let e = max_continuous(f, x, variant)?;
            let v = e.value().ok_or(Error::NonzeroTails)?;
            Ok((x.clone(), v))
        })
        .collect::<Result<Vec<_>>>()?;
    SampledProfile::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn chi() -> StepFunction<Rational> {
        StepFunction::indicator(q(0, 1), q(1, 1), q(1, 1)).unwrap()
    }

    #[test]
    fn window_averages_of_indicator() {
        let half = Beta::new(1, 2).unwrap();
        let a = window_average_continuous(&chi(), &q(0, 1), &q(0, 1), &q(1, 1), half).unwrap();
        assert_eq!(a.to_f64(), 1.0);
        let b = window_average_continuous(&chi(), &q(2, 1), &q(2, 1), &q(0, 1), half).unwrap();
        assert!((b.to_f64() - 2f64.powf(-0.5)).abs() < 1e-15);
        assert!(window_average_continuous(&chi(), &q(0, 1), &q(0, 1), &q(0, 1), Beta::ZERO).is_err());
        assert_eq!(window_average_continuous(&chi(), &q(0, 1), &q(0, 1), &q(0, 1), half).unwrap().to_f64(), 0.0);
    }

    #[test]
    fn indicator_maximal_values() {
        let half = Beta::new(1, 2).unwrap();
        let e = step_max_continuous(&chi(), &q(0, 1), &OperatorVariant::uncentered(half)).unwrap();
        assert_eq!(e.to_f64(), 1.0);
        let c = step_max_continuous(&chi(), &q(2, 1), &OperatorVariant::centered(half)).unwrap();
        assert!((c.to_f64() - 4f64.powf(-0.5)).abs() < 1e-15);
        let u = step_max_continuous(&chi(), &q(2, 1), &OperatorVariant::classical()).unwrap();
        assert_eq!(u.value(), Some(q(1, 2)));
        assert_eq!(u.witness().unwrap(), &RealWindow::attained(q(0, 1), q(2, 1)));
        let shrink = step_max_continuous(&chi(), &q(0, 1), &OperatorVariant::centered(Beta::ZERO)).unwrap();
        assert_eq!(shrink.value(), Some(q(1, 2)));
    }

    #[test]
    fn tent_one_sided() {
        let tent = PiecewiseLinearFunction::<Rational>::tent();
        let e = one_sided_max(&tent, &q(0, 1), Side::Right).unwrap();
        assert_eq!(e.value(), Some(q(1, 1)));
        assert_eq!(e.witness().unwrap().kind, WindowKind::ShrinkLimit);
        assert_eq!(one_sided_max(&tent, &q(2, 1), Side::Right).unwrap().value(), Some(q(0, 1)));
        let l = one_sided_max(&tent, &q(2, 1), Side::Left).unwrap();
        let u = uncentered_max_continuous(&tent, &q(2, 1)).unwrap();
        assert!(l.average().unwrap().same_value(u.average().unwrap()));
        // (1/r)∫_{2-r}^2 tent peaks where r·tent(2-r) equals the integral
        let grid = (1..=40000)
            .map(|k| {
                let r = k as f64 * 1e-4;
                let lo = 2.0 - r;
                let int = if lo >= 1.0 {
                    0.0
                } else if lo >= 0.0 {
                    (1.0 - lo) * (1.0 - lo) / 2.0
                } else if lo >= -1.0 {
                    1.0 - (1.0 + lo) * (1.0 + lo) / 2.0
                } else {
                    1.0
                };
                int / r
            })
            .fold(0.0, f64::max);
        assert!((l.to_f64() - grid).abs() < 1e-6);
        assert!(one_sided_max(&PiecewiseLinearFunction::new(vec![(q(0, 1), q(1, 1))]).unwrap(), &q(0, 1), Side::Right).is_err());
    }

    #[test]
    fn profile_rejects_unsorted_grid() {
        let f = chi();
        let v = OperatorVariant::classical();
        assert!(profile_continuous(ContinuousInput::Step(&f), &[q(1, 1), q(0, 1)], &v).is_err());
        let p = profile_continuous(ContinuousInput::Step(&f), &[q(0, 1), q(2, 1)], &v).unwrap();
        assert_eq!(p.points()[1].1, q(1, 2));
    }
}
