//! Discrete maximal operators, evaluated exactly over a finite candidate set.
//!
//! Along a run of constant `|f|` the objective `len^(β-1)·mass` has at most one
//! interior critical point, and it is a minimum. The supremum is therefore
//! attained at a run boundary or approached in a tail, which keeps the candidate
//! set proportional to the number of runs rather than the core width.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functions::DiscreteBVFunction;
use crate::operator::{MaxEvaluation, OperatorVariant, TailSide};
use crate::scalar::{Average, Beta, Scalar};
use crate::variation::IntervalZ;

/// Where a discrete supremum is attained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiscreteWitness {
    /// The window `[l, r]`.
    Window { l: i64, r: i64 },
    TailLimit(TailSide),
}

impl DiscreteWitness {
    pub fn window(&self) -> Option<(i64, i64)> {
        match *self {
            DiscreteWitness::Window { l, r } => Some((l, r)),
            DiscreteWitness::TailLimit(_) => None,
        }
    }
}

impl fmt::Display for DiscreteWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscreteWitness::Window { l, r } => write!(f, "[{l},{r}]"),
            DiscreteWitness::TailLimit(TailSide::Left) => f.write_str("left-limit"),
            DiscreteWitness::TailLimit(TailSide::Right) => f.write_str("right-limit"),
            DiscreteWitness::TailLimit(TailSide::Centered) => f.write_str("centered-limit"),
        }
    }
}

pub type DiscreteEvaluation<S> = MaxEvaluation<S, DiscreteWitness>;

/// Constant-time window sums of `|f|` over run boundaries.
pub(crate) struct PrefixIndex<'a, S> {
    f: &'a DiscreteBVFunction<S>,
    abs_values: Vec<S>,
    prefix: Vec<S>,
    abs_a: S,
    abs_b: S,
}

impl<'a, S: Scalar> PrefixIndex<'a, S> {
    pub(crate) fn new(f: &'a DiscreteBVFunction<S>) -> Self {
        let abs_values: Vec<S> = f.runs().iter().map(|r| r.value.abs()).collect();
        let mut prefix = Vec::with_capacity(abs_values.len() + 1);
        let mut acc = S::zero();
        prefix.push(acc.clone());
        for (r, v) in f.runs().iter().zip(&abs_values) {
            acc = acc + v.clone() * S::int(r.len());
            prefix.push(acc.clone());
        }
        PrefixIndex { f, abs_values, prefix, abs_a: f.left_tail().abs(), abs_b: f.right_tail().abs() }
    }

    /// `Σ_{k=lo}^{n} |f(k)|`, extended to `n < lo` so that differences give window sums.
    fn cumulative(&self, n: i64) -> S {
        let (lo, hi) = (self.f.core_lo(), self.f.core_hi());
        if n < lo {
            return -(self.abs_a.clone() * S::int(lo - 1 - n));
        }
        if n > hi {
            return self.prefix[self.prefix.len() - 1].clone() + self.abs_b.clone() * S::int(n - hi);
        }
        let runs = self.f.runs();
        let i = runs.partition_point(|r| r.start <= n) - 1;
        self.prefix[i].clone() + self.abs_values[i].clone() * S::int(n - runs[i].start + 1)
    }

    /// `Σ_{k=l}^{r} |f(k)|`.
    pub(crate) fn sum(&self, l: i64, r: i64) -> S {
        self.cumulative(r) - self.cumulative(l - 1)
    }

    pub(crate) fn average(&self, l: i64, r: i64, beta: Beta) -> Average<S> {
        Average::new(self.sum(l, r), S::int(r - l + 1), beta)
    }

    /// Run starts, with the right tail counted as a run starting at `hi + 1`.
    pub(crate) fn starts(&self) -> impl Iterator<Item = i64> + '_ {
        self.f.runs().iter().map(|r| r.start).chain(std::iter::once(self.f.core_hi() + 1))
    }

    /// Run ends, with the left tail counted as a run ending at `lo - 1`.
    pub(crate) fn ends(&self) -> impl Iterator<Item = i64> + '_ {
        std::iter::once(self.f.core_lo() - 1).chain(self.f.runs().iter().map(|r| r.end))
    }
}

/// `(r+s+1)^(β-1) Σ_{k=-r}^{s} |f(n+k)|`.
pub fn window_average_discrete<S: Scalar>(
    f: &DiscreteBVFunction<S>,
    n: i64,
    r: i64,
    s: i64,
    beta: Beta,
) -> Result<Average<S>> {
    if r < 0 || s < 0 {
        return Err(Error::InvalidParameter(format!("window offsets must be nonnegative, got r={r}, s={s}")));
    }
    Ok(Average::new(f.abs_sum(n - r, n + s), S::int(r + s + 1), beta))
}

/// Running maximum with the witness tie-break: smaller window, then leftmost.
struct Best<S> {
    value: Option<Average<S>>,
    window: (i64, i64),
}

impl<S: Scalar> Best<S> {
    fn new() -> Self {
        Best { value: None, window: (0, 0) }
    }

    fn offer(&mut self, avg: Average<S>, l: i64, r: i64) {
        let better = match &self.value {
            None => true,
            Some(cur) => match avg.compare(cur) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => (r - l, l) < (self.window.1 - self.window.0, self.window.0),
            },
        };
        if better {
            self.value = Some(avg);
            self.window = (l, r);
        }
    }

    fn finish(self, limits: Vec<(Average<S>, TailSide)>) -> DiscreteEvaluation<S> {
        let mut value = self.value.expect("candidate set is never empty");
        let mut witness = DiscreteWitness::Window { l: self.window.0, r: self.window.1 };
        for (lim, side) in limits {
            if lim.compare(&value) == Ordering::Greater {
                value = lim;
                witness = DiscreteWitness::TailLimit(side);
            }
        }
        MaxEvaluation::Finite { value, witness }
    }
}

fn check_variant<S: Scalar>(f: &DiscreteBVFunction<S>, variant: &OperatorVariant) -> Result<bool> {
    variant.validate()?;
    if variant.is_one_sided() {
        return Err(Error::UnsupportedVariant("one-sided operators are not defined on the integers".into()));
    }
    let divergent = !variant.beta.is_classical() && !(f.left_tail().is_zero() && f.right_tail().is_zero());
    Ok(divergent)
}

fn tail_limits<S: Scalar>(f: &DiscreteBVFunction<S>, variant: &OperatorVariant) -> Vec<(Average<S>, TailSide)> {
    if !variant.beta.is_classical() {
        return Vec::new();
    }
    let (a, b) = (f.left_tail().abs(), f.right_tail().abs());
    if variant.centered {
        let mean = (a + b) / S::int(2);
        vec![(Average::of_value(mean, Beta::ZERO), TailSide::Centered)]
    } else {
        vec![(Average::of_value(a, Beta::ZERO), TailSide::Left), (Average::of_value(b, Beta::ZERO), TailSide::Right)]
    }
}

/// The maximal function at `n`, evaluated over run-boundary candidates.
pub fn maximal_discrete<S: Scalar>(
    f: &DiscreteBVFunction<S>,
    n: i64,
    variant: &OperatorVariant,
) -> Result<DiscreteEvaluation<S>> {
    if check_variant(f, variant)? {
        return Ok(MaxEvaluation::Divergent);
    }
    let idx = PrefixIndex::new(f);
    Ok(evaluate_indexed(&idx, n, variant))
}

fn evaluate_indexed<S: Scalar>(idx: &PrefixIndex<'_, S>, n: i64, variant: &OperatorVariant) -> DiscreteEvaluation<S> {
    let beta = variant.beta;
    let mut best = Best::new();
    if variant.centered {
        let mut radii: Vec<i64> = std::iter::once(0)
            .chain(idx.starts().filter(|&s| s <= n).map(|s| n - s))
            .chain(idx.ends().filter(|&e| e >= n).map(|e| e - n))
            .collect();
        radii.sort_unstable();
        radii.dedup();
        for r in radii {
            best.offer(idx.average(n - r, n + r, beta), n - r, n + r);
        }
    } else {
        let mut ls: Vec<i64> = std::iter::once(n).chain(idx.starts().filter(|&s| s <= n)).collect();
        let mut rs: Vec<i64> = std::iter::once(n).chain(idx.ends().filter(|&e| e >= n)).collect();
        ls.sort_unstable();
        ls.dedup();
        rs.sort_unstable();
        rs.dedup();
        for &l in &ls {
            for &r in &rs {
                best.offer(idx.average(l, r, beta), l, r);
            }
        }
    }
    best.finish(tail_limits(idx.f, variant))
}

/// Quadratic baseline: every window with endpoints between `n` and the far core end.
pub fn maximal_discrete_scan<S: Scalar>(
    f: &DiscreteBVFunction<S>,
    n: i64,
    variant: &OperatorVariant,
) -> Result<DiscreteEvaluation<S>> {
    if check_variant(f, variant)? {
        return Ok(MaxEvaluation::Divergent);
    }
    let (lo, hi) = (f.core_lo(), f.core_hi());
    let idx = PrefixIndex::new(f);
    let beta = variant.beta;
    let mut best = Best::new();
    if variant.centered {
        let reach = (n - lo).abs().max((n - hi).abs());
        for r in 0..=reach {
            best.offer(idx.average(n - r, n + r, beta), n - r, n + r);
        }
    } else {
        for l in n.min(lo)..=n {
            for r in n..=n.max(hi) {
                best.offer(idx.average(l, r, beta), l, r);
            }
        }
    }
    Ok(best.finish(tail_limits(f, variant)))
}

/// The maximal function on a finite range, plus its limits at `±∞`.
#[derive(Clone, Debug)]
pub struct DiscreteProfile<S> {
    pub start: i64,
    pub evaluations: Vec<DiscreteEvaluation<S>>,
    /// Limit of the profile at `-∞` and `+∞`; `None` when divergent.
    pub limits: Option<(Average<S>, Average<S>)>,
}

impl<S: Scalar> DiscreteProfile<S> {
    pub fn end(&self) -> i64 {
        self.start + self.evaluations.len() as i64 - 1
    }

    pub fn at(&self, n: i64) -> Option<&DiscreteEvaluation<S>> {
        usize::try_from(n - self.start).ok().and_then(|i| self.evaluations.get(i))
    }

    pub fn averages(&self) -> Option<Vec<Average<S>>> {
        self.evaluations.iter().map(|e| e.average().cloned()).collect()
    }

    pub fn values(&self) -> Option<Vec<S>> {
        self.evaluations.iter().map(MaxEvaluation::value).collect()
    }

    pub fn is_divergent(&self) -> bool {
        self.limits.is_none()
    }
}

/// Limits of the maximal function at `-∞` and `+∞`.
pub fn profile_limits<S: Scalar>(f: &DiscreteBVFunction<S>, variant: &OperatorVariant) -> Option<(Average<S>, Average<S>)> {
    let beta = variant.beta;
    if !beta.is_classical() {
        if !(f.left_tail().is_zero() && f.right_tail().is_zero()) {
            return None;
        }
        return Some((Average::zero(beta), Average::zero(beta)));
    }
    let (a, b) = (f.left_tail().abs(), f.right_tail().abs());
    let (left, right) = if variant.centered {
        let mean = (a.clone() + b.clone()) / S::int(2);
        (S::max_of(a, mean.clone()), S::max_of(b, mean))
    } else {
        let c = S::max_of(a, b);
        (c.clone(), c)
    };
    Some((Average::of_value(left, beta), Average::of_value(right, beta)))
}

/// Evaluates the maximal function at every point of a finite range, in parallel.
pub fn maximal_profile_discrete<S: Scalar>(
    f: &DiscreteBVFunction<S>,
    range: IntervalZ,
    variant: &OperatorVariant,
) -> Result<DiscreteProfile<S>> {
    let (Some(a), Some(b)) = (range.lo, range.hi) else {
        return Err(Error::InvalidParameter(format!("profile range must be finite, got {range}")));
    };
    if a > b {
        return Err(Error::InvalidInterval { lo: a.to_string(), hi: b.to_string() });
    }
    if check_variant(f, variant)? {
        return Ok(DiscreteProfile {
            start: a,
            evaluations: vec![MaxEvaluation::Divergent; (b - a + 1) as usize],
            limits: None,
        });
    }
    let idx = PrefixIndex::new(f);
    let evaluations = (a..=b).into_par_iter().map(|n| evaluate_indexed(&idx, n, variant)).collect();
    Ok(DiscreteProfile { start: a, evaluations, limits: profile_limits(f, variant) })
}

fn require_monotone_tails(variant: &OperatorVariant) -> Result<()> {
    variant.validate()?;
    if variant.centered || variant.is_one_sided() {
        return Err(Error::UnsupportedVariant(
            "exact tail analysis needs the uncentered two-sided operator".into(),
        ));
    }
    Ok(())
}

/// Exact `Var_[a,b]` of the uncentered maximal function.
///
/// Outside `[lo-1, hi+1]` the profile is monotone towards its limit, so the
/// infinite parts contribute a single difference each.
pub fn variation_of_maximal<S: Scalar>(
    f: &DiscreteBVFunction<S>,
    variant: &OperatorVariant,
    window: IntervalZ,
) -> Result<S> {
    require_monotone_tails(variant)?;
    let limits = profile_limits(f, variant).ok_or(Error::NonzeroTails)?;
    let c = limits.0.value();
    let idx = PrefixIndex::new(f);
    let p = |n: i64| evaluate_indexed(&idx, n, variant).value().expect("finite profile");
    let (zl, zr) = (f.core_lo() - 1, f.core_hi() + 1);
    let mut total = S::zero();
    // middle zone [zl, zr]
    let a = window.lo.map_or(zl, |a| a.max(zl));
    let b = window.hi.map_or(zr, |b| b.min(zr));
    if a < b {
        let vals: Vec<S> = (a..=b).into_par_iter().map(p).collect();
        for w in vals.windows(2) {
            total = total + (w[1].clone() - w[0].clone()).abs();
        }
    }
    // right zone [zr, ∞)
    let a = window.lo.map_or(zr, |a| a.max(zr));
    match window.hi {
        None => total = total + (p(a) - c.clone()).abs(),
        Some(b) if b > a => total = total + (p(b) - p(a)).abs(),
        _ => {}
    }
    // left zone (-∞, zl]
    let b = window.hi.map_or(zl, |b| b.min(zl));
    match window.lo {
        None => total = total + (p(b) - c).abs(),
        Some(a) if a < b => total = total + (p(b) - p(a)).abs(),
        _ => {}
    }
    Ok(total)
}

/// Lower and upper bounds for `Var_q` of the uncentered fractional maximal function.
///
/// The profile is summed exactly over `[lo - margin, hi + margin]`. Beyond that,
/// `|Δ(n)| ≤ (1-β)·S·(n-hi+1)^(β-2)` with `S = Σ|f|`, whose q-th powers are
/// bounded by an integral. Returns `(lower, upper)` for `Var_q` itself.
pub fn varq_maximal_bounds<S: Scalar>(f: &DiscreteBVFunction<S>, beta: Beta, margin: i64) -> Result<(f64, f64)> {
    let variant = OperatorVariant::uncentered(beta);
    if beta.is_classical() {
        let v = variation_of_maximal(f, &variant, IntervalZ::ALL)?.to_f64();
        return Ok((v, v));
    }
    if !(f.left_tail().is_zero() && f.right_tail().is_zero()) {
        return Err(Error::NonzeroTails);
    }
    let margin = margin.max(1);
    let q = beta.q_f64();
    let profile = maximal_profile_discrete(f, IntervalZ::new(f.core_lo() - margin, f.core_hi() + margin)?, &variant)?;
    let vals: Vec<f64> = profile.evaluations.iter().map(MaxEvaluation::to_f64).collect();
    let sum: f64 = vals.windows(2).map(|w| (w[1] - w[0]).abs().powf(q)).sum();
    let mass = f.abs_sum(f.core_lo(), f.core_hi()).to_f64();
    let b = beta.as_f64();
    let expo = (2.0 - b) * q - 1.0;
    let one_side = ((1.0 - b) * mass).powf(q) * (margin as f64).powf(-expo) / expo;
    Ok((sum.powf(1.0 / q), (sum + 2.0 * one_side).powf(1.0 / q)))
}

/// Far-field description of an uncentered classical profile right of the core:
/// `P(n) = max(consts, max_l b + K_l/(n-l+1))`.
struct TailModel<S> {
    b: S,
    consts: Vec<S>,
    hyps: Vec<(i64, S)>,
}

impl<S: Scalar> TailModel<S> {
    fn new(f: &DiscreteBVFunction<S>) -> Self {
        let (a, b) = (f.left_tail().abs(), f.right_tail().abs());
        let mut hyps = Vec::new();
        // K_l = Σ_{k=l}^{hi} (|f(k)| - b), accumulated from the right
        let mut k = S::zero();
        for r in f.runs().iter().rev() {
            k = k + (r.value.abs() - b.clone()) * S::int(r.len());
            hyps.push((r.start, k.clone()));
        }
        TailModel { b: b.clone(), consts: vec![a, b], hyps }
    }

    fn eval(&self, n: i64) -> S {
        let mut best = self.consts.iter().cloned().fold(S::zero(), S::max_of);
        for (l, k) in &self.hyps {
            best = S::max_of(best, self.b.clone() + k.clone() / S::int(n - l + 1));
        }
        best
    }

    fn limit(&self) -> S {
        self.consts.iter().cloned().fold(S::zero(), S::max_of)
    }

    /// Real points where the active piece may switch.
    fn switch_points(&self, out: &mut Vec<f64>) {
        let b = self.b.to_f64();
        for (i, (l1, k1)) in self.hyps.iter().enumerate() {
            let (l1, k1) = (*l1 as f64, k1.to_f64());
            for (l2, k2) in &self.hyps[i + 1..] {
                let (l2, k2) = (*l2 as f64, k2.to_f64());
                if k1 != k2 {
                    out.push((k1 * (l2 - 1.0) - k2 * (l1 - 1.0)) / (k1 - k2));
                }
            }
            for c in &self.consts {
                let c = c.to_f64();
                if c != b {
                    out.push(l1 - 1.0 + k1 / (c - b));
                }
            }
        }
    }
}

/// Real points where the difference of one piece from each model may have an extremum.
fn difference_extrema<S: Scalar>(m1: &TailModel<S>, m2: &TailModel<S>, out: &mut Vec<f64>) {
    for (l1, k1) in &m1.hyps {
        for (l2, k2) in &m2.hyps {
            let (k1, k2) = (k1.to_f64(), k2.to_f64());
            if k1 * k2 <= 0.0 {
                continue;
            }
            let (s1, s2) = (k1.abs().sqrt(), k2.abs().sqrt());
            for sign in [1.0, -1.0] {
                let denom = s2 - sign * s1;
                if denom != 0.0 {
                    out.push((s2 * (*l1 as f64 - 1.0) - sign * s1 * (*l2 as f64 - 1.0)) / denom);
                }
            }
        }
    }
}

/// Largest far-field point considered; differences beyond it are bounded by the final jump to the limit.
const TAIL_CAP: f64 = 1e15;

/// `(Var, sup|D|)` of `D = P1 - P2` on `[n0, ∞)`, where both profiles follow their tail models.
fn tail_difference<S: Scalar>(f1: &DiscreteBVFunction<S>, f2: &DiscreteBVFunction<S>, n0: i64) -> (S, S) {
    let (m1, m2) = (TailModel::new(f1), TailModel::new(f2));
    let mut crit = Vec::new();
    m1.switch_points(&mut crit);
    m2.switch_points(&mut crit);
    difference_extrema(&m1, &m2, &mut crit);
    let mut pts: Vec<i64> = vec![n0];
    for x in crit {
        if x.is_finite() && x > n0 as f64 && x < TAIL_CAP {
            let fl = x.floor() as i64;
            pts.extend([fl - 1, fl, fl + 1, fl + 2]);
        }
    }
    pts.retain(|&t| t >= n0);
    pts.sort_unstable();
    pts.dedup();
    let d = |n: i64| m1.eval(n) - m2.eval(n);
    let vals: Vec<S> = pts.iter().map(|&t| d(t)).collect();
    let limit = m1.limit() - m2.limit();
    let mut var = S::zero();
    let mut sup = limit.abs();
    for w in vals.windows(2) {
        var = var + (w[1].clone() - w[0].clone()).abs();
    }
    for v in &vals {
        sup = S::max_of(sup, v.abs());
    }
    var = var + (limit - vals[vals.len() - 1].clone()).abs();
    (var, sup)
}

/// Exact variation and sup norm of `M̃f - M̃g` for the classical uncentered operator.
pub struct DifferenceStats<S> {
    pub variation: S,
    pub sup: S,
}

/// Computes `Var(M̃f - M̃g)` and `‖M̃f - M̃g‖_∞` exactly.
///
/// The core region is summed point by point; each far field is split at every
/// real point where an active piece can switch or a piecewise difference can
/// turn, so the difference is monotone between consecutive split points.
pub fn difference_of_maximal<S: Scalar>(f: &DiscreteBVFunction<S>, g: &DiscreteBVFunction<S>) -> Result<DifferenceStats<S>> {
    let variant = OperatorVariant::classical();
    let lo = f.core_lo().min(g.core_lo());
    let hi = f.core_hi().max(g.core_hi());
    let (fi, gi) = (PrefixIndex::new(f), PrefixIndex::new(g));
    let d = |n: i64| {
        evaluate_indexed(&fi, n, &variant).value().expect("classical profile is finite")
            - evaluate_indexed(&gi, n, &variant).value().expect("classical profile is finite")
    };
    let vals: Vec<S> = ((lo - 1)..=(hi + 1)).into_par_iter().map(d).collect();
    let mut variation = S::zero();
    let mut sup = S::zero();
    for w in vals.windows(2) {
        variation = variation + (w[1].clone() - w[0].clone()).abs();
    }
    for v in &vals {
        sup = S::max_of(sup, v.abs());
    }
    let (vr, sr) = tail_difference(f, g, hi + 1);
    let (vl, sl) = tail_difference(&f.reflect(), &g.reflect(), -(lo - 1));
    Ok(DifferenceStats { variation: variation + vr + vl, sup: S::max_of(sup, S::max_of(sr, sl)) })
}

/// Variation of `Mf - Mg` over `[lo - margin, hi + margin]` for any variant, with the
/// jumps to the limits at both ends added. Exact only when the profiles are
/// monotone beyond the margin.
pub fn difference_of_maximal_margin<S: Scalar>(
    f: &DiscreteBVFunction<S>,
    g: &DiscreteBVFunction<S>,
    variant: &OperatorVariant,
    margin: i64,
) -> Result<DifferenceStats<S>> {
    let lo = f.core_lo().min(g.core_lo()) - margin;
    let hi = f.core_hi().max(g.core_hi()) + margin;
    let range = IntervalZ::new(lo, hi)?;
    let (pf, pg) = (maximal_profile_discrete(f, range, variant)?, maximal_profile_discrete(g, range, variant)?);
    let (Some(vf), Some(vg)) = (pf.values(), pg.values()) else {
        return Err(Error::NonzeroTails);
    };
    let ((lf, rf), (lg, rg)) = (pf.limits.expect("finite"), pg.limits.expect("finite"));
    let mut seq = vec![lf.value() - lg.value()];
    seq.extend(vf.into_iter().zip(vg).map(|(a, b)| a - b));
    seq.push(rf.value() - rg.value());
    let mut variation = S::zero();
    for w in seq.windows(2) {
        variation = variation + (w[1].clone() - w[0].clone()).abs();
    }
    let sup = seq.iter().fold(S::zero(), |m, v| S::max_of(m, v.abs()));
    Ok(DifferenceStats { variation, sup })
}

/// Variation of the profile over the same margin window, limits included.
pub fn variation_of_maximal_margin<S: Scalar>(
    f: &DiscreteBVFunction<S>,
    variant: &OperatorVariant,
    margin: i64,
) -> Result<S> {
    let zero = DiscreteBVFunction::zero();
    let stats = difference_of_maximal_margin(f, &zero, variant, margin)?;
    Ok(stats.variation)
}
