//! Executable structure checks: extrema strings, points of contact, one-sided
//! variation control, tail limits, good radii, the derivative formula and the
//! connecting/disconnecting split of `M_R f`.
//!
//! Discrete checks are exact in rational mode. Continuous checks are resolved on
//! grids and report the tolerances they use.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functions::{DiscreteBVFunction, FunctionJson, PiecewiseLinearFunction};
use crate::maxcont::{one_sided_candidates, one_sided_max};
use crate::maxdisc::{maximal_profile_discrete, variation_of_maximal, DiscreteProfile};
use crate::operator::{OperatorVariant, Side};
use crate::scalar::{Average, Beta, Scalar};
use crate::variation::{var_discrete, IntervalZ};

/// Finite-difference step for continuous derivative checks.
pub const FD_STEP: f64 = 1e-6;
/// Largest gap between one-sided difference quotients still treated as differentiable.
pub const DIFFERENTIABILITY_TOL: f64 = 1e-5;
/// Agreement required between the finite difference and the derivative formula.
pub const DERIVATIVE_TOL: f64 = 1e-4;
/// Slack for the sign facts on grids.
pub const SIGN_TOL: f64 = 1e-6;
/// Relative tolerance when collecting maximizing radii.
pub const RADIUS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// Outcome of one structural check on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub check: String,
    pub instance_digest: String,
    pub verdict: Verdict,
    pub violations: Vec<String>,
}

impl StructureReport {
    pub fn from_violations(check: &str, instance_digest: String, violations: Vec<String>) -> Self {
        let verdict = if violations.is_empty() { Verdict::Pass } else { Verdict::Fail };
        StructureReport { check: check.to_string(), instance_digest, verdict, violations }
    }

    pub fn not_applicable(check: &str, instance_digest: String, reason: String) -> Self {
        StructureReport { check: check.to_string(), instance_digest, verdict: Verdict::NotApplicable, violations: vec![reason] }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("reports always serialize")
    }
}

/// First 16 hex digits of the SHA-256 of the instance's JSON.
pub fn instance_digest(instance: &Value) -> String {
    let hash = Sha256::digest(instance.to_string().as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn digest_with<F: FunctionJson>(f: &F, extra: Option<String>) -> String {
    let mut v = f.to_json();
    if let (Some(extra), Value::Object(m)) = (extra, &mut v) {
        m.insert("at".into(), Value::String(extra));
    }
    instance_digest(&v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StringKind {
    Max,
    Min,
}

/// A maximal run of equal values that is a local maximum or minimum; `None` ends are infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremaString<S> {
    pub kind: StringKind,
    pub left: Option<i64>,
    pub right: Option<i64>,
    pub level: S,
}

impl<S> ExtremaString<S> {
    pub fn contains(&self, n: i64) -> bool {
        self.left.map_or(true, |l| l <= n) && self.right.map_or(true, |r| n <= r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremaAnalysis<S> {
    pub strings: Vec<ExtremaString<S>>,
    /// The profile is constant, so there are no strings.
    pub constant: bool,
}

/// The ordered strings of local maxima and minima of a profile.
///
/// Beyond the sampled range the profile is assumed monotone towards its limits,
/// which holds for uncentered classical profiles sampled at least one point
/// outside the core. A boundary plateau at the limit level extends to infinity.
pub fn extrema_strings<S: Scalar>(profile: &DiscreteProfile<S>) -> Result<ExtremaAnalysis<S>> {
    let avgs = profile.averages().ok_or(Error::NonzeroTails)?;
    let (left_lim, right_lim) = profile.limits.clone().ok_or(Error::NonzeroTails)?;
    let mut plateaus: Vec<(i64, i64, Average<S>)> = Vec::new();
    for (i, a) in avgs.into_iter().enumerate() {
        let n = profile.start + i as i64;
        match plateaus.last_mut() {
            Some(p) if p.2.same_value(&a) => p.1 = n,
            _ => plateaus.push((n, n, a)),
        }
    }
    let k = plateaus.len();
    let mut strings = Vec::new();
    let mut constant = false;
    for (i, (lo, hi, level)) in plateaus.iter().enumerate() {
        // ordering of each neighbor relative to the level; None when the plateau is infinite on that side
        let (left_end, left_cmp) = if i > 0 {
            (Some(*lo), Some(plateaus[i - 1].2.compare(level)))
        } else if left_lim.same_value(level) {
            (None, None)
        } else {
            (Some(*lo), Some(left_lim.compare(level)))
        };
        let (right_end, right_cmp) = if i + 1 < k {
            (Some(*hi), Some(plateaus[i + 1].2.compare(level)))
        } else if right_lim.same_value(level) {
            (None, None)
        } else {
            (Some(*hi), Some(right_lim.compare(level)))
        };
        let sides: Vec<Ordering> = [left_cmp, right_cmp].into_iter().flatten().collect();
        if sides.is_empty() {
            constant = true;
            continue;
        }
        let kind = if sides.iter().all(|o| *o == Ordering::Less) {
            StringKind::Max
        } else if sides.iter().all(|o| *o == Ordering::Greater) {
            StringKind::Min
        } else {
            continue;
        };
        strings.push(ExtremaString { kind, left: left_end, right: right_end, level: level.value() });
    }
    Ok(ExtremaAnalysis { strings, constant })
}

/// Profile margin outside the core; the classical uncentered profile is monotone beyond one point.
const STRING_MARGIN: i64 = 2;

fn classical_profile<S: Scalar>(f: &DiscreteBVFunction<S>, margin: i64) -> Result<DiscreteProfile<S>> {
    let range = IntervalZ::new(f.core_lo() - margin, f.core_hi() + margin)?;
    maximal_profile_discrete(f, range, &OperatorVariant::classical())
}

/// Strings of the classical uncentered maximal function of `f`.
pub fn maximal_strings<S: Scalar>(f: &DiscreteBVFunction<S>) -> Result<ExtremaAnalysis<S>> {
    extrema_strings(&classical_profile(f, STRING_MARGIN)?)
}

/// `M̃f = |f|` at both ends of every string of local maxima, and every such string is finite.
pub fn check_contact<S: Scalar>(f: &DiscreteBVFunction<S>) -> Result<StructureReport> {
    let profile = classical_profile(f, STRING_MARGIN)?;
    let analysis = extrema_strings(&profile)?;
    let mut violations = Vec::new();
    for s in analysis.strings.iter().filter(|s| s.kind == StringKind::Max) {
        let (Some(l), Some(r)) = (s.left, s.right) else {
            violations.push(format!("string of maxima at level {} is unbounded", s.level));
            continue;
        };
        for n in [l, r] {
            let m = profile.at(n).and_then(|e| e.average()).expect("string inside profile range");
            let fv = f.evaluate(n).abs();
            if !m.same_value(&Average::of_value(fv.clone(), Beta::ZERO)) {
                violations.push(format!("M f({n}) = {m} differs from |f({n})| = {fv}"));
            }
        }
    }
    Ok(StructureReport::from_violations("contact", digest_with(f, None), violations))
}

/// Checks `Var_[n,∞)(M̃f) ≤ Var_[n,∞)(f)` and its mirror image where their positional hypotheses hold.
pub fn one_sided_control_check<S: Scalar>(f: &DiscreteBVFunction<S>, n: i64) -> Result<StructureReport> {
    const CHECK: &str = "one_sided_control";
    let digest = digest_with(f, Some(n.to_string()));
    let analysis = maximal_strings(f)?;
    let strings = &analysis.strings;
    let mut right_applies = false;
    let mut left_applies = false;
    for (k, a) in strings.iter().enumerate() {
        if a.kind != StringKind::Max {
            continue;
        }
        let prev = k.checked_sub(1).map(|i| &strings[i]);
        let next = strings.get(k + 1);
        if a.right.map_or(true, |r| n <= r) {
            right_applies |= match prev {
                None => true,
                Some(b) => b.kind == StringKind::Min && b.left.map_or(true, |l| l <= n),
            };
        }
        if a.left.map_or(true, |l| l <= n) {
            left_applies |= match next {
                None => true,
                Some(b) => b.kind == StringKind::Min && b.right.map_or(true, |r| n <= r),
            };
        }
    }
    if analysis.constant || strings.is_empty() {
        right_applies = true;
        left_applies = true;
    }
    if !right_applies && !left_applies {
        return Ok(StructureReport::not_applicable(CHECK, digest, format!("n = {n} lies in no admissible range")));
    }
    let variant = OperatorVariant::classical();
    let mut violations = Vec::new();
    let mut check = |window: IntervalZ| -> Result<()> {
        let lhs = variation_of_maximal(f, &variant, window)?;
        let rhs = var_discrete(f, window);
        if lhs.cmp_tol(&rhs) == Ordering::Greater {
            violations.push(format!("Var_{window}(M f) = {lhs} exceeds Var_{window}(f) = {rhs}"));
        }
        Ok(())
    };
    if right_applies {
        check(IntervalZ::from(n))?;
    }
    if left_applies {
        check(IntervalZ::up_to(n))?;
    }
    Ok(StructureReport::from_violations(CHECK, digest, violations))
}

/// `|a|`, `|b|` and `c = max(|a|, |b|)` for a discrete function.
#[derive(Clone, Debug, PartialEq)]
pub struct TailLimits<S> {
    pub a: S,
    pub b: S,
    pub c: S,
}

/// Tail values of `f`, checked against the classical uncentered profile on `core ± margin`.
///
/// The profile never dips below `c`, and at distance `d` outside the core it exceeds
/// `c` by at most `K/(d+1)` with `K = Σ_core (|f| - c)_+`.
pub fn tail_limits<S: Scalar>(f: &DiscreteBVFunction<S>, margin: i64) -> Result<(TailLimits<S>, StructureReport)> {
    let a = f.left_tail().abs();
    let b = f.right_tail().abs();
    let c = S::max_of(a.clone(), b.clone());
    let profile = classical_profile(f, margin.max(1))?;
    let values = profile.values().ok_or(Error::NonzeroTails)?;
    let excess = f
        .runs()
        .iter()
        .map(|r| S::max_of(r.value.abs() - c.clone(), S::zero()) * S::int(r.len()))
        .fold(S::zero(), |acc, x| acc + x);
    let (lo, hi) = (f.core_lo(), f.core_hi());
    let mut violations = Vec::new();
    for (i, v) in values.iter().enumerate() {
        let n = profile.start + i as i64;
        if v.cmp_tol(&c) == Ordering::Less {
            violations.push(format!("M f({n}) = {v} lies below c = {c}"));
        }
        let dist = if n > hi {
            n - hi
        } else if n < lo {
            lo - n
        } else {
            continue;
        };
        let bound = c.clone() + excess.clone() / S::int(dist + 1);
        if v.cmp_tol(&bound) == Ordering::Greater {
            violations.push(format!("M f({n}) = {v} exceeds the decay bound {bound}"));
        }
    }
    let report = StructureReport::from_violations("tail_limits", digest_with(f, None), violations);
    Ok((TailLimits { a, b, c }, report))
}

fn is_zero_function<S: Scalar>(f: &PiecewiseLinearFunction<S>) -> bool {
    f.nodes().iter().all(|(_, y)| y.is_zero())
}

/// Radii `r ≥ 0` with `M_R f(x) = (1/r)∫_x^{x+r}|f|`; `0` stands for the shrink limit.
pub fn good_radii<S: Scalar>(f: &PiecewiseLinearFunction<S>, x: &S) -> Result<Vec<S>> {
    if is_zero_function(f) {
        return Err(Error::InvalidParameter("good radii are undefined for the zero function".into()));
    }
    let cands = one_sided_candidates(f, x, Side::Right)?;
    let sup = cands.iter().map(|(_, a)| a.to_f64()).fold(0.0, f64::max);
    let tol = RADIUS_TOL * sup.max(1.0);
    let mut radii: Vec<S> = cands.into_iter().filter(|(_, a)| sup - a.to_f64() <= tol).map(|(r, _)| r).collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    radii.dedup();
    Ok(radii)
}

/// Compares a central difference of `M_R f` at `x` with `(|f|(x+r) - |f|(x))/r` for every good radius.
pub fn derivative_formula_check(f: &PiecewiseLinearFunction<f64>, x: f64) -> Result<StructureReport> {
    const CHECK: &str = "derivative_formula";
    let digest = digest_with(f, Some(x.to_string()));
    let m = |y: f64| one_sided_max(f, &y, Side::Right).map(|e| e.to_f64());
    let (mm, m0, mp) = (m(x - FD_STEP)?, m(x)?, m(x + FD_STEP)?);
    let (back, fwd) = ((m0 - mm) / FD_STEP, (mp - m0) / FD_STEP);
    if (fwd - back).abs() > DIFFERENTIABILITY_TOL {
        return Ok(StructureReport::not_applicable(CHECK, digest, format!("M_R f is not differentiable at {x}")));
    }
    let central = (mp - mm) / (2.0 * FD_STEP);
    let g = f.abs();
    let mut violations = Vec::new();
    for r in good_radii(f, &x)? {
        let formula = if r == 0.0 {
            match g.derivative(&x) {
                Some(d) => d,
                None => {
                    return Ok(StructureReport::not_applicable(CHECK, digest, format!("|f| has a kink at {x}")));
                }
            }
        } else {
            (g.evaluate(&(x + r)) - g.evaluate(&x)) / r
        };
        if (formula - central).abs() > DERIVATIVE_TOL {
            violations.push(format!("at x = {x}, r = {r}: formula {formula} vs finite difference {central}"));
        }
    }
    Ok(StructureReport::from_violations(CHECK, digest, violations))
}

/// Grid-resolved `D = {M_R f > |f|}` and its complement `C`, with the sign facts checked.
#[derive(Clone, Debug, PartialEq)]
pub struct DisconnectingSet {
    /// Components of `D` as `(first, last)` grid points.
    pub components: Vec<(f64, f64)>,
    /// Components of `C`.
    pub connecting: Vec<(f64, f64)>,
    pub report: StructureReport,
}

fn components(grid: &[f64], mask: &[bool], want: bool) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..=grid.len() {
        let hit = i < grid.len() && mask[i] == want;
        match (hit, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((grid[s], grid[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// On `D` the function `M_R f` does not decrease; on `C` it follows `|f|`, which does not increase.
pub fn disconnecting_set(f: &PiecewiseLinearFunction<f64>, grid: &[f64]) -> Result<DisconnectingSet> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Unsorted);
    }
    let g = f.abs();
    let m: Vec<f64> = grid
        .par_iter()
        .map(|x| one_sided_max(f, x, Side::Right).map(|e| e.to_f64()))
        .collect::<Result<_>>()?;
    let gv: Vec<f64> = grid.iter().map(|x| g.evaluate(x)).collect();
    let in_d: Vec<bool> = m.iter().zip(&gv).map(|(mv, fv)| *mv > fv + 1e-12 * fv.max(1.0)).collect();
    let nodes: Vec<f64> = g.nodes().iter().map(|(x, _)| *x).collect();
    let mut violations = Vec::new();
    for i in 0..grid.len().saturating_sub(1) {
        if in_d[i] && in_d[i + 1] {
            let slope = (m[i + 1] - m[i]) / (grid[i + 1] - grid[i]);
            if slope < -SIGN_TOL {
                violations.push(format!("M_R f decreases on D near {} (slope {slope})", grid[i]));
            }
        }
    }
    for i in 1..grid.len().saturating_sub(1) {
        if in_d[i - 1] || in_d[i] || in_d[i + 1] {
            continue;
        }
        let (a, b) = (grid[i - 1], grid[i + 1]);
        if nodes.iter().any(|t| a < *t && *t < b) {
            continue;
        }
        let fs = (gv[i + 1] - gv[i - 1]) / (b - a);
        let ms = (m[i + 1] - m[i - 1]) / (b - a);
        if fs > SIGN_TOL {
            violations.push(format!("|f| increases on C near {} (slope {fs})", grid[i]));
        }
        if (ms - fs).abs() > SIGN_TOL {
            violations.push(format!("M_R f and |f| have different slopes on C near {}", grid[i]));
        }
    }
    let report = StructureReport::from_violations("disconnecting_set", digest_with(f, None), violations);
    Ok(DisconnectingSet {
        components: components(grid, &in_d, true),
        connecting: components(grid, &in_d, false),
        report,
    })
}

/// `lo, lo+h, ..., hi` without accumulated rounding.
pub fn uniform_grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h).round().max(0.0) as usize;
    (0..=n).map(|k| lo + k as f64 * h).collect()
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
    fn delta_has_one_max_string() {
        let a = maximal_strings(&F::delta_at_origin()).unwrap();
        assert_eq!(a.strings, vec![ExtremaString { kind: StringKind::Max, left: Some(0), right: Some(0), level: q(1, 1) }]);
        assert!(check_contact(&F::delta_at_origin()).unwrap().passed());
        let c = maximal_strings(&F::constant(q(2, 1))).unwrap();
        assert!(c.constant && c.strings.is_empty());
    }

    #[test]
    fn two_bumps_alternate() {
        let f = F::indicator(0, 1, q(1, 1)).unwrap().add_indicator(5, 6, q(1, 1)).unwrap();
        let kinds: Vec<_> = maximal_strings(&f).unwrap().strings.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, vec![StringKind::Max, StringKind::Min, StringKind::Max]);
    }

    #[test]
    fn control_at_delta_peak() {
        let r = one_sided_control_check(&F::delta_at_origin(), 0).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let r = one_sided_control_check(&F::constant(q(1, 1)), 3).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn tails_and_decay() {
        let (t, r) = tail_limits(&F::delta_at_origin(), 50).unwrap();
        assert_eq!(t.c, q(0, 1));
        assert!(r.passed());
        let f = F::new(0, vec![q(3, 1)], q(2, 1), q(1, 1)).unwrap();
        let (t, r) = tail_limits(&f, 20).unwrap();
        assert_eq!((t.a, t.b, t.c), (q(2, 1), q(1, 1), q(2, 1)));
        assert!(r.passed(), "{:?}", r.violations);
    }

    #[test]
    fn tent_radii_and_derivative() {
        let tent = PiecewiseLinearFunction::<f64>::tent();
        assert_eq!(good_radii(&tent, &0.0).unwrap(), vec![0.0]);
        let r = good_radii(&tent, &-1.0).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0] > 0.0 && r[0] < 2.0);
        let report = derivative_formula_check(&tent, 0.5).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(good_radii(&PiecewiseLinearFunction::<f64>::new(vec![(0.0, 0.0)]).unwrap(), &0.0).is_err());
    }

    #[test]
    fn tent_disconnecting_set() {
        let tent = PiecewiseLinearFunction::<f64>::tent();
        let grid = uniform_grid(-2.0, 2.0, 1e-2);
        let d = disconnecting_set(&tent, &grid).unwrap();
        assert!(d.report.passed(), "{:?}", d.report.violations);
        assert!(d.components.iter().any(|(a, b)| *a <= -0.9 && *b >= -0.1));
        assert_eq!(instance_digest(&serde_json::json!({"a": 1})).len(), 16);
    }
}
