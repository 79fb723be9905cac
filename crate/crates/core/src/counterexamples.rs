//! Counterexample sequences for the fractional operators.
//!
//! Each setting perturbs a base function by `(1/2j)·χ_[0,h_j]` with `h_j` chosen
//! from a record search on an explicit one-variable function. Builders only use
//! those closed forms; verifiers only use the maximal-function optimizers.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{DiscreteBVFunction, StepFunction};
use crate::maxcont::{step_max_continuous, ContinuousEvaluation, RealWindow, WindowKind};
use crate::maxdisc::{maximal_discrete, DiscreteEvaluation, DiscreteWitness};
use crate::operator::OperatorVariant;
use crate::scalar::{Average, Beta, Rational, Scalar};
use crate::variation::{bvnorm_discrete, var_step};

/// Float comparisons closer than this (relative) are settled exactly.
const NEAR_TIE: f64 = 1e-9;
/// Ties closer than this are not strict when no exact comparison is available.
const TIE_GUARD: f64 = 1e-12;
/// Numerical slack for identities between irrational values.
const VALUE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// `(s+1)^(β-1)((s+1)/(2j) + 1)`.
    L,
    /// `(2r+1)^(β-1)((r+1)/(2j) + 1)`.
    F,
    /// `(2r+1)^(β-1)((r+2)/(2j) + 1)`.
    G,
    /// `s^(β-1)(1 + s/(2j))`.
    #[serde(rename = "F_cont")]
    FCont,
    /// `(2r)^(β-1)(r/(2j) + 1)`.
    #[serde(rename = "F_cont_centered")]
    FContCentered,
    /// `(2r)^(β-1)((r+2)/(2j) + 1)`.
    #[serde(rename = "G_cont")]
    GCont,
}

impl Family {
    pub fn is_discrete(self) -> bool {
        matches!(self, Family::L | Family::F | Family::G)
    }

    /// `(length, numerator of the mass over 2j)` at `s`: the value is `length^(β-1)(1 + num/(2j))`.
    fn shape(self, s: i64) -> (i64, i64) {
        match self {
            Family::L => (s + 1, s + 1),
            Family::F => (2 * s + 1, s + 1),
            Family::G => (2 * s + 1, s + 2),
            Family::FCont => (s, s),
            Family::FContCentered => (2 * s, s),
            Family::GCont => (2 * s, s + 2),
        }
    }
}

/// One of the explicit functions whose records fix `h_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFunction {
    pub family: Family,
    pub j: u32,
    pub beta: Beta,
}

impl RecordFunction {
    pub fn new(family: Family, j: u32, beta: Beta) -> Self {
        RecordFunction { family, j, beta }
    }

    /// The value at `s` as an exact average.
    pub fn average(&self, s: i64) -> Average<Rational> {
        let (len, num) = self.family.shape(s);
        let mass = Rational::one() + Rational::from_ratio(num, 2 * self.j as i64);
        Average::new(mass, Rational::int(len), self.beta)
    }

    pub fn value(&self, s: i64) -> f64 {
        let (len, num) = self.family.shape(s);
        (len as f64).powf(self.beta.as_f64() - 1.0) * (1.0 + num as f64 / (2.0 * self.j as f64))
    }

    /// `a > b` for the values at `a` and `b`, exact whenever `β` has a small denominator.
    fn exceeds(&self, a: i64, b: i64) -> bool {
        if self.beta.exact_degree().is_some() {
            self.average(a).compare(&self.average(b)) == Ordering::Greater
        } else {
            self.value(a) - self.value(b) > TIE_GUARD
        }
    }

    /// Where the value has its minimum over `s > 0`, for the continuous families.
    pub fn turning_point(&self) -> Rational {
        let shift = match self.family {
            Family::GCont => 2,
            _ => 0,
        };
        let b = self.beta.as_rational();
        Rational::from_ratio(2 * self.j as i64 + shift, 1) * (Rational::one() - b.clone()) / b
    }
}

/// Streams `s = 0, 1, 2, …` and reports whether each is a strict record.
struct RecordScanner {
    rf: RecordFunction,
    next: i64,
    best: f64,
    best_at: i64,
}

impl RecordScanner {
    fn new(rf: RecordFunction) -> Self {
        RecordScanner { rf, next: 0, best: f64::NEG_INFINITY, best_at: -1 }
    }

    fn step(&mut self) -> bool {
        let s = self.next;
        self.next += 1;
        let v = self.rf.value(s);
        let record = if self.best_at < 0 {
            true
        } else if v > self.best * (1.0 + NEAR_TIE) {
            true
        } else if v < self.best * (1.0 - NEAR_TIE) {
            false
        } else {
            // near tie: decide against every earlier value in the same band
            let band = self.best * (1.0 - NEAR_TIE);
            (0..s).filter(|&t| self.rf.value(t) >= band).all(|t| self.rf.exceeds(s, t))
        };
        if record {
            self.best = v;
            self.best_at = s;
        }
        record
    }
}

/// Smallest `m > lower_bound` with `rf(m) > rf(s)` for every integer `0 ≤ s < m`.
pub fn first_strict_record(rf: &RecordFunction, lower_bound: i64) -> Result<i64> {
    if !rf.family.is_discrete() {
        return Err(Error::InvalidParameter(format!("{:?} is not a discrete record family", rf.family)));
    }
    if lower_bound < 0 {
        return Err(Error::InvalidParameter(format!("lower bound must be nonnegative, got {lower_bound}")));
    }
    let mut scan = RecordScanner::new(*rf);
    loop {
        let m = scan.next;
        if scan.step() && m > lower_bound {
            return Ok(m);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Thm3,
    Thm4,
    Thm5,
    Thm6,
}

impl Setting {
    pub const ALL: [Setting; 4] = [Setting::Thm3, Setting::Thm4, Setting::Thm5, Setting::Thm6];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Thm3 => "thm3",
            Setting::Thm4 => "thm4",
            Setting::Thm5 => "thm5",
            Setting::Thm6 => "thm6",
        }
    }

    /// The second evaluation point: 1 on the integers, 2 on the line.
    pub fn second_point(self) -> i64 {
        match self {
            Setting::Thm5 | Setting::Thm6 => 1,
            Setting::Thm3 | Setting::Thm4 => 2,
        }
    }

    pub fn variant(self, beta: Beta) -> OperatorVariant {
        match self {
            Setting::Thm3 | Setting::Thm5 => OperatorVariant::uncentered(beta),
            Setting::Thm4 | Setting::Thm6 => OperatorVariant::centered(beta),
        }
    }

    /// Starting lower bound for `h_1`.
    pub fn initial_bound(self) -> i64 {
        match self {
            Setting::Thm5 | Setting::Thm6 => 0,
            Setting::Thm3 | Setting::Thm4 => 2,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown setting {s:?}; expected thm3, thm4, thm5 or thm6")))
    }
}

fn require_fractional(beta: Beta) -> Result<()> {
    if beta.is_classical() {
        return Err(Error::InvalidParameter("counterexamples need 0 < beta < 1".into()));
    }
    Ok(())
}

/// `h_j` for the discrete uncentered setting.
fn next_h_thm5(j: u32, beta: Beta, prev: i64) -> Result<i64> {
    first_strict_record(&RecordFunction::new(Family::L, j, beta), prev)
}

/// `h_j` for the discrete centered setting: an `F` record at `h` and a `G` record at `h - 1`.
fn next_h_thm6(j: u32, beta: Beta, prev: i64) -> i64 {
    let mut f = RecordScanner::new(RecordFunction::new(Family::F, j, beta));
    let mut g = RecordScanner::new(RecordFunction::new(Family::G, j, beta));
    let mut g_prev = false;
    loop {
        let h = f.next;
        let f_rec = f.step();
        if h > prev && h >= 1 && f_rec && g_prev {
            return h;
        }
        g_prev = g.step();
    }
}

/// Strict record of a unimodal continuous family at `h` over `[from, h)`: `h` lies past
/// the turning point and beats the value at `from`.
fn continuous_record(rf: &RecordFunction, h: i64, from: i64) -> bool {
    Rational::int(h) > rf.turning_point() && rf.exceeds(h, from)
}

/// Direct check over the integers in `[from, h)`, used to confirm the unimodal reduction.
fn scanned_record(rf: &RecordFunction, h: i64, from: i64) -> bool {
    (from..h).all(|s| rf.exceeds(h, s))
}

fn next_h_thm3(j: u32, beta: Beta, prev: i64) -> i64 {
    let rf = RecordFunction::new(Family::FCont, j, beta);
    let mut h = prev.max(2) + 1;
    while !(continuous_record(&rf, h, 1) && scanned_record(&rf, h, 1)) {
        h += 1;
    }
    h
}

fn next_h_thm4(j: u32, beta: Beta, prev: i64) -> i64 {
    let f = RecordFunction::new(Family::FContCentered, j, beta);
    let g = RecordFunction::new(Family::GCont, j, beta);
    let mut h = prev.max(2) + 1;
    loop {
        if continuous_record(&f, h, 1)
            && continuous_record(&g, h - 2, 2)
            && scanned_record(&f, h, 1)
            && scanned_record(&g, h - 2, 2)
        {
            return h;
        }
        h += 1;
    }
}

/// `h_1, …, h_jmax` for a setting.
pub fn heights(setting: Setting, beta: Beta, jmax: u32) -> Result<Vec<i64>> {
    require_fractional(beta)?;
    let mut out = Vec::with_capacity(jmax as usize);
    let mut prev = setting.initial_bound();
    for j in 1..=jmax {
        let h = match setting {
            Setting::Thm5 => next_h_thm5(j, beta, prev)?,
            Setting::Thm6 => next_h_thm6(j, beta, prev),
            Setting::Thm3 => next_h_thm3(j, beta, prev),
            Setting::Thm4 => next_h_thm4(j, beta, prev),
        };
        out.push(h);
        prev = h;
    }
    Ok(out)
}

fn half_over_j(j: u32) -> Rational {
    Rational::from_ratio(1, 2 * j as i64)
}

/// `δ + (1/2j)χ_[0,h]` on the integers.
pub fn discrete_member(j: u32, h: i64) -> Result<DiscreteBVFunction<Rational>> {
    DiscreteBVFunction::delta_at_origin().add_indicator(0, h, half_over_j(j))
}

/// `χ_[0,1] + (1/2j)χ_[0,h]` on the line.
pub fn continuous_member(j: u32, h: i64) -> Result<StepFunction<Rational>> {
    let base = continuous_base();
    Ok(base.add(&StepFunction::indicator(Rational::int(0), Rational::int(h), half_over_j(j))?))
}

pub fn continuous_base() -> StepFunction<Rational> {
    StepFunction::indicator(Rational::int(0), Rational::one(), Rational::one()).expect("unit interval")
}

/// `(f_j, h_j)` for the given setting, recomputing the chain `h_1, …, h_j`.
pub enum Member {
    Discrete(DiscreteBVFunction<Rational>),
    Continuous(StepFunction<Rational>),
}

pub fn build(setting: Setting, j: u32, beta: Beta) -> Result<(Member, i64)> {
    if j == 0 {
        return Err(Error::InvalidParameter("j must be positive".into()));
    }
    let h = *heights(setting, beta, j)?.last().expect("j >= 1");
    let member = match setting {
        Setting::Thm5 | Setting::Thm6 => Member::Discrete(discrete_member(j, h)?),
        Setting::Thm3 | Setting::Thm4 => Member::Continuous(continuous_member(j, h)?),
    };
    Ok((member, h))
}

/// One row of the reproduction table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub setting: Setting,
    pub beta: Beta,
    pub j: u32,
    pub h_j: i64,
    pub value_at_0: f64,
    pub value_at_1_or_2: f64,
    /// `|Δ(Mf_j) - Δ(Mf)|` across the two evaluation points.
    pub derivative_gap: f64,
    pub bv_distance: String,
    /// `(|Δ|^q / d^(q-1))^(1/q)`, a lower bound for `Var_q(Mf_j - Mf)`.
    pub varq_lower_bound: f64,
    pub verified: bool,
}

/// A verified row and the assertions it failed, if any.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub row: CounterexampleRow,
    pub failures: Vec<String>,
}

struct Checks(Vec<String>);

impl Checks {
    fn assert(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.0.push(msg());
        }
    }

    fn close(&mut self, got: f64, want: f64, what: &str) {
        let ok = (got - want).abs() <= VALUE_TOL * want.abs().max(1.0);
        self.assert(ok, || format!("{what}: got {got}, expected {want}"));
    }
}

fn pow_beta(x: f64, beta: Beta) -> f64 {
    x.powf(beta.as_f64() - 1.0)
}

fn lower_bound(gap: f64, dist: f64, beta: Beta) -> f64 {
    let q = beta.q_f64();
    (gap.powf(q) / dist.powf(q - 1.0)).powf(1.0 / q)
}

fn disc_eval(f: &DiscreteBVFunction<Rational>, n: i64, v: &OperatorVariant) -> Result<DiscreteEvaluation<Rational>> {
    maximal_discrete(f, n, v)
}

fn cont_eval(f: &StepFunction<Rational>, x: i64, v: &OperatorVariant) -> Result<ContinuousEvaluation<Rational>> {
    step_max_continuous(f, &Rational::int(x), v)
}

fn window_is(e: &DiscreteEvaluation<Rational>, l: i64, r: i64) -> bool {
    e.witness() == Some(&DiscreteWitness::Window { l, r })
}

fn real_window_is(e: &ContinuousEvaluation<Rational>, l: i64, r: i64) -> bool {
    e.witness() == Some(&RealWindow { l: Rational::int(l), r: Rational::int(r), kind: WindowKind::Attained })
}

/// Verifies member `j` with height `h` using the optimizers only.
pub fn verify(setting: Setting, j: u32, beta: Beta, h: i64) -> Result<Verification> {
    require_fractional(beta)?;
    let variant = setting.variant(beta);
    let p = setting.second_point();
    let mut c = Checks(Vec::new());
    let (v0, vp, base0, basep, bv) = match setting {
        Setting::Thm5 | Setting::Thm6 => {
            let f = DiscreteBVFunction::<Rational>::delta_at_origin();
            let fj = discrete_member(j, h)?;
            let (e0, ep) = (disc_eval(&fj, 0, &variant)?, disc_eval(&fj, p, &variant)?);
            let (b0, bp) = (disc_eval(&f, 0, &variant)?, disc_eval(&f, p, &variant)?);
            let bv = bvnorm_discrete(&fj.sub(&f));
            c.assert(bv == Rational::from_ratio(1, j as i64), || format!("BV distance {bv} differs from 1/{j}"));
            if setting == Setting::Thm5 {
                c.assert(window_is(&e0, 0, h), || format!("witness at 0 is {:?}, expected [0, {h}]", e0.witness()));
                c.assert(window_is(&ep, 0, h), || format!("witness at 1 is {:?}, expected [0, {h}]", ep.witness()));
                c.assert(e0 == ep, || "values at 0 and 1 differ".to_string());
                c.close(bp.to_f64(), pow_beta(2.0, beta), "base value at 1");
            } else {
                c.assert(window_is(&e0, -h, h), || format!("witness at 0 is {:?}, expected radius {h}", e0.witness()));
                c.assert(window_is(&ep, 2 - h, h), || format!("witness at 1 is {:?}, expected radius {}", ep.witness(), h - 1));
                c.close(bp.to_f64(), pow_beta(3.0, beta), "base value at 1");
                let formula = (1.0 + (h + 1) as f64 / (2.0 * j as f64))
                    * (pow_beta((2 * h - 1) as f64, beta) - pow_beta((2 * h + 1) as f64, beta));
                let got = (ep.to_f64() - e0.to_f64()).abs();
                c.assert((got - formula).abs() <= VALUE_TOL * formula.max(1e-3), || {
                    format!("derivative {got} differs from the closed form {formula}")
                });
            }
            c.close(b0.to_f64(), 1.0, "base value at 0");
            (e0.to_f64(), ep.to_f64(), b0.to_f64(), bp.to_f64(), bv.to_string())
        }
        Setting::Thm3 | Setting::Thm4 => {
            let f = continuous_base();
            let fj = continuous_member(j, h)?;
            let (e0, ep) = (cont_eval(&fj, 0, &variant)?, cont_eval(&fj, p, &variant)?);
            let (b0, bp) = (cont_eval(&f, 0, &variant)?, cont_eval(&f, p, &variant)?);
            let d = fj.sub(&f);
            let bv = d.left_tail().abs() + var_step(&d, None);
            c.assert(bv == Rational::from_ratio(1, j as i64), || format!("BV distance {bv} differs from 1/{j}"));
            if setting == Setting::Thm3 {
                c.assert(real_window_is(&e0, 0, h), || format!("witness at 0 is {:?}, expected [0, {h}]", e0.witness()));
                c.assert(real_window_is(&ep, 0, h), || format!("witness at 2 is {:?}, expected [0, {h}]", ep.witness()));
                c.close(ep.to_f64(), e0.to_f64(), "values at 0 and 2");
                c.close(b0.to_f64(), 1.0, "base value at 0");
                c.close(bp.to_f64(), pow_beta(2.0, beta), "base value at 2");
            } else {
                c.assert(real_window_is(&e0, -h, h), || format!("witness at 0 is {:?}, expected radius {h}", e0.witness()));
                c.assert(real_window_is(&ep, 4 - h, h), || format!("witness at 2 is {:?}, expected radius {}", ep.witness(), h - 2));
                c.close(b0.to_f64(), pow_beta(2.0, beta), "base value at 0");
                c.close(bp.to_f64(), pow_beta(4.0, beta), "base value at 2");
                let formula = (1.0 + h as f64 / (2.0 * j as f64))
                    * (pow_beta((2 * h - 4) as f64, beta) - pow_beta((2 * h) as f64, beta));
                let got = ep.to_f64() - e0.to_f64();
                c.assert((got - formula).abs() <= VALUE_TOL * formula.abs().max(1e-3), || {
                    format!("difference {got} differs from the closed form {formula}")
                });
            }
            (e0.to_f64(), ep.to_f64(), b0.to_f64(), bp.to_f64(), bv.to_string())
        }
    };
    let gap = ((vp - v0) - (basep - base0)).abs();
    let row = CounterexampleRow {
        setting,
        beta,
        j,
        h_j: h,
        value_at_0: v0,
        value_at_1_or_2: vp,
        derivative_gap: gap,
        bv_distance: bv,
        varq_lower_bound: lower_bound(gap, p as f64, beta),
        verified: c.0.is_empty(),
    };
    Ok(Verification { row, failures: c.0 })
}

/// The full table for `j = 1..=jmax`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub setting: Setting,
    pub beta: Beta,
    pub initial_bound: i64,
    pub rows: Vec<CounterexampleRow>,
    pub failures: Vec<String>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn reproduce(setting: Setting, beta: Beta, jmax: u32) -> Result<Reproduction> {
    let hs = heights(setting, beta, jmax)?;
    let mut rows = Vec::with_capacity(hs.len());
    let mut failures = Vec::new();
    for (i, h) in hs.iter().enumerate() {
        let j = i as u32 + 1;
        let v = verify(setting, j, beta, *h)?;
        failures.extend(v.failures.into_iter().map(|m| format!("j = {j}: {m}")));
        rows.push(v.row);
    }
    if hs.windows(2).any(|w| w[0] >= w[1]) {
        failures.push("heights are not strictly increasing".into());
    }
    if setting == Setting::Thm6 {
        for w in rows.windows(2) {
            let (a, b) = ((w[0].value_at_1_or_2 - w[0].value_at_0).abs(), (w[1].value_at_1_or_2 - w[1].value_at_0).abs());
            if b >= a {
                failures.push(format!("derivative at j = {} does not decrease ({a} then {b})", w[1].j));
            }
        }
    }
    Ok(Reproduction { setting, beta, initial_bound: setting.initial_bound(), rows, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Beta {
        Beta::new(1, 2).unwrap()
    }

    #[test]
    fn exact_tie_is_not_a_record() {
        let rf = RecordFunction::new(Family::L, 1, half());
        assert!(rf.average(3).same_value(&rf.average(0)));
        assert_eq!(first_strict_record(&rf, 0).unwrap(), 4);
        assert!(first_strict_record(&RecordFunction::new(Family::FCont, 1, half()), 0).is_err());
    }

    #[test]
    fn first_heights() {
        assert_eq!(heights(Setting::Thm5, half(), 1).unwrap(), vec![4]);
        assert_eq!(heights(Setting::Thm3, half(), 1).unwrap(), vec![5]);
        assert_eq!(heights(Setting::Thm4, half(), 1).unwrap(), vec![11]);
        assert!(heights(Setting::Thm3, Beta::ZERO, 1).is_err());
    }

    #[test]
    fn thm5_first_member() {
        let v = verify(Setting::Thm5, 1, half(), 4).unwrap();
        assert!(v.failures.is_empty(), "{:?}", v.failures);
        assert!((v.row.value_at_0 - 7.0 / (2.0 * 5f64.sqrt())).abs() < 1e-12);
        assert_eq!(v.row.bv_distance, "1");
        assert!((v.row.derivative_gap - (1.0 - 2f64.powf(-0.5))).abs() < 1e-12);
    }

    #[test]
    fn short_tables_pass() {
        for s in Setting::ALL {
            let r = reproduce(s, half(), 4).unwrap();
            assert!(r.passed(), "{s}: {:?}", r.failures);
        }
    }
}
