//! Convergence experiments, inequality fuzzing and randomized probes.
//!
//! Every experiment produces an [`ExperimentReport`]: a table of rows keyed
//! by `j` or by trial index, plus a verdict that can be recomputed from the
//! table alone with [`ExperimentReport::recheck`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::counterexamples::{heights, Setting};
use crate::error::{Error, Result};
use crate::functions::{DiscreteBVFunction, FunctionJson, PiecewiseLinearFunction, StepFunction};
use crate::maxcont::{max_continuous, profile_continuous, ContinuousInput};
use crate::maxdisc::{
    difference_of_maximal, difference_of_maximal_margin, variation_of_maximal, varq_maximal_bounds,
};
use crate::operator::{OperatorVariant, Side};
use crate::scalar::{Beta, Rational, Scalar};
use crate::structure::{good_radii, uniform_grid};
use crate::variation::{bvnorm_discrete, var_discrete, var_pwl, IntervalZ};

/// Final-value threshold for discrete convergence runs.
pub const THM2_THRESHOLD: f64 = 1e-3;
/// Final-value threshold for grid-based continuous convergence runs.
pub const THM1_THRESHOLD: f64 = 1e-2;
/// Tolerance of the Brezis-Lieb check at `j_max`.
pub const BREZIS_LIEB_TOL: f64 = 1e-6;
/// Tolerance of the fractional q-variation bound.
pub const VARQ_TOL: f64 = 1e-9;
/// Distance allowed between a witness radius of `f_j` and a good radius of `f`.
pub const RADIUS_ACCUMULATION_TOL: f64 = 1e-2;
/// Slack allowed when testing a float sequence for monotonicity.
pub const MONOTONE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentVerdict {
    Converges,
    Diverges,
    Inconclusive,
    Pass,
    Fail,
    InconclusiveSupporting,
    CandidateViolation,
}

impl ExperimentVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentVerdict::Converges => "converges",
            ExperimentVerdict::Diverges => "diverges",
            ExperimentVerdict::Inconclusive => "inconclusive",
            ExperimentVerdict::Pass => "pass",
            ExperimentVerdict::Fail => "fail",
            ExperimentVerdict::InconclusiveSupporting => "inconclusive-supporting",
            ExperimentVerdict::CandidateViolation => "candidate-violation",
        }
    }
}

impl fmt::Display for ExperimentVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a verdict is derived from one column of the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionRule {
    /// `converges` iff the last value is below `threshold` and the values for
    /// `j ≥ j_max/2` never increase; `diverges` iff the last value is at least
    /// `threshold` and at least half the column maximum; otherwise `inconclusive`.
    Convergence { column: String, threshold: f64 },
    /// `pass` iff the column is zero on every row.
    NoViolations { column: String },
    /// `inconclusive-supporting` iff the column is zero on every row, else `candidate-violation`.
    Probe { column: String },
}

impl DecisionRule {
    pub fn column(&self) -> &str {
        match self {
            DecisionRule::Convergence { column, .. }
            | DecisionRule::NoViolations { column }
            | DecisionRule::Probe { column } => column,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DecisionRule::Convergence { column, threshold } => format!(
                "converges iff final {column} < {threshold:e} and {column} is non-increasing for j >= j_max/2; \
                 diverges iff final >= {threshold:e} and final >= max/2; otherwise inconclusive \
                 (threshold is a convention, not a modulus of continuity)"
            ),
            DecisionRule::NoViolations { column } => format!("pass iff {column} = 0 on every row"),
            DecisionRule::Probe { column } => format!(
                "inconclusive-supporting iff {column} = 0 on every row, otherwise candidate-violation; never a proof"
            ),
        }
    }
}

/// Convergence verdict for a series keyed by `j`.
pub fn convergence_verdict(series: &[(u32, f64)], threshold: f64) -> ExperimentVerdict {
    let Some(&(jmax, last)) = series.last() else {
        return ExperimentVerdict::Inconclusive;
    };
    if eventually_non_increasing(series, jmax) && last < threshold {
        return ExperimentVerdict::Converges;
    }
    let max = series.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    if last >= threshold && last >= 0.5 * max {
        return ExperimentVerdict::Diverges;
    }
    ExperimentVerdict::Inconclusive
}

fn eventually_non_increasing(series: &[(u32, f64)], jmax: u32) -> bool {
    let from = jmax.div_ceil(2);
    let tail: Vec<f64> = series.iter().filter(|(j, _)| *j >= from).map(|(_, v)| *v).collect();
    tail.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK)
}

/// A named auxiliary check attached to a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub rule: String,
    pub observed: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub seed: Option<u64>,
    pub beta: Beta,
    pub centered: bool,
    pub side: Side,
    pub grid_step: Option<f64>,
    pub j_range: Option<(u32, u32)>,
    pub trials: Option<u64>,
    /// Experiment-specific settings such as the perturbation family.
    pub extra: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub parameters: ReportParameters,
    /// The caller's run configuration, copied verbatim.
    pub config: Option<Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub rule: DecisionRule,
    pub verdict: ExperimentVerdict,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Minimized inputs for any violation, as function JSON.
    pub reproducers: Vec<Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidParameter(format!("unknown report format {other:?}"))),
        }
    }
}

impl ExperimentReport {
    pub fn new(name: &str, parameters: ReportParameters, columns: &[&str], rule: DecisionRule) -> Self {
        ExperimentReport {
            name: name.to_string(),
            parameters,
            config: None,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            rule,
            verdict: ExperimentVerdict::Inconclusive,
            checks: Vec::new(),
            notes: Vec::new(),
            reproducers: Vec::new(),
        }
    }

    fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::InvalidParameter(format!("report has no column {name:?}")))
    }

    /// The numeric values of a column, in row order.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    /// Recomputes the verdict from the rows and the stated rule.
    pub fn recheck(&self) -> Result<ExperimentVerdict> {
        let values = self.column(self.rule.column())?;
        Ok(match &self.rule {
            DecisionRule::Convergence { threshold, .. } => {
                let js = self.column("j")?;
                let series: Vec<(u32, f64)> = js.iter().map(|j| *j as u32).zip(values).collect();
                convergence_verdict(&series, *threshold)
            }
            DecisionRule::NoViolations { .. } => {
                if values.iter().all(|v| *v == 0.0) {
                    ExperimentVerdict::Pass
                } else {
                    ExperimentVerdict::Fail
                }
            }
            DecisionRule::Probe { .. } => {
                if values.iter().all(|v| *v == 0.0) {
                    ExperimentVerdict::InconclusiveSupporting
                } else {
                    ExperimentVerdict::CandidateViolation
                }
            }
        })
    }

    /// Sets the verdict from the rows.
    pub fn settle(&mut self) -> Result<()> {
        self.verdict = self.recheck()?;
        Ok(())
    }

    pub fn verdict_line(&self) -> String {
        format!("verdict: {}", self.verdict)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell_text)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn render(&self, format: ReportFormat) -> Result<String> {
        match format {
            ReportFormat::Csv => self.to_csv_string(),
            ReportFormat::Json => self.to_json_string(),
        }
    }

    /// `{name}-{seed}-{timestamp}.{ext}`; runs without a seed use `0`.
    pub fn file_name(&self, timestamp: &str, format: ReportFormat) -> String {
        format!("{}-{}-{}.{}", self.name, self.parameters.seed.unwrap_or(0), timestamp, format.extension())
    }

    /// Writes the report into `dir` and returns the path.
    pub fn write_to(&self, dir: &Path, timestamp: &str, format: ReportFormat) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(self.file_name(timestamp, format));
        std::fs::write(&path, self.render(format)?)?;
        Ok(path)
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn flag(b: bool) -> Value {
    Value::from(u8::from(b))
}

// ---------------------------------------------------------------------------
// random instances

/// Parameters of the random instance generator.
///
/// Instance `i` draws from a ChaCha8 stream seeded with `seed` and set to
/// stream `i`. The core starts at a uniform offset, has a uniform width, and
/// holds values `k/denom` with `k` uniform in `numer`. Tails are `k/denom`
/// with the given numerators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomBVSpec {
    pub seed: u64,
    pub width: (i64, i64),
    pub offset: (i64, i64),
    pub numer: (i64, i64),
    pub denom: i64,
    pub tails: (i64, i64),
}

impl Default for RandomBVSpec {
    fn default() -> Self {
        RandomBVSpec { seed: 0, width: (1, 12), offset: (-6, 6), numer: (-8, 8), denom: 4, tails: (0, 0) }
    }
}

impl RandomBVSpec {
    pub fn with_seed(seed: u64) -> Self {
        RandomBVSpec { seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, (lo, hi): (i64, i64)| {
            if lo > hi {
                Err(Error::InvalidParameter(format!("empty {name} range [{lo}, {hi}]")))
            } else {
                Ok(())
            }
        };
        check("width", self.width)?;
        check("offset", self.offset)?;
        check("value", self.numer)?;
        if self.width.0 < 1 {
            return Err(Error::InvalidParameter("core width must be at least 1".into()));
        }
        if self.denom < 1 {
            return Err(Error::InvalidParameter("value denominator must be positive".into()));
        }
        Ok(())
    }

    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    fn grid_value(&self, k: i64) -> Rational {
        Rational::from_ratio(k, self.denom)
    }

    fn tails(&self) -> (Rational, Rational) {
        (self.grid_value(self.tails.0), self.grid_value(self.tails.1))
    }
}

/// The `index`-th random discrete instance.
pub fn random_bv(spec: &RandomBVSpec, index: u64) -> Result<DiscreteBVFunction<Rational>> {
    spec.validate()?;
    let mut rng = spec.rng(index);
    let width = rng.gen_range(spec.width.0..=spec.width.1);
    let lo = rng.gen_range(spec.offset.0..=spec.offset.1);
    let values = (0..width).map(|_| spec.grid_value(rng.gen_range(spec.numer.0..=spec.numer.1))).collect();
    let (a, b) = spec.tails();
    DiscreteBVFunction::new(lo, values, a, b)
}

/// The `index`-th random piecewise linear instance: `width + 2` nodes with
/// gaps in `{1/2, 1, 3/2, 2}`, interior values on the grid and the tails at the ends.
pub fn random_pwl(spec: &RandomBVSpec, index: u64) -> Result<PiecewiseLinearFunction<Rational>> {
    spec.validate()?;
    let mut rng = spec.rng(index);
    let width = rng.gen_range(spec.width.0..=spec.width.1);
    let mut x = Rational::int(rng.gen_range(spec.offset.0..=spec.offset.1));
    let (a, b) = spec.tails();
    let mut nodes = vec![(x.clone(), a)];
    for k in 0..=width {
        x = x + Rational::from_ratio(rng.gen_range(1..=4), 2);
        let y = if k == width { b.clone() } else { spec.grid_value(rng.gen_range(spec.numer.0..=spec.numer.1)) };
        nodes.push((x.clone(), y));
    }
    PiecewiseLinearFunction::new(nodes)
}

/// The `index`-th random step function: unit cells starting at the offset.
pub fn random_step(spec: &RandomBVSpec, index: u64) -> Result<StepFunction<Rational>> {
    let f = random_bv(spec, index)?;
    let lo = f.core_lo();
    let breakpoints = (0..=f.width()).map(|k| Rational::int(lo + k)).collect();
    let mut values = vec![f.left_tail().clone()];
    values.extend(f.core_values());
    values.push(f.right_tail().clone());
    StepFunction::new(breakpoints, values)
}

// ---------------------------------------------------------------------------
// discrete convergence

/// Perturbations `g_j` with `bvnorm(g_j) = 1/j`, added to a discrete base function.
#[derive(Clone, Debug, PartialEq)]
pub enum DiscreteFamily {
    /// `(1/(2j))·χ_[lo,hi]`.
    Block { lo: i64, hi: i64 },
    /// `(1/(2j))·δ`.
    Spike,
    /// `(1/(2j))·χ_[0,h_j]` with the record heights of a discrete counterexample setting.
    Record { setting: Setting, beta: Beta },
    /// `g/j` for a fixed `g` with `bvnorm(g) = 1`.
    Scaled(DiscreteBVFunction<Rational>),
    Zero,
}

impl DiscreteFamily {
    pub fn label(&self) -> String {
        match self {
            DiscreteFamily::Block { lo, hi } => format!("block[{lo},{hi}]"),
            DiscreteFamily::Spike => "spike".into(),
            DiscreteFamily::Record { setting, beta } => format!("record-{setting}-beta={beta}"),
            DiscreteFamily::Scaled(_) => "scaled".into(),
            DiscreteFamily::Zero => "zero".into(),
        }
    }

    fn prepare(&self, jmax: u32) -> Result<Vec<i64>> {
        match self {
            DiscreteFamily::Record { setting, beta } => {
                if !matches!(setting, Setting::Thm5 | Setting::Thm6) {
                    return Err(Error::InvalidParameter(format!("{setting} does not define a discrete family")));
                }
                heights(*setting, *beta, jmax)
            }
            _ => Ok(Vec::new()),
        }
    }

    fn member(&self, j: u32, heights: &[i64]) -> Result<DiscreteBVFunction<Rational>> {
        let c = Rational::from_ratio(1, 2 * i64::from(j));
        match self {
            DiscreteFamily::Block { lo, hi } => DiscreteBVFunction::indicator(*lo, *hi, c),
            DiscreteFamily::Spike => DiscreteBVFunction::indicator(0, 0, c),
            DiscreteFamily::Record { .. } => DiscreteBVFunction::indicator(0, heights[j as usize - 1], c),
            DiscreteFamily::Scaled(g) => Ok(g.scale(&Rational::from_ratio(1, i64::from(j)))),
            DiscreteFamily::Zero => Ok(DiscreteBVFunction::zero()),
        }
    }
}

impl FromStr for DiscreteFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" => Ok(DiscreteFamily::Block { lo: 0, hi: 4 }),
            "spike" => Ok(DiscreteFamily::Spike),
            "thm5" => Ok(DiscreteFamily::Record { setting: Setting::Thm5, beta: Beta::new(1, 2)? }),
            "thm6" => Ok(DiscreteFamily::Record { setting: Setting::Thm6, beta: Beta::new(1, 2)? }),
            "zero" => Ok(DiscreteFamily::Zero),
            other => Err(Error::InvalidParameter(format!("unknown discrete family {other:?}"))),
        }
    }
}

fn check_norm(g: &DiscreteBVFunction<Rational>, j: u32) -> Result<()> {
    let norm = bvnorm_discrete(g);
    if norm.is_zero() || norm == Rational::from_ratio(1, i64::from(j)) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("perturbation {j} has BV norm {norm}, expected 1/{j}")))
    }
}

/// Exact distances `Var(M̃f_j - M̃f)` for `f_j = f + g_j`, classical uncentered operator.
///
/// Rows also carry `|Var(M̃f_j) - Var(M̃f)|`, the sup distance checked against
/// `bvnorm(g_j)`, and the gap `|Var(M̃f_j) - Var(M̃f_j - M̃f) - Var(M̃f)|`
/// between the Brezis-Lieb sum and its limit.
pub fn converge_thm2(f: &DiscreteBVFunction<Rational>, family: &DiscreteFamily, jmax: u32) -> Result<ExperimentReport> {
    if jmax == 0 {
        return Err(Error::InvalidParameter("j_max must be at least 1".into()));
    }
    let variant = OperatorVariant::classical();
    let hs = family.prepare(jmax)?;
    let base_var = variation_of_maximal(f, &variant, IntervalZ::ALL)?;
    let rows = (1..=jmax)
        .into_par_iter()
        .map(|j| {
            let g = family.member(j, &hs)?;
            check_norm(&g, j)?;
            let fj = f.add(&g);
            let diff = difference_of_maximal(&fj, f)?;
            let var_j = variation_of_maximal(&fj, &variant, IntervalZ::ALL)?;
            let norm = bvnorm_discrete(&g);
            let bl_gap = (var_j.clone() - diff.variation.clone() - base_var.clone()).abs();
            Ok(vec![
                Value::from(j),
                num(norm.to_f64()),
                num(diff.variation.to_f64()),
                Value::String(diff.variation.to_string()),
                num((var_j - base_var.clone()).abs().to_f64()),
                num(diff.sup.to_f64()),
                flag(diff.sup > norm),
                num(bl_gap.to_f64()),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let params = ReportParameters {
        j_range: Some((1, jmax)),
        extra: Map::from_iter([
            ("family".to_string(), Value::String(family.label())),
            ("base".to_string(), f.to_json()),
        ]),
        ..ReportParameters::default()
    };
    let rule = DecisionRule::Convergence { column: "var_difference".into(), threshold: THM2_THRESHOLD };
    let mut report = ExperimentReport::new(
        "converge-thm2",
        params,
        &["j", "bv_norm", "var_difference", "var_difference_exact", "var_gap", "sup_difference", "uniform_violation", "brezis_lieb_gap"],
        rule,
    );
    report.rows = rows;
    report.settle()?;
    let uniform = report.column("uniform_violation")?;
    report.checks.push(Check {
        name: "uniform".into(),
        rule: "sup|M̃f_j - M̃f| <= bvnorm(g_j) on every row".into(),
        observed: uniform.iter().sum(),
        passed: uniform.iter().all(|v| *v == 0.0),
    });
    let bl = *report.column("brezis_lieb_gap")?.last().expect("j_max >= 1");
    report.checks.push(Check {
        name: "brezis_lieb".into(),
        rule: format!("brezis_lieb_gap <= {BREZIS_LIEB_TOL:e} at j_max"),
        observed: bl,
        passed: bl <= BREZIS_LIEB_TOL,
    });
    Ok(report)
}

// ---------------------------------------------------------------------------
// continuous convergence

/// Continuous perturbation families.
#[derive(Clone, Debug, PartialEq)]
pub enum ContinuousFamily {
    /// `f_j = f + (1/(2j))·g`.
    Scaled(PiecewiseLinearFunction<f64>),
    /// `f_j = f`.
    Identity,
}

impl ContinuousFamily {
    pub fn label(&self) -> String {
        match self {
            ContinuousFamily::Scaled(_) => "scaled".into(),
            ContinuousFamily::Identity => "identity".into(),
        }
    }

    fn member(&self, f: &PiecewiseLinearFunction<f64>, j: u32) -> PiecewiseLinearFunction<f64> {
        match self {
            ContinuousFamily::Scaled(g) => f.add(&g.scale(&(1.0 / (2.0 * f64::from(j))))),
            ContinuousFamily::Identity => f.clone(),
        }
    }
}

/// `Σ |ΔP_j - ΔP|` over the grid plus the jumps to the zero limits at both ends.
fn derivative_distance(pj: &[f64], p: &[f64]) -> f64 {
    let d: Vec<f64> = pj.iter().zip(p).map(|(a, b)| a - b).collect();
    let inner: f64 = d.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    inner + d[0].abs() + d[d.len() - 1].abs()
}

fn grid_values(f: &PiecewiseLinearFunction<f64>, grid: &[f64], variant: &OperatorVariant) -> Result<Vec<f64>> {
    Ok(profile_continuous(ContinuousInput::Pwl(f), grid, variant)?.values().copied().collect())
}

/// Grid distances `‖(M̃f_j)' - (M̃f)'‖_{L^1}` and the same for `M_R`.
///
/// The grid covers the hull of `f` and all `f_j`, widened by four widths on
/// each side. Beyond the grid the profiles are taken to be monotone towards 0.
pub fn converge_thm1(
    f: &PiecewiseLinearFunction<f64>,
    family: &ContinuousFamily,
    grid_step: f64,
    jmax: u32,
) -> Result<ExperimentReport> {
    if jmax == 0 {
        return Err(Error::InvalidParameter("j_max must be at least 1".into()));
    }
    if !(grid_step > 0.0) {
        return Err(Error::InvalidParameter(format!("grid step must be positive, got {grid_step}")));
    }
    let members: Vec<PiecewiseLinearFunction<f64>> = (1..=jmax).map(|j| family.member(f, j)).collect();
    if !f.is_w11() || members.iter().any(|g| !g.is_w11()) {
        return Err(Error::NonzeroTails);
    }
    let (mut lo, mut hi) = f.hull();
    for g in &members {
        let (a, b) = g.hull();
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let width = (hi - lo).max(1.0);
    let grid = uniform_grid(lo - 4.0 * width, hi + 4.0 * width, grid_step);
    let uncentered = OperatorVariant::classical();
    let right = OperatorVariant::one_sided(Side::Right);
    let base = grid_values(f, &grid, &uncentered)?;
    let base_r = grid_values(f, &grid, &right)?;
    let mut rows = Vec::with_capacity(members.len());
    for (i, g) in members.iter().enumerate() {
        let w11 = var_pwl(&g.sub(f), None);
        let du = derivative_distance(&grid_values(g, &grid, &uncentered)?, &base);
        let dr = derivative_distance(&grid_values(g, &grid, &right)?, &base_r);
        rows.push(vec![Value::from(i as u32 + 1), num(w11), num(du), num(dr)]);
    }
    let params = ReportParameters {
        grid_step: Some(grid_step),
        j_range: Some((1, jmax)),
        extra: Map::from_iter([
            ("family".to_string(), Value::String(family.label())),
            ("base".to_string(), f.to_json()),
            ("grid".to_string(), json!([grid[0], grid[grid.len() - 1]])),
        ]),
        ..ReportParameters::default()
    };
    let rule = DecisionRule::Convergence { column: "derivative_distance".into(), threshold: THM1_THRESHOLD };
    let mut report =
        ExperimentReport::new("converge-thm1", params, &["j", "w11_distance", "derivative_distance", "right_distance"], rule);
    report.rows = rows;
    report.settle()?;

    let js: Vec<u32> = (1..=jmax).collect();
    let right_series: Vec<(u32, f64)> = js.iter().copied().zip(report.column("right_distance")?).collect();
    let last_right = right_series.last().map_or(f64::NAN, |p| p.1);
    report.checks.push(Check {
        name: "right_operator".into(),
        rule: format!("right_distance converges under the same rule (threshold {THM1_THRESHOLD:e})"),
        observed: last_right,
        passed: convergence_verdict(&right_series, THM1_THRESHOLD) == ExperimentVerdict::Converges,
    });
    let misses = radius_accumulation_misses(f, &members[members.len() - 1])?;
    report.checks.push(Check {
        name: "good_radii".into(),
        rule: format!(
            "at 9 sample points the M_R witness radius of f_j_max lies within {RADIUS_ACCUMULATION_TOL:e} of a good radius of f"
        ),
        observed: misses as f64,
        passed: misses == 0,
    });
    Ok(report)
}

/// Sample points in the hull of `f` where the witness radius of `g` is far from every good radius of `f`.
fn radius_accumulation_misses(f: &PiecewiseLinearFunction<f64>, g: &PiecewiseLinearFunction<f64>) -> Result<usize> {
    if f.nodes().iter().all(|(_, y)| *y == 0.0) {
        return Ok(0);
    }
    let (lo, hi) = f.hull();
    let right = OperatorVariant::one_sided(Side::Right);
    let mut misses = 0;
    for k in 1..=9 {
        let x = lo + (hi - lo) * f64::from(k) / 10.0;
        let e = max_continuous(ContinuousInput::Pwl(g), &x, &right)?;
        let Some(w) = e.witness() else { continue };
        let r = w.r - w.l;
        let good = good_radii(f, &x)?;
        if !good.iter().any(|t| (t - r).abs() <= RADIUS_ACCUMULATION_TOL) {
            misses += 1;
        }
    }
    Ok(misses)
}

// ---------------------------------------------------------------------------
// inequality fuzzing

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    /// `Var(M̃f) ≤ Var(f)`, classical uncentered, exact.
    VarBound,
    /// `Var_q(M̃_β f) ≤ 4^{1/q} Var(f)` for the uncentered fractional operator.
    VarqBound,
}

impl Inequality {
    pub fn as_str(self) -> &'static str {
        match self {
            Inequality::VarBound => "var-bound",
            Inequality::VarqBound => "varq-bound",
        }
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Inequality {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "var-bound" => Ok(Inequality::VarBound),
            "varq-bound" => Ok(Inequality::VarqBound),
            other => Err(Error::InvalidParameter(format!("unknown inequality {other:?}"))),
        }
    }
}

/// The single-jump instance: tails `0` and `1`, one core cell equal to `1`.
pub fn monotone_instance() -> DiscreteBVFunction<Rational> {
    DiscreteBVFunction::new(0, vec![Rational::int(1)], Rational::int(0), Rational::int(1)).expect("nonempty core")
}

/// `Var(M̃f) / Var(f)` exactly; `None` when `f` is constant.
pub fn variation_ratio(f: &DiscreteBVFunction<Rational>) -> Result<Option<Rational>> {
    let vf = var_discrete(f, IntervalZ::ALL);
    if vf.is_zero() {
        return Ok(None);
    }
    let vm = variation_of_maximal(f, &OperatorVariant::classical(), IntervalZ::ALL)?;
    Ok(Some(vm / vf))
}

/// Exact `Var(M̃f) > Var(f)`.
fn var_bound_violated(f: &DiscreteBVFunction<Rational>) -> bool {
    let vm = variation_of_maximal(f, &OperatorVariant::classical(), IntervalZ::ALL);
    vm.map_or(false, |vm| vm > var_discrete(f, IntervalZ::ALL))
}

/// Tail margin for the fractional q-variation sums.
const VARQ_MARGIN: i64 = 256;

fn varq_bound(f: &DiscreteBVFunction<Rational>, beta: Beta) -> Result<(f64, f64, f64)> {
    let (lower, upper) = varq_maximal_bounds(f, beta, VARQ_MARGIN)?;
    let bound = 4f64.powf(1.0 / beta.q_f64()) * var_discrete(f, IntervalZ::ALL).to_f64();
    Ok((lower, upper, bound))
}

fn varq_violated(f: &DiscreteBVFunction<Rational>, beta: Beta) -> bool {
    varq_bound(f, beta).map_or(false, |(lower, _, bound)| lower > bound + VARQ_TOL)
}

/// Rounds every value of `f` to the nearest multiple of `1/den`.
fn coarsen(f: &DiscreteBVFunction<Rational>, den: i64) -> DiscreteBVFunction<Rational> {
    let d = Rational::int(den);
    f.map(|v| (v * d.clone()).round() / d.clone())
}

/// Shrinks a violating instance: halve the core width, then round to coarser
/// rationals, for as long as the violation persists.
pub fn shrink_reproducer(
    f: &DiscreteBVFunction<Rational>,
    denom: i64,
    violates: impl Fn(&DiscreteBVFunction<Rational>) -> bool,
) -> DiscreteBVFunction<Rational> {
    let mut cur = f.clone();
    let mut den = denom.max(1);
    loop {
        let values = cur.core_values();
        if values.len() >= 2 {
            let half = values[..values.len().div_ceil(2)].to_vec();
            if let Ok(g) = DiscreteBVFunction::new(cur.core_lo(), half, cur.left_tail().clone(), cur.right_tail().clone()) {
                if violates(&g) {
                    cur = g;
                    continue;
                }
            }
        }
        if den > 1 {
            den /= 2;
            let g = coarsen(&cur, den);
            if violates(&g) {
                cur = g;
            }
            continue;
        }
        return cur;
    }
}

/// Randomized checks of the variation inequalities. `beta` applies to the fractional bound only.
pub fn fuzz_inequalities(
    spec: &RandomBVSpec,
    trials: u64,
    which: Inequality,
    beta: Beta,
) -> Result<ExperimentReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    spec.validate()?;
    let mut params = ReportParameters {
        seed: Some(spec.seed),
        trials: Some(trials),
        extra: Map::from_iter([
            ("inequality".to_string(), Value::String(which.to_string())),
            ("generator".to_string(), serde_json::to_value(spec)?),
        ]),
        ..ReportParameters::default()
    };
    let rule = DecisionRule::NoViolations { column: "violation".into() };
    match which {
        Inequality::VarBound => {
            let rows = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let f = random_bv(spec, i)?;
                    let vf = var_discrete(&f, IntervalZ::ALL);
                    let vm = variation_of_maximal(&f, &OperatorVariant::classical(), IntervalZ::ALL)?;
                    let ratio = if vf.is_zero() { Value::Null } else { num((vm.clone() / vf.clone()).to_f64()) };
                    Ok(vec![
                        Value::from(i),
                        Value::from(f.width()),
                        Value::String(vf.to_string()),
                        Value::String(vm.to_string()),
                        ratio,
                        flag(vm > vf),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            let mut report = ExperimentReport::new(
                "fuzz-var-bound",
                params,
                &["trial", "width", "var_f", "var_maximal", "ratio", "violation"],
                rule,
            );
            report.rows = rows;
            report.settle()?;
            let ratios: Vec<f64> = report.column("ratio")?.into_iter().filter(|r| r.is_finite()).collect();
            let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
            let attained = ratios.iter().filter(|r| **r == 1.0).count();
            report.notes.push(format!("max ratio {max_ratio}; ratio 1 attained on {attained} trials"));
            let mono = variation_ratio(&monotone_instance())?.expect("nonconstant");
            report.checks.push(Check {
                name: "monotone_ratio".into(),
                rule: "the single-jump instance attains Var(M̃f)/Var(f) = 1".into(),
                observed: mono.to_f64(),
                passed: mono == Rational::int(1),
            });
            report.checks.push(Check {
                name: "max_ratio".into(),
                rule: "max ratio <= 1".into(),
                observed: max_ratio,
                passed: max_ratio <= 1.0,
            });
            attach_reproducers(&mut report, spec, var_bound_violated)?;
            Ok(report)
        }
        Inequality::VarqBound => {
            if beta.is_classical() {
                return Err(Error::InvalidParameter("the q-variation bound needs 0 < beta < 1".into()));
            }
            if spec.tails != (0, 0) {
                return Err(Error::NonzeroTails);
            }
            params.beta = beta;
            let rows = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let f = random_bv(spec, i)?;
                    let (lower, upper, bound) = varq_bound(&f, beta)?;
                    Ok(vec![
                        Value::from(i),
                        Value::from(f.width()),
                        num(lower),
                        num(upper),
                        num(bound),
                        flag(lower > bound + VARQ_TOL),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            let mut report = ExperimentReport::new(
                "fuzz-varq-bound",
                params,
                &["trial", "width", "varq_lower", "varq_upper", "bound", "violation"],
                rule,
            );
            report.rows = rows;
            report.settle()?;
            let worst = report
                .rows
                .iter()
                .filter_map(|r| Some(r[3].as_f64()? / r[4].as_f64().filter(|b| *b > 0.0)?))
                .fold(0.0, f64::max);
            report.notes.push(format!("max upper/bound ratio {worst}"));
            attach_reproducers(&mut report, spec, |f| varq_violated(f, beta))?;
            Ok(report)
        }
    }
}

fn attach_reproducers(
    report: &mut ExperimentReport,
    spec: &RandomBVSpec,
    violates: impl Fn(&DiscreteBVFunction<Rational>) -> bool,
) -> Result<()> {
    let (ti, vi) = (report.column_index(report.rule.column())?, 0);
    let failing: Vec<u64> = report
        .rows
        .iter()
        .filter(|r| r[ti].as_f64() != Some(0.0))
        .filter_map(|r| r[vi].as_u64())
        .collect();
    for i in failing {
        let f = shrink_reproducer(&random_bv(spec, i)?, spec.denom, &violates);
        report.reproducers.push(json!({ "trial": i, "function": f.to_json() }));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// open-question probes

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpenQuestion {
    A,
    B,
    C,
    D,
}

impl FromStr for OpenQuestion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim_start_matches("question").to_ascii_uppercase().as_str() {
            "A" => Ok(OpenQuestion::A),
            "B" => Ok(OpenQuestion::B),
            "C" => Ok(OpenQuestion::C),
            "D" => Ok(OpenQuestion::D),
            _ => Err(Error::InvalidParameter(format!("unknown open question {s:?}"))),
        }
    }
}

impl fmt::Display for OpenQuestion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OpenQuestion::A => "A",
            OpenQuestion::B => "B",
            OpenQuestion::C => "C",
            OpenQuestion::D => "D",
        };
        f.write_str(s)
    }
}

/// Probe settings beyond the random generator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub jmax: u32,
    /// Grid step for the continuous questions.
    pub grid_step: f64,
}

impl Default for ProbeParams {
    fn default() -> Self {
        ProbeParams { jmax: 20, grid_step: 1e-2 }
    }
}

/// Whether a distance sequence fails to decrease: it grows for `j ≥ j_max/2`
/// or its last value is still at least half its maximum.
pub fn is_candidate_violation(series: &[(u32, f64)]) -> bool {
    let Some(&(jmax, last)) = series.last() else {
        return false;
    };
    let max = series.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    max > 0.0 && (!eventually_non_increasing(series, jmax) || last >= 0.5 * max)
}

/// Centered discrete margin: beyond it the centered profile is monotone for the generator's instances.
fn centered_margin(width: i64) -> i64 {
    3 * width + 8
}

/// Distances `Var(Mf_j - Mf)` for the discrete centered classical operator.
pub fn centered_distances(
    f: &DiscreteBVFunction<Rational>,
    family: &DiscreteFamily,
    jmax: u32,
) -> Result<Vec<(u32, Rational)>> {
    let variant = OperatorVariant::centered(Beta::ZERO);
    let hs = family.prepare(jmax)?;
    (1..=jmax)
        .into_par_iter()
        .map(|j| {
            let g = family.member(j, &hs)?;
            check_norm(&g, j)?;
            let fj = f.add(&g);
            let width = fj.core_hi().max(f.core_hi()) - fj.core_lo().min(f.core_lo()) + 1;
            let d = difference_of_maximal_margin(&fj, f, &variant, centered_margin(width))?;
            Ok((j, d.variation))
        })
        .collect()
}

/// Normalizes `g` to BV norm 1; a zero `g` becomes `δ/2`.
fn unit_norm(g: DiscreteBVFunction<Rational>) -> DiscreteBVFunction<Rational> {
    let n = bvnorm_discrete(&g);
    if n.is_zero() {
        DiscreteBVFunction::delta_at_origin().scale(&Rational::from_ratio(1, 2))
    } else {
        g.scale(&(Rational::int(1) / n))
    }
}

fn step_distance(
    f: &StepFunction<f64>,
    g: &StepFunction<f64>,
    scale: f64,
    variant: &OperatorVariant,
    grid: &[f64],
) -> Result<f64> {
    let fj = f.add(&g.map(|v| v * scale));
    let p = profile_continuous(ContinuousInput::Step(f), grid, variant)?;
    let pj = profile_continuous(ContinuousInput::Step(&fj), grid, variant)?;
    let a: Vec<f64> = p.values().copied().collect();
    let b: Vec<f64> = pj.values().copied().collect();
    Ok(derivative_distance(&b, &a))
}

/// Random stress probes of the open continuity questions.
///
/// Question D uses exact centered profiles on `f + g/j` with `bvnorm(g) = 1`.
/// Questions B and C use grid profiles of random step functions with zero
/// tails. Question A needs centered maximal functions of piecewise linear
/// inputs, which the continuous optimizers do not provide.
pub fn probe_open_questions(
    question: OpenQuestion,
    spec: &RandomBVSpec,
    trials: u64,
    probe: ProbeParams,
) -> Result<ExperimentReport> {
    if trials == 0 || probe.jmax == 0 {
        return Err(Error::InvalidParameter("trials and j_max must be at least 1".into()));
    }
    spec.validate()?;
    let jmax = probe.jmax;
    let (centered, grid_step) = match question {
        OpenQuestion::A => {
            return Err(Error::UnsupportedVariant(
                "centered maximal functions of piecewise linear inputs are not implemented".into(),
            ))
        }
        OpenQuestion::B => (false, Some(probe.grid_step)),
        OpenQuestion::C => (true, Some(probe.grid_step)),
        OpenQuestion::D => (true, None),
    };
    if matches!(question, OpenQuestion::B | OpenQuestion::C) && spec.tails != (0, 0) {
        return Err(Error::NonzeroTails);
    }
    let sequences: Vec<Vec<(u32, f64)>> = (0..trials)
        .into_par_iter()
        .map(|i| match question {
            OpenQuestion::D => {
                let f = random_bv(spec, 2 * i)?;
                let g = unit_norm(random_bv(spec, 2 * i + 1)?);
                let d = centered_distances(&f, &DiscreteFamily::Scaled(g), jmax)?;
                Ok(d.into_iter().map(|(j, v)| (j, v.to_f64())).collect())
            }
            _ => {
                let f: StepFunction<f64> = random_step(spec, 2 * i)?.convert();
                let g: StepFunction<f64> = random_step(spec, 2 * i + 1)?.convert();
                let norm = crate::variation::var_step(&g, None);
                let g = if norm == 0.0 { StepFunction::indicator(0.0, 1.0, 0.5)? } else { g.map(|v| v / norm) };
                let (flo, fhi) = f.hull().unwrap_or((0.0, 1.0));
                let (glo, ghi) = g.hull().unwrap_or((0.0, 1.0));
                let (lo, hi) = (flo.min(glo), fhi.max(ghi));
                let w = hi - lo;
                let grid = uniform_grid(lo - 4.0 * w, hi + 4.0 * w, probe.grid_step);
                let variant = if centered { OperatorVariant::centered(Beta::ZERO) } else { OperatorVariant::classical() };
                (1..=jmax)
                    .map(|j| Ok((j, step_distance(&f, &g, 1.0 / f64::from(j), &variant, &grid)?)))
                    .collect()
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut candidates = Vec::new();
    for (i, seq) in sequences.iter().enumerate() {
        let cand = is_candidate_violation(seq);
        if cand {
            candidates.push(i as u64);
        }
        for (j, v) in seq {
            rows.push(vec![Value::from(i as u64), Value::from(*j), num(*v), flag(cand)]);
        }
    }
    let params = ReportParameters {
        seed: Some(spec.seed),
        centered,
        grid_step,
        j_range: Some((1, jmax)),
        trials: Some(trials),
        extra: Map::from_iter([
            ("question".to_string(), Value::String(question.to_string())),
            ("generator".to_string(), serde_json::to_value(spec)?),
        ]),
        ..ReportParameters::default()
    };
    let mut report = ExperimentReport::new(
        &format!("probe-question{}", question.to_string().to_lowercase()),
        params,
        &["trial", "j", "distance", "candidate"],
        DecisionRule::Probe { column: "candidate".into() },
    );
    report.rows = rows;
    report.settle()?;
    for i in candidates {
        let entry = match question {
            OpenQuestion::D => {
                json!({ "trial": i, "f": random_bv(spec, 2 * i)?.to_json(), "g": random_bv(spec, 2 * i + 1)?.to_json() })
            }
            _ => json!({ "trial": i, "f": random_step(spec, 2 * i)?.to_json(), "g": random_step(spec, 2 * i + 1)?.to_json() }),
        };
        report.reproducers.push(entry);
    }
    Ok(report)
}

/// A single-family centered probe, e.g. a counterexample family under the classical operator.
pub fn probe_family(f: &DiscreteBVFunction<Rational>, family: &DiscreteFamily, jmax: u32) -> Result<ExperimentReport> {
    let seq: Vec<(u32, f64)> =
        centered_distances(f, family, jmax)?.into_iter().map(|(j, v)| (j, v.to_f64())).collect();
    let cand = is_candidate_violation(&seq);
    let params = ReportParameters {
        centered: true,
        j_range: Some((1, jmax)),
        extra: Map::from_iter([
            ("family".to_string(), Value::String(family.label())),
            ("base".to_string(), f.to_json()),
        ]),
        ..ReportParameters::default()
    };
    let mut report = ExperimentReport::new(
        "probe-family",
        params,
        &["trial", "j", "distance", "candidate"],
        DecisionRule::Probe { column: "candidate".into() },
    );
    report.rows = seq.iter().map(|(j, v)| vec![Value::from(0u64), Value::from(*j), num(*v), flag(cand)]).collect();
    report.settle()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = RandomBVSpec::with_seed(7);
        assert!(random_bv(&spec, 3).unwrap() == random_bv(&spec, 3).unwrap());
        assert!(random_pwl(&spec, 3).unwrap() == random_pwl(&spec, 3).unwrap());
        let single = RandomBVSpec { width: (1, 1), ..spec.clone() };
        for i in 0..20 {
            assert_eq!(random_bv(&single, i).unwrap().core_values().len(), 1);
        }
        let bad = RandomBVSpec { numer: (3, 2), ..spec };
        assert!(random_bv(&bad, 0).is_err());
    }

    #[test]
    fn generated_pwl_has_requested_tails() {
        let spec = RandomBVSpec::with_seed(1);
        for i in 0..50 {
            assert!(random_pwl(&spec, i).unwrap().is_w11());
        }
    }

    #[test]
    fn verdict_rule() {
        let conv: Vec<(u32, f64)> = (1..=10).map(|j| (j, 1.0 / f64::from(j * j * j))).collect();
        assert_eq!(convergence_verdict(&conv, 1e-2), ExperimentVerdict::Converges);
        let div: Vec<(u32, f64)> = (1..=10).map(|j| (j, 0.3)).collect();
        assert_eq!(convergence_verdict(&div, 1e-2), ExperimentVerdict::Diverges);
        let slow: Vec<(u32, f64)> = (1..=10).map(|j| (j, 1.0 / f64::from(j))).collect();
        assert_eq!(convergence_verdict(&slow, 1e-2), ExperimentVerdict::Inconclusive);
        let bump = vec![(1, 0.5), (2, 0.001), (3, 0.002), (4, 0.001)];
        assert_eq!(convergence_verdict(&bump, 1e-2), ExperimentVerdict::Inconclusive);
    }

    #[test]
    fn zero_perturbation_gives_zero_rows() {
        let f = DiscreteBVFunction::delta_at_origin();
        let r = converge_thm2(&f, &DiscreteFamily::Zero, 5).unwrap();
        assert!(r.column("var_difference").unwrap().iter().all(|v| *v == 0.0));
        assert_eq!(r.verdict, ExperimentVerdict::Converges);
        assert_eq!(r.recheck().unwrap(), r.verdict);
    }

    #[test]
    fn spike_family_distances_are_one_over_j() {
        // (1 + 1/(2j))δ has M̃ equal to (1 + 1/(2j))M̃δ, and Var(M̃δ) = 2
        let f = DiscreteBVFunction::delta_at_origin();
        let r = converge_thm2(&f, &DiscreteFamily::Spike, 6).unwrap();
        for (j, row) in (1..=6).zip(&r.rows) {
            assert_eq!(row[3], Value::String(q(1, j).to_string()));
        }
        assert!(r.checks.iter().all(|c| c.passed));
    }

    #[test]
    fn norm_mismatch_is_rejected() {
        let f = DiscreteBVFunction::delta_at_origin();
        let g = DiscreteBVFunction::indicator(0, 0, q(1, 1)).unwrap().scale(&q(3, 1));
        assert!(converge_thm2(&f, &DiscreteFamily::Scaled(g), 2).is_err());
    }

    #[test]
    fn identity_family_has_zero_distance() {
        let f = PiecewiseLinearFunction::<f64>::tent();
        let r = converge_thm1(&f, &ContinuousFamily::Identity, 1e-2, 3).unwrap();
        assert!(r.column("derivative_distance").unwrap().iter().all(|v| *v == 0.0));
        assert!(r.column("right_distance").unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn thm1_rejects_nonzero_tails() {
        let f = PiecewiseLinearFunction::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(converge_thm1(&f, &ContinuousFamily::Identity, 1e-2, 2).unwrap_err(), Error::NonzeroTails);
    }

    #[test]
    fn monotone_instance_ratio() {
        // M̃f is identically 1 for this instance
        assert_eq!(variation_ratio(&monotone_instance()).unwrap(), Some(q(0, 1)));
        assert_eq!(variation_ratio(&DiscreteBVFunction::delta_at_origin()).unwrap(), Some(q(1, 1)));
    }

    #[test]
    fn small_fuzz_runs_clean() {
        let spec = RandomBVSpec::with_seed(3);
        let r = fuzz_inequalities(&spec, 200, Inequality::VarBound, Beta::ZERO).unwrap();
        assert_eq!(r.verdict, ExperimentVerdict::Pass);
        assert!(r.reproducers.is_empty());
        let r = fuzz_inequalities(&spec, 20, Inequality::VarqBound, Beta::new(1, 2).unwrap()).unwrap();
        assert_eq!(r.verdict, ExperimentVerdict::Pass);
    }

    #[test]
    fn shrinking_halves_and_coarsens() {
        let f = DiscreteBVFunction::new(0, vec![q(7, 4), q(1, 4), q(3, 4), q(5, 4)], q(0, 1), q(0, 1)).unwrap();
        let has_big = |g: &DiscreteBVFunction<Rational>| g.core_values().iter().any(|v| *v >= q(3, 2));
        let s = shrink_reproducer(&f, 4, has_big);
        assert_eq!(s.core_values(), vec![q(2, 1)]);
    }

    #[test]
    fn reports_render_deterministically() {
        let f = DiscreteBVFunction::delta_at_origin();
        let r = converge_thm2(&f, &DiscreteFamily::Block { lo: 0, hi: 4 }, 4).unwrap();
        let s = r.to_json_string().unwrap();
        assert_eq!(s, converge_thm2(&f, &DiscreteFamily::Block { lo: 0, hi: 4 }, 4).unwrap().to_json_string().unwrap());
        let back: ExperimentReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.recheck().unwrap(), r.verdict);
        let csv = r.to_csv_string().unwrap();
        assert!(csv.starts_with("j,bv_norm,var_difference"));
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(r.file_name("20260101T000000Z", ReportFormat::Csv), "converge-thm2-0-20260101T000000Z.csv");
    }

    #[test]
    fn question_a_is_unsupported() {
        let spec = RandomBVSpec::with_seed(0);
        assert!(probe_open_questions(OpenQuestion::A, &spec, 1, ProbeParams::default()).is_err());
    }

    #[test]
    fn question_d_probe_small() {
        let spec = RandomBVSpec { width: (1, 6), ..RandomBVSpec::with_seed(11) };
        let r = probe_open_questions(OpenQuestion::D, &spec, 5, ProbeParams { jmax: 8, grid_step: 1e-2 }).unwrap();
        assert_eq!(r.rows.len(), 40);
        assert_eq!(r.recheck().unwrap(), r.verdict);
    }
}
