use serde_json::{json, Map, Value};

use super::{DiscreteBVFunction, PiecewiseLinearFunction, Run, StepFunction};
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar, ScalarMode};

/// Cores wider than this are written as runs instead of dense values.
const DENSE_LIMIT: i64 = 4096;

/// JSON form `{"kind": ..., "mode": ..., fields...}` shared by all function types.
pub trait FunctionJson: Sized {
    const KIND: &'static str;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self>;

    fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json values always serialize")
    }

    fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }
}

fn header<S: Scalar>(kind: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("kind".into(), json!(kind));
    m.insert("mode".into(), json!(S::MODE.as_str()));
    m
}

fn check_header<S: Scalar>(v: &Value, kind: &str) -> Result<()> {
    let found = v.get("kind").and_then(Value::as_str).ok_or_else(|| Error::Malformed("missing \"kind\"".into()))?;
    if found != kind {
        return Err(Error::Malformed(format!("expected kind {kind:?}, found {found:?}")));
    }
    let mode = v.get("mode").and_then(Value::as_str).ok_or_else(|| Error::Malformed("missing \"mode\"".into()))?;
    if mode != S::MODE.as_str() {
        return Err(Error::ModeMismatch { expected: S::MODE.to_string(), found: mode.to_string() });
    }
    Ok(())
}

fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| Error::Malformed(format!("missing field {name:?}")))
}

fn scalar_list<S: Scalar>(v: &Value, name: &str) -> Result<Vec<S>> {
    field(v, name)?
        .as_array()
        .ok_or_else(|| Error::Malformed(format!("{name:?} must be an array")))?
        .iter()
        .map(S::from_json)
        .collect()
}

fn int_field(v: &Value, name: &str) -> Result<i64> {
    field(v, name)?.as_i64().ok_or_else(|| Error::Malformed(format!("{name:?} must be an integer")))
}

impl<S: Scalar> FunctionJson for DiscreteBVFunction<S> {
    const KIND: &'static str = "discrete";

    fn to_json(&self) -> Value {
        let mut m = header::<S>(Self::KIND);
        m.insert("core_lo".into(), json!(self.core_lo()));
        m.insert("core_hi".into(), json!(self.core_hi()));
        if self.width() <= DENSE_LIMIT {
            m.insert("core_values".into(), Value::Array(self.core_values().iter().map(S::to_json).collect()));
        } else {
            let runs = self
                .runs()
                .iter()
                .map(|r| json!({"start": r.start, "end": r.end, "value": r.value.to_json()}))
                .collect();
            m.insert("runs".into(), Value::Array(runs));
        }
        m.insert("left_tail".into(), self.left_tail().to_json());
        m.insert("right_tail".into(), self.right_tail().to_json());
        Value::Object(m)
    }

    fn from_json(v: &Value) -> Result<Self> {
        check_header::<S>(v, Self::KIND)?;
        let a = S::from_json(field(v, "left_tail")?)?;
        let b = S::from_json(field(v, "right_tail")?)?;
        if let Some(runs) = v.get("runs") {
            let runs = runs
                .as_array()
                .ok_or_else(|| Error::Malformed("\"runs\" must be an array".into()))?
                .iter()
                .map(|r| {
                    Ok(Run { start: int_field(r, "start")?, end: int_field(r, "end")?, value: S::from_json(field(r, "value")?)? })
                })
                .collect::<Result<Vec<_>>>()?;
            return DiscreteBVFunction::from_runs(runs, a, b);
        }
        let lo = int_field(v, "core_lo")?;
        let values = scalar_list::<S>(v, "core_values")?;
        if let Some(hi) = v.get("core_hi").and_then(Value::as_i64) {
            if hi - lo + 1 != values.len() as i64 {
                return Err(Error::Malformed(format!(
                    "core [{lo}, {hi}] needs {} values, got {}",
                    hi - lo + 1,
                    values.len()
                )));
            }
        }
        DiscreteBVFunction::new(lo, values, a, b)
    }
}

impl<S: Scalar> FunctionJson for StepFunction<S> {
    const KIND: &'static str = "step";

    fn to_json(&self) -> Value {
        let mut m = header::<S>(Self::KIND);
        m.insert("breakpoints".into(), Value::Array(self.breakpoints().iter().map(S::to_json).collect()));
        m.insert("values".into(), Value::Array(self.values().iter().map(S::to_json).collect()));
        Value::Object(m)
    }

    fn from_json(v: &Value) -> Result<Self> {
        check_header::<S>(v, Self::KIND)?;
        StepFunction::new(scalar_list(v, "breakpoints")?, scalar_list(v, "values")?)
    }
}

impl<S: Scalar> FunctionJson for PiecewiseLinearFunction<S> {
    const KIND: &'static str = "pwl";

    fn to_json(&self) -> Value {
        let mut m = header::<S>(Self::KIND);
        let nodes = self.nodes().iter().map(|(x, y)| json!([x.to_json(), y.to_json()])).collect();
        m.insert("nodes".into(), Value::Array(nodes));
        m.insert("w11".into(), json!(self.is_w11()));
        Value::Object(m)
    }

    fn from_json(v: &Value) -> Result<Self> {
        check_header::<S>(v, Self::KIND)?;
        let nodes = field(v, "nodes")?
            .as_array()
            .ok_or_else(|| Error::Malformed("\"nodes\" must be an array".into()))?
            .iter()
            .map(|p| match p.as_array().map(Vec::as_slice) {
                Some([x, y]) => Ok((S::from_json(x)?, S::from_json(y)?)),
                _ => Err(Error::Malformed("each node must be a pair [x, y]".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        PiecewiseLinearFunction::new(nodes)
    }
}

/// A function of any supported kind loaded from JSON, in the mode it declares.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyFunction {
    DiscreteExact(DiscreteBVFunction<Rational>),
    DiscreteFloat(DiscreteBVFunction<f64>),
    StepExact(StepFunction<Rational>),
    StepFloat(StepFunction<f64>),
    PwlExact(PiecewiseLinearFunction<Rational>),
    PwlFloat(PiecewiseLinearFunction<f64>),
}

impl AnyFunction {
    pub fn from_json(v: &Value) -> Result<Self> {
        let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| Error::Malformed("missing \"kind\"".into()))?;
        let mode: ScalarMode = v
            .get("mode")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Malformed("missing \"mode\"".into()))?
            .parse()?;
        Ok(match (kind, mode) {
            ("discrete", ScalarMode::Rational) => AnyFunction::DiscreteExact(FunctionJson::from_json(v)?),
            ("discrete", ScalarMode::F64) => AnyFunction::DiscreteFloat(FunctionJson::from_json(v)?),
            ("step", ScalarMode::Rational) => AnyFunction::StepExact(FunctionJson::from_json(v)?),
            ("step", ScalarMode::F64) => AnyFunction::StepFloat(FunctionJson::from_json(v)?),
            ("pwl", ScalarMode::Rational) => AnyFunction::PwlExact(FunctionJson::from_json(v)?),
            ("pwl", ScalarMode::F64) => AnyFunction::PwlFloat(FunctionJson::from_json(v)?),
            (k, m) => return Err(Error::Malformed(format!("unsupported kind/mode combination {k}/{m}"))),
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnyFunction::DiscreteExact(f) => f.to_json(),
            AnyFunction::DiscreteFloat(f) => f.to_json(),
            AnyFunction::StepExact(f) => f.to_json(),
            AnyFunction::StepFloat(f) => f.to_json(),
            AnyFunction::PwlExact(f) => f.to_json(),
            AnyFunction::PwlFloat(f) => f.to_json(),
        }
    }

    pub fn mode(&self) -> ScalarMode {
        match self {
            AnyFunction::DiscreteExact(_) | AnyFunction::StepExact(_) | AnyFunction::PwlExact(_) => ScalarMode::Rational,
            _ => ScalarMode::F64,
        }
    }

    /// Converts to floating point; already-float functions are returned unchanged.
    pub fn into_f64(self) -> AnyFunction {
        match self {
            AnyFunction::DiscreteExact(f) => AnyFunction::DiscreteFloat(f.to_f64()),
            AnyFunction::StepExact(f) => AnyFunction::StepFloat(f.convert()),
            AnyFunction::PwlExact(f) => AnyFunction::PwlFloat(f.to_f64()),
            other => other,
        }
    }
}
