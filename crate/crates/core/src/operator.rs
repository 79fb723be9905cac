//! Operator variants and the result type shared by the discrete and continuous optimizers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Average, Beta, Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    #[default]
    TwoSided,
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::TwoSided => "two-sided",
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" | "both" => Ok(Side::TwoSided),
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(Error::InvalidParameter(format!("unknown side {other:?}"))),
        }
    }
}

/// Which maximal operator to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperatorVariant {
    pub centered: bool,
    pub beta: Beta,
    pub side: Side,
}

impl OperatorVariant {
    pub fn uncentered(beta: Beta) -> Self {
        OperatorVariant { centered: false, beta, side: Side::TwoSided }
    }

    pub fn centered(beta: Beta) -> Self {
        OperatorVariant { centered: true, beta, side: Side::TwoSided }
    }

    /// The classical uncentered operator.
    pub fn classical() -> Self {
        Self::uncentered(Beta::ZERO)
    }

    /// `M_R` or `M_L`.
    pub fn one_sided(side: Side) -> Self {
        OperatorVariant { centered: false, beta: Beta::ZERO, side }
    }

    pub fn new(centered: bool, beta: Beta, side: Side) -> Result<Self> {
        let v = OperatorVariant { centered, beta, side };
        v.validate()?;
        Ok(v)
    }

    /// One-sided operators exist only for the classical uncentered case.
    pub fn validate(&self) -> Result<()> {
        if self.side != Side::TwoSided && (self.centered || !self.beta.is_classical()) {
            return Err(Error::UnsupportedVariant(format!(
                "{} side requires beta = 0 and the uncentered operator",
                self.side
            )));
        }
        Ok(())
    }

    /// `q = 1/(1-β)`.
    pub fn q(&self) -> Rational {
        self.beta.q()
    }

    pub fn is_one_sided(&self) -> bool {
        self.side != Side::TwoSided
    }
}

impl fmt::Display for OperatorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.centered { "centered" } else { "uncentered" };
        write!(f, "{kind} beta={} side={}", self.beta, self.side)
    }
}

/// Which limit a supremum that is not attained comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    Left,
    Right,
    /// Centered windows growing in both directions.
    Centered,
}

/// The value of a maximal function at one point.
///
/// `Finite` carries the maximizing average and the window (or limit) that
/// attains it. `Divergent` means the supremum is `+∞`.
#[derive(Clone, Debug)]
pub enum MaxEvaluation<S, W> {
    Finite { value: Average<S>, witness: W },
    Divergent,
}

impl<S: Scalar, W> MaxEvaluation<S, W> {
    pub fn is_divergent(&self) -> bool {
        matches!(self, MaxEvaluation::Divergent)
    }

    pub fn average(&self) -> Option<&Average<S>> {
        match self {
            MaxEvaluation::Finite { value, .. } => Some(value),
            MaxEvaluation::Divergent => None,
        }
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            MaxEvaluation::Finite { witness, .. } => Some(witness),
            MaxEvaluation::Divergent => None,
        }
    }

    /// The value in the scalar type; `None` when divergent.
    pub fn value(&self) -> Option<S> {
        self.average().map(Average::value)
    }

    /// The value as `f64`, `+∞` when divergent.
    pub fn to_f64(&self) -> f64 {
        self.average().map_or(f64::INFINITY, Average::to_f64)
    }

    /// The value as text: exact when representable, `infinite` when divergent.
    pub fn display_value(&self) -> String {
        match self.average() {
            Some(a) => a.to_string(),
            None => "infinite".to_string(),
        }
    }
}

impl<S: Scalar, W: PartialEq> PartialEq for MaxEvaluation<S, W> {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (MaxEvaluation::Divergent, MaxEvaluation::Divergent) => true,
            (
                MaxEvaluation::Finite { value: a, witness: wa },
                MaxEvaluation::Finite { value: b, witness: wb },
            ) => wa == wb && a.same_value(b),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_needs_classical_uncentered() {
        assert!(OperatorVariant::new(false, Beta::ZERO, Side::Right).is_ok());
        assert!(OperatorVariant::new(true, Beta::ZERO, Side::Left).is_err());
        assert!(OperatorVariant::new(false, Beta::new(1, 2).unwrap(), Side::Left).is_err());
        assert_eq!(OperatorVariant::uncentered(Beta::new(1, 2).unwrap()).q(), Rational::from_ratio(2, 1));
        assert_eq!("left".parse::<Side>().unwrap(), Side::Left);
    }
}
