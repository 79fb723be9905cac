//! Exact evaluation of one-dimensional Hardy–Littlewood maximal operators on
//! finitely describable functions, together with variation functionals,
//! structural checks, counterexample builders and convergence experiments.
//!
//! Every function type is generic over a [`Scalar`]: exact big rationals or
//! IEEE floats. The aliases below fix the two common modes.

pub mod counterexamples;
pub mod error;
pub mod experiments;
pub mod functions;
pub mod maxcont;
pub mod maxdisc;
pub mod operator;
pub mod scalar;
pub mod structure;
pub mod variation;

pub use error::{Error, Result};
pub use functions::{AnyFunction, DiscreteBVFunction, FunctionJson, PiecewiseLinearFunction, Run, StepFunction};
pub use operator::{MaxEvaluation, OperatorVariant, Side, TailSide};
pub use scalar::{Average, Beta, Rational, Scalar, ScalarMode};
pub use variation::IntervalZ;

pub type ExactDiscrete = DiscreteBVFunction<Rational>;
pub type FloatDiscrete = DiscreteBVFunction<f64>;
pub type ExactStep = StepFunction<Rational>;
pub type FloatStep = StepFunction<f64>;
pub type ExactPwl = PiecewiseLinearFunction<Rational>;
pub type FloatPwl = PiecewiseLinearFunction<f64>;
