mod discrete;
mod json;
mod pwl;
mod step;

pub use discrete::{DiscreteBVFunction, Run};
pub use json::{AnyFunction, FunctionJson};
pub use pwl::PiecewiseLinearFunction;
pub use step::StepFunction;
