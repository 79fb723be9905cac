//! Validated run configuration, copied into every report.

use std::path::PathBuf;

use maxlab::experiments::ReportFormat;
use maxlab::{Beta, OperatorVariant, ScalarMode, Side};
use serde::Serialize;

use crate::{Command, Failure, Options};

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub target: String,
    pub variant: OperatorVariant,
    pub mode: Option<ScalarMode>,
    pub seed: u64,
    pub jmax: Option<u32>,
    pub trials: Option<u64>,
    pub grid_step: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
}

impl RunConfig {
    pub(crate) fn from_cli(command: &Command, opts: &Options) -> Result<Self, Failure> {
        let usage = |e: maxlab::Error| Failure::Usage(e.to_string());
        let beta: Beta = opts.beta.as_deref().unwrap_or("0").parse().map_err(usage)?;
        let side: Side = opts.side.as_deref().unwrap_or("two-sided").parse().map_err(usage)?;
        let variant = OperatorVariant::new(opts.centered, beta, side).map_err(usage)?;
        let mode = opts.mode.as_deref().map(str::parse::<ScalarMode>).transpose().map_err(usage)?;
        let format: ReportFormat = opts.format.parse().map_err(usage)?;
        if let Some(h) = opts.grid_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Failure::Usage(format!("--grid-step must be positive, got {h}")));
            }
        }
        if opts.jmax == Some(0) {
            return Err(Failure::Usage("--jmax must be at least 1".into()));
        }
        if opts.trials == Some(0) {
            return Err(Failure::Usage("--trials must be at least 1".into()));
        }
        let (name, target) = match command {
            Command::Compute { function, .. } => ("compute", function.display().to_string()),
            Command::Reproduce { setting } => ("reproduce", setting.clone()),
            Command::Fuzz { which } => ("fuzz", which.clone()),
            Command::Converge { which, .. } => ("converge", which.clone()),
        };
        Ok(RunConfig {
            command: name.to_string(),
            target,
            variant,
            mode,
            seed: opts.seed,
            jmax: opts.jmax,
            trials: opts.trials,
            grid_step: opts.grid_step,
            out: opts.out.clone(),
            format,
        })
    }
}
