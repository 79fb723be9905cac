use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maxlab::counterexamples::{reproduce, Setting};
use maxlab::experiments::{
    converge_thm1, converge_thm2, fuzz_inequalities, probe_open_questions, ContinuousFamily, DecisionRule,
    DiscreteFamily, ExperimentReport, ExperimentVerdict, Inequality, OpenQuestion, ProbeParams, RandomBVSpec,
    ReportFormat, ReportParameters,
};
use maxlab::maxcont::{max_continuous, step_max_continuous, ContinuousInput};
use maxlab::maxdisc::maximal_discrete;
use maxlab::{AnyFunction, Beta, Error, MaxEvaluation, OperatorVariant, Scalar, ScalarMode};
use serde::Serialize;
use serde_json::{json, Value};

mod config;

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "maxlab", version, about = "Maximal functions, their variation, and continuity experiments")]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Options {
    /// Fractional parameter, decimal or p/q.
    #[arg(long, global = true)]
    beta: Option<String>,
    #[arg(long, global = true, conflicts_with = "uncentered")]
    centered: bool,
    #[arg(long, global = true)]
    uncentered: bool,
    /// two-sided, left or right.
    #[arg(long, global = true)]
    side: Option<String>,
    /// rational or f64.
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    jmax: Option<u32>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long = "grid-step", global = true)]
    grid_step: Option<f64>,
    /// Directory for report files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Timestamp used in report file names; defaults to $MAXLAB_TIMESTAMP, then the current UTC time.
    #[arg(long, global = true)]
    timestamp: Option<String>,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Evaluate a maximal function at points of a function file.
    Compute {
        function: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        points: Vec<String>,
    },
    /// Rebuild and verify a counterexample family (thm3, thm4, thm5, thm6).
    Reproduce { setting: String },
    /// Fuzz a variation inequality (var-bound, varq-bound).
    Fuzz { which: String },
    /// Run a convergence experiment (thm1, thm2, questionB, questionC, questionD).
    Converge {
        which: String,
        /// Perturbation family: block, spike, thm5, thm6, zero (thm2); scaled, identity (thm1).
        #[arg(long)]
        family: Option<String>,
        /// Base function file; defaults to δ for thm2 and the tent for thm1.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Verification(_) => Failure::Verification(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("MAXLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| format!("MAXLAB_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err("MAXLAB_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn timestamp(opts: &Options) -> String {
    opts.timestamp
        .clone()
        .or_else(|| std::env::var("MAXLAB_TIMESTAMP").ok())
        .unwrap_or_else(|| chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string())
}

fn run(cli: Cli) -> CliResult<()> {
    let config = RunConfig::from_cli(&cli.command, &cli.opts)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Compute { function, points } => cmd_compute(&config, &cli.opts, function, points, &mut out),
        Command::Reproduce { setting } => cmd_reproduce(&config, &cli.opts, setting, &mut out),
        Command::Fuzz { which } => cmd_fuzz(&config, &cli.opts, which, &mut out),
        Command::Converge { which, family, input } => {
            cmd_converge(&config, &cli.opts, which, family.as_deref(), input.as_ref(), &mut out)
        }
    }
}

fn emit(out: &mut impl Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(|e| Failure::Usage(e.to_string()))
}

fn write_report(report: &ExperimentReport, config: &RunConfig, opts: &Options, out: &mut impl Write) -> CliResult<()> {
    if let Some(dir) = &config.out {
        let path = report.write_to(dir, &timestamp(opts), config.format)?;
        emit(out, &format!("wrote {}\n", path.display()))?;
    }
    Ok(())
}

fn with_config(mut report: ExperimentReport, config: &RunConfig) -> CliResult<ExperimentReport> {
    report.config = Some(serde_json::to_value(config).map_err(|e| Failure::Usage(e.to_string()))?);
    report.parameters.seed.get_or_insert(config.seed);
    Ok(report)
}

// ---------------------------------------------------------------------------
// compute

#[derive(Serialize)]
struct PointValue {
    point: String,
    value: String,
    approx: Option<f64>,
    witness: String,
}

fn point_value<S: Scalar, W: std::fmt::Display>(x: &str, e: &MaxEvaluation<S, W>) -> PointValue {
    let approx = e.to_f64();
    PointValue {
        point: x.to_string(),
        value: e.display_value(),
        approx: approx.is_finite().then_some(approx),
        witness: e.witness().map_or_else(|| "none".to_string(), ToString::to_string),
    }
}

fn parse_points<S: Scalar>(points: &[String]) -> CliResult<Vec<S>> {
    points.iter().map(|p| S::parse(p.trim()).map_err(Failure::from)).collect()
}

fn parse_int_points(points: &[String]) -> CliResult<Vec<i64>> {
    points
        .iter()
        .map(|p| p.trim().parse().map_err(|_| Failure::Usage(format!("discrete points must be integers, got {p:?}"))))
        .collect()
}

fn discrete_values<S: Scalar>(
    f: &maxlab::DiscreteBVFunction<S>,
    points: &[String],
    variant: &OperatorVariant,
) -> CliResult<Vec<PointValue>> {
    parse_int_points(points)?
        .into_iter()
        .map(|n| Ok(point_value(&n.to_string(), &maximal_discrete(f, n, variant)?)))
        .collect()
}

fn step_values<S: Scalar>(
    f: &maxlab::StepFunction<S>,
    points: &[String],
    variant: &OperatorVariant,
) -> CliResult<Vec<PointValue>> {
    parse_points::<S>(points)?
        .iter()
        .map(|x| Ok(point_value(&x.to_string(), &step_max_continuous(f, x, variant)?)))
        .collect()
}

fn pwl_values<S: Scalar>(
    f: &maxlab::PiecewiseLinearFunction<S>,
    points: &[String],
    variant: &OperatorVariant,
) -> CliResult<Vec<PointValue>> {
    parse_points::<S>(points)?
        .iter()
        .map(|x| Ok(point_value(&x.to_string(), &max_continuous(ContinuousInput::Pwl(f), x, variant)?)))
        .collect()
}

fn cmd_compute(
    config: &RunConfig,
    opts: &Options,
    path: &PathBuf,
    points: &[String],
    out: &mut impl Write,
) -> CliResult<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut f = AnyFunction::from_json_str(&text)?;
    match (config.mode, f.mode()) {
        (Some(ScalarMode::F64), _) => f = f.into_f64(),
        (Some(ScalarMode::Rational), ScalarMode::F64) => {
            return Err(Failure::Usage("the function file is in f64 mode; rational evaluation needs exact input".into()))
        }
        (Some(ScalarMode::F32), _) => return Err(Failure::Usage("f32 mode is not available from the command line".into())),
        _ => {}
    }
    let variant = &config.variant;
    let values = match &f {
        AnyFunction::DiscreteExact(g) => discrete_values(g, points, variant)?,
        AnyFunction::DiscreteFloat(g) => discrete_values(g, points, variant)?,
        AnyFunction::StepExact(g) => step_values(g, points, variant)?,
        AnyFunction::StepFloat(g) => step_values(g, points, variant)?,
        AnyFunction::PwlExact(g) => pwl_values(g, points, variant)?,
        AnyFunction::PwlFloat(g) => pwl_values(g, points, variant)?,
    };
    let text = match config.format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for v in &values {
                w.serialize(v).map_err(|e| Failure::Usage(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?)
                .map_err(|e| Failure::Usage(e.to_string()))?
        }
        ReportFormat::Json => {
            let doc = json!({ "config": config, "values": values });
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Usage(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    emit(out, &text)?;
    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(e.to_string()))?;
        let path = dir.join(format!("compute-{}-{}.{}", config.seed, timestamp(opts), config.format.extension()));
        std::fs::write(&path, &text).map_err(|e| Failure::Usage(e.to_string()))?;
        emit(out, &format!("wrote {}\n", path.display()))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// reproduce

fn cmd_reproduce(config: &RunConfig, opts: &Options, setting: &str, out: &mut impl Write) -> CliResult<()> {
    let setting: Setting = setting.parse()?;
    let beta = config.variant.beta;
    if beta.is_classical() {
        return Err(Failure::Usage("reproduce needs 0 < beta < 1".into()));
    }
    let jmax = config.jmax.unwrap_or(10);
    let rep = reproduce(setting, beta, jmax)?;
    let params = ReportParameters {
        beta,
        centered: setting.variant(beta).centered,
        j_range: Some((1, jmax)),
        extra: serde_json::Map::from_iter([
            ("setting".to_string(), Value::String(setting.to_string())),
            ("initial_bound".to_string(), Value::from(rep.initial_bound)),
        ]),
        ..ReportParameters::default()
    };
    let columns = [
        "j",
        "h_j",
        "value_at_0",
        "value_at_second_point",
        "derivative_gap",
        "bv_distance",
        "varq_lower_bound",
        "verified",
        "failed",
    ];
    let mut report = ExperimentReport::new(
        &format!("reproduce-{setting}"),
        params,
        &columns,
        DecisionRule::NoViolations { column: "failed".into() },
    );
    report.rows = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                Value::from(r.j),
                Value::from(r.h_j),
                json!(r.value_at_0),
                json!(r.value_at_1_or_2),
                json!(r.derivative_gap),
                Value::String(r.bv_distance.clone()),
                json!(r.varq_lower_bound),
                Value::from(r.verified),
                Value::from(u8::from(!r.verified)),
            ]
        })
        .collect();
    report.notes = rep.failures.clone();
    report.settle()?;
    if !rep.failures.is_empty() {
        report.verdict = ExperimentVerdict::Fail;
    }
    let report = with_config(report, config)?;
    emit(out, &report.render(config.format)?)?;
    write_report(&report, config, opts, out)?;
    for failure in &rep.failures {
        emit(out, &format!("failed: {failure}\n"))?;
    }
    if rep.passed() {
        emit(out, &format!("PASS {setting} beta={beta} jmax={jmax}\n"))?;
        Ok(())
    } else {
        emit(out, &format!("FAIL {setting} beta={beta} jmax={jmax}\n"))?;
        Err(Failure::Verification(format!("{} verifier assertions failed", rep.failures.len())))
    }
}

// ---------------------------------------------------------------------------
// fuzz

fn cmd_fuzz(config: &RunConfig, opts: &Options, which: &str, out: &mut impl Write) -> CliResult<()> {
    let which: Inequality = which.parse()?;
    let spec = RandomBVSpec::with_seed(config.seed);
    let (trials, beta) = match which {
        Inequality::VarBound => (config.trials.unwrap_or(10_000), Beta::ZERO),
        Inequality::VarqBound => {
            let beta = if opts.beta.is_some() { config.variant.beta } else { Beta::new(1, 2)? };
            (config.trials.unwrap_or(1_000), beta)
        }
    };
    let report = with_config(fuzz_inequalities(&spec, trials, which, beta)?, config)?;
    write_report(&report, config, opts, out)?;
    let violations = report.column("violation")?.iter().filter(|v| **v != 0.0).count();
    let mut summary = format!("{violations} violations in {trials} trials");
    for note in &report.notes {
        summary.push_str("; ");
        summary.push_str(note);
    }
    emit(out, &format!("{summary}\n"))?;
    for c in &report.checks {
        emit(out, &check_line(c))?;
    }
    for r in &report.reproducers {
        emit(out, &format!("reproducer: {r}\n"))?;
    }
    emit(out, &format!("{}\n", report.verdict_line()))?;
    if violations > 0 {
        return Err(Failure::Verification(format!("{violations} inequality violations")));
    }
    Ok(())
}

fn check_line(c: &maxlab::experiments::Check) -> String {
    let status = if c.passed { "pass" } else { "fail" };
    format!("check {}: {status} (observed {}; {})\n", c.name, c.observed, c.rule)
}

// ---------------------------------------------------------------------------
// converge

fn read_function(path: &PathBuf) -> CliResult<AnyFunction> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(AnyFunction::from_json_str(&text)?)
}

fn cmd_converge(
    config: &RunConfig,
    opts: &Options,
    which: &str,
    family: Option<&str>,
    input: Option<&PathBuf>,
    out: &mut impl Write,
) -> CliResult<()> {
    let report = match which {
        "thm2" => {
            let f = match input.map(read_function).transpose()? {
                None => maxlab::ExactDiscrete::delta_at_origin(),
                Some(AnyFunction::DiscreteExact(f)) => f,
                Some(_) => return Err(Failure::Usage("thm2 needs an exact discrete base function".into())),
            };
            let family: DiscreteFamily = family.unwrap_or("block").parse()?;
            converge_thm2(&f, &family, config.jmax.unwrap_or(50))?
        }
        "thm1" => {
            let f = match input.map(read_function).transpose()? {
                None => maxlab::FloatPwl::tent(),
                Some(AnyFunction::PwlExact(f)) => f.to_f64(),
                Some(AnyFunction::PwlFloat(f)) => f,
                Some(_) => return Err(Failure::Usage("thm1 needs a piecewise linear base function".into())),
            };
            let family = match family.unwrap_or("scaled") {
                "scaled" | "tent" => ContinuousFamily::Scaled(f.clone()),
                "identity" => ContinuousFamily::Identity,
                other => return Err(Failure::Usage(format!("unknown continuous family {other:?}"))),
            };
            converge_thm1(&f, &family, config.grid_step.unwrap_or(1e-3), config.jmax.unwrap_or(30))?
        }
        other => {
            let question: OpenQuestion = other.parse()?;
            let probe = ProbeParams { jmax: config.jmax.unwrap_or(20), grid_step: config.grid_step.unwrap_or(1e-2) };
            probe_open_questions(question, &RandomBVSpec::with_seed(config.seed), config.trials.unwrap_or(100), probe)?
        }
    };
    let report = with_config(report, config)?;
    emit(out, &report.render(config.format)?)?;
    write_report(&report, config, opts, out)?;
    emit(out, &format!("rule: {}\n", report.rule.describe()))?;
    for c in &report.checks {
        emit(out, &check_line(c))?;
    }
    emit(out, &format!("{}\n", report.verdict_line()))?;
    if report.checks.iter().any(|c| c.name == "uniform" && !c.passed) {
        return Err(Failure::Verification("uniform bound violated".into()));
    }
    Ok(())
}
