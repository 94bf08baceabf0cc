//! `ivdescent`: solve, certify and inspect interval-valued problems.
//!
//! Exit status: 0 when every run converged (or the queried point is
//! critical for `verify-critical`), 1 for runs that stopped otherwise and
//! for runtime failures, 2 for usage errors.

mod config;
mod problem;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ivdescent::descent::{in_descent_set, ORACLE_MAX_DIM};
use ivdescent::solver::{self, SolverConfig, Trace};
use ivdescent::{
    certify, criticality_oracle, is_critical, GradientMethod, Interval, IntervalBox, IvFunction,
    LineSearchParams, TStrategy,
};
use serde::Serialize;
use serde_json::json;

use config::FileConfig;
use problem::{ProblemSpec, Vector};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GradientKind {
    /// Central differences
    Fd,
    /// Forward-mode derivatives of the expression
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Parser)]
#[command(
    name = "ivdescent",
    version,
    about = "Descent method for interval-valued functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the descent iteration and print the iteration table
    Solve(SolveArgs),
    /// Certify a direction at a point
    CheckDescent(CheckDescentArgs),
    /// Decide whether a point is critical, with the orthant table
    VerifyCritical(PointArgs),
    /// Print F and its gradient box at a point
    Eval(EvalArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Builtin problem: example (alias paper-ex1) or quadratic
    #[arg(long, conflicts_with_all = ["expr", "lower"])]
    problem: Option<String>,
    /// Interval-valued expression, e.g. "[1,2]*x1^2 -M [0,1]*x2"
    #[arg(long, conflicts_with = "lower")]
    expr: Option<String>,
    /// Lower endpoint as a real expression (needs --upper)
    #[arg(long, requires = "upper")]
    lower: Option<String>,
    /// Upper endpoint as a real expression (needs --lower)
    #[arg(long, requires = "lower")]
    upper: Option<String>,
    /// Number of variables; defaults to the highest index used
    #[arg(long)]
    dim: Option<usize>,
    /// Gradient box method
    #[arg(long, value_enum)]
    gradient: Option<GradientKind>,
    /// Finite-difference step; defaults to max(1e-6, 1e-8 (1 + |x_i|))
    #[arg(long)]
    fd_step: Option<f64>,
    /// key = value file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Start point, e.g. 1,-1; repeat for several independent runs
    #[arg(long = "x0", allow_hyphen_values = true)]
    x0: Vec<Vector>,
    /// Stop when the Euclidean norm of the direction is below this
    #[arg(long)]
    epsilon: Option<f64>,
    /// Iteration budget
    #[arg(long)]
    max_iters: Option<usize>,
    /// zero, midpoint, random[:SEED] or fixed:T1,T2,...
    #[arg(long)]
    t_strategy: Option<TStrategy>,
    /// Seed for the random strategy
    #[arg(long)]
    seed: Option<u64>,
    /// Draw new t values every iteration
    #[arg(long)]
    redraw_t: bool,
    /// Final bracket width of the line search
    #[arg(long)]
    ls_tol: Option<f64>,
    /// Largest step before a ray counts as unbounded
    #[arg(long)]
    alpha_max: Option<f64>,
    /// Criticality slack applied when no representable decrease remains
    #[arg(long)]
    stall_tolerance: Option<f64>,
    /// Output format; without --out it replaces the table on stdout
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the formatted trace here; the table still goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, allow_hyphen_values = true)]
    point: Vector,
}

#[derive(Args)]
struct CheckDescentArgs {
    #[command(flatten)]
    at: PointArgs,
    #[arg(long, allow_hyphen_values = true)]
    direction: Vector,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    at: PointArgs,
    /// Print JSON instead of text
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::CheckDescent(a) => cmd_check_descent(a),
        Command::VerifyCritical(a) => cmd_verify_critical(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

struct Problem {
    spec: ProblemSpec,
    f: IvFunction,
    method: GradientMethod,
    file: FileConfig,
}

fn load_problem(args: &ProblemArgs) -> Result<Problem, CliError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let dim = args.dim.or(file.dim);
    // flags win over the file as a whole source, not field by field
    let from_flags = args.problem.is_some() || args.expr.is_some() || args.lower.is_some();
    let (problem, expr, bounds) = if from_flags {
        (
            args.problem.clone(),
            args.expr.clone(),
            args.lower.clone().zip(args.upper.clone()),
        )
    } else {
        (
            file.problem.clone(),
            file.expr.clone(),
            file.lower.clone().zip(file.upper.clone()),
        )
    };
    let mut spec = match (problem, expr, bounds) {
        (Some(id), None, None) => {
            let mut spec = ProblemSpec::builtin(&id)?;
            if dim.is_some_and(|d| d != spec.dim) {
                return Err(CliError::Usage(format!(
                    "problem {id} has dimension {}",
                    spec.dim
                )));
            }
            spec.name = id;
            spec
        }
        (None, Some(text), None) => ProblemSpec::from_expr(&text, dim)?,
        (None, None, Some((lo, hi))) => ProblemSpec::from_bounds(&lo, &hi, dim)?,
        (None, None, None) => {
            return Err(CliError::Usage(
                "no problem given; use --problem, --expr or --lower/--upper".into(),
            ))
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of problem, expr or lower/upper".into(),
            ))
        }
    };
    if let Some(name) = &file.name {
        spec.name = name.clone();
    }
    let f = spec.function()?;
    let method = match args
        .gradient
        .or(file.gradient)
        .unwrap_or(GradientKind::Analytic)
    {
        GradientKind::Analytic => GradientMethod::Analytic,
        GradientKind::Fd => GradientMethod::FiniteDiff {
            step: args.fd_step.or(file.fd_step),
        },
    };
    if let GradientMethod::FiniteDiff { step: Some(h) } = method {
        if !(h > 0.0 && h.is_finite()) {
            return Err(CliError::Usage(format!(
                "fd step must be positive, got {h}"
            )));
        }
    }
    Ok(Problem {
        spec,
        f,
        method,
        file,
    })
}

fn run_err(e: ivdescent::Error) -> CliError {
    CliError::Run(e.to_string())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|c| format!("{c:.5}")).collect();
    format!("({})", parts.join(", "))
}

fn fmt_box(g: &IntervalBox) -> String {
    format!("{g:.5}")
}

fn solver_config(a: &SolveArgs, file: &FileConfig) -> Result<SolverConfig, CliError> {
    let defaults = SolverConfig::default();
    let mut t_strategy = a
        .t_strategy
        .clone()
        .or_else(|| file.t_strategy.clone())
        .unwrap_or_default();
    if let (TStrategy::Random { seed }, Some(s)) = (&mut t_strategy, a.seed.or(file.seed)) {
        *seed = s;
    }
    let cfg = SolverConfig {
        epsilon: a.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon),
        max_iters: a.max_iters.or(file.max_iters).unwrap_or(defaults.max_iters),
        t_strategy,
        redraw_t: a.redraw_t || file.redraw_t.unwrap_or(false),
        ls: LineSearchParams {
            tol: a.ls_tol.or(file.ls_tol).unwrap_or(defaults.ls.tol),
            alpha_max: a
                .alpha_max
                .or(file.alpha_max)
                .unwrap_or(defaults.ls.alpha_max),
            ..defaults.ls
        },
        gradient_method: defaults.gradient_method,
        stall_tolerance: a
            .stall_tolerance
            .or(file.stall_tolerance)
            .unwrap_or(defaults.stall_tolerance),
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    // the strategy validates its own values on first draw
    cfg.t_strategy
        .draw(1)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

#[derive(Serialize)]
struct RunJson<'a> {
    problem: &'a ProblemSpec,
    config: &'a SolverConfig,
    x0: &'a [f64],
    records: &'a [solver::IterationRecord],
    termination: solver::Termination,
    message: Option<&'a str>,
    critical: Option<bool>,
    critical_check: Option<&'a ivdescent::descent::CriticalityReport>,
}

fn run_json<'a>(
    spec: &'a ProblemSpec,
    cfg: &'a SolverConfig,
    x0: &'a [f64],
    tr: &'a Trace,
) -> RunJson<'a> {
    RunJson {
        problem: spec,
        config: cfg,
        x0,
        records: &tr.records,
        termination: tr.termination,
        message: tr.message.as_deref(),
        critical: tr.final_critical,
        critical_check: tr.final_critical_check.as_ref(),
    }
}

fn table_report(starts: &[Vec<f64>], traces: &[Result<Trace, String>]) -> String {
    let mut out = String::new();
    for (i, (x0, tr)) in starts.iter().zip(traces).enumerate() {
        if starts.len() > 1 {
            if i > 0 {
                out.push('\n');
            }
            writeln!(
                out,
                "start {} of {}: x0 = {}",
                i + 1,
                starts.len(),
                fmt_vec(x0)
            )
            .unwrap();
        }
        let tr = match tr {
            Ok(tr) => tr,
            Err(e) => {
                writeln!(out, "error: {e}").unwrap();
                continue;
            }
        };
        out.push_str(&tr.to_table());
        write!(
            out,
            "termination: {:?} after {} steps",
            tr.termination,
            tr.steps()
        )
        .unwrap();
        match &tr.message {
            Some(m) => writeln!(out, " ({m})").unwrap(),
            None => out.push('\n'),
        }
        if let Some(report) = &tr.final_critical_check {
            writeln!(out, "{}", report.to_string().trim_end()).unwrap();
        } else if let Some(c) = tr.final_critical {
            writeln!(out, "critical: {}", if c { "yes" } else { "no" }).unwrap();
        }
    }
    out
}

fn csv_report(traces: &[Result<Trace, String>]) -> String {
    if traces.len() == 1 {
        return traces[0].as_ref().map(Trace::to_csv).unwrap_or_default();
    }
    let mut out = String::new();
    for (i, tr) in traces.iter().enumerate() {
        let Ok(tr) = tr else { continue };
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        let header = lines.next().unwrap_or_default();
        if out.is_empty() {
            writeln!(out, "start,{header}").unwrap();
        }
        for line in lines {
            writeln!(out, "{i},{line}").unwrap();
        }
    }
    out
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode, CliError> {
    let p = load_problem(&a.problem)?;
    let mut cfg = solver_config(&a, &p.file)?;
    cfg.gradient_method = p.method;
    let starts: Vec<Vec<f64>> = if !a.x0.is_empty() {
        a.x0.iter().map(|v| v.0.clone()).collect()
    } else if !p.file.x0.is_empty() {
        p.file.x0.clone()
    } else {
        p.spec
            .default_x0
            .clone()
            .map(|x| vec![x])
            .ok_or_else(|| CliError::Usage("no start point; pass --x0".into()))?
    };
    for x0 in &starts {
        p.spec.check_point("--x0", x0)?;
    }
    let traces: Vec<Result<Trace, String>> = solver::multi_start(&p.f, &starts, &cfg)
        .map_err(run_err)?
        .into_iter()
        .map(|r| r.map_err(|e| e.to_string()))
        .collect();

    let format = a.format.or(p.file.format).unwrap_or(Format::Table);
    let formatted = match format {
        Format::Table => table_report(&starts, &traces),
        Format::Csv => csv_report(&traces),
        Format::Json => {
            let runs: Vec<serde_json::Value> = starts
                .iter()
                .zip(&traces)
                .map(|(x0, tr)| match tr {
                    Ok(tr) => serde_json::to_value(run_json(&p.spec, &cfg, x0, tr)).unwrap(),
                    Err(e) => json!({ "problem": &p.spec, "x0": x0, "error": e }),
                })
                .collect();
            let value = if runs.len() == 1 {
                runs.into_iter().next().unwrap()
            } else {
                serde_json::Value::Array(runs)
            };
            serde_json::to_string_pretty(&value).unwrap() + "\n"
        }
    };
    match a.out.as_ref().or(p.file.out.as_ref()) {
        Some(path) => {
            std::fs::write(path, &formatted)
                .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
            print!("{}", table_report(&starts, &traces));
        }
        None => print!("{formatted}"),
    }

    let mut failed = false;
    for tr in &traces {
        match tr {
            Ok(tr) if tr.termination.converged() => {}
            Ok(tr) => {
                failed = true;
                eprintln!("run stopped without converging: {:?}", tr.termination);
            }
            Err(e) => {
                failed = true;
                eprintln!("error: {e}");
            }
        }
    }
    Ok(if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn gradient_at(p: &Problem, x: &[f64]) -> Result<IntervalBox, CliError> {
    p.spec.check_point("--point", x)?;
    p.f.gradient_box_or_fd(x, p.method).map_err(run_err)
}

fn cmd_check_descent(a: CheckDescentArgs) -> Result<ExitCode, CliError> {
    let p = load_problem(&a.at.problem)?;
    let x = &a.at.point.0;
    let d = &a.direction.0;
    let g = gradient_at(&p, x)?;
    p.spec.check_point("--direction", d)?;
    let c = certify(d, &g).map_err(run_err)?;
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    println!("point: {}", fmt_vec(x));
    println!("gradient box: {}", fmt_box(&g));
    println!("direction: {}", fmt_vec(d));
    println!("S = {:.5}", c.s);
    println!("descent: {}", yes_no(c.is_descent));
    println!("in descent set: {}", yes_no(in_descent_set(d, &g)));
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_critical(a: PointArgs) -> Result<ExitCode, CliError> {
    let p = load_problem(&a.problem)?;
    let x = &a.point.0;
    let g = gradient_at(&p, x)?;
    let critical = is_critical(&g);
    println!("point: {}", fmt_vec(x));
    println!("gradient box: {}", fmt_box(&g));
    println!(
        "closed form: {}",
        if critical { "critical" } else { "not critical" }
    );
    if g.dim() > ORACLE_MAX_DIM {
        println!(
            "note: orthant table skipped, dimension {} exceeds {ORACLE_MAX_DIM}",
            g.dim()
        );
        println!("critical: {}", if critical { "yes" } else { "no" });
    } else {
        let report = criticality_oracle(&g).map_err(run_err)?;
        println!("{}", report.to_string().trim_end());
        if report.critical != critical {
            return Err(CliError::Run(
                "closed form and orthant table disagree".into(),
            ));
        }
    }
    Ok(if critical {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_eval(a: EvalArgs) -> Result<ExitCode, CliError> {
    let p = load_problem(&a.at.problem)?;
    let x = &a.at.point.0;
    p.spec.check_point("--point", x)?;
    let v: Interval = p.f.evaluate(x).map_err(run_err)?;
    let g = gradient_at(&p, x)?;
    if a.json {
        let out = json!({ "problem": &p.spec, "x": x, "F": v, "gradient": g });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        println!("F{} = {v:.5}", fmt_vec(x));
        println!("gradient box: {}", fmt_box(&g));
    }
    Ok(ExitCode::SUCCESS)
}
