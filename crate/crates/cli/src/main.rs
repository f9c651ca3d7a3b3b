use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use robust_bounds::bench::{
    render_csv, render_expansion_csv, run_coverage_experiment, run_expansion_study, run_sectioning_experiment,
    write_csv, write_expansion_csv, write_replications_csv, CoverageConfig, CoverageReport, ExpansionData, Experiment,
    SectioningExperiment,
};
use robust_bounds::format::sig6;
use robust_bounds::inference::{
    interval_suite, one_sided_rho, sectioned_upper_bound, two_sided_rho, BlockRadius, SectioningConfig, SuiteConfig,
};
use robust_bounds::outer::{solve_robust, solve_saa};
use robust_bounds::problems::{Cvar, LossModel, Newsvendor, Portfolio, Sample};
use robust_bounds::stats::chi_square_cdf;
use robust_bounds::{DivergenceSpec, Error, SolveConfig, UncertaintyBudget};

const EXIT_USAGE: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "robust-bounds",
    version,
    about = "Divergence-robust bounds and confidence intervals for stochastic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Two-sided, one-sided and normal intervals for the optimal value of a scenario file.
    Interval(IntervalArgs),
    /// Empirical and robust minimizers for a scenario file.
    Solve(SolveArgs),
    /// Monte Carlo coverage of the interval methods.
    Coverage(CoverageArgs),
    /// Residual of the variance expansion of the robust value.
    Expansion(ExpansionArgs),
    /// Sectioned upper bound for dependent data, or its Monte Carlo coverage without --in.
    Sectioning(SectioningArgs),
}

#[derive(Args, Debug, Clone)]
struct Calibration {
    /// Cressie-Read index; 0 is empirical likelihood, 1 is Kullback-Leibler, 2 is chi-square.
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    k: f64,
    /// Nominal miscoverage; the ball size is derived from it.
    #[arg(long, conflicts_with = "rho")]
    alpha: Option<f64>,
    /// Ball size used in place of the calibrated value.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Iteration budget of the subgradient solver.
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Relative objective improvement per restart phase treated as converged.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ProblemKind {
    Portfolio,
    Cvar,
    Newsvendor,
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Loss model applied to the scenarios.
    #[arg(long, value_enum, default_value_t = ProblemKind::Portfolio)]
    problem: ProblemKind,
    /// Lower bound on each portfolio weight.
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    lo: f64,
    /// Upper bound on each portfolio weight.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    hi: f64,
    /// CVaR level.
    #[arg(long, default_value_t = 0.9)]
    level: f64,
    /// Newsvendor backorder costs, comma separated; one value is repeated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    backorder: Vec<f64>,
    /// Newsvendor holding costs, comma separated; one value is repeated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    holding: Vec<f64>,
    /// Radius of the newsvendor l1 decision ball.
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Scenario file: CSV, one scenario per row.
    #[arg(long = "in")]
    input: PathBuf,
    /// Skip the first line of the scenario file.
    #[arg(long)]
    skip_header: bool,
}

#[derive(Args, Debug)]
struct IntervalArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    calibration: Calibration,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the lines here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    calibration: Calibration,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoverageArgs {
    /// Experiment name, or `all`.
    #[arg(long = "problem", default_value = "portfolio")]
    experiment: String,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "100,500,2000")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 20170)]
    seed: u64,
    /// Decision dimension of portfolio and newsvendor instances.
    #[arg(long, default_value_t = 5)]
    dim: usize,
    /// Add the one-sided upper bound to the report.
    #[arg(long)]
    one_sided: bool,
    #[command(flatten)]
    calibration: Calibration,
    #[command(flatten)]
    solver: SolverArgs,
    /// Coverage CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-replication CSV.
    #[arg(long)]
    replications_out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DataLaw {
    Uniform,
    Normal,
}

#[derive(Args, Debug)]
struct ExpansionArgs {
    /// Law of the simulated losses.
    #[arg(long, value_enum, default_value_t = DataLaw::Uniform)]
    data: DataLaw,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 20170)]
    seed: u64,
    #[command(flatten)]
    calibration: Calibration,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RadiusArg {
    /// Blocks use the full-sample radius `rho / n`.
    Full,
    /// Blocks use their own radius `rho / b`.
    Block,
}

#[derive(Args, Debug)]
struct SectioningArgs {
    /// Scenario file; the Monte Carlo experiment runs when absent.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    skip_header: bool,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 8)]
    sections: usize,
    #[arg(long, value_enum, default_value_t = RadiusArg::Full)]
    block_radius: RadiusArg,
    #[command(flatten)]
    calibration: Calibration,
    #[command(flatten)]
    solver: SolverArgs,
    /// Autoregression coefficient of the simulated series.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    coef: f64,
    /// Length of each simulated series.
    #[arg(long, default_value_t = 8000)]
    n: usize,
    #[arg(long, default_value_t = 300)]
    reps: usize,
    #[arg(long, default_value_t = 20170)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Convergence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(msg) => Failure::Convergence(msg),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

const DEFAULT_ALPHA: f64 = 0.05;

fn divergence(cal: &Calibration) -> Result<DivergenceSpec, Failure> {
    Ok(DivergenceSpec::cressie_read(cal.k)?)
}

fn solve_config(args: &SolverArgs) -> Result<SolveConfig, Failure> {
    let cfg = SolveConfig {
        max_iters: args.max_iters,
        tolerance: args.tol,
        ..SolveConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn check_input(path: &Path) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Input(format!(
            "scenario file {} does not exist",
            path.display()
        )))
    }
}

fn check_output(path: Option<&Path>) -> Outcome {
    let Some(path) = path else { return Ok(()) };
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    match parent {
        Some(dir) if !dir.is_dir() => Err(Failure::Input(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn read_scenarios(path: &Path, skip_header: bool) -> Result<Sample, Failure> {
    let bad = |msg: String| Failure::Input(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(skip_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let line = i + 1 + usize::from(skip_header);
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("line {line}: '{field}' is not a finite number")))
            })
            .collect::<Result<Vec<f64>, Failure>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(bad("no scenarios".into()));
    }
    Sample::new(&rows).map_err(|e| bad(e.to_string()))
}

fn broadcast(values: &[f64], d: usize, name: &str) -> Result<Vec<f64>, Failure> {
    match values.len() {
        1 => Ok(vec![values[0]; d]),
        len if len == d => Ok(values.to_vec()),
        len => Err(Failure::Input(format!("--{name} has {len} values for {d} coordinates"))),
    }
}

fn build_model(args: &ProblemArgs, dim: usize) -> Result<Box<dyn LossModel>, Failure> {
    Ok(match args.problem {
        ProblemKind::Portfolio => Box::new(Portfolio::new(dim, args.lo, args.hi)?),
        ProblemKind::Cvar => {
            if dim != 1 {
                return Err(Failure::Input(format!("cvar needs one column of losses, got {dim}")));
            }
            Box::new(Cvar::new(args.level)?)
        }
        ProblemKind::Newsvendor => Box::new(Newsvendor::new(
            broadcast(&args.backorder, dim, "backorder")?,
            broadcast(&args.holding, dim, "holding")?,
            args.radius,
        )?),
    })
}

fn problem_label(args: &ProblemArgs) -> String {
    match args.problem {
        ProblemKind::Portfolio => format!("portfolio lo={} hi={}", sig6(args.lo), sig6(args.hi)),
        ProblemKind::Cvar => format!("cvar level={}", sig6(args.level)),
        ProblemKind::Newsvendor => format!(
            "newsvendor backorder={} holding={} radius={}",
            join(&args.backorder),
            join(&args.holding),
            sig6(args.radius)
        ),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| sig6(*v)).collect::<Vec<_>>().join(";")
}

fn echo(subcommand: &str, fields: &[(&str, String)]) {
    let mut line = format!("config: subcommand={subcommand}");
    for (key, value) in fields {
        let _ = write!(line, " {key}={value}");
    }
    eprintln!("{line}");
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Input(format!("standard output: {e}")))
        }
    }
}

/// Alpha for the normal interval when the ball size is given directly:
/// the level at which `chi2_{1, 1 - alpha} = rho`.
fn alpha_from_rho(rho: f64) -> Result<f64, Failure> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Failure::Input(format!("--rho must be positive, got {rho}")));
    }
    Ok(1.0 - chi_square_cdf(1, rho))
}

fn cmd_interval(args: IntervalArgs) -> Outcome {
    check_input(&args.input.input)?;
    check_output(args.out.as_deref())?;
    let div = divergence(&args.calibration)?;
    let cfg = solve_config(&args.solver)?;
    let sample = read_scenarios(&args.input.input, args.input.skip_header)?;
    let model = build_model(&args.problem, sample.dim())?;
    let (alpha, two_rho, one_rho) = match (args.calibration.alpha, args.calibration.rho) {
        (_, Some(rho)) => (alpha_from_rho(rho)?, rho, rho),
        (alpha, None) => {
            let alpha = alpha.unwrap_or(DEFAULT_ALPHA);
            (alpha, two_sided_rho(alpha)?, one_sided_rho(alpha)?)
        }
    };
    echo(
        "interval",
        &[
            ("in", args.input.input.display().to_string()),
            ("n", sample.len().to_string()),
            ("dim", sample.dim().to_string()),
            ("problem", problem_label(&args.problem)),
            ("k", sig6(div.k())),
            ("alpha", sig6(alpha)),
            ("rho_two_sided", sig6(two_rho)),
            ("rho_one_sided", sig6(one_rho)),
        ],
    );
    let suite = SuiteConfig {
        rho: args.calibration.rho,
        ..SuiteConfig::all(alpha)
    };
    let cis = interval_suite(model.as_ref(), &sample, &div, &suite, &cfg)?;
    let mut text = String::from("method,lower,upper,rho,n\n");
    for ci in &cis {
        let _ = writeln!(
            text,
            "{},{},{},{},{}",
            ci.method,
            sig6(ci.lower),
            sig6(ci.upper),
            sig6(ci.rho_used),
            sample.len()
        );
    }
    emit(args.out.as_deref(), &text)?;
    match cis.iter().find(|ci| !ci.converged) {
        Some(ci) => Err(Failure::Convergence(format!(
            "{} did not converge within {} iterations",
            ci.method, cfg.max_iters
        ))),
        None => Ok(()),
    }
}

fn cmd_solve(args: SolveArgs) -> Outcome {
    check_input(&args.input.input)?;
    check_output(args.out.as_deref())?;
    let div = divergence(&args.calibration)?;
    let cfg = solve_config(&args.solver)?;
    let sample = read_scenarios(&args.input.input, args.input.skip_header)?;
    let model = build_model(&args.problem, sample.dim())?;
    let rho = match args.calibration.rho {
        Some(rho) => rho,
        None => two_sided_rho(args.calibration.alpha.unwrap_or(DEFAULT_ALPHA))?,
    };
    echo(
        "solve",
        &[
            ("in", args.input.input.display().to_string()),
            ("n", sample.len().to_string()),
            ("dim", sample.dim().to_string()),
            ("problem", problem_label(&args.problem)),
            ("k", sig6(div.k())),
            ("rho", sig6(rho)),
        ],
    );
    let budget = UncertaintyBudget::new(rho, sample.len())?;
    let saa = solve_saa(model.as_ref(), &sample, &cfg)?;
    let (robust, _) = solve_robust(model.as_ref(), &sample, &div, &budget, &cfg)?;
    let dim = model.dim();
    let mut text = String::from("objective,value,rho,n,iterations,converged");
    for j in 1..=dim {
        let _ = write!(text, ",x{j}");
    }
    text.push('\n');
    for (name, sol, r) in [("saa", &saa, 0.0), ("robust", &robust, rho)] {
        let _ = write!(
            text,
            "{name},{},{},{},{},{}",
            sig6(sol.value),
            sig6(r),
            sample.len(),
            sol.iterations,
            sol.converged
        );
        for v in &sol.x {
            let _ = write!(text, ",{}", sig6(*v));
        }
        text.push('\n');
    }
    emit(args.out.as_deref(), &text)?;
    if !(saa.converged && robust.converged) {
        return Err(Failure::Convergence(format!(
            "solver did not converge within {} iterations",
            cfg.max_iters
        )));
    }
    Ok(())
}

fn parse_experiments(name: &str) -> Result<Vec<Experiment>, Failure> {
    if name == "all" {
        return Ok(Experiment::ALL.to_vec());
    }
    Ok(vec![name.parse::<Experiment>()?])
}

fn finish_report(report: &CoverageReport) -> Outcome {
    if report.unconverged > 0 {
        log::warn!(
            "{} intervals came from solves that did not converge",
            report.unconverged
        );
    }
    if report.failures > 0 {
        return Err(Failure::Convergence(format!("{} replications failed", report.failures)));
    }
    Ok(())
}

fn write_report(report: &CoverageReport, out: Option<&Path>) -> Outcome {
    match out {
        Some(path) => Ok(write_csv(report, path)?),
        None => emit(None, &render_csv(report)),
    }
}

fn cmd_coverage(args: CoverageArgs) -> Outcome {
    check_output(args.out.as_deref())?;
    check_output(args.replications_out.as_deref())?;
    let experiments = parse_experiments(&args.experiment)?;
    let div = divergence(&args.calibration)?;
    let solve = solve_config(&args.solver)?;
    let alpha = match args.calibration.rho {
        Some(rho) => alpha_from_rho(rho)?,
        None => args.calibration.alpha.unwrap_or(DEFAULT_ALPHA),
    };
    let rho_shown = match args.calibration.rho {
        Some(rho) => rho,
        None => two_sided_rho(alpha)?,
    };
    echo(
        "coverage",
        &[
            ("problem", args.experiment.clone()),
            ("n", args.n.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(";")),
            ("reps", args.reps.to_string()),
            ("seed", args.seed.to_string()),
            ("dim", args.dim.to_string()),
            ("k", sig6(div.k())),
            ("alpha", sig6(alpha)),
            ("rho", sig6(rho_shown)),
        ],
    );
    let mut report = CoverageReport::default();
    for experiment in experiments {
        let cfg = CoverageConfig {
            n_grid: args.n.clone(),
            replications: args.reps,
            alpha,
            divergence: div,
            rho: args.calibration.rho,
            seed: args.seed,
            dim: args.dim,
            include_one_sided: args.one_sided,
            solve: solve.clone(),
            ..CoverageConfig::desk(experiment)
        };
        report.extend(run_coverage_experiment(&cfg)?);
    }
    write_report(&report, args.out.as_deref())?;
    if let Some(path) = args.replications_out.as_deref() {
        write_replications_csv(&report, path)?;
    }
    finish_report(&report)
}

fn cmd_expansion(args: ExpansionArgs) -> Outcome {
    check_output(args.out.as_deref())?;
    let div = divergence(&args.calibration)?;
    let rho = match args.calibration.rho {
        Some(rho) => rho,
        None => two_sided_rho(args.calibration.alpha.unwrap_or(DEFAULT_ALPHA))?,
    };
    let data = match args.data {
        DataLaw::Uniform => ExpansionData::Uniform,
        DataLaw::Normal => ExpansionData::Normal,
    };
    echo(
        "expansion",
        &[
            ("data", format!("{:?}", args.data).to_lowercase()),
            ("n", args.n.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(";")),
            ("reps", args.reps.to_string()),
            ("seed", args.seed.to_string()),
            ("k", sig6(div.k())),
            ("rho", sig6(rho)),
        ],
    );
    let rows = run_expansion_study(data, &args.n, &div, rho, args.reps, args.seed)?;
    match args.out.as_deref() {
        Some(path) => Ok(write_expansion_csv(&rows, path)?),
        None => emit(None, &render_expansion_csv(&rows)),
    }
}

fn cmd_sectioning(args: SectioningArgs) -> Outcome {
    check_output(args.out.as_deref())?;
    let div = divergence(&args.calibration)?;
    let solve = solve_config(&args.solver)?;
    let alpha = match args.calibration.rho {
        Some(rho) => alpha_from_rho(rho)?,
        None => args.calibration.alpha.unwrap_or(DEFAULT_ALPHA),
    };
    let rho = match args.calibration.rho {
        Some(rho) => rho,
        None => two_sided_rho(alpha)?,
    };
    let sectioning = SectioningConfig {
        sections: args.sections,
        block_radius: match args.block_radius {
            RadiusArg::Full => BlockRadius::FullSample,
            RadiusArg::Block => BlockRadius::BlockLength,
        },
        rho: Some(rho),
    };
    let radius_label = format!("{:?}", args.block_radius).to_lowercase();
    let Some(input) = args.input.as_deref() else {
        echo(
            "sectioning",
            &[
                ("coef", sig6(args.coef)),
                ("n", args.n.to_string()),
                ("reps", args.reps.to_string()),
                ("seed", args.seed.to_string()),
                ("sections", args.sections.to_string()),
                ("block_radius", radius_label),
                ("k", sig6(div.k())),
                ("alpha", sig6(alpha)),
                ("rho", sig6(rho)),
            ],
        );
        let cfg = SectioningExperiment {
            coef: args.coef,
            n: args.n,
            replications: args.reps,
            alpha,
            divergence: div,
            sectioning,
            seed: args.seed,
            solve,
        };
        let report = run_sectioning_experiment(&cfg)?;
        write_report(&report, args.out.as_deref())?;
        return finish_report(&report);
    };
    check_input(input)?;
    let sample = read_scenarios(input, args.skip_header)?;
    let model = build_model(&args.problem, sample.dim())?;
    echo(
        "sectioning",
        &[
            ("in", input.display().to_string()),
            ("n", sample.len().to_string()),
            ("dim", sample.dim().to_string()),
            ("problem", problem_label(&args.problem)),
            ("sections", args.sections.to_string()),
            ("block_radius", radius_label),
            ("k", sig6(div.k())),
            ("alpha", sig6(alpha)),
            ("rho", sig6(rho)),
        ],
    );
    let (ci, stats) = sectioned_upper_bound(model.as_ref(), &sample, alpha, &div, &sectioning, &solve)?;
    let mut text = String::from("method,lower,upper,rho,n\n");
    let _ = writeln!(
        text,
        "{},{},{},{},{}",
        ci.method,
        sig6(ci.lower),
        sig6(ci.upper),
        sig6(rho),
        sample.len()
    );
    text.push_str("m,b,mean,spread,pivot_correction,block_upper_bounds\n");
    let _ = writeln!(
        text,
        "{},{},{},{},{},{}",
        stats.m,
        stats.b,
        sig6(stats.mean),
        sig6(stats.spread),
        sig6(stats.pivot_correction),
        join(&stats.block_upper_bounds)
    );
    emit(args.out.as_deref(), &text)?;
    if !ci.converged {
        return Err(Failure::Convergence(format!(
            "a block solve did not converge within {} iterations",
            solve.max_iters
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Interval(a) => cmd_interval(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Coverage(a) => cmd_coverage(a),
        Command::Expansion(a) => cmd_expansion(a),
        Command::Sectioning(a) => cmd_sectioning(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Convergence(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONVERGENCE)
        }
    }
}
