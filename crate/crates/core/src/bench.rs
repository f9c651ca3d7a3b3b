//! Monte Carlo coverage, expansion and consistency experiments with CSV
//! output.

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::datagen::{AffineAr, MixtureKind, NewsvendorInstance, PortfolioInstance};
use crate::divergences::DivergenceSpec;
use crate::error::{Error, Result};
use crate::format::sig6;
use crate::inference::{interval_suite, sectioned_upper_bound, ConfidenceInterval, SectioningConfig, SuiteConfig};
use crate::inner::{expansion_residual, UncertaintyBudget};
use crate::outer::{deviation_distance, solve_robust, SolveConfig};
use crate::problems::{Cvar, LossModel, Portfolio, Sample};
use crate::stats::RngStream;

/// Header of the coverage CSV.
pub const COVERAGE_HEADER: &str = "experiment,n,method,coverage,mean_lower,mean_upper,mean_width,replications,seed";
/// Header of the per-replication CSV.
pub const REPLICATION_HEADER: &str = "experiment,n,replication,method,lower,upper,truth,covered";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Portfolio,
    CvarNormal,
    CvarA3,
    CvarA5,
    Newsvendor,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Portfolio,
        Experiment::CvarNormal,
        Experiment::CvarA3,
        Experiment::CvarA5,
        Experiment::Newsvendor,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Portfolio => "portfolio",
            Experiment::CvarNormal => "cvar-normal",
            Experiment::CvarA3 => "cvar-a3",
            Experiment::CvarA5 => "cvar-a5",
            Experiment::Newsvendor => "newsvendor",
        }
    }

    fn mixture(&self) -> Option<MixtureKind> {
        match self {
            Experiment::CvarNormal => Some(MixtureKind::Normal),
            Experiment::CvarA3 => Some(MixtureKind::HeavyTail { a: 3.0 }),
            Experiment::CvarA5 => Some(MixtureKind::HeavyTail { a: 5.0 }),
            _ => None,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.as_str() == s).ok_or_else(|| {
            Error::invalid(format!(
                "unknown experiment '{s}'; expected one of portfolio, cvar-normal, cvar-a3, cvar-a5, newsvendor"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub experiment: Experiment,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub alpha: f64,
    pub divergence: DivergenceSpec,
    /// Overrides the calibrated ball sizes when set.
    pub rho: Option<f64>,
    pub seed: u64,
    /// Decision dimension for portfolio and newsvendor instances.
    pub dim: usize,
    pub portfolio_bounds: (f64, f64),
    pub newsvendor_radius: f64,
    pub cvar_level: f64,
    pub include_one_sided: bool,
    pub solve: SolveConfig,
}

impl CoverageConfig {
    /// Desk-scale defaults: `d = 5`, 500 replications, `n` up to 2000.
    pub fn desk(experiment: Experiment) -> Self {
        Self {
            experiment,
            n_grid: vec![100, 500, 2000],
            replications: 500,
            alpha: 0.05,
            divergence: DivergenceSpec::chi_square(),
            rho: None,
            seed: 20170,
            dim: 5,
            portfolio_bounds: (-10.0, 10.0),
            newsvendor_radius: 10.0,
            cvar_level: 0.9,
            include_one_sided: false,
            solve: SolveConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::invalid("sample-size grid must be nonempty and positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.include_one_sided && self.alpha >= 0.5 {
            return Err(Error::domain("one-sided bounds need alpha < 0.5"));
        }
        self.solve.validate()
    }
}

/// One aggregated `(experiment, n, method)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub experiment: String,
    pub n: usize,
    pub method: String,
    pub covered: usize,
    pub coverage: f64,
    pub mean_lower: f64,
    pub mean_upper: f64,
    pub mean_width: f64,
    /// Replications that produced an interval.
    pub replications: usize,
    pub seed: u64,
}

/// Endpoints of one interval in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub experiment: String,
    pub n: usize,
    pub replication: usize,
    pub method: String,
    pub lower: f64,
    pub upper: f64,
    pub truth: f64,
    pub covered: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
    pub records: Vec<ReplicationRecord>,
    /// Replications that returned an error, excluded from the rows.
    pub failures: usize,
    /// Intervals whose solves stopped on the iteration budget.
    pub unconverged: usize,
}

impl CoverageReport {
    pub fn extend(&mut self, other: CoverageReport) {
        self.rows.extend(other.rows);
        self.records.extend(other.records);
        self.failures += other.failures;
        self.unconverged += other.unconverged;
    }

    pub fn row(&self, experiment: &str, n: usize, method: &str) -> Option<&CoverageRow> {
        self.rows
            .iter()
            .find(|r| r.experiment == experiment && r.n == n && r.method == method)
    }
}

/// Stream id of a replication; the ground-truth draws use the top bit so
/// they never collide with replication streams.
fn stream_id(grid_index: usize, replication: usize) -> u64 {
    ((grid_index as u64) << 32) | replication as u64
}

const TRUTH_STREAM: u64 = 1 << 63;

fn aggregate(
    experiment: &str,
    n: usize,
    seed: u64,
    outcomes: &[(usize, f64, Vec<ConfidenceInterval>)],
    records: &mut Vec<ReplicationRecord>,
) -> Vec<CoverageRow> {
    let mut methods: Vec<String> = Vec::new();
    for (_, _, cis) in outcomes {
        for ci in cis {
            if !methods.iter().any(|m| m == ci.method.as_str()) {
                methods.push(ci.method.as_str().to_string());
            }
        }
    }
    for (rep, truth, cis) in outcomes {
        for ci in cis {
            records.push(ReplicationRecord {
                experiment: experiment.to_string(),
                n,
                replication: *rep,
                method: ci.method.to_string(),
                lower: ci.lower,
                upper: ci.upper,
                truth: *truth,
                covered: ci.contains(*truth),
                converged: ci.converged,
            });
        }
    }
    methods
        .into_iter()
        .map(|method| {
            let hits: Vec<(&ConfidenceInterval, f64)> = outcomes
                .iter()
                .flat_map(|(_, t, cis)| cis.iter().filter(|c| c.method.as_str() == method).map(move |c| (c, *t)))
                .collect();
            let count = hits.len();
            let covered = hits.iter().filter(|(c, t)| c.contains(*t)).count();
            let mean =
                |f: &dyn Fn(&ConfidenceInterval) -> f64| hits.iter().map(|(c, _)| f(c)).sum::<f64>() / count as f64;
            CoverageRow {
                experiment: experiment.to_string(),
                n,
                method,
                covered,
                coverage: covered as f64 / count as f64,
                mean_lower: mean(&|c| c.lower),
                mean_upper: mean(&|c| c.upper),
                mean_width: mean(&|c| c.width()),
                replications: count,
                seed,
            }
        })
        .collect()
}

fn finish_cell(
    experiment: &str,
    n: usize,
    seed: u64,
    results: Vec<Result<(f64, Vec<ConfidenceInterval>)>>,
) -> CoverageReport {
    let mut report = CoverageReport::default();
    let mut outcomes = Vec::with_capacity(results.len());
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok((truth, cis)) => {
                report.unconverged += cis.iter().filter(|c| !c.converged).count();
                outcomes.push((rep, truth, cis));
            }
            Err(e) => {
                log::warn!("{experiment} n={n} replication {rep} failed: {e}");
                report.failures += 1;
            }
        }
    }
    report.rows = aggregate(experiment, n, seed, &outcomes, &mut report.records);
    report
}

/// Draws a fresh instance and sample for every replication, builds the
/// intervals, and counts how often each contains the true optimal value.
pub fn run_coverage_experiment(cfg: &CoverageConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let suite = SuiteConfig {
        alpha: cfg.alpha,
        rho: cfg.rho,
        two_sided: true,
        one_sided: cfg.include_one_sided,
        normal: true,
    };
    let (lo, hi) = cfg.portfolio_bounds;
    let cvar_model = Cvar::new(cfg.cvar_level)?;
    let cvar_truth = match cfg.experiment.mixture() {
        Some(kind) => Some(kind.cvar(cfg.cvar_level)?),
        None => None,
    };
    let portfolio = Portfolio::new(cfg.dim, lo, hi)?;
    let mut report = CoverageReport::default();
    for (gi, &n) in cfg.n_grid.iter().enumerate() {
        let results: Vec<Result<(f64, Vec<ConfidenceInterval>)>> = (0..cfg.replications)
            .into_par_iter()
            .map(|rep| {
                let mut rng = RngStream::new(cfg.seed, stream_id(gi, rep));
                let div = &cfg.divergence;
                match cfg.experiment {
                    Experiment::Portfolio => {
                        let inst = PortfolioInstance::draw(cfg.dim, &mut rng)?;
                        let sample = inst.sample(n, &mut rng)?;
                        let cis = interval_suite(&portfolio, &sample, div, &suite, &cfg.solve)?;
                        Ok((inst.true_optimum(&portfolio), cis))
                    }
                    Experiment::Newsvendor => {
                        let inst = NewsvendorInstance::draw(cfg.dim, &mut rng)?;
                        let model = inst.model(cfg.newsvendor_radius)?;
                        let sample = inst.sample(n, &mut rng)?;
                        let cis = interval_suite(&model, &sample, div, &suite, &cfg.solve)?;
                        Ok((inst.true_optimum(cfg.newsvendor_radius)?.1, cis))
                    }
                    _ => {
                        let kind = cfg.experiment.mixture().expect("remaining experiments are mixtures");
                        let sample = kind.sample(n, &mut rng)?;
                        let cis = interval_suite(&cvar_model, &sample, div, &suite, &cfg.solve)?;
                        Ok((cvar_truth.expect("mixture truth computed above"), cis))
                    }
                }
            })
            .collect();
        report.extend(finish_cell(cfg.experiment.as_str(), n, cfg.seed, results));
    }
    Ok(report)
}

/// Coverage of the sectioned bound for the mean of a stationary scalar
/// autoregression (decision forced to 1, loss equal to the observation).
#[derive(Debug, Clone, PartialEq)]
pub struct SectioningExperiment {
    pub coef: f64,
    pub n: usize,
    pub replications: usize,
    pub alpha: f64,
    pub divergence: DivergenceSpec,
    pub sectioning: SectioningConfig,
    pub seed: u64,
    pub solve: SolveConfig,
}

impl SectioningExperiment {
    pub fn desk() -> Self {
        Self {
            coef: 0.5,
            n: 8000,
            replications: 300,
            alpha: 0.05,
            divergence: DivergenceSpec::chi_square(),
            sectioning: SectioningConfig::new(8),
            seed: 20170,
            solve: SolveConfig::default(),
        }
    }
}

pub fn run_sectioning_experiment(cfg: &SectioningExperiment) -> Result<CoverageReport> {
    if cfg.replications == 0 {
        return Err(Error::invalid("replications must be at least 1"));
    }
    let ar = AffineAr::scalar(cfg.coef)?;
    let forced = Portfolio::new(1, 0.0, 2.0)?;
    let results: Vec<Result<(f64, Vec<ConfidenceInterval>)>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = RngStream::new(cfg.seed, stream_id(0, rep));
            let sample = ar.sample(cfg.n, &mut rng)?;
            let (ci, _) = sectioned_upper_bound(
                &forced,
                &sample,
                cfg.alpha,
                &cfg.divergence,
                &cfg.sectioning,
                &cfg.solve,
            )?;
            Ok((0.0, vec![ci]))
        })
        .collect();
    Ok(finish_cell("sectioning-ar1", cfg.n, cfg.seed, results))
}

/// Data laws for the expansion study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionData {
    Uniform,
    Normal,
}

impl FromStr for ExpansionData {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ExpansionData::Uniform),
            "normal" => Ok(ExpansionData::Normal),
            _ => Err(Error::invalid(format!(
                "unknown data law '{s}'; expected uniform or normal"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionRow {
    pub n: usize,
    pub divergence: String,
    pub median_residual: f64,
    pub max_residual: f64,
    pub replications: usize,
    pub seed: u64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Median over replications of `sqrt(n) * |sup - mean - sqrt(rho var / n)|`.
pub fn run_expansion_study(
    data: ExpansionData,
    n_grid: &[usize],
    div: &DivergenceSpec,
    rho: f64,
    replications: usize,
    seed: u64,
) -> Result<Vec<ExpansionRow>> {
    if replications == 0 {
        return Err(Error::invalid("replications must be at least 1"));
    }
    let mut rows = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let budget = UncertaintyBudget::new(rho, n)?;
        let residuals: Result<Vec<f64>> = (0..replications)
            .into_par_iter()
            .map(|rep| {
                let mut rng = RngStream::new(seed, stream_id(gi, rep));
                let z: Vec<f64> = match data {
                    ExpansionData::Uniform => (0..n).map(|_| rand::Rng::random::<f64>(&mut rng)).collect(),
                    ExpansionData::Normal => (0..n)
                        .map(|_| rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal))
                        .collect(),
                };
                expansion_residual(&z, div, &budget)
            })
            .collect();
        let mut residuals = residuals?;
        let max_residual = residuals.iter().copied().fold(0.0, f64::max);
        rows.push(ExpansionRow {
            n,
            divergence: divergence_label(div),
            median_residual: median(&mut residuals),
            max_residual,
            replications,
            seed,
        });
    }
    Ok(rows)
}

pub fn divergence_label(div: &DivergenceSpec) -> String {
    match div {
        DivergenceSpec::EmpiricalLikelihood => "el".into(),
        DivergenceSpec::KullbackLeibler => "kl".into(),
        DivergenceSpec::Power { k } => format!("k={}", sig6(*k)),
    }
}

/// Problems with a known population solution set for the consistency study.
#[derive(Debug, Clone, PartialEq)]
pub enum ConsistencyProblem {
    Newsvendor { instance: NewsvendorInstance, radius: f64 },
    Cvar { kind: MixtureKind, level: f64 },
}

impl ConsistencyProblem {
    fn model(&self) -> Result<Box<dyn LossModel>> {
        Ok(match self {
            ConsistencyProblem::Newsvendor { instance, radius } => Box::new(instance.model(*radius)?),
            ConsistencyProblem::Cvar { level, .. } => Box::new(Cvar::new(*level)?),
        })
    }

    fn optimum(&self) -> Result<Vec<f64>> {
        Ok(match self {
            ConsistencyProblem::Newsvendor { instance, radius } => instance.true_optimum(*radius)?.0,
            ConsistencyProblem::Cvar { kind, level } => vec![kind.quantile(*level)?],
        })
    }

    fn sample(&self, n: usize, rng: &mut RngStream) -> Result<Sample> {
        match self {
            ConsistencyProblem::Newsvendor { instance, .. } => instance.sample(n, rng),
            ConsistencyProblem::Cvar { kind, .. } => kind.sample(n, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRow {
    pub n: usize,
    pub median_deviation: f64,
    pub replications: usize,
    pub seed: u64,
}

/// Median over replications of the distance from the robust minimizer to
/// the population minimizer.
pub fn run_consistency_study(
    problem: &ConsistencyProblem,
    n_grid: &[usize],
    div: &DivergenceSpec,
    rho: f64,
    replications: usize,
    seed: u64,
    solve: &SolveConfig,
) -> Result<Vec<ConsistencyRow>> {
    if replications == 0 {
        return Err(Error::invalid("replications must be at least 1"));
    }
    let model = problem.model()?;
    let optimum = vec![problem.optimum()?];
    let mut rows = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        let budget = UncertaintyBudget::new(rho, n)?;
        let distances: Result<Vec<f64>> = (0..replications)
            .into_par_iter()
            .map(|rep| {
                let mut rng = RngStream::new(seed, stream_id(gi, rep));
                let sample = problem.sample(n, &mut rng)?;
                let (sol, _) = solve_robust(model.as_ref(), &sample, div, &budget, solve)?;
                deviation_distance(&[sol.x], &optimum)
            })
            .collect();
        rows.push(ConsistencyRow {
            n,
            median_deviation: median(&mut distances?),
            replications,
            seed,
        });
    }
    Ok(rows)
}

/// Ground-truth draws for callers that need a seeded instance outside any
/// replication stream.
pub fn truth_stream(seed: u64) -> RngStream {
    RngStream::new(seed, TRUTH_STREAM)
}

fn render(header: &str, lines: impl Iterator<Item = String>) -> String {
    let mut out = String::with_capacity(4096);
    out.push_str(header);
    out.push('\n');
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::create(path).map_err(io)?;
    file.write_all(text.as_bytes()).map_err(io)?;
    file.flush().map_err(io)
}

/// The aggregated rows with six significant digits and LF endings.
pub fn render_csv(report: &CoverageReport) -> String {
    render(
        COVERAGE_HEADER,
        report.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                r.experiment,
                r.n,
                r.method,
                sig6(r.coverage),
                sig6(r.mean_lower),
                sig6(r.mean_upper),
                sig6(r.mean_width),
                r.replications,
                r.seed
            )
        }),
    )
}

pub fn write_csv(report: &CoverageReport, path: &Path) -> Result<()> {
    write_text(path, &render_csv(report))
}

/// Every replication's endpoints, for auditing the aggregate.
pub fn render_replications_csv(report: &CoverageReport) -> String {
    render(
        REPLICATION_HEADER,
        report.records.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                r.experiment,
                r.n,
                r.replication,
                r.method,
                sig6(r.lower),
                sig6(r.upper),
                sig6(r.truth),
                u8::from(r.covered)
            )
        }),
    )
}

pub fn write_replications_csv(report: &CoverageReport, path: &Path) -> Result<()> {
    write_text(path, &render_replications_csv(report))
}

pub fn render_expansion_csv(rows: &[ExpansionRow]) -> String {
    render(
        "n,divergence,median_residual,max_residual,replications,seed",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.n,
                r.divergence,
                sig6(r.median_residual),
                sig6(r.max_residual),
                r.replications,
                r.seed
            )
        }),
    )
}

pub fn write_expansion_csv(rows: &[ExpansionRow], path: &Path) -> Result<()> {
    write_text(path, &render_expansion_csv(rows))
}

pub fn render_consistency_csv(rows: &[ConsistencyRow]) -> String {
    render(
        "n,median_deviation,replications,seed",
        rows.iter()
            .map(|r| format!("{},{},{},{}", r.n, sig6(r.median_deviation), r.replications, r.seed)),
    )
}

pub fn write_consistency_csv(rows: &[ConsistencyRow], path: &Path) -> Result<()> {
    write_text(path, &render_consistency_csv(rows))
}

/// Reads the coverage CSV back into rows.
pub fn read_csv(path: &Path) -> Result<Vec<CoverageRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != COVERAGE_HEADER {
        return Err(Error::invalid(format!(
            "{} does not have the coverage header",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::invalid(format!("field '{}' is not a number", &record[i])))
        };
        let int = |i: usize| -> Result<u64> {
            record[i]
                .parse()
                .map_err(|_| Error::invalid(format!("field '{}' is not an integer", &record[i])))
        };
        let replications = int(7)? as usize;
        let coverage = num(3)?;
        rows.push(CoverageRow {
            experiment: record[0].to_string(),
            n: int(1)? as usize,
            method: record[2].to_string(),
            covered: (coverage * replications as f64).round() as usize,
            coverage,
            mean_lower: num(4)?,
            mean_upper: num(5)?,
            mean_width: num(6)?,
            replications,
            seed: int(8)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.as_str().parse::<Experiment>().unwrap(), e);
        }
        assert!("bogus".parse::<Experiment>().is_err());
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn coverage_single_replication() {
        let mut cfg = CoverageConfig::desk(Experiment::CvarNormal);
        cfg.n_grid = vec![50];
        cfg.replications = 1;
        let report = run_coverage_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert_eq!(row.replications, 1);
            assert!(row.coverage == 0.0 || row.coverage == 1.0);
        }
        assert_eq!(report.failures, 0);
    }

    #[test]
    fn coverage_counts_match_records() {
        let mut cfg = CoverageConfig::desk(Experiment::Portfolio);
        cfg.dim = 2;
        cfg.n_grid = vec![40, 80];
        cfg.replications = 12;
        cfg.include_one_sided = true;
        let report = run_coverage_experiment(&cfg).unwrap();
        assert_eq!(report.rows.len(), 6);
        for row in &report.rows {
            let hits = report
                .records
                .iter()
                .filter(|r| r.n == row.n && r.method == row.method && r.covered)
                .count();
            assert_eq!(hits, row.covered);
            assert_eq!(row.coverage, row.covered as f64 / row.replications as f64);
        }
    }

    #[test]
    fn expansion_zero_rho_and_exact_chi_square() {
        let rows =
            run_expansion_study(ExpansionData::Uniform, &[50], &DivergenceSpec::chi_square(), 0.0, 5, 1).unwrap();
        assert_eq!(rows[0].median_residual, 0.0);
        let rows = run_expansion_study(
            ExpansionData::Uniform,
            &[200],
            &DivergenceSpec::chi_square(),
            3.84,
            5,
            1,
        )
        .unwrap();
        assert!(rows[0].max_residual <= 1e-8);
    }

    #[test]
    fn consistency_on_degenerate_data() {
        let instance = NewsvendorInstance::with_parameters(vec![5.0], vec![5.0], &[0.0]).unwrap();
        let problem = ConsistencyProblem::Newsvendor { instance, radius: 10.0 };
        let rows = run_consistency_study(
            &problem,
            &[10, 100],
            &DivergenceSpec::chi_square(),
            3.84,
            3,
            2,
            &SolveConfig::default(),
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.median_deviation == 0.0));
    }

    #[test]
    fn truth_stream_differs_from_replications() {
        use rand::RngCore;
        let mut a = truth_stream(5);
        let mut b = RngStream::new(5, stream_id(0, 0));
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
