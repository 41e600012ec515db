//! Command-line front end: `simulate`, `optimize`, `sweep` and `table`.
//!
//! Exit codes: 0 on success, 1 on numerical or output failure, 2 on usage or
//! validation errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sir_attendance::analysis::{
    disease_table, linspace, optimize_attendance, staff_savings, sweep, Cohort, StaffingParams,
};
use sir_attendance::io::{
    default_catalog, format_number, read_disease_catalog, write_disease_table, write_optimization, write_sweep,
    write_trajectory, OptimizationReport, OutputFormat, SweepDocument,
};
use sir_attendance::model::{attack_rate, simulate, DiseaseParams, ScenarioConfig, SimulationSettings};
use sir_attendance::numerics::SolverSettings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sir-attendance",
    version,
    about = "Attendance-modified SIR model: simulation, optimal attendance and staffing savings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the model and write the trajectory
    Simulate(SimulateArgs),
    /// Find the attendance rate that maximizes long-run home time
    Optimize(OptimizeArgs),
    /// Tabulate long-run home time over an (a, R0) grid with the optimal ridge
    Sweep(SweepArgs),
    /// Optimal attendance and staff savings for each disease in a catalog
    Table(TableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file [default: stdout]
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CohortArgs {
    /// Number of children
    #[arg(long, default_value_t = 100.0)]
    pub n: f64,
    /// Initial susceptible fraction
    #[arg(long, default_value_t = 0.99)]
    pub s0: f64,
    /// Initial infected fraction; the remainder 1 - s0 - i0 starts recovered
    #[arg(long, default_value_t = 0.01)]
    pub i0: f64,
}

#[derive(Debug, Args)]
pub struct StaffingArgs {
    /// Children per teacher
    #[arg(long, default_value_t = 6.0)]
    pub ratio: f64,
    /// Fraction of days the center is open
    #[arg(long, default_value_t = 5.0 / 7.0)]
    pub open_days_fraction: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Fraction of infected children who attend, in [0, 1]
    #[arg(long)]
    pub a: f64,
    /// Infection rate per day
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Recovery rate per day
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[command(flatten)]
    pub cohort: CohortArgs,
    /// End time in days [default: auto, once I < 1e-6·N]
    #[arg(long)]
    pub t_end: Option<f64>,
    /// RK4 step in days
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Step-halving acceptance tolerance (children)
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Basic reproduction number beta/gamma [default: beta/gamma]
    #[arg(long, conflicts_with = "beta")]
    pub r0: Option<f64>,
    /// Infection rate per day [default: 0.5]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Recovery rate per day
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[command(flatten)]
    pub staffing: StaffingArgs,
    /// Absolute tolerance on the optimal attendance
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Smallest attendance rate
    #[arg(long, default_value_t = 0.01)]
    pub a_min: f64,
    /// Largest attendance rate
    #[arg(long, default_value_t = 1.0)]
    pub a_max: f64,
    /// Number of attendance values
    #[arg(long, default_value_t = 100)]
    pub a_steps: usize,
    /// Smallest basic reproduction number
    #[arg(long, default_value_t = 1.0)]
    pub r0_min: f64,
    /// Largest basic reproduction number
    #[arg(long, default_value_t = 18.0)]
    pub r0_max: f64,
    /// Number of R0 values
    #[arg(long, default_value_t = 171)]
    pub r0_steps: usize,
    /// Recovery rate per day
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[command(flatten)]
    pub cohort: CohortArgs,
    /// Absolute tolerance on each ridge point
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Disease catalog CSV [default: built-in four-disease catalog]
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[command(flatten)]
    pub cohort: CohortArgs,
    #[command(flatten)]
    pub staffing: StaffingArgs,
    /// Absolute tolerance on each optimal attendance
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid value for --{flag}: {msg}"))
}

fn numeric(e: sir_attendance::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

fn output_error(e: impl std::fmt::Display) -> CliError {
    CliError::Numeric(format!("failed to write output: {e}"))
}

fn require(flag: &str, ok: bool, msg: &str) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(usage(flag, msg))
    }
}

fn positive(flag: &str, v: f64) -> CliResult<()> {
    require(flag, v > 0.0 && v.is_finite(), &format!("must be positive, got {v}"))
}

fn unit_interval(flag: &str, v: f64) -> CliResult<()> {
    require(flag, (0.0..=1.0).contains(&v), &format!("must lie in [0, 1], got {v}"))
}

impl CohortArgs {
    fn validate(&self) -> CliResult<(f64, f64, f64, f64)> {
        positive("n", self.n)?;
        unit_interval("s0", self.s0)?;
        unit_interval("i0", self.i0)?;
        let r0_frac = 1.0 - self.s0 - self.i0;
        require(
            "i0",
            r0_frac >= -1e-12,
            &format!("s0 + i0 must not exceed 1, got {}", self.s0 + self.i0),
        )?;
        // Rounding residue of 1 - s0 - i0 is not initial immunity.
        let r0_frac = if r0_frac.abs() <= 1e-12 { 0.0 } else { r0_frac };
        Ok((self.n, self.s0, self.i0, r0_frac))
    }

    fn cohort(&self) -> CliResult<Cohort> {
        let (n, s0, _, r0_frac) = self.validate()?;
        Cohort::new(n, s0, r0_frac).map_err(|e| CliError::Usage(e.to_string()))
    }
}

impl StaffingArgs {
    fn staffing(&self) -> CliResult<StaffingParams> {
        require(
            "ratio",
            self.ratio >= 1.0 && self.ratio.is_finite(),
            &format!("must be at least 1, got {}", self.ratio),
        )?;
        require(
            "open-days-fraction",
            self.open_days_fraction > 0.0 && self.open_days_fraction <= 1.0,
            &format!("must lie in (0, 1], got {}", self.open_days_fraction),
        )?;
        StaffingParams::new(self.ratio, self.open_days_fraction).map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn solver(tolerance: f64, max_iterations: usize) -> CliResult<SolverSettings> {
    positive("tolerance", tolerance)?;
    SolverSettings::new(tolerance, max_iterations).map_err(|e| usage("tolerance", e))
}

/// Opens `--output` or falls back to `stdout`.
fn with_sink<F>(path: Option<&Path>, stdout: &mut dyn Write, write: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> sir_attendance::Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| output_error(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w).map_err(output_error)?;
            w.flush().map_err(output_error)
        }
        None => write(stdout).map_err(output_error),
    }
}

pub fn run_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    unit_interval("a", args.a)?;
    positive("beta", args.beta)?;
    positive("gamma", args.gamma)?;
    positive("dt", args.dt)?;
    if let Some(t) = args.t_end {
        positive("t-end", t)?;
    }
    let (n, s0, i0, r0_frac) = args.cohort.validate()?;
    let params = DiseaseParams::new(args.beta, args.gamma).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = ScenarioConfig::new(n, s0, i0, r0_frac, args.a).map_err(|e| CliError::Usage(e.to_string()))?;
    let settings = SimulationSettings {
        t_end: args.t_end,
        dt: args.dt,
        solver: solver(args.tolerance, 8)?,
    };

    let traj = simulate(&params, &config, &settings).map_err(numeric)?;
    if let Some(path) = &args.out.output {
        with_sink(Some(path), stdout, |w| {
            write_trajectory(&traj, args.out.format.into(), w)
        })?;
    }
    let th_end = traj.last().map_or(0.0, |s| s.th_cum);
    let attack = attack_rate(&traj).map_err(|e| CliError::Numeric(format!("{e}; increase --t-end")))?;
    writeln!(
        stdout,
        "a={} Th_end={} attack_rate={}",
        format_number(args.a),
        format_number(th_end),
        format_number(attack)
    )
    .map_err(output_error)
}

pub fn run_optimize(args: &OptimizeArgs, stdout: &mut dyn Write) -> CliResult<()> {
    positive("gamma", args.gamma)?;
    let params = match (args.r0, args.beta) {
        (Some(r0), _) => {
            positive("r0", r0)?;
            DiseaseParams::from_r0(r0, args.gamma)
        }
        (None, beta) => {
            let beta = beta.unwrap_or(0.5);
            positive("beta", beta)?;
            DiseaseParams::new(beta, args.gamma)
        }
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    let cohort = args.cohort.cohort()?;
    let staffing = args.staffing.staffing()?;
    let settings = solver(args.tolerance, 200)?;

    let result = optimize_attendance(&params, &cohort, settings).map_err(numeric)?;
    let report = OptimizationReport {
        r0: params.r0_basic(),
        beta: params.beta(),
        gamma: params.gamma(),
        result,
        savings: staff_savings(result.th_star, &staffing),
    };

    match args.out.format {
        Format::Json => with_sink(args.out.output.as_deref(), stdout, |w| {
            write_optimization(&report, OutputFormat::Json, w)
        }),
        Format::Csv => {
            if let Some(path) = &args.out.output {
                with_sink(Some(path), stdout, |w| {
                    write_optimization(&report, OutputFormat::Csv, w)
                })?;
            }
            writeln!(
                stdout,
                "a_star={} Th_star={} savings={}",
                format_number(report.result.a_star),
                format_number(report.result.th_star),
                format_number(report.savings)
            )
            .map_err(output_error)
        }
    }
}

fn axis(name: &str, lo: f64, hi: f64, steps: usize) -> CliResult<Vec<f64>> {
    let min_flag = format!("{name}-min");
    let steps_flag = format!("{name}-steps");
    require(&steps_flag, steps >= 1, "must be at least 1")?;
    require(&min_flag, lo.is_finite() && hi.is_finite(), "bounds must be finite")?;
    require(
        &min_flag,
        lo <= hi,
        &format!("must not exceed --{name}-max ({lo} > {hi})"),
    )?;
    require(
        &min_flag,
        steps == 1 || lo < hi,
        &format!("--{name}-min must be below --{name}-max when --{name}-steps > 1"),
    )?;
    Ok(linspace(lo, hi, steps))
}

pub fn run_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> CliResult<()> {
    positive("gamma", args.gamma)?;
    require(
        "a-min",
        args.a_min > 0.0 && args.a_min <= 1.0,
        &format!("must lie in (0, 1], got {}", args.a_min),
    )?;
    require(
        "a-max",
        args.a_max > 0.0 && args.a_max <= 1.0,
        &format!("must lie in (0, 1], got {}", args.a_max),
    )?;
    positive("r0-min", args.r0_min)?;
    let a_values = axis("a", args.a_min, args.a_max, args.a_steps)?;
    let r0_values = axis("r0", args.r0_min, args.r0_max, args.r0_steps)?;
    let cohort = args.cohort.cohort()?;
    let settings = solver(args.tolerance, 200)?;

    let grid = sweep(&a_values, &r0_values, args.gamma, &cohort, settings).map_err(numeric)?;
    let doc = SweepDocument {
        gamma: args.gamma,
        cohort,
        grid,
    };
    with_sink(args.out.output.as_deref(), stdout, |w| {
        write_sweep(&doc, args.out.format.into(), w)
    })
}

pub fn run_table(args: &TableArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let entries = match &args.catalog {
        Some(path) => {
            let file = File::open(path).map_err(|e| usage("catalog", format!("{}: {e}", path.display())))?;
            read_disease_catalog(file).map_err(|e| usage("catalog", format!("{}: {e}", path.display())))?
        }
        None => default_catalog(),
    };
    let cohort = args.cohort.cohort()?;
    let staffing = args.staffing.staffing()?;
    let settings = solver(args.tolerance, 200)?;

    let rows = disease_table(&entries, &cohort, &staffing, settings).map_err(numeric)?;
    with_sink(args.out.output.as_deref(), stdout, |w| {
        write_disease_table(&rows, args.out.format.into(), w)
    })
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(a) => run_simulate(a, stdout),
        Command::Optimize(a) => run_optimize(a, stdout),
        Command::Sweep(a) => run_sweep(a, stdout),
        Command::Table(a) => run_table(a, stdout),
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render();
            if code == EXIT_OK {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("sir-attendance").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn field(summary: &str, key: &str) -> f64 {
        summary
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
            .unwrap_or_else(|| panic!("{key} missing in {summary}"))
            .parse()
            .unwrap()
    }

    #[test]
    fn simulate_high_attendance() {
        let (code, out, _) = call(&["simulate", "--a", "0.8"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("a=0.8 "));
        assert!((field(&out, "Th_end") - 196.0).abs() <= 2.0);
        assert!((field(&out, "attack_rate") - 0.98).abs() <= 0.005);
    }

    #[test]
    fn simulate_full_attendance() {
        let (code, out, _) = call(&["simulate", "--a", "1.0"]);
        assert_eq!(code, 0);
        assert_eq!(field(&out, "Th_end"), 0.0);
    }

    #[test]
    fn simulate_optimal_attendance() {
        let (code, out, _) = call(&["simulate", "--a", "0.4"]);
        assert_eq!(code, 0);
        assert!((field(&out, "Th_end") - 480.0).abs() <= 5.0);
    }

    #[test]
    fn simulate_validation() {
        for args in [
            vec!["simulate", "--a", "1.5"],
            vec!["simulate", "--a", "0.5", "--beta", "0"],
            vec!["simulate", "--a", "0.5", "--s0", "0.995"],
            vec!["simulate", "--a", "0.5", "--dt", "-1"],
            vec!["simulate", "--a", "0.5", "--t-end", "0"],
            vec!["simulate"],
            vec!["simulate", "--a", "abc"],
        ] {
            let (code, _, err) = call(&args);
            assert_eq!(code, 2, "{args:?}");
            assert!(!err.is_empty());
        }
        let (_, _, err) = call(&["simulate", "--a", "1.5"]);
        assert!(err.contains("--a"), "{err}");
    }

    #[test]
    fn simulate_short_horizon_is_numeric_failure() {
        let (code, _, err) = call(&["simulate", "--a", "0.8", "--t-end", "10"]);
        assert_eq!(code, 1);
        assert!(err.contains("t-end"));
    }

    #[test]
    fn optimize_defaults() {
        let (code, out, _) = call(&["optimize", "--r0", "5"]);
        assert_eq!(code, 0);
        assert!((field(&out, "a_star") - 0.40).abs() <= 0.01);
        assert!((field(&out, "Th_star") - 480.0).abs() <= 5.0);
        let (_, implicit, _) = call(&["optimize"]);
        assert_eq!(implicit, out);
    }

    #[test]
    fn optimize_omicron() {
        let (code, out, _) = call(&["optimize", "--r0", "9.5"]);
        assert_eq!(code, 0);
        assert!((field(&out, "a_star") - 0.26).abs() <= 0.01);
        assert!((field(&out, "Th_star") - 659.0).abs() <= 7.0);
        assert!((field(&out, "savings") - 78.0).abs() <= 1.0);
    }

    #[test]
    fn optimize_json_and_overrides() {
        let (code, out, _) = call(&[
            "optimize", "--beta", "0.5", "--gamma", "0.1", "--ratio", "3", "--format", "json",
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("\"a_star\""));
        assert!(out.contains("\"savings\""));
        assert!(out.contains("\"r0\": 5.0"));
    }

    #[test]
    fn optimize_validation() {
        assert_eq!(call(&["optimize", "--r0", "0"]).0, 2);
        assert_eq!(call(&["optimize", "--r0", "-3"]).0, 2);
        assert_eq!(call(&["optimize", "--r0", "5", "--beta", "0.5"]).0, 2);
        assert_eq!(call(&["optimize", "--ratio", "0.5"]).0, 2);
        assert_eq!(call(&["optimize", "--open-days-fraction", "1.5"]).0, 2);
        let (_, _, err) = call(&["optimize", "--r0", "0"]);
        assert!(err.contains("--r0"), "{err}");
    }

    #[test]
    fn sweep_single_cell() {
        let (code, out, _) = call(&[
            "sweep",
            "--a-min",
            "0.4",
            "--a-max",
            "0.4",
            "--a-steps",
            "1",
            "--r0-min",
            "5",
            "--r0-max",
            "5",
            "--r0-steps",
            "1",
        ]);
        assert_eq!(code, 0);
        let row = out.lines().nth(1).unwrap();
        let th: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(row.starts_with("0.4,5,"));
        assert!((th - 480.0).abs() <= 2.0);
    }

    #[test]
    fn sweep_validation() {
        assert_eq!(call(&["sweep", "--a-min", "0.9", "--a-max", "0.1"]).0, 2);
        assert_eq!(call(&["sweep", "--a-min", "0"]).0, 2);
        assert_eq!(call(&["sweep", "--a-max", "1.1"]).0, 2);
        assert_eq!(call(&["sweep", "--r0-steps", "0"]).0, 2);
        assert_eq!(call(&["sweep", "--r0-min", "5", "--r0-max", "5"]).0, 2);
        assert_eq!(call(&["sweep", "--r0-min", "-1"]).0, 2);
    }

    #[test]
    fn table_missing_catalog() {
        let (code, _, err) = call(&["table", "--catalog", "/nonexistent/diseases.csv"]);
        assert_eq!(code, 2);
        assert!(err.contains("--catalog"));
    }

    #[test]
    fn help_lists_defaults() {
        let (code, out, _) = call(&["simulate", "--help"]);
        assert_eq!(code, 0);
        for needle in [
            "--beta",
            "[default: 0.5]",
            "--gamma",
            "[default: 0.1]",
            "--n",
            "[default: 100]",
            "--s0",
            "[default: 0.99]",
            "--i0",
            "[default: 0.01]",
            "--t-end",
            "auto",
            "--dt",
            "[default: 0.01]",
        ] {
            assert!(out.contains(needle), "{needle} missing from help:\n{out}");
        }
        let (_, out, _) = call(&["sweep", "--help"]);
        for needle in [
            "[default: 0.01]",
            "[default: 1]",
            "[default: 100]",
            "[default: 18]",
            "[default: 171]",
        ] {
            assert!(out.contains(needle), "{needle} missing from sweep help");
        }
        let (_, out, _) = call(&["optimize", "--help"]);
        for needle in [
            "--ratio",
            "[default: 6]",
            "--open-days-fraction",
            "[default: 0.7142857142857143]",
        ] {
            assert!(out.contains(needle), "{needle} missing from optimize help");
        }
    }
}
