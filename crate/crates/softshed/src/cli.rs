//! The `softshed` command line.
//!
//! Exit codes: 0 on success, 1 for bad input or arguments, 2 when the solver
//! fails in `allocate`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use chrono::NaiveDate;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use softshed_core::{
    percentile_threshold, satisfaction_report, solve, total_revenue, Alpha, DemandProfile, Error,
    Method, SatisfactionConfig, SolverConfig, SupplySpec, TariffSchedule,
};

use crate::experiment::{run_grid, runtime_benchmark, scaling_exponent, ExperimentGrid};
use crate::ingest::{
    aggregate_day, categorize_consumers, drop_incomplete_consumers, drop_zero_demand,
    parse_load_csv, CleaningReport, CsvFormat, DaySelector,
};
use crate::profile_io::{read_profile, write_profile};
use crate::report::{emit_report, EmitOptions, ReportFormat};
use crate::synth::{synthesize_demands, DemandDistribution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "softshed",
    version,
    about = "Fair household quotas for soft load shedding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Allocate one supply level with one method.
    Allocate(AllocateArgs),
    /// Sweep alpha, shortfall, tariff percentile and method.
    Sweep(SweepArgs),
    /// Time the alpha-fair solver on synthetic binomial profiles.
    Bench(BenchArgs),
    /// Clean an hourly smart-meter CSV into a one-day demand profile.
    Ingest(IngestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Synthetic {
    Binomial,
    Uniform,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "synthetic"])))]
pub struct ProfileSource {
    /// Demand profile CSV (`household_id,demand_kwh`), as written by `ingest`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Generate a seeded synthetic profile instead of reading one.
    #[arg(long, value_enum)]
    pub synthetic: Option<Synthetic>,
    /// Households in a synthetic profile.
    #[arg(long, default_value_t = 100)]
    pub households: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("supply_level").args(["shortfall", "supply"])))]
pub struct AllocateArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    #[arg(long, default_value = "alpha_fair")]
    pub method: Method,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Bisection iteration cap for the alpha-fair solver.
    #[arg(long, default_value_t = SolverConfig::default().max_bisection_iters)]
    pub max_iterations: usize,
    /// Fraction of total demand that cannot be served [default: 0.2].
    #[arg(long)]
    pub shortfall: Option<f64>,
    /// Fraction of total demand that can be served.
    #[arg(long)]
    pub supply: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 20.0])]
    pub tariff_prices: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 50.0, 90.0])]
    pub tariff_percentiles: Vec<f64>,
    #[arg(long, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("supply_level").args(["shortfall", "supply"])))]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0, 10000.0])]
    pub alpha: Vec<f64>,
    /// Shortfall fractions [default: 0.05,0.1,0.2,0.4].
    #[arg(long, value_delimiter = ',')]
    pub shortfall: Vec<f64>,
    /// Supply fractions, used instead of shortfalls.
    #[arg(long, value_delimiter = ',')]
    pub supply: Vec<f64>,
    /// Methods [default: all].
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 20.0])]
    pub tariff_prices: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 50.0, 90.0])]
    pub tariff_percentiles: Vec<f64>,
    #[arg(long, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Leave wall times out so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1_000usize, 10_000, 100_000, 1_000_000])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    pub shortfall: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Long-format hourly readings.
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write the `household_id,demand_kwh` profile.
    #[arg(long)]
    pub output: PathBuf,
    /// Day to aggregate (YYYY-MM-DD); without it a complete day is drawn
    /// using `--seed`.
    #[arg(long)]
    pub day: Option<NaiveDate>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "consumer_id")]
    pub consumer_column: String,
    #[arg(long, default_value = "timestamp")]
    pub timestamp_column: String,
    #[arg(long, default_value = "kwh")]
    pub kwh_column: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Cleaning report destination [default: stderr].
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write `household_id,category` (low, medium, high).
    #[arg(long)]
    pub categories: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Input(anyhow::Error),
    Solver(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "input error: {e:#}"),
            CliError::Solver(e) => write!(f, "solver failure: {e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Input(e)
    }
}

fn input<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Input(e.into())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("softshed: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Allocate(args) => allocate(args),
        Command::Sweep(args) => sweep(args),
        Command::Bench(args) => bench(args),
        Command::Ingest(args) => ingest(args),
    }
}

fn load_profile(source: &ProfileSource) -> anyhow::Result<DemandProfile> {
    match (&source.input, source.synthetic) {
        (Some(path), _) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_profile(BufReader::new(file))
                .with_context(|| format!("reading {}", path.display()))
        }
        (None, Some(kind)) => {
            let dist = match kind {
                Synthetic::Binomial => DemandDistribution::BINOMIAL,
                Synthetic::Uniform => DemandDistribution::UNIFORM,
            };
            Ok(synthesize_demands(dist, source.households, source.seed)?)
        }
        (None, None) => Err(anyhow!("either --input or --synthetic is required")),
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn supply_spec(shortfall: Option<f64>, supply: Option<f64>) -> SupplySpec {
    match (shortfall, supply) {
        (_, Some(s)) => SupplySpec::Shortfall(1.0 - s),
        (Some(f), None) => SupplySpec::Shortfall(f),
        (None, None) => SupplySpec::Shortfall(0.2),
    }
}

fn is_solver_error(e: &Error) -> bool {
    matches!(e, Error::NonConvergence { .. } | Error::NotApplicable(_))
}

fn allocate(args: AllocateArgs) -> Result<(), CliError> {
    let profile = load_profile(&args.source)?;
    let alpha = Alpha::new(args.alpha).map_err(input)?;
    if let Some(s) = args.supply {
        if !(s > 0.0 && s <= 1.0) {
            return Err(input(anyhow!("supply fraction {s} outside (0, 1]")));
        }
    }
    let supply = supply_spec(args.shortfall, args.supply);
    let supply_kwh = supply.resolve(&profile).map_err(input)?;
    let tariffs = args
        .tariff_percentiles
        .iter()
        .map(|&q| {
            let b = percentile_threshold(&profile, q)?;
            Ok((q, TariffSchedule::new(vec![b], args.tariff_prices.clone())?))
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(input)?;

    let cfg = SolverConfig {
        max_bisection_iters: args.max_iterations,
        ..SolverConfig::default()
    };
    let result = solve(args.method, &profile, supply, alpha, &cfg).map_err(|e| {
        if is_solver_error(&e) {
            CliError::Solver(e.into())
        } else {
            input(e)
        }
    })?;
    let report = satisfaction_report(&profile, &result, &SatisfactionConfig::default())
        .map_err(|e| CliError::Solver(e.into()))?;

    let bytes = match args.format {
        ReportFormat::Json => {
            let households: Vec<_> = profile
                .household_ids()
                .iter()
                .zip(profile.demands())
                .zip(&result.allocations)
                .zip(&report.levels)
                .map(|(((id, d), x), level)| {
                    json!({"household_id": id, "demand_kwh": d, "allocation_kwh": x, "level": level.as_str()})
                })
                .collect();
            let revenue: Vec<_> = tariffs
                .iter()
                .map(|(q, t)| json!({"percentile": q, "total_revenue": total_revenue(&result.allocations, t)}))
                .collect();
            let d = report.distribution.as_array();
            let doc = json!({
                "method": result.method.as_str(),
                "alpha": alpha.value(),
                "supply_kwh": supply_kwh,
                "total_demand_kwh": profile.total(),
                "dual_price": result.dual_price,
                "log_dual_price": result.log_dual_price,
                "iterations": result.iterations,
                "clearance_residual": result.clearance_residual,
                "level_distribution": {"L1": d[0], "L2": d[1], "L3": d[2], "L4": d[3], "L5": d[4]},
                "revenue": revenue,
                "households": households,
            });
            let mut v = serde_json::to_vec_pretty(&doc).map_err(input)?;
            v.push(b'\n');
            v
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["household_id", "demand_kwh", "allocation_kwh", "level"])
                .map_err(input)?;
            for (((id, d), x), level) in profile
                .household_ids()
                .iter()
                .zip(profile.demands())
                .zip(&result.allocations)
                .zip(&report.levels)
            {
                w.write_record([id.as_str(), &d.to_string(), &x.to_string(), level.as_str()])
                    .map_err(input)?;
            }
            w.into_inner().map_err(|e| input(anyhow!("{e}")))?
        }
    };
    write_output(args.output.as_deref(), &bytes)?;
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let profile = load_profile(&args.source)?;
    if !args.shortfall.is_empty() && !args.supply.is_empty() {
        return Err(input(anyhow!(
            "use either --shortfall or --supply, not both"
        )));
    }
    let mut grid = ExperimentGrid {
        alphas: args.alpha,
        tariff_percentiles: args.tariff_percentiles,
        tariff_prices: args.tariff_prices,
        seed: args.source.seed,
        ..ExperimentGrid::default()
    };
    if !args.method.is_empty() {
        grid.methods = args.method;
    }
    if !args.supply.is_empty() {
        if let Some(s) = args.supply.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
            return Err(input(anyhow!("supply fraction {s} outside (0, 1]")));
        }
        grid = grid.with_supply_fractions(&args.supply);
    } else if !args.shortfall.is_empty() {
        grid.shortfalls = args.shortfall;
    }
    let report = run_grid(&profile, &grid).map_err(input)?;
    let failed = report.failures().count();
    if failed > 0 {
        eprintln!("softshed: {failed} cells failed, see the error field");
    }
    let bytes = emit_report(
        &report,
        EmitOptions {
            format: args.format,
            include_timings: !args.no_timings,
        },
    );
    write_output(args.output.as_deref(), &bytes)?;
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let rows =
        runtime_benchmark(&args.sizes, args.alpha, args.shortfall, args.seed).map_err(input)?;
    let exponent = scaling_exponent(&rows);
    let bytes = match args.format {
        ReportFormat::Json => {
            let doc = json!({
                "alpha": args.alpha,
                "shortfall": args.shortfall,
                "seed": args.seed,
                "rows": rows,
                "scaling_exponent": exponent,
            });
            let mut v = serde_json::to_vec_pretty(&doc).map_err(input)?;
            v.push(b'\n');
            v
        }
        ReportFormat::Csv => {
            let mut s = String::from("households,seconds,iterations\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{}\n",
                    r.households, r.seconds, r.iterations
                ));
            }
            s.into_bytes()
        }
    };
    write_output(args.output.as_deref(), &bytes)?;
    if let Some(e) = exponent {
        eprintln!("scaling exponent: {e:.3}");
    }
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<(), CliError> {
    if !args.delimiter.is_ascii() {
        return Err(input(anyhow!("delimiter must be a single ASCII character")));
    }
    let format = CsvFormat {
        consumer_column: args.consumer_column,
        timestamp_column: args.timestamp_column,
        kwh_column: args.kwh_column,
        delimiter: args.delimiter as u8,
    };
    let file =
        File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let (table, parse) = parse_load_csv(BufReader::new(file), &format).map_err(input)?;
    let (table, dropped_incomplete) = drop_incomplete_consumers(&table).map_err(input)?;
    let selector = match args.day {
        Some(day) => DaySelector::Date(day),
        None => DaySelector::Seeded(args.seed),
    };
    let aggregate = aggregate_day(&table, selector).map_err(input)?;
    let (profile, dropped_zero_demand) = drop_zero_demand(&aggregate.profile).map_err(input)?;

    let file = File::create(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;
    write_profile(&profile, BufWriter::new(file)).map_err(input)?;

    if let Some(path) = &args.categories {
        let cats = categorize_consumers(&profile).map_err(input)?;
        let mut w = csv::Writer::from_path(path).map_err(input)?;
        w.write_record(["household_id", "category"])
            .map_err(input)?;
        for (id, c) in profile.household_ids().iter().zip(&cats.categories) {
            w.write_record([id.as_str(), c.as_str()]).map_err(input)?;
        }
        w.flush().map_err(input)?;
    }

    let report = CleaningReport {
        parse,
        dropped_incomplete,
        dropped_zero_demand,
        day: Some(aggregate.day),
        seed: aggregate.seed,
        households: profile.len(),
    };
    match &args.report {
        Some(path) => std::fs::write(path, report.to_string())
            .with_context(|| format!("writing {}", path.display()))?,
        None => eprint!("{report}"),
    }
    Ok(())
}
