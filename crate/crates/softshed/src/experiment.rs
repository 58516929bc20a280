//! Parameter sweeps over alpha, shortfall, tariff percentile and method, and
//! the runtime benchmark.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use softshed_core::{
    percentile_threshold, satisfaction_report, solve, total_revenue, Alpha, DemandProfile, Error,
    Method, Result, SatisfactionConfig, SolverConfig, SupplySpec, TariffSchedule,
};

use crate::profile_io::write_profile;
use crate::synth::{synthesize_demands, DemandDistribution};

pub const SCHEMA_VERSION: u32 = 1;

fn method_name<S: serde::Serializer>(m: &Method, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(m.as_str())
}

fn method_names<S: serde::Serializer>(ms: &[Method], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ms.iter().map(|m| m.as_str()))
}

/// How the user expressed the supply levels of a sweep. Records always
/// carry the shortfall; the mode and original values are kept in metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SupplyMode {
    #[default]
    Shortfall,
    SupplyFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentGrid {
    pub alphas: Vec<f64>,
    pub shortfalls: Vec<f64>,
    pub tariff_percentiles: Vec<f64>,
    pub tariff_prices: Vec<f64>,
    #[serde(serialize_with = "method_names")]
    pub methods: Vec<Method>,
    pub seed: u64,
    pub supply_mode: SupplyMode,
    /// Original supply fractions when `supply_mode` is `SupplyFraction`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub supply_fractions: Vec<f64>,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            alphas: vec![0.0, 0.5, 1.0, 10_000.0],
            shortfalls: vec![0.05, 0.10, 0.20, 0.40],
            tariff_percentiles: vec![10.0, 50.0, 90.0],
            tariff_prices: vec![10.0, 20.0],
            methods: Method::ALL.to_vec(),
            seed: 0,
            supply_mode: SupplyMode::Shortfall,
            supply_fractions: Vec::new(),
        }
    }
}

impl ExperimentGrid {
    /// Builds the grid from supply fractions (share of demand served).
    pub fn with_supply_fractions(mut self, fractions: &[f64]) -> Self {
        self.shortfalls = fractions.iter().map(|f| 1.0 - f).collect();
        self.supply_mode = SupplyMode::SupplyFraction;
        self.supply_fractions = fractions.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("alphas", self.alphas.is_empty()),
            ("shortfalls", self.shortfalls.is_empty()),
            ("tariff_percentiles", self.tariff_percentiles.is_empty()),
            ("methods", self.methods.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidConfig(format!("grid has no {name}")));
        }
        for &a in &self.alphas {
            Alpha::new(a)?;
        }
        if let Some(f) = self.shortfalls.iter().find(|f| !(0.0..1.0).contains(*f)) {
            return Err(Error::InvalidConfig(format!(
                "shortfall {f} outside [0, 1)"
            )));
        }
        if let Some(q) = self
            .tariff_percentiles
            .iter()
            .find(|q| !(0.0..=100.0).contains(*q))
        {
            return Err(Error::InvalidConfig(format!(
                "percentile {q} outside [0, 100]"
            )));
        }
        if self.tariff_prices.len() != 2 {
            return Err(Error::InvalidConfig(format!(
                "two-block tariff needs 2 prices, got {}",
                self.tariff_prices.len()
            )));
        }
        TariffSchedule::new(vec![1.0], self.tariff_prices.clone())?;
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.alphas.len()
            * self.shortfalls.len()
            * self.tariff_percentiles.len()
            * self.methods.len()
    }
}

/// Percent of households at L1..L5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct LevelShares {
    pub L1: f64,
    pub L2: f64,
    pub L3: f64,
    pub L4: f64,
    pub L5: f64,
}

impl LevelShares {
    pub fn from_array(p: [f64; 5]) -> Self {
        Self {
            L1: p[0],
            L2: p[1],
            L3: p[2],
            L4: p[3],
            L5: p[4],
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.L1, self.L2, self.L3, self.L4, self.L5]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    #[serde(serialize_with = "method_name")]
    pub method: Method,
    pub alpha: f64,
    pub shortfall: f64,
    pub percentile: f64,
    pub level_distribution: Option<LevelShares>,
    pub total_revenue: Option<f64>,
    pub dual_price: Option<f64>,
    pub solve_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub schema_version: u32,
    pub generator: String,
    /// SHA-256 of the profile in `household_id,demand_kwh` form.
    pub dataset_digest: String,
    pub households: usize,
    pub total_demand_kwh: f64,
    pub seed: u64,
    pub grid: ExperimentGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub metadata: ReportMetadata,
    pub records: Vec<CellRecord>,
}

impl ExperimentReport {
    pub fn failures(&self) -> impl Iterator<Item = &CellRecord> {
        self.records.iter().filter(|r| r.error.is_some())
    }
}

pub fn dataset_digest(profile: &DemandProfile) -> String {
    let mut buf = Vec::new();
    write_profile(profile, &mut buf).expect("writing to memory");
    hex::encode(Sha256::digest(&buf))
}

fn method_rank(m: Method) -> usize {
    Method::ALL
        .iter()
        .position(|&x| x == m)
        .unwrap_or(usize::MAX)
}

/// Runs every grid cell. Allocations are shared across percentiles; a
/// failing solve is recorded in each of its cells and the sweep continues.
pub fn run_grid(profile: &DemandProfile, grid: &ExperimentGrid) -> Result<ExperimentReport> {
    grid.validate()?;
    let cfg = SolverConfig::default();
    let sat = SatisfactionConfig::default();
    let tariffs = grid
        .tariff_percentiles
        .iter()
        .map(|&q| {
            let b = percentile_threshold(profile, q)?;
            TariffSchedule::new(vec![b], grid.tariff_prices.clone())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut solves = Vec::new();
    for &a in &grid.alphas {
        for &f in &grid.shortfalls {
            for &m in &grid.methods {
                solves.push((a, f, m));
            }
        }
    }

    let mut records: Vec<CellRecord> = solves
        .par_iter()
        .flat_map_iter(|&(a, f, method)| {
            let start = Instant::now();
            let outcome = solve(
                method,
                profile,
                SupplySpec::Shortfall(f),
                Alpha::new(a).expect("validated"),
                &cfg,
            );
            let elapsed = start.elapsed().as_secs_f64();
            let scored = outcome.and_then(|r| {
                let report = satisfaction_report(profile, &r, &sat)?;
                Ok((r, report))
            });
            let cells: Vec<CellRecord> = grid
                .tariff_percentiles
                .iter()
                .zip(&tariffs)
                .map(|(&q, tariff)| {
                    let base = CellRecord {
                        method,
                        alpha: a,
                        shortfall: f,
                        percentile: q,
                        level_distribution: None,
                        total_revenue: None,
                        dual_price: None,
                        solve_time_s: Some(elapsed),
                        error: None,
                    };
                    match &scored {
                        Ok((r, report)) => CellRecord {
                            level_distribution: Some(LevelShares::from_array(
                                report.distribution.as_array(),
                            )),
                            total_revenue: Some(total_revenue(&r.allocations, tariff)),
                            dual_price: r.dual_price,
                            ..base
                        },
                        Err(e) => CellRecord {
                            error: Some(e.to_string()),
                            ..base
                        },
                    }
                })
                .collect();
            cells
        })
        .collect();

    records.sort_by(|x, y| {
        x.alpha
            .total_cmp(&y.alpha)
            .then(x.shortfall.total_cmp(&y.shortfall))
            .then(x.percentile.total_cmp(&y.percentile))
            .then(method_rank(x.method).cmp(&method_rank(y.method)))
    });

    Ok(ExperimentReport {
        metadata: ReportMetadata {
            schema_version: SCHEMA_VERSION,
            generator: format!("softshed {}", env!("CARGO_PKG_VERSION")),
            dataset_digest: dataset_digest(profile),
            households: profile.len(),
            total_demand_kwh: profile.total(),
            seed: grid.seed,
            grid: grid.clone(),
        },
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub households: usize,
    /// Median wall time of the solve.
    pub seconds: f64,
    pub iterations: usize,
}

pub const BENCH_REPEATS: usize = 5;

/// Times `alpha_fair` on seeded binomial profiles, median of five runs per
/// size. Sizes must be ascending.
pub fn runtime_benchmark(
    sizes: &[usize],
    alpha: f64,
    shortfall: f64,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidConfig(
            "benchmark sizes must be ascending".into(),
        ));
    }
    let alpha = Alpha::new(alpha)?;
    let cfg = SolverConfig::default();
    let supply = SupplySpec::Shortfall(shortfall);
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let profile = synthesize_demands(DemandDistribution::BINOMIAL, n, seed)?;
        let mut times = Vec::with_capacity(BENCH_REPEATS);
        let mut iterations = 0;
        for _ in 0..BENCH_REPEATS {
            let start = Instant::now();
            let r = solve(Method::AlphaFair, &profile, supply, alpha, &cfg)?;
            times.push(start.elapsed().as_secs_f64());
            iterations = r.iterations;
        }
        times.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            households: n,
            seconds: times[BENCH_REPEATS / 2],
            iterations,
        });
    }
    Ok(rows)
}

/// Least-squares slope of log(seconds) against log(households).
pub fn scaling_exponent(rows: &[BenchRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.households > 0 && r.seconds > 0.0)
        .map(|r| ((r.households as f64).ln(), r.seconds.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
