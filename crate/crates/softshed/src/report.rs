//! JSON and CSV serialization of experiment reports.
//!
//! Every float is rounded to 9 significant digits before it is written, so a
//! fixed dataset, seed and grid produce the same bytes across platforms.
//! Wall times are the exception; omit them for byte-identical output.

use std::fmt;
use std::str::FromStr;

use crate::experiment::{CellRecord, ExperimentReport, LevelShares};

pub const CSV_HEADER: &str =
    "method,alpha,shortfall,percentile,L1,L2,L3,L4,L5,revenue,dual_price,solve_time_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format {other:?}, expected json or csv")),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitOptions {
    pub format: ReportFormat,
    pub include_timings: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        Self {
            format: ReportFormat::Json,
            include_timings: true,
        }
    }
}

/// Rounds to 9 significant digits. Non-finite values pass through.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

fn round_vec(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(round_sig).collect()
}

fn rounded_record(r: &CellRecord, include_timings: bool) -> CellRecord {
    CellRecord {
        method: r.method,
        alpha: round_sig(r.alpha),
        shortfall: round_sig(r.shortfall),
        percentile: round_sig(r.percentile),
        level_distribution: r
            .level_distribution
            .map(|l| LevelShares::from_array(l.as_array().map(round_sig))),
        total_revenue: r.total_revenue.map(round_sig),
        dual_price: r.dual_price.map(round_sig),
        solve_time_s: if include_timings {
            r.solve_time_s.map(round_sig)
        } else {
            None
        },
        error: r.error.clone(),
    }
}

/// Copy of `report` with every float rounded for serialization.
pub fn rounded(report: &ExperimentReport, include_timings: bool) -> ExperimentReport {
    let mut out = report.clone();
    let m = &mut out.metadata;
    m.total_demand_kwh = round_sig(m.total_demand_kwh);
    m.grid.alphas = round_vec(&m.grid.alphas);
    m.grid.shortfalls = round_vec(&m.grid.shortfalls);
    m.grid.tariff_percentiles = round_vec(&m.grid.tariff_percentiles);
    m.grid.tariff_prices = round_vec(&m.grid.tariff_prices);
    m.grid.supply_fractions = round_vec(&m.grid.supply_fractions);
    out.records = report
        .records
        .iter()
        .map(|r| rounded_record(r, include_timings))
        .collect();
    out
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        Some(x) => x.to_string().to_lowercase(),
        None => String::new(),
    }
}

pub fn emit_report(report: &ExperimentReport, options: EmitOptions) -> Vec<u8> {
    let report = rounded(report, options.include_timings);
    match options.format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(&report).expect("report serializes");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => {
            let mut out = String::with_capacity(64 * (report.records.len() + 1));
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in &report.records {
                let levels = r.level_distribution.map(|l| l.as_array());
                let fields = [
                    r.method.as_str().to_string(),
                    r.alpha.to_string(),
                    r.shortfall.to_string(),
                    r.percentile.to_string(),
                    cell(levels.map(|l| l[0])),
                    cell(levels.map(|l| l[1])),
                    cell(levels.map(|l| l[2])),
                    cell(levels.map(|l| l[3])),
                    cell(levels.map(|l| l[4])),
                    cell(r.total_revenue),
                    cell(r.dual_price),
                    cell(r.solve_time_s),
                ];
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            out.into_bytes()
        }
    }
}
