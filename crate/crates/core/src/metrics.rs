//! Allocation scoring: satisfaction levels, block-rate revenue and the
//! alpha-fairness inequality.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::model::{AllocationResult, Alpha, DemandProfile};
use crate::sum::compensated_sum;

/// Household satisfaction, ordered from blackout (`L1`) to fully served (`L5`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SatisfactionLevel {
    L1,
    L2,
    L3,
    L4,
    L5,
}

impl SatisfactionLevel {
    pub const ALL: [SatisfactionLevel; 5] = [
        SatisfactionLevel::L1,
        SatisfactionLevel::L2,
        SatisfactionLevel::L3,
        SatisfactionLevel::L4,
        SatisfactionLevel::L5,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        ["L1", "L2", "L3", "L4", "L5"][self.index()]
    }
}

impl fmt::Display for SatisfactionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatisfactionConfig {
    pub u_max: f64,
    pub th_upper: f64,
    pub th_lower: f64,
}

impl Default for SatisfactionConfig {
    fn default() -> Self {
        Self {
            u_max: 1.0,
            th_upper: 0.75,
            th_lower: 0.25,
        }
    }
}

impl SatisfactionConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.u_max > 0.0
            && self.th_lower > 0.0
            && self.th_lower < self.th_upper
            && self.th_upper < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "satisfaction thresholds need 0 < th_lower < th_upper < 1 and u_max > 0, got {self:?}"
            )))
        }
    }

    /// Cut between `L3` and `L4`.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.th_lower + self.th_upper)
    }
}

/// Classifies the served ratio `x / d`.
///
/// `L1` is reserved for zero allocation; `L2` covers `(0, th_lower]`, `L3`
/// `(th_lower, mid]`, `L4` `(mid, th_upper]` and `L5` anything above
/// `th_upper`, where `mid` is halfway between the thresholds.
pub fn satisfaction_level(x: f64, d: f64, cfg: &SatisfactionConfig) -> Result<SatisfactionLevel> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::UndefinedRatio(d));
    }
    if !(x >= 0.0) || x > d {
        return Err(Error::Infeasible(format!(
            "allocation {x} outside [0, {d}]"
        )));
    }
    if x == 0.0 {
        return Ok(SatisfactionLevel::L1);
    }
    let r = x / d;
    Ok(if r <= cfg.th_lower {
        SatisfactionLevel::L2
    } else if r <= cfg.midpoint() {
        SatisfactionLevel::L3
    } else if r <= cfg.th_upper {
        SatisfactionLevel::L4
    } else {
        SatisfactionLevel::L5
    })
}

pub fn satisfaction_utility(level: SatisfactionLevel, cfg: &SatisfactionConfig) -> f64 {
    match level {
        SatisfactionLevel::L5 => cfg.u_max,
        SatisfactionLevel::L4 => cfg.th_upper,
        SatisfactionLevel::L3 => cfg.midpoint(),
        SatisfactionLevel::L2 => cfg.th_lower,
        SatisfactionLevel::L1 => 0.0,
    }
}

/// Percentage of households per level.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LevelDistribution {
    percent: [f64; 5],
}

impl LevelDistribution {
    pub fn get(&self, level: SatisfactionLevel) -> f64 {
        self.percent[level.index()]
    }

    /// Percentages in `L1..=L5` order.
    pub fn as_array(&self) -> [f64; 5] {
        self.percent
    }

    /// Share of households at `level` or better.
    pub fn at_or_above(&self, level: SatisfactionLevel) -> f64 {
        self.percent[level.index()..].iter().sum()
    }

    /// True when, for every level, this distribution puts at least as many
    /// households at or above it as `other` does (up to `tol` points).
    pub fn weakly_dominates(&self, other: &LevelDistribution, tol: f64) -> bool {
        SatisfactionLevel::ALL
            .iter()
            .all(|&l| self.at_or_above(l) + tol >= other.at_or_above(l))
    }
}

pub fn level_distribution(levels: &[SatisfactionLevel]) -> Result<LevelDistribution> {
    if levels.is_empty() {
        return Err(Error::InvalidDemand("no households to classify".into()));
    }
    let mut counts = [0usize; 5];
    for l in levels {
        counts[l.index()] += 1;
    }
    let n = levels.len() as f64;
    Ok(LevelDistribution {
        percent: counts.map(|c| 100.0 * c as f64 / n),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionReport {
    pub levels: Vec<SatisfactionLevel>,
    pub distribution: LevelDistribution,
    pub utilities: Vec<f64>,
}

pub fn satisfaction_report(
    demand: &DemandProfile,
    result: &AllocationResult,
    cfg: &SatisfactionConfig,
) -> Result<SatisfactionReport> {
    cfg.validate()?;
    let d = demand.demands();
    if result.allocations.len() != d.len() {
        return Err(Error::LengthMismatch {
            expected: d.len(),
            got: result.allocations.len(),
        });
    }
    let levels = result
        .allocations
        .iter()
        .zip(d)
        .map(|(&x, &di)| satisfaction_level(x, di, cfg))
        .collect::<Result<Vec<_>>>()?;
    let utilities = levels
        .iter()
        .map(|&l| satisfaction_utility(l, cfg))
        .collect();
    let distribution = level_distribution(&levels)?;
    Ok(SatisfactionReport {
        levels,
        distribution,
        utilities,
    })
}

/// Block-rate tariff: block `k` spans `(b_(k-1), b_k]` and is charged at
/// `prices[k]` per kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct TariffSchedule {
    boundaries: Vec<f64>,
    prices: Vec<f64>,
}

impl TariffSchedule {
    pub fn new(boundaries: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        if prices.is_empty() || prices.len() != boundaries.len() + 1 {
            return Err(Error::InvalidConfig(format!(
                "{} prices for {} block boundaries",
                prices.len(),
                boundaries.len()
            )));
        }
        if prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "prices must be positive: {prices:?}"
            )));
        }
        if boundaries.iter().any(|b| !(b.is_finite() && *b >= 0.0))
            || boundaries.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidConfig(format!(
                "block boundaries must be non-negative and strictly increasing: {boundaries:?}"
            )));
        }
        Ok(Self { boundaries, prices })
    }

    pub fn flat(price: f64) -> Result<Self> {
        Self::new(Vec::new(), alloc::vec![price])
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn blocks(&self) -> usize {
        self.prices.len()
    }
}

/// Charge for consuming `x` kWh. Negative consumption bills nothing.
pub fn household_revenue(x: f64, tariff: &TariffSchedule) -> f64 {
    let mut charge = 0.0;
    let mut lower = 0.0;
    for (k, &price) in tariff.prices.iter().enumerate() {
        let upper = tariff.boundaries.get(k).copied().unwrap_or(f64::INFINITY);
        if x <= lower {
            break;
        }
        charge += price * (x.min(upper) - lower);
        lower = upper;
    }
    charge
}

pub fn total_revenue(allocations: &[f64], tariff: &TariffSchedule) -> f64 {
    compensated_sum(allocations.iter().map(|&x| household_revenue(x, tariff)))
}

/// Nearest-rank `q`-th percentile of the demand vector.
pub fn percentile_threshold(demand: &DemandProfile, q: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::InvalidConfig(format!(
            "percentile {q} outside [0, 100]"
        )));
    }
    let mut sorted = demand.demands().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = libm::ceil(q * n as f64 / 100.0) as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// Default threshold for [`alpha_fairness_check`].
pub const FAIRNESS_TOL: f64 = 1e-6;

const FEASIBILITY_TOL: f64 = 1e-9;

/// Evaluates `sum_i (x_i - x*_i) / x*_i^alpha` for a feasible `candidate`
/// against `reference`. The reference is alpha-fair with respect to the
/// candidate when the value is at most [`FAIRNESS_TOL`].
///
/// Both vectors must lie in the demand box and carry the same total.
pub fn alpha_fairness_check(
    demand: &DemandProfile,
    candidate: &[f64],
    reference: &[f64],
    alpha: Alpha,
) -> Result<f64> {
    let d = demand.demands();
    for (name, v) in [("candidate", candidate), ("reference", reference)] {
        if v.len() != d.len() {
            return Err(Error::LengthMismatch {
                expected: d.len(),
                got: v.len(),
            });
        }
        for (i, (&x, &di)) in v.iter().zip(d).enumerate() {
            if !(x >= 0.0) || x > di * (1.0 + FEASIBILITY_TOL) {
                return Err(Error::Infeasible(format!(
                    "{name}: x_{0} = {x} outside [0, d_{0} = {di}]",
                    i + 1
                )));
            }
        }
    }
    let cand_total = compensated_sum(candidate.iter().copied());
    let ref_total = compensated_sum(reference.iter().copied());
    if (cand_total - ref_total).abs() > FEASIBILITY_TOL * ref_total.max(1.0) {
        return Err(Error::Infeasible(format!(
            "candidate total {cand_total} differs from reference total {ref_total}"
        )));
    }

    let a = alpha.value();
    let mut terms = Vec::with_capacity(d.len());
    for (i, ((&x, &xs), &di)) in candidate.iter().zip(reference).zip(d).enumerate() {
        if di == 0.0 {
            continue;
        }
        if xs == 0.0 {
            return Err(Error::HouseholdDomain {
                index: i,
                x: xs,
                alpha: a,
            });
        }
        terms.push((x - xs) * libm::pow(xs, -a));
    }
    Ok(compensated_sum(terms))
}
