//! Quota allocators.
//!
//! [`alpha_fair`] maximizes `sum_i U_alpha(x_i)` subject to `0 <= x_i <= d_i`
//! and `sum_i x_i = S`. Stationarity gives `x_i^(-alpha) = lambda` for every
//! household strictly inside its box, so the optimum is the clipped response
//! `x_i(lambda) = min(d_i, lambda^(-1/alpha))` at the unique price where the
//! responses clear the supply. The price is found by bisection on
//! `t = ln(lambda)`, where the response is `exp(-t / alpha)`; working in the
//! log domain keeps very large alpha usable.
//!
//! The baselines ([`equitable`], [`percentage_equitable`], [`max_min_fair`])
//! and the throughput policy for `alpha == 0` ([`alpha_zero_allocate`]) are
//! closed-form or combinatorial.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::model::{AllocationResult, Alpha, DemandProfile, Method, SupplySpec};
use crate::sum::compensated_sum;

/// Tie-break used when `alpha == 0` makes every clearing vector optimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaZeroPolicy {
    /// Fill households to their demand in decreasing-demand order.
    #[default]
    GreedyLargestFirst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub clearance_rel_tol: f64,
    pub clearance_abs_tol: f64,
    pub max_bisection_iters: usize,
    pub alpha_zero_policy: AlphaZeroPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            clearance_rel_tol: 1e-10,
            clearance_abs_tol: 1e-12,
            max_bisection_iters: 200,
            alpha_zero_policy: AlphaZeroPolicy::GreedyLargestFirst,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clearance_rel_tol > 0.0) || !(self.clearance_abs_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerances must be positive (rel = {}, abs = {})",
                self.clearance_rel_tol, self.clearance_abs_tol
            )));
        }
        if self.max_bisection_iters == 0 {
            return Err(Error::InvalidConfig(
                "max_bisection_iters must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Alpha at or above which the bisection result is cross-checked against
/// max-min progressive filling.
const LARGE_ALPHA: f64 = 1000.0;
const SNAP_TOL: f64 = 1e-6;

/// Runs the allocator for `method`. `alpha` is ignored by the baselines.
pub fn solve(
    method: Method,
    demand: &DemandProfile,
    supply: SupplySpec,
    alpha: Alpha,
    cfg: &SolverConfig,
) -> Result<AllocationResult> {
    match method {
        Method::AlphaFair => alpha_fair(demand, supply, alpha, cfg),
        Method::MaxMin => max_min_fair(demand, supply),
        Method::Equitable => equitable(demand, supply),
        Method::PercentageEquitable => percentage_equitable(demand, supply),
    }
}

/// Equal split of the supply, clipped at each demand with the surplus
/// re-split among the households that are still below their demand.
pub fn equitable(demand: &DemandProfile, supply: SupplySpec) -> Result<AllocationResult> {
    let s = supply.resolve(demand)?;
    let d = demand.demands();
    let mut x = vec![0.0; d.len()];
    let mut open: Vec<usize> = (0..d.len()).filter(|&i| d[i] > 0.0).collect();
    let mut remaining = s;
    let mut rounds = 0;
    while !open.is_empty() {
        rounds += 1;
        let share = remaining.max(0.0) / open.len() as f64;
        let before = open.len();
        open.retain(|&i| {
            if d[i] <= share {
                x[i] = d[i];
                remaining -= d[i];
                false
            } else {
                true
            }
        });
        if open.len() == before {
            for &i in &open {
                x[i] = share;
            }
            break;
        }
    }
    Ok(AllocationResult::plain(x, s, Method::Equitable, rounds))
}

/// Every household receives the same fraction `S / sum(d)` of its demand.
pub fn percentage_equitable(
    demand: &DemandProfile,
    supply: SupplySpec,
) -> Result<AllocationResult> {
    let s = supply.resolve(demand)?;
    let ratio = (s / demand.total()).min(1.0);
    let x = demand.demands().iter().map(|&d| ratio * d).collect();
    Ok(AllocationResult::plain(
        x,
        s,
        Method::PercentageEquitable,
        1,
    ))
}

/// Max-min fair allocation by progressive filling.
///
/// Households are visited in increasing demand order; the water level is the
/// supply left after saturating the smaller households, split evenly among
/// the rest. The first household whose demand reaches that level fixes it.
pub fn max_min_fair(demand: &DemandProfile, supply: SupplySpec) -> Result<AllocationResult> {
    let s = supply.resolve(demand)?;
    let d = demand.demands();
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));

    let mut x = vec![0.0; n];
    let mut saturated_total = 0.0;
    let mut steps = 0;
    for (rank, &i) in order.iter().enumerate() {
        steps = rank + 1;
        let level = ((s - saturated_total) / (n - rank) as f64).max(0.0);
        if level <= d[i] {
            for &j in &order[rank..] {
                x[j] = level.min(d[j]);
            }
            break;
        }
        x[i] = d[i];
        saturated_total += d[i];
    }
    Ok(AllocationResult::plain(x, s, Method::MaxMin, steps))
}

/// Throughput-maximizing allocation for `alpha == 0`: largest demands are
/// filled first (stable on input order), the last one served gets the
/// remainder.
pub fn alpha_zero_allocate(demand: &DemandProfile, supply: SupplySpec) -> Result<AllocationResult> {
    let s = supply.resolve(demand)?;
    let d = demand.demands();
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));

    let mut x = vec![0.0; d.len()];
    let mut remaining = s;
    let mut filled = 0;
    for &i in &order {
        if remaining <= 0.0 {
            break;
        }
        filled += 1;
        x[i] = d[i].min(remaining);
        remaining -= x[i];
    }
    let mut result = AllocationResult::plain(x, s, Method::AlphaFair, filled);
    // Linear utility: every marginal is 1.
    result.dual_price = Some(1.0);
    result.log_dual_price = Some(0.0);
    Ok(result)
}

/// Alpha-fair welfare optimum by dual bisection.
///
/// `alpha == 0` dispatches to the configured throughput policy. Households
/// with zero demand receive zero and take no part in the price search.
pub fn alpha_fair(
    demand: &DemandProfile,
    supply: SupplySpec,
    alpha: Alpha,
    cfg: &SolverConfig,
) -> Result<AllocationResult> {
    cfg.validate()?;
    if alpha.value() == 0.0 {
        return match cfg.alpha_zero_policy {
            AlphaZeroPolicy::GreedyLargestFirst => alpha_zero_allocate(demand, supply),
        };
    }
    let s = supply.resolve(demand)?;
    let a = alpha.value();
    let d = demand.demands();
    let participants = demand.participants() as f64;
    let max_d = demand.max_demand();
    let tol = cfg.clearance_abs_tol + cfg.clearance_rel_tol * s;

    let response = |t: f64| libm::exp(-t / a);
    let cleared = |level: f64| compensated_sum(d.iter().map(|&di| di.min(level)));

    // g(t_lo) = sum(d) >= S and g(t_hi) <= S.
    let mut t_lo = -a * libm::log(max_d);
    let mut t_hi = -a * libm::log(s / participants);

    let mut iterations = 0;
    let mut t = t_lo;
    let mut level = max_d;
    let mut g = cleared(level);
    if (g - s).abs() > tol {
        t = t_hi;
        level = s / participants;
        g = cleared(level);
    }
    while (g - s).abs() > tol {
        if iterations >= cfg.max_bisection_iters {
            return Err(Error::NonConvergence {
                last_lambda: libm::exp(t),
                residual: (g - s).abs(),
                iterations,
            });
        }
        iterations += 1;
        t = 0.5 * (t_lo + t_hi);
        level = response(t);
        g = cleared(level);
        if g > s {
            t_lo = t;
        } else {
            t_hi = t;
        }
    }

    let mut x: Vec<f64> = d.iter().map(|&di| di.min(level)).collect();
    settle(&mut x, d, s);

    if a >= LARGE_ALPHA {
        let filled = max_min_fair(demand, supply)?;
        let gap = x
            .iter()
            .zip(&filled.allocations)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        if gap <= SNAP_TOL {
            x = filled.allocations;
        }
    }

    // All interior households share one level; with none interior any price
    // not above the smallest saturated marginal works, take the largest such.
    let reference_level = x
        .iter()
        .zip(d)
        .filter(|(xi, di)| xi < di)
        .map(|(xi, _)| *xi)
        .fold(f64::NAN, f64::max);
    let reference_level = if reference_level.is_nan() {
        max_d
    } else {
        reference_level
    };
    let log_lambda = -a * libm::log(reference_level);

    let mut result = AllocationResult::plain(x, s, Method::AlphaFair, iterations);
    result.dual_price = Some(libm::exp(log_lambda));
    result.log_dual_price = Some(log_lambda);
    Ok(result)
}

/// Moves the bisection residual onto the households at the common level so
/// the vector clears exactly while staying inside `[0, d]`.
fn settle(x: &mut [f64], d: &[f64], s: f64) {
    let eps = 4.0 * f64::EPSILON * s;
    for _ in 0..16 {
        let r = s - compensated_sum(x.iter().copied());
        if r.abs() <= eps {
            return;
        }
        if r > 0.0 {
            let open = x.iter().zip(d).filter(|(xi, di)| xi < di).count();
            if open == 0 {
                return;
            }
            let share = r / open as f64;
            for (xi, &di) in x.iter_mut().zip(d) {
                if *xi < di {
                    *xi = (*xi + share).min(di);
                }
            }
        } else {
            let top = x.iter().copied().fold(0.0, f64::max);
            let k = x.iter().filter(|&&xi| xi == top).count();
            let lowered = (top + r / k as f64).max(0.0);
            for xi in x.iter_mut() {
                if *xi == top {
                    *xi = lowered;
                }
            }
        }
    }
}

/// One failed optimality condition. Household indices are zero-based; the
/// `Display` form is one-based.
#[derive(Debug, Clone, PartialEq)]
pub enum KktViolation {
    Negative {
        index: usize,
        x: f64,
    },
    ExceedsDemand {
        index: usize,
        x: f64,
        d: f64,
    },
    /// Interior household whose marginal utility differs from the price.
    Stationarity {
        index: usize,
        relative_gap: f64,
    },
    /// Saturated household whose marginal utility is below the price.
    Saturated {
        index: usize,
        relative_gap: f64,
    },
    /// Household at zero whose marginal utility exceeds the price.
    AtZero {
        index: usize,
    },
    Clearance {
        residual: f64,
    },
}

impl fmt::Display for KktViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KktViolation::Negative { index, x } => write!(f, "x_{} < 0 ({x})", index + 1),
            KktViolation::ExceedsDemand { index, x, d } => {
                write!(f, "x_{0} > d_{0} ({x} > {d})", index + 1)
            }
            KktViolation::Stationarity {
                index,
                relative_gap,
            } => write!(
                f,
                "household {}: marginal utility off the price by {relative_gap:e}",
                index + 1
            ),
            KktViolation::Saturated {
                index,
                relative_gap,
            } => write!(
                f,
                "household {}: saturated with marginal utility below the price by {relative_gap:e}",
                index + 1
            ),
            KktViolation::AtZero { index } => {
                write!(
                    f,
                    "household {}: at zero with marginal above the price",
                    index + 1
                )
            }
            KktViolation::Clearance { residual } => write!(f, "clearance residual {residual:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct KktReport {
    pub satisfied: bool,
    pub violations: Vec<KktViolation>,
    /// Largest `|x^(-alpha) / lambda - 1|` over interior households.
    pub max_stationarity_gap: f64,
}

/// Checks the optimality conditions of an alpha-fair result against its own
/// dual price, at relative tolerance `tol`.
///
/// Marginals are compared in the log domain so the check stays meaningful
/// when `lambda` under- or overflows.
pub fn kkt_verify(
    demand: &DemandProfile,
    result: &AllocationResult,
    alpha: Alpha,
    tol: f64,
) -> Result<KktReport> {
    let log_lambda = match (result.log_dual_price, result.dual_price) {
        (Some(l), _) => l,
        (None, Some(p)) if p > 0.0 => libm::log(p),
        _ => {
            return Err(Error::NotApplicable(format!(
                "{} result carries no dual price",
                result.method
            )))
        }
    };
    let d = demand.demands();
    let x = &result.allocations;
    if x.len() != d.len() {
        return Err(Error::LengthMismatch {
            expected: d.len(),
            got: x.len(),
        });
    }
    let a = alpha.value();
    let mut report = KktReport::default();
    for (index, (&xi, &di)) in x.iter().zip(d).enumerate() {
        if xi < 0.0 {
            report
                .violations
                .push(KktViolation::Negative { index, x: xi });
            continue;
        }
        if xi > di {
            report.violations.push(KktViolation::ExceedsDemand {
                index,
                x: xi,
                d: di,
            });
            continue;
        }
        if di == 0.0 {
            continue;
        }
        if xi == 0.0 {
            // U'(0) is infinite for alpha > 0 and 1 for alpha == 0.
            if a > 0.0 || 0.0 > log_lambda + libm::log1p(tol) {
                report.violations.push(KktViolation::AtZero { index });
            }
        } else if xi == di {
            // d^(-alpha) >= lambda (1 - tol)
            let log_ratio = -a * libm::log(di) - log_lambda;
            if log_ratio < libm::log1p(-tol) {
                report.violations.push(KktViolation::Saturated {
                    index,
                    relative_gap: -libm::expm1(log_ratio),
                });
            }
        } else {
            let gap = libm::expm1(-a * libm::log(xi) - log_lambda).abs();
            report.max_stationarity_gap = report.max_stationarity_gap.max(gap);
            if gap > tol {
                report.violations.push(KktViolation::Stationarity {
                    index,
                    relative_gap: gap,
                });
            }
        }
    }
    let scale = result.total().max(1.0);
    if result.clearance_residual > tol * scale {
        report.violations.push(KktViolation::Clearance {
            residual: result.clearance_residual,
        });
    }
    report.satisfied = report.violations.is_empty();
    Ok(report)
}
