//! Fair quota allocation for soft load shedding.
//!
//! When supply falls short of aggregate household demand, every household
//! receives a quota instead of a subset going dark. This crate computes those
//! quotas and scores them:
//!
//! - [`model`]: demand profiles, supply, the alpha-fair utility family and
//!   aggregate welfare.
//! - [`allocators`]: the alpha-fair welfare optimum (dual bisection), max-min
//!   progressive filling, equitable and percentage-equitable baselines, and a
//!   KKT certificate checker.
//! - [`metrics`]: five-level household satisfaction, block-rate tariff revenue
//!   and the alpha-fairness inequality.
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]
#![deny(missing_debug_implementations)]
// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod allocators;
pub mod error;
pub mod metrics;
pub mod model;
mod sum;

pub use allocators::{
    alpha_fair, alpha_zero_allocate, equitable, kkt_verify, max_min_fair, percentage_equitable,
    solve, AlphaZeroPolicy, KktReport, KktViolation, SolverConfig,
};
pub use error::{Error, Result};
pub use metrics::{
    alpha_fairness_check, household_revenue, level_distribution, percentile_threshold,
    satisfaction_level, satisfaction_report, satisfaction_utility, total_revenue,
    LevelDistribution, SatisfactionConfig, SatisfactionLevel, SatisfactionReport, TariffSchedule,
    FAIRNESS_TOL,
};
pub use model::{
    marginal_utility, utility_value, welfare, AllocationResult, Alpha, DemandProfile, Method,
    SupplySpec,
};
