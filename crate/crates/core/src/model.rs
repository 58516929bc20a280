//! Domain types and the alpha-fair utility family.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::sum::compensated_sum;

/// Maximum per-household demands (kWh) for one allocation period.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    household_ids: Vec<String>,
    demands: Vec<f64>,
}

impl DemandProfile {
    pub fn new(household_ids: Vec<String>, demands: Vec<f64>) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::InvalidDemand("no households".into()));
        }
        if household_ids.len() != demands.len() {
            return Err(Error::InvalidDemand(format!(
                "{} ids for {} demands",
                household_ids.len(),
                demands.len()
            )));
        }
        if let Some((i, d)) = demands
            .iter()
            .enumerate()
            .find(|(_, d)| !d.is_finite() || **d < 0.0)
        {
            return Err(Error::InvalidDemand(format!(
                "household {} has demand {d}",
                household_ids[i]
            )));
        }
        if !demands.iter().any(|&d| d > 0.0) {
            return Err(Error::InvalidDemand("all demands are zero".into()));
        }
        let mut seen = BTreeSet::new();
        for id in &household_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidDemand(format!("duplicate household id {id}")));
            }
        }
        Ok(Self {
            household_ids,
            demands,
        })
    }

    /// Builds a profile with generated ids `h1`, `h2`, ...
    pub fn from_demands(demands: Vec<f64>) -> Result<Self> {
        let ids = (1..=demands.len()).map(|i| format!("h{i}")).collect();
        Self::new(ids, demands)
    }

    pub fn household_ids(&self) -> &[String] {
        &self.household_ids
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.demands.iter().copied())
    }

    pub fn max_demand(&self) -> f64 {
        self.demands.iter().copied().fold(0.0, f64::max)
    }

    /// Households with strictly positive demand.
    pub fn participants(&self) -> usize {
        self.demands.iter().filter(|&&d| d > 0.0).count()
    }
}

/// Available supply, either absolute or derived from a shortfall fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupplySpec {
    /// Supply in kWh.
    Absolute(f64),
    /// Fraction of aggregate demand that cannot be served; supply is
    /// `(1 - shortfall) * total demand`.
    Shortfall(f64),
}

/// Absolute supplies may exceed total demand by this relative amount due to
/// upstream rounding; they are clamped to the total.
const SUPPLY_SLACK: f64 = 1e-12;

impl SupplySpec {
    /// Resolves the supply in kWh for `demand`, checking `0 < S <= sum(d)`.
    pub fn resolve(&self, demand: &DemandProfile) -> Result<f64> {
        let total = demand.total();
        match *self {
            SupplySpec::Absolute(s) => {
                if !s.is_finite() || s <= 0.0 {
                    return Err(Error::InvalidSupply(format!(
                        "supply must be positive, got {s}"
                    )));
                }
                if s > total * (1.0 + SUPPLY_SLACK) {
                    return Err(Error::InvalidSupply(format!(
                        "supply {s} exceeds total demand {total}"
                    )));
                }
                Ok(s.min(total))
            }
            SupplySpec::Shortfall(f) => {
                if !(0.0..1.0).contains(&f) {
                    return Err(Error::InvalidSupply(format!(
                        "shortfall fraction must lie in [0, 1), got {f}"
                    )));
                }
                Ok((1.0 - f) * total)
            }
        }
    }
}

/// Fairness parameter of the alpha-fair utility family.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub const THROUGHPUT: Alpha = Alpha(0.0);
    pub const PROPORTIONAL: Alpha = Alpha(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha >= 0.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidAlpha(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Logarithmic branch (`alpha == 1`).
    pub fn is_log(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Alpha::new(value)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    AlphaFair,
    MaxMin,
    Equitable,
    PercentageEquitable,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::AlphaFair,
        Method::MaxMin,
        Method::Equitable,
        Method::PercentageEquitable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::AlphaFair => "alpha_fair",
            Method::MaxMin => "max_min",
            Method::Equitable => "equitable",
            Method::PercentageEquitable => "percentage_equitable",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "alpha_fair" | "alpha" => Ok(Method::AlphaFair),
            "max_min" | "maxmin" | "max_min_fair" => Ok(Method::MaxMin),
            "equitable" => Ok(Method::Equitable),
            "percentage_equitable" | "percentage" => Ok(Method::PercentageEquitable),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// Quota vector plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    /// Quota per household (kWh), aligned with the demand profile.
    pub allocations: Vec<f64>,
    /// Lagrange multiplier of the clearance constraint; absent for the
    /// non-optimizing baselines. May underflow or overflow for extreme alpha,
    /// see `log_dual_price`.
    pub dual_price: Option<f64>,
    /// Natural log of the dual price.
    pub log_dual_price: Option<f64>,
    /// `|sum(x) - S|`.
    pub clearance_residual: f64,
    pub iterations: usize,
    pub method: Method,
}

impl AllocationResult {
    /// Wraps a plain allocation vector with no dual price.
    pub fn plain(allocations: Vec<f64>, supply: f64, method: Method, iterations: usize) -> Self {
        let clearance_residual = (compensated_sum(allocations.iter().copied()) - supply).abs();
        Self {
            allocations,
            dual_price: None,
            log_dual_price: None,
            clearance_residual,
            iterations,
            method,
        }
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.allocations.iter().copied())
    }

    pub fn welfare(&self, alpha: Alpha) -> Result<f64> {
        welfare(&self.allocations, alpha)
    }
}

/// Alpha-fair utility: `x^(1-a) / (1-a)`, or `ln x` when `a == 1`.
///
/// At `x == 0` this returns 0 for `a < 1` and a domain error otherwise.
pub fn utility_value(x: f64, alpha: Alpha) -> Result<f64> {
    let a = alpha.value();
    if x.is_nan() || x < 0.0 || x.is_infinite() {
        return Err(Error::Domain { x, alpha: a });
    }
    if x == 0.0 {
        return if a < 1.0 {
            Ok(0.0)
        } else {
            Err(Error::Domain { x, alpha: a })
        };
    }
    if alpha.is_log() {
        Ok(libm::log(x))
    } else {
        Ok(libm::pow(x, 1.0 - a) / (1.0 - a))
    }
}

/// Derivative of [`utility_value`]: `x^(-a)`.
pub fn marginal_utility(x: f64, alpha: Alpha) -> Result<f64> {
    if !(x > 0.0) || x.is_infinite() {
        return Err(Error::Domain {
            x,
            alpha: alpha.value(),
        });
    }
    Ok(libm::pow(x, -alpha.value()))
}

/// Aggregate utility `sum_i U(x_i)`.
pub fn welfare(allocations: &[f64], alpha: Alpha) -> Result<f64> {
    let mut terms = Vec::with_capacity(allocations.len());
    for (index, &x) in allocations.iter().enumerate() {
        let u = utility_value(x, alpha).map_err(|_| Error::HouseholdDomain {
            index,
            x,
            alpha: alpha.value(),
        })?;
        terms.push(u);
    }
    Ok(compensated_sum(terms))
}
