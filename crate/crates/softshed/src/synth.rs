//! Seeded synthetic demand profiles.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;

use softshed_core::{DemandProfile, Error, Result};

/// Redraw budget per household before a binomial draw of zero is an error.
const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DemandDistribution {
    /// Integer draws used directly as kWh; zero draws are redrawn.
    Binomial { trials: u64, p: f64 },
    /// Continuous draws on `[low, high]` kWh.
    Uniform { low: f64, high: f64 },
}

impl DemandDistribution {
    pub const BINOMIAL: DemandDistribution = DemandDistribution::Binomial {
        trials: 100,
        p: 0.5,
    };
    pub const UNIFORM: DemandDistribution = DemandDistribution::Uniform {
        low: 1.0,
        high: 10.0,
    };

    pub fn name(&self) -> &'static str {
        match self {
            DemandDistribution::Binomial { .. } => "binomial",
            DemandDistribution::Uniform { .. } => "uniform",
        }
    }
}

/// Draws `n` i.i.d. demands. Equal seeds give bit-identical profiles.
pub fn synthesize_demands(dist: DemandDistribution, n: usize, seed: u64) -> Result<DemandProfile> {
    if n == 0 {
        return Err(Error::InvalidDemand("need at least one household".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let demands = match dist {
        DemandDistribution::Binomial { trials, p } => {
            if trials == 0 || !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidDemand(format!(
                    "binomial needs trials >= 1 and p in (0, 1], got {trials}, {p}"
                )));
            }
            let b = Binomial::new(trials, p)
                .map_err(|e| Error::InvalidDemand(format!("binomial: {e}")))?;
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let draw = (0..MAX_REDRAWS)
                    .map(|_| b.sample(&mut rng))
                    .find(|&v| v > 0)
                    .ok_or_else(|| Error::InvalidDemand("binomial keeps drawing zero".into()))?;
                out.push(draw as f64);
            }
            out
        }
        DemandDistribution::Uniform { low, high } => {
            if !(low > 0.0 && low.is_finite() && high.is_finite() && low <= high) {
                return Err(Error::InvalidDemand(format!(
                    "uniform needs 0 < low <= high, got [{low}, {high}]"
                )));
            }
            let u = Uniform::new_inclusive(low, high)
                .map_err(|e| Error::InvalidDemand(format!("uniform: {e}")))?;
            (0..n).map(|_| u.sample(&mut rng)).collect()
        }
    };
    DemandProfile::from_demands(demands)
}
