//! Reference solvers for cross-checking `softshed-core`.
//!
//! Nothing here shares code with the production allocators: the grid search
//! and projected gradient ascent only evaluate welfare, and the progressive
//! filling raises the water level event by event. They are slow on purpose
//! and only meant for small instances in tests.
#![no_std]
// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

use alloc::vec;
use alloc::vec::Vec;

use softshed_core::{welfare, AllocationResult, Alpha, DemandProfile, Method, SupplySpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("grid oracle supports at most {max} households, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("resolution must be positive, got {0}")]
    BadResolution(f64),
    #[error("no feasible grid point with finite welfare")]
    NoFeasiblePoint,
    #[error("gradient oracle needs alpha > 0")]
    ZeroAlpha,
    #[error("projected gradient ascent stalled away from a fixed point at step {step}")]
    Divergence { step: usize },
    #[error(transparent)]
    Core(#[from] softshed_core::Error),
}

pub type Result<T> = core::result::Result<T, OracleError>;

pub const GRID_MAX_HOUSEHOLDS: usize = 6;

/// Grid points evaluated per refinement pass.
const GRID_BUDGET: f64 = 60_000.0;
/// Half-width of a refinement window, in steps of the previous grid.
const ZOOM_HALF_WIDTH: f64 = 3.0;
/// Recentring passes allowed once the step reaches the target resolution.
const MAX_SETTLE_PASSES: usize = 50;

/// Exhaustive welfare maximization over a grid on the clearing simplex
/// intersected with the demand box.
///
/// The household with the largest demand absorbs the clearance constraint;
/// the others are enumerated. After the coarse pass the grid is recentred on
/// the best point and narrowed until its step is at most `resolution`, then
/// recentred at that step until the best point stops moving.
pub fn grid_oracle(
    demand: &DemandProfile,
    supply: SupplySpec,
    alpha: Alpha,
    resolution: f64,
) -> Result<AllocationResult> {
    let n = demand.len();
    if n > GRID_MAX_HOUSEHOLDS {
        return Err(OracleError::TooLarge {
            n,
            max: GRID_MAX_HOUSEHOLDS,
        });
    }
    if !(resolution > 0.0) {
        return Err(OracleError::BadResolution(resolution));
    }
    let s = supply.resolve(demand)?;
    let d = demand.demands();
    if n == 1 {
        return Ok(AllocationResult::plain(vec![s], s, Method::AlphaFair, 0));
    }

    let last = (0..n)
        .max_by(|&a, &b| d[a].total_cmp(&d[b]))
        .expect("non-empty");
    let free: Vec<usize> = (0..n).filter(|&i| i != last).collect();
    let dims = free.len();
    let mut points = libm::floor(libm::pow(GRID_BUDGET, 1.0 / dims as f64)) as usize;
    points = points.clamp(5, 401);
    if points.is_multiple_of(2) {
        points -= 1;
    }
    let half = (points - 1) / 2;

    // No free coordinate can exceed the supply, so the coarse box is
    // [0, min(d_i, S)]; this keeps steps comparable when S is small.
    let width: Vec<f64> = free.iter().map(|&i| d[i].min(s)).collect();
    let mut center: Vec<f64> = width.iter().map(|w| 0.5 * w).collect();
    let mut step: Vec<f64> = width.iter().map(|w| w / (points - 1) as f64).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut passes = 0;
    let mut settled_passes = 0;

    loop {
        passes += 1;
        let mut offsets = vec![0usize; dims];
        let mut x = vec![0.0; n];
        loop {
            let mut inside = true;
            let mut used = 0.0;
            for (k, &i) in free.iter().enumerate() {
                let v = center[k] + (offsets[k] as f64 - half as f64) * step[k];
                // Snap tiny overshoots onto the box faces.
                let v = if v < 0.0 && v > -1e-12 * d[i] {
                    0.0
                } else if v > d[i] && v < d[i] * (1.0 + 1e-12) {
                    d[i]
                } else {
                    v
                };
                if v < 0.0 || v > d[i] {
                    inside = false;
                    break;
                }
                x[i] = v;
                used += v;
            }
            if inside {
                let rest = s - used;
                if rest >= 0.0 && rest <= d[last] {
                    x[last] = rest;
                    if let Ok(w) = welfare(&x, alpha) {
                        if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
                            best = Some((w, x.clone()));
                        }
                    }
                }
            }
            // Odometer increment.
            let mut k = 0;
            while k < dims {
                offsets[k] += 1;
                if offsets[k] < points {
                    break;
                }
                offsets[k] = 0;
                k += 1;
            }
            if k == dims {
                break;
            }
        }

        let Some((_, ref bx)) = best else {
            return Err(OracleError::NoFeasiblePoint);
        };
        let moved = free.iter().enumerate().any(|(k, &i)| bx[i] != center[k]);
        if step.iter().all(|&h| h <= resolution) {
            // At the target resolution, recentre until the best point is
            // interior to its window.
            settled_passes += 1;
            if !moved || settled_passes > MAX_SETTLE_PASSES {
                break;
            }
            for (k, &i) in free.iter().enumerate() {
                center[k] = bx[i];
            }
            continue;
        }
        for (k, &i) in free.iter().enumerate() {
            center[k] = bx[i];
            step[k] = (ZOOM_HALF_WIDTH * step[k] / half as f64).max(resolution.min(step[k]) * 1e-3);
        }
    }

    let (_, x) = best.expect("checked above");
    Ok(AllocationResult::plain(x, s, Method::AlphaFair, passes))
}

/// Projected gradient ascent on `sum_i U_alpha(x_i)` over
/// `{x : sum x = S, 0 <= x <= d}`.
///
/// Steps that lower welfare are retried at half length; a step that keeps
/// failing while the iterate is still moving is reported as divergence.
pub fn projected_gradient_oracle(
    demand: &DemandProfile,
    supply: SupplySpec,
    alpha: Alpha,
    steps: usize,
    step_size: f64,
) -> Result<AllocationResult> {
    if alpha.value() == 0.0 {
        return Err(OracleError::ZeroAlpha);
    }
    let s = supply.resolve(demand)?;
    let d = demand.demands();
    let total: f64 = d.iter().sum();
    let scale = d.iter().copied().fold(1.0, f64::max);
    let mut x: Vec<f64> = d.iter().map(|&di| di * s / total).collect();
    project(&mut x, d, s);
    let mut w = welfare(&x, alpha)?;
    let mut eta = step_size;
    let mut taken = 0;

    for step in 0..steps {
        taken = step + 1;
        let grad: Vec<f64> = x
            .iter()
            .zip(d)
            .map(|(&xi, &di)| {
                if di > 0.0 {
                    libm::pow(xi, -alpha.value())
                } else {
                    0.0
                }
            })
            .collect();
        let mut accepted = None;
        for _ in 0..80 {
            let mut y: Vec<f64> = x.iter().zip(&grad).map(|(xi, g)| xi + eta * g).collect();
            project(&mut y, d, s);
            match welfare(&y, alpha) {
                Ok(wy) if wy >= w => {
                    accepted = Some((y, wy));
                    break;
                }
                _ => eta *= 0.5,
            }
        }
        let Some((y, wy)) = accepted else {
            // Welfare cannot be raised along the projected arc: fixed point
            // unless the arc still moves the iterate noticeably.
            let mut probe: Vec<f64> = x.iter().zip(&grad).map(|(xi, g)| xi + eta * g).collect();
            project(&mut probe, d, s);
            if max_gap(&probe, &x) > 1e-9 * scale {
                return Err(OracleError::Divergence { step });
            }
            break;
        };
        let moved = max_gap(&y, &x);
        x = y;
        w = wy;
        eta *= 2.0;
        if moved <= 1e-14 * scale {
            break;
        }
    }
    Ok(AllocationResult::plain(x, s, Method::AlphaFair, taken))
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// Euclidean projection onto `{sum x = s, 0 <= x <= d}`: `x_i = clamp(y_i - tau)`
/// with the shift `tau` found by bisection.
fn project(y: &mut [f64], d: &[f64], s: f64) {
    let clamped = |y: &[f64], tau: f64, i: usize| (y[i] - tau).clamp(0.0, d[i]);
    let mut lo = y
        .iter()
        .zip(d)
        .map(|(yi, di)| yi - di)
        .fold(f64::INFINITY, f64::min);
    let mut hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let sum: f64 = (0..y.len()).map(|i| clamped(y, mid, i)).sum();
        if sum > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    for i in 0..y.len() {
        y[i] = clamped(y, tau, i);
    }
    // Bisection leaves a rounding-level residual; hand it to free coordinates.
    let r = s - y.iter().sum::<f64>();
    let free = (0..y.len()).filter(|&i| y[i] > 0.0 && y[i] < d[i]).count();
    if free > 0 {
        let share = r / free as f64;
        for i in 0..y.len() {
            if y[i] > 0.0 && y[i] < d[i] {
                y[i] = (y[i] + share).clamp(0.0, d[i]);
            }
        }
    }
}

/// Max-min fair allocation by raising a common water level one saturation
/// event at a time until the supply is used up.
pub fn reference_progressive_filling(
    demand: &DemandProfile,
    supply: SupplySpec,
) -> Result<AllocationResult> {
    let s = supply.resolve(demand)?;
    let d = demand.demands();
    let mut pending: Vec<f64> = d.iter().copied().filter(|&v| v > 0.0).collect();
    pending.sort_by(|a, b| b.total_cmp(a));

    let mut level = 0.0;
    let mut remaining = s;
    let mut events = 0;
    while remaining > 0.0 {
        let Some(&smallest) = pending.last() else {
            break;
        };
        events += 1;
        let active = pending.len() as f64;
        let rise = smallest - level;
        if rise * active <= remaining {
            level = smallest;
            remaining -= rise * active;
            pending.pop();
        } else {
            level += remaining / active;
            remaining = 0.0;
        }
    }
    let x = d.iter().map(|&di| di.min(level)).collect();
    Ok(AllocationResult::plain(x, s, Method::MaxMin, events))
}
