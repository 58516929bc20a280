//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `SOFTSHED_ACCEPTANCE_CSV` to one or more long-format hourly CSV files
//! (`consumer_id,timestamp,kwh`, path-list separated) to run the full
//! pipeline and property checks on real data as well.

use std::io::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{NaiveDate, TimeDelta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use softshed::experiment::{run_grid, runtime_benchmark, scaling_exponent, ExperimentGrid};
use softshed::ingest::{
    aggregate_day, drop_incomplete_consumers, drop_zero_demand, parse_load_csv, CsvFormat,
    DaySelector,
};
use softshed::synth::{synthesize_demands, DemandDistribution};
use softshed_core::*;
use softshed_oracle::{grid_oracle, projected_gradient_oracle, reference_progressive_filling};

const FEASIBILITY_SHORTFALLS: [f64; 6] = [0.05, 0.10, 0.20, 0.40, 0.60, 0.95];
const SWEEP_SHORTFALLS: [f64; 4] = [0.05, 0.10, 0.20, 0.40];
const FAIR_ALPHAS: [f64; 4] = [0.5, 1.0, 2.0, 10_000.0];
const PRICES: [f64; 2] = [10.0, 20.0];

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: false,
        detail: detail.into(),
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    Outcome { pass: ok, detail }
}

fn alpha(v: f64) -> Alpha {
    Alpha::new(v).unwrap()
}

#[derive(Clone)]
struct Instance {
    profile: DemandProfile,
    shortfall: f64,
}

impl Instance {
    fn supply(&self) -> SupplySpec {
        SupplySpec::Shortfall(self.shortfall)
    }
}

/// N in [1, max_n], demands uniform on [0.1, 10], shortfall from `shortfalls`.
fn random_instances(count: usize, max_n: usize, shortfalls: &[f64], seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=max_n);
            let d = (0..n).map(|_| rng.random_range(0.1..=10.0)).collect();
            Instance {
                profile: DemandProfile::from_demands(d).unwrap(),
                shortfall: shortfalls[rng.random_range(0..shortfalls.len())],
            }
        })
        .collect()
}

fn all_allocations(inst: &Instance) -> Result<Vec<(String, AllocationResult)>> {
    let p = &inst.profile;
    let s = inst.supply();
    let cfg = SolverConfig::default();
    let mut out = vec![
        ("equitable".to_string(), equitable(p, s)?),
        (
            "percentage_equitable".to_string(),
            percentage_equitable(p, s)?,
        ),
        ("max_min".to_string(), max_min_fair(p, s)?),
        ("alpha=0".to_string(), alpha_fair(p, s, alpha(0.0), &cfg)?),
    ];
    for a in FAIR_ALPHAS {
        out.push((format!("alpha={a}"), alpha_fair(p, s, alpha(a), &cfg)?));
    }
    Ok(out)
}

fn first_failure<T: Send + Sync>(
    items: &[T],
    f: impl Fn(usize, &T) -> Option<String> + Sync,
) -> Option<String> {
    items
        .par_iter()
        .enumerate()
        .filter_map(|(i, t)| f(i, t))
        .min_by_key(|m| m.clone())
}

struct Suite {
    instances: Vec<Instance>,
    results: Vec<Vec<(String, AllocationResult)>>,
    elapsed: Duration,
}

fn feasibility_suite() -> std::result::Result<Suite, String> {
    let instances = random_instances(1000, 500, &FEASIBILITY_SHORTFALLS, 0x5eed_0001);
    let start = Instant::now();
    let results = instances
        .par_iter()
        .map(all_allocations)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    Ok(Suite {
        instances,
        results,
        elapsed: start.elapsed(),
    })
}

fn feasibility(suite: &Suite) -> Outcome {
    let bad = first_failure(&suite.instances, |k, inst| {
        let s = inst.supply().resolve(&inst.profile).unwrap();
        for (name, r) in &suite.results[k] {
            for (i, (x, d)) in r.allocations.iter().zip(inst.profile.demands()).enumerate() {
                if !(*x >= 0.0 && x <= d) {
                    return Some(format!(
                        "instance {k} {name}: x_{} = {x} outside [0, {d}]",
                        i + 1
                    ));
                }
            }
            if (r.total() - s).abs() > 1e-9 * s {
                return Some(format!(
                    "instance {k} {name}: total {} vs S = {s}",
                    r.total()
                ));
            }
        }
        None
    });
    let secs = suite.elapsed.as_secs_f64();
    match bad {
        Some(m) => fail(m),
        None => check(
            secs < 30.0,
            format!("1000 instances x 8 allocators, {secs:.2} s (limit 30 s)"),
        ),
    }
}

fn kkt_certification(suite: &Suite) -> Outcome {
    let mut checked = 0;
    let bad = first_failure(&suite.instances, |k, inst| {
        for (name, r) in &suite.results[k] {
            let Some(a) = name.strip_prefix("alpha=") else {
                continue;
            };
            let a: f64 = a.parse().unwrap();
            if a == 0.0 {
                continue;
            }
            match kkt_verify(&inst.profile, r, alpha(a), 1e-6) {
                Ok(rep) if rep.satisfied => {}
                Ok(rep) => {
                    return Some(format!(
                        "instance {k} {name}: {}",
                        rep.violations
                            .first()
                            .map(|v| v.to_string())
                            .unwrap_or_default()
                    ))
                }
                Err(e) => return Some(format!("instance {k} {name}: {e}")),
            }
        }
        None
    });
    checked += suite.instances.len() * FAIR_ALPHAS.len();
    match bad {
        Some(m) => fail(m),
        None => pass(format!(
            "{checked} alpha-fair outputs certified at tol 1e-6"
        )),
    }
}

fn kelly_equivalence(suite: &Suite) -> Outcome {
    let mut worst = 0.0f64;
    for res in &suite.results {
        let get = |n: &str| &res.iter().find(|(name, _)| name == n).unwrap().1;
        let (pf, mm) = (get("alpha=1"), get("max_min"));
        for (x, y) in pf.allocations.iter().zip(&mm.allocations) {
            worst = worst.max((x - y).abs());
        }
    }
    check(
        worst <= 1e-6,
        format!("max |alpha=1 - max_min| = {worst:.3e} over 1000 instances (tol 1e-6)"),
    )
}

fn max_min_structure(suite: &Suite) -> Outcome {
    let bad = first_failure(&suite.instances, |k, inst| {
        let r = &suite.results[k]
            .iter()
            .find(|(n, _)| n == "max_min")
            .unwrap()
            .1;
        let d = inst.profile.demands();
        let open: Vec<f64> = r
            .allocations
            .iter()
            .zip(d)
            .filter(|(x, di)| x < di)
            .map(|(x, _)| *x)
            .collect();
        if let Some(level) = open.iter().copied().reduce(f64::max) {
            if open.iter().any(|v| (v - level).abs() > 1e-9) {
                return Some(format!("instance {k}: unsaturated levels differ"));
            }
            if r.allocations
                .iter()
                .zip(d)
                .any(|(x, di)| x == di && *x > level + 1e-9)
            {
                return Some(format!(
                    "instance {k}: saturated household above level {level}"
                ));
            }
        }
        let reference = reference_progressive_filling(&inst.profile, inst.supply()).unwrap();
        let gap = r
            .allocations
            .iter()
            .zip(&reference.allocations)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        (gap > 1e-9).then(|| format!("instance {k}: reference gap {gap:e}"))
    });
    match bad {
        Some(m) => fail(m),
        None => pass("common level within 1e-9, saturated <= level, reference agrees within 1e-9"),
    }
}

fn flat_tariff(suite: &Suite) -> Outcome {
    let price = 13.5;
    let tariff = TariffSchedule::flat(price).unwrap();
    let mut worst = 0.0f64;
    for (inst, res) in suite.instances.iter().zip(&suite.results) {
        let s = inst.supply().resolve(&inst.profile).unwrap();
        for (_, r) in res {
            let rel = (total_revenue(&r.allocations, &tariff) - price * s).abs() / (price * s);
            worst = worst.max(rel);
        }
    }
    check(
        worst <= 1e-9,
        format!("max relative deviation from p*S = {worst:.3e} (tol 1e-9)"),
    )
}

fn oracle_equivalence() -> Outcome {
    let instances = random_instances(200, 6, &FEASIBILITY_SHORTFALLS, 0x5eed_0002);
    let start = Instant::now();
    let outcomes: Vec<std::result::Result<(f64, f64, bool), String>> = instances
        .par_iter()
        .enumerate()
        .map(|(k, inst)| {
            let a = alpha([0.5, 1.0, 2.0][k % 3]);
            let r = alpha_fair(&inst.profile, inst.supply(), a, &SolverConfig::default())
                .map_err(|e| e.to_string())?;
            let wr = r.welfare(a).map_err(|e| e.to_string())?;
            let mut oracles =
                vec![
                    projected_gradient_oracle(&inst.profile, inst.supply(), a, 20_000, 0.1)
                        .map_err(|e| format!("instance {k}: {e}"))?,
                ];
            let gridded = inst.profile.len() <= 3;
            if gridded {
                oracles.push(
                    grid_oracle(&inst.profile, inst.supply(), a, 1e-5)
                        .map_err(|e| format!("instance {k}: {e}"))?,
                );
            }
            let mut coord = 0.0f64;
            let mut welfare_gap = 0.0f64;
            for o in &oracles {
                for (x, y) in r.allocations.iter().zip(&o.allocations) {
                    coord = coord.max((x - y).abs());
                }
                let wo = o.welfare(a).map_err(|e| e.to_string())?;
                // The optimum may beat an oracle, never the reverse.
                welfare_gap = welfare_gap.max(wo - wr).max((wr - wo).abs());
            }
            Ok((coord, welfare_gap, gridded))
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let mut coord = 0.0f64;
    let mut welfare_gap = 0.0f64;
    let mut gridded = 0;
    for o in outcomes {
        match o {
            Ok((c, w, g)) => {
                coord = coord.max(c);
                welfare_gap = welfare_gap.max(w);
                gridded += g as usize;
            }
            Err(e) => return fail(e),
        }
    }
    check(
        coord <= 1e-4 && welfare_gap <= 1e-6 && secs < 120.0,
        format!(
            "200 instances ({gridded} also grid-searched): coord {coord:.2e} (tol 1e-4), \
             welfare {welfare_gap:.2e} (tol 1e-6), {secs:.1} s (limit 120 s)"
        ),
    )
}

fn random_feasible(d: &[f64], s: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let u: Vec<f64> = d
        .iter()
        .map(|di| di * rng.random_range(0.0..=1.0))
        .collect();
    let su: f64 = u.iter().sum();
    let sd: f64 = d.iter().sum();
    if su < s {
        let theta = (s - su) / (sd - su);
        u.iter()
            .zip(d)
            .map(|(ui, di)| (ui + theta * (di - ui)).min(*di))
            .collect()
    } else {
        u.iter().map(|ui| ui * s / su).collect()
    }
}

fn fairness_inequality() -> Outcome {
    let instances = random_instances(50, 100, &FEASIBILITY_SHORTFALLS, 0x5eed_0003);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut worst = f64::NEG_INFINITY;
    let mut skipped = 0;
    for (k, inst) in instances.iter().enumerate() {
        let a = alpha([0.5, 1.0, 2.0][k % 3]);
        let opt = alpha_fair(&inst.profile, inst.supply(), a, &SolverConfig::default()).unwrap();
        let s = inst.supply().resolve(&inst.profile).unwrap();
        for _ in 0..100 {
            let cand = random_feasible(inst.profile.demands(), s, &mut rng);
            match alpha_fairness_check(&inst.profile, &cand, &opt.allocations, a) {
                Ok(v) => worst = worst.max(v),
                // Rounding can leave a drawn candidate a hair off the simplex.
                Err(Error::Infeasible(_)) => skipped += 1,
                Err(e) => return fail(format!("instance {k}: {e}")),
            }
        }
    }
    check(
        worst <= FAIRNESS_TOL && skipped == 0,
        format!("max value {worst:.3e} over 50 x 100 candidates (tol 1e-6), {skipped} skipped"),
    )
}

fn synthetic_100() -> Vec<(&'static str, DemandProfile)> {
    vec![
        (
            "binomial",
            synthesize_demands(DemandDistribution::BINOMIAL, 100, 2024).unwrap(),
        ),
        (
            "uniform",
            synthesize_demands(DemandDistribution::UNIFORM, 100, 2024).unwrap(),
        ),
    ]
}

/// L1 share for every method at every sweep shortfall. The alpha-fair method
/// is run at each positive sweep alpha.
fn blackout_shares(profile: &DemandProfile, alphas: &[f64]) -> Result<Vec<(String, f64, f64)>> {
    let cfg = SatisfactionConfig::default();
    let mut out = Vec::new();
    for f in SWEEP_SHORTFALLS {
        for method in Method::ALL {
            let runs: &[f64] = if method == Method::AlphaFair {
                alphas
            } else {
                &[1.0]
            };
            for &a in runs {
                let r = solve(
                    method,
                    profile,
                    SupplySpec::Shortfall(f),
                    alpha(a),
                    &SolverConfig::default(),
                )?;
                let rep = satisfaction_report(profile, &r, &cfg)?;
                let label = if method == Method::AlphaFair {
                    format!("{method}(alpha={a})")
                } else {
                    method.to_string()
                };
                out.push((label, f, rep.distribution.get(SatisfactionLevel::L1)));
            }
        }
    }
    Ok(out)
}

fn no_blackout() -> Outcome {
    let mut cells = 0;
    for (name, p) in synthetic_100() {
        match blackout_shares(&p, &[0.5, 1.0, 10_000.0]) {
            Ok(rows) => {
                for (label, f, l1) in &rows {
                    if *l1 != 0.0 {
                        return fail(format!("{name} {label} at shortfall {f}: L1 = {l1}%"));
                    }
                }
                cells += rows.len();
            }
            Err(e) => return fail(format!("{name}: {e}")),
        }
    }
    pass(format!(
        "L1 = 0% in all {cells} method x shortfall cells (binomial and uniform, N = 100)"
    ))
}

fn revenue_grid() -> ExperimentGrid {
    ExperimentGrid {
        alphas: vec![0.0, 0.5, 1.0, 2.0, 10_000.0],
        tariff_percentiles: (1..=9).map(|k| 10.0 * k as f64).collect(),
        tariff_prices: PRICES.to_vec(),
        ..ExperimentGrid::default()
    }
}

/// Revenue non-increasing in percentile and in shortfall across the grid.
fn revenue_monotone(profile: &DemandProfile) -> std::result::Result<usize, String> {
    let grid = revenue_grid();
    let report = run_grid(profile, &grid).map_err(|e| e.to_string())?;
    if let Some(r) = report.failures().next() {
        return Err(format!("cell failed: {:?}", r.error));
    }
    let idx = |m: Method, a: f64, f: f64, q: f64| {
        report
            .records
            .iter()
            .find(|r| r.method == m && r.alpha == a && r.shortfall == f && r.percentile == q)
            .and_then(|r| r.total_revenue)
            .unwrap()
    };
    let mut pairs = 0;
    for &m in &grid.methods {
        for &a in &grid.alphas {
            for &f in &grid.shortfalls {
                for w in grid.tariff_percentiles.windows(2) {
                    let (lo, hi) = (idx(m, a, f, w[0]), idx(m, a, f, w[1]));
                    if hi > lo + 1e-9 * lo.abs().max(1.0) {
                        return Err(format!(
                            "{m} alpha {a} shortfall {f}: q {} -> {}: {lo} < {hi}",
                            w[0], w[1]
                        ));
                    }
                    pairs += 1;
                }
            }
            for &q in &grid.tariff_percentiles {
                for w in grid.shortfalls.windows(2) {
                    let (lo, hi) = (idx(m, a, w[0], q), idx(m, a, w[1], q));
                    if hi > lo + 1e-9 * lo.abs().max(1.0) {
                        return Err(format!(
                            "{m} alpha {a} q {q}: shortfall {} -> {}: {lo} < {hi}",
                            w[0], w[1]
                        ));
                    }
                    pairs += 1;
                }
            }
        }
    }
    Ok(pairs)
}

fn revenue_properties() -> Vec<(&'static str, Outcome)> {
    let instances = random_instances(200, 500, &SWEEP_SHORTFALLS, 0x5eed_0005);
    let monotone: Vec<std::result::Result<usize, String>> = instances
        .par_iter()
        .map(|i| revenue_monotone(&i.profile))
        .collect();
    let mut pairs = 0;
    let mut monotone_outcome = None;
    for (k, m) in monotone.into_iter().enumerate() {
        match m {
            Ok(n) => pairs += n,
            Err(e) => {
                monotone_outcome = Some(fail(format!("instance {k}: {e}")));
                break;
            }
        }
    }
    let monotone_outcome = monotone_outcome.unwrap_or_else(|| {
        pass(format!(
            "{pairs} adjacent cell pairs over 200 instances, 4 methods, 5 alphas"
        ))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut wins = 0;
    for inst in &instances {
        let q = [10.0, 50.0, 90.0][rng.random_range(0..3)];
        let b = percentile_threshold(&inst.profile, q).unwrap();
        let tariff = TariffSchedule::new(vec![b], PRICES.to_vec()).unwrap();
        let cfg = SolverConfig::default();
        let greedy = alpha_fair(&inst.profile, inst.supply(), alpha(0.0), &cfg).unwrap();
        let pf = alpha_fair(&inst.profile, inst.supply(), alpha(1.0), &cfg).unwrap();
        let (rg, rp) = (
            total_revenue(&greedy.allocations, &tariff),
            total_revenue(&pf.allocations, &tariff),
        );
        if rg >= rp - 1e-9 * rp {
            wins += 1;
        }
    }
    let share = wins as f64 / instances.len() as f64;
    let greedy = check(
        share >= 0.95,
        format!("alpha=0 revenue >= alpha=1 revenue on {wins}/200 instances (need >= 95%)"),
    );
    vec![
        (
            "revenue non-increasing in percentile and shortfall",
            monotone_outcome,
        ),
        ("revenue: greedy alpha=0 out-earns alpha=1", greedy),
    ]
}

fn scaling() -> Outcome {
    let sizes = [1_000, 10_000, 100_000, 1_000_000];
    let rows = match runtime_benchmark(&sizes, 2.0, 0.2, 7) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let exponent = scaling_exponent(&rows).unwrap_or(f64::NAN);
    let big = rows.last().unwrap().seconds;
    let times: Vec<String> = rows
        .iter()
        .map(|r| format!("{}:{:.2e}s", r.households, r.seconds))
        .collect();
    check(
        (0.8..=1.3).contains(&exponent) && big < 1.0,
        format!(
            "exponent {exponent:.3} (need [0.8, 1.3]), N=1e6 median {big:.3} s (limit 1 s); {}",
            times.join(" ")
        ),
    )
}

/// Level distributions of each positive alpha weakly dominate equitable's
/// at every sweep shortfall.
fn dominance(profile: &DemandProfile) -> std::result::Result<usize, String> {
    let cfg = SatisfactionConfig::default();
    let mut compared = 0;
    for f in SWEEP_SHORTFALLS {
        let supply = SupplySpec::Shortfall(f);
        let eq = equitable(profile, supply).map_err(|e| e.to_string())?;
        let eq = satisfaction_report(profile, &eq, &cfg).map_err(|e| e.to_string())?;
        for a in FAIR_ALPHAS {
            let r = alpha_fair(profile, supply, alpha(a), &SolverConfig::default())
                .map_err(|e| e.to_string())?;
            let rep = satisfaction_report(profile, &r, &cfg).map_err(|e| e.to_string())?;
            if !rep.distribution.weakly_dominates(&eq.distribution, 1e-9) {
                return Err(format!(
                    "alpha {a} at shortfall {f}: {:?} vs equitable {:?}",
                    rep.distribution.as_array(),
                    eq.distribution.as_array()
                ));
            }
            compared += 1;
        }
    }
    Ok(compared)
}

/// Allocator and metric properties on one profile: feasibility, KKT,
/// blackout, revenue orderings and dominance over equitable.
fn profile_properties(profile: &DemandProfile) -> std::result::Result<String, String> {
    let mut solved = 0;
    for f in SWEEP_SHORTFALLS {
        let inst = Instance {
            profile: profile.clone(),
            shortfall: f,
        };
        let s = inst.supply().resolve(profile).map_err(|e| e.to_string())?;
        for (name, r) in all_allocations(&inst).map_err(|e| e.to_string())? {
            let box_ok = r
                .allocations
                .iter()
                .zip(profile.demands())
                .all(|(x, d)| *x >= 0.0 && x <= d);
            if !box_ok || (r.total() - s).abs() > 1e-9 * s {
                return Err(format!("{name} infeasible at shortfall {f}"));
            }
            if let Some(a) = name
                .strip_prefix("alpha=")
                .map(|a| a.parse::<f64>().unwrap())
            {
                if a > 0.0 {
                    let rep = kkt_verify(profile, &r, alpha(a), 1e-6).map_err(|e| e.to_string())?;
                    if !rep.satisfied {
                        return Err(format!("{name} fails KKT at shortfall {f}"));
                    }
                }
            }
            solved += 1;
        }
    }
    let rows = blackout_shares(profile, &[0.5, 1.0, 10_000.0]).map_err(|e| e.to_string())?;
    if let Some((label, f, l1)) = rows.iter().find(|r| r.2 != 0.0) {
        return Err(format!("{label} at shortfall {f}: L1 = {l1}%"));
    }
    let pairs = revenue_monotone(profile)?;
    let compared = dominance(profile)?;
    Ok(format!(
        "{} households: {solved} feasible solves, KKT ok, no blackout, {pairs} revenue pairs, {compared} dominance checks",
        profile.len()
    ))
}

fn synthetic_csv(dir: &Path) -> std::path::PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let start = NaiveDate::from_ymd_opt(2014, 6, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap();
    let mut text = String::from("consumer_id,timestamp,kwh\n");
    for c in 0..60 {
        // Daily shape: evening peak with a per-consumer scale.
        let scale = rng.random_range(0.2..3.0);
        for h in 0..24 * 7 {
            let hour = (h % 24) as f64;
            let base = 0.3 + (-(hour - 19.0).powi(2) / 8.0).exp();
            let mut v = format!("{:.3}", scale * base * rng.random_range(0.7..1.3));
            if c == 7 && h == 50 {
                v = "ERR".into();
            }
            if c == 11 && h % 24 == 3 {
                v = String::new();
            }
            let t = start + TimeDelta::hours(h);
            text.push_str(&format!(
                "MAC{c:05},{},{v}\n",
                t.format("%Y-%m-%d %H:%M:%S")
            ));
        }
    }
    let path = dir.join("synthetic_hourly.csv");
    std::fs::write(&path, text).unwrap();
    path
}

fn pipeline(path: &Path, seed: u64) -> std::result::Result<String, String> {
    let file = std::fs::File::open(path).map_err(|e| e.to_string())?;
    let (table, parse) = parse_load_csv(std::io::BufReader::new(file), &CsvFormat::default())
        .map_err(|e| e.to_string())?;
    let (table, dropped) = drop_incomplete_consumers(&table).map_err(|e| e.to_string())?;
    let agg = aggregate_day(&table, DaySelector::Seeded(seed)).map_err(|e| e.to_string())?;
    let (profile, zero) = drop_zero_demand(&agg.profile).map_err(|e| e.to_string())?;
    let summary = profile_properties(&profile)?;
    Ok(format!(
        "{} malformed rows, {} incomplete and {} zero-demand consumers dropped, day {}; {summary}",
        parse.malformed.len(),
        dropped.len(),
        zero.len(),
        agg.day
    ))
}

fn synthetic_dominance() -> Outcome {
    let mut compared = 0;
    for (name, p) in synthetic_100() {
        match dominance(&p) {
            Ok(n) => compared += n,
            Err(e) => return fail(format!("{name}: {e}")),
        }
    }
    pass(format!(
        "alpha in {FAIR_ALPHAS:?} weakly dominates equitable in {compared} cells (binomial and uniform)"
    ))
}

fn main() {
    let mut results: Vec<(String, Outcome)> = Vec::new();
    let mut record = |name: &str, o: Outcome| {
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        std::io::stdout().flush().ok();
        results.push((name.to_string(), o));
    };

    match feasibility_suite() {
        Ok(suite) => {
            record("feasibility", feasibility(&suite));
            record("KKT certification", kkt_certification(&suite));
            record("Kelly equivalence", kelly_equivalence(&suite));
            record("max-min structure", max_min_structure(&suite));
            record("flat-tariff independence", flat_tariff(&suite));
        }
        Err(e) => record("feasibility", fail(format!("allocator error: {e}"))),
    }
    record("oracle equivalence", oracle_equivalence());
    record("alpha-fairness inequality", fairness_inequality());
    record("no blackout", no_blackout());
    for (name, o) in revenue_properties() {
        record(name, o);
    }
    record("scaling", scaling());
    record("dominance over equitable", synthetic_dominance());

    let dir = tempfile::tempdir().unwrap();
    let csv = synthetic_csv(dir.path());
    record(
        "synthetic CSV pipeline",
        match pipeline(&csv, 3) {
            Ok(d) => pass(d),
            Err(e) => fail(e),
        },
    );

    match std::env::var_os("SOFTSHED_ACCEPTANCE_CSV") {
        Some(paths) => {
            for path in std::env::split_paths(&paths) {
                let name = format!("user CSV {}", path.display());
                record(
                    &name,
                    match pipeline(&path, 0) {
                        Ok(d) => pass(d),
                        Err(e) => fail(e),
                    },
                );
            }
        }
        None => println!("SKIP user CSV pipeline: SOFTSHED_ACCEPTANCE_CSV not set"),
    }

    // Informational: the greedy alpha = 0 tie-break is allowed to black out.
    for (name, p) in synthetic_100() {
        let worst = blackout_shares(&p, &[0.0])
            .map(|rows| {
                rows.iter()
                    .filter(|r| r.0.contains("alpha=0"))
                    .map(|r| r.2)
                    .fold(0.0, f64::max)
            })
            .unwrap_or(f64::NAN);
        println!("INFO greedy alpha=0 on {name}: worst L1 share {worst}% across sweep shortfalls");
    }

    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!(
        "{} criteria, {} passed, {failed} failed",
        results.len(),
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
