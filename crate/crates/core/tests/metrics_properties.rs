use proptest::prelude::*;
use proptest::sample::select;

use softshed_core::*;

fn alpha(v: f64) -> Alpha {
    Alpha::new(v).unwrap()
}

fn two_block(b: f64) -> TariffSchedule {
    TariffSchedule::new(vec![b], vec![10.0, 20.0]).unwrap()
}

/// Random point of `{sum x = s, 0 <= x <= d}`: draw inside the box, then move
/// toward the upper corner or the origin until the total matches.
fn feasible_candidate(d: &[f64], s: f64, unit: &[f64]) -> Vec<f64> {
    let u: Vec<f64> = d.iter().zip(unit).map(|(di, t)| di * t).collect();
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

#[test]
fn zero_shortfall_profile_is_fully_satisfied() {
    let d: Vec<f64> = (0..34).map(|i| 5.0 + i as f64 * 0.7).collect();
    let p = DemandProfile::from_demands(d).unwrap();
    let r = max_min_fair(&p, SupplySpec::Shortfall(0.0)).unwrap();
    let report = satisfaction_report(&p, &r, &SatisfactionConfig::default()).unwrap();
    assert_eq!(report.distribution.get(SatisfactionLevel::L5), 100.0);
    assert!(report.utilities.iter().all(|&u| u == 1.0));
}

proptest! {
    #[test]
    fn level_is_monotone_in_ratio(d in 0.1f64..50.0, r1 in 0.0f64..=1.0, r2 in 0.0f64..=1.0) {
        let cfg = SatisfactionConfig::default();
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let l1 = satisfaction_level(lo * d, d, &cfg).unwrap();
        let l2 = satisfaction_level(hi * d, d, &cfg).unwrap();
        prop_assert!(l1 <= l2);
    }

    #[test]
    fn revenue_is_monotone_continuous_and_convex(
        b in 0.1f64..20.0,
        x in 0.0f64..40.0,
        y in 0.0f64..40.0,
    ) {
        let t = two_block(b);
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let rl = household_revenue(lo, &t);
        let rh = household_revenue(hi, &t);
        prop_assert!(rl <= rh);
        // Lipschitz with the top price gives continuity.
        prop_assert!(rh - rl <= 20.0 * (hi - lo) + 1e-9);
        let mid = household_revenue(0.5 * (lo + hi), &t);
        prop_assert!(mid <= 0.5 * (rl + rh) + 1e-9);
    }

    #[test]
    fn flat_tariff_revenue_ignores_distribution(
        d in prop::collection::vec(0.1f64..10.0, 1..60),
        shortfall in select(vec![0.05, 0.2, 0.4, 0.95]),
        p1 in 0.5f64..30.0,
    ) {
        let p = DemandProfile::from_demands(d).unwrap();
        let supply = SupplySpec::Shortfall(shortfall);
        let s = supply.resolve(&p).unwrap();
        let t = TariffSchedule::flat(p1).unwrap();
        let results = [
            alpha_zero_allocate(&p, supply).unwrap(),
            max_min_fair(&p, supply).unwrap(),
            percentage_equitable(&p, supply).unwrap(),
            equitable(&p, supply).unwrap(),
        ];
        for r in results {
            let rev = total_revenue(&r.allocations, &t);
            prop_assert!((rev - p1 * s).abs() <= 1e-9 * p1 * s);
        }
    }

    #[test]
    fn greedy_out_earns_proportional_fairness(
        d in prop::collection::vec(0.1f64..10.0, 2..60),
        shortfall in select(vec![0.05, 0.1, 0.2, 0.4]),
        q in select(vec![10.0, 50.0, 90.0]),
    ) {
        let p = DemandProfile::from_demands(d).unwrap();
        let supply = SupplySpec::Shortfall(shortfall);
        let t = two_block(percentile_threshold(&p, q).unwrap());
        let greedy = alpha_zero_allocate(&p, supply).unwrap();
        let pf = alpha_fair(&p, supply, alpha(1.0), &SolverConfig::default()).unwrap();
        prop_assert!(total_revenue(&greedy.allocations, &t) + 1e-9 >= total_revenue(&pf.allocations, &t));
    }

    #[test]
    fn revenue_non_increasing_in_percentile(
        d in prop::collection::vec(0.1f64..10.0, 1..60),
        shortfall in select(vec![0.05, 0.1, 0.2, 0.4]),
    ) {
        let p = DemandProfile::from_demands(d).unwrap();
        let r = alpha_fair(&p, SupplySpec::Shortfall(shortfall), alpha(0.5), &SolverConfig::default()).unwrap();
        let mut last = f64::INFINITY;
        for q in (1..=9).map(|k| 10.0 * k as f64) {
            let rev = total_revenue(&r.allocations, &two_block(percentile_threshold(&p, q).unwrap()));
            prop_assert!(rev <= last + 1e-9);
            last = rev;
        }
    }

    #[test]
    fn optimum_passes_fairness_inequality(
        d in prop::collection::vec(0.1f64..10.0, 1..20),
        shortfall in select(vec![0.05, 0.2, 0.4, 0.6]),
        a in select(vec![0.5, 1.0, 2.0]),
        units in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 20), 10),
    ) {
        let p = DemandProfile::from_demands(d.clone()).unwrap();
        let supply = SupplySpec::Shortfall(shortfall);
        let s = supply.resolve(&p).unwrap();
        let al = alpha(a);
        let opt = alpha_fair(&p, supply, al, &SolverConfig::default()).unwrap();
        prop_assert_eq!(alpha_fairness_check(&p, &opt.allocations, &opt.allocations, al).unwrap(), 0.0);
        for unit in &units {
            let cand = feasible_candidate(&d, s, &unit[..d.len()]);
            let v = alpha_fairness_check(&p, &cand, &opt.allocations, al).unwrap();
            prop_assert!(v <= FAIRNESS_TOL, "value {v}");
        }
    }

    #[test]
    fn no_household_is_blacked_out(
        d in prop::collection::vec(0.1f64..10.0, 1..100),
        shortfall in select(vec![0.05, 0.1, 0.2, 0.4]),
    ) {
        let p = DemandProfile::from_demands(d).unwrap();
        let supply = SupplySpec::Shortfall(shortfall);
        let cfg = SatisfactionConfig::default();
        for method in Method::ALL {
            let r = solve(method, &p, supply, alpha(1.0), &SolverConfig::default()).unwrap();
            let report = satisfaction_report(&p, &r, &cfg).unwrap();
            prop_assert_eq!(report.distribution.get(SatisfactionLevel::L1), 0.0);
            let total: f64 = report.distribution.as_array().iter().sum();
            prop_assert!((total - 100.0).abs() <= 1e-9);
        }
    }
}
