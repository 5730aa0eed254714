use proptest::prelude::*;

use prospect_grid::oracles::{bruteforce_best_response, GridSpec};
use prospect_grid::{
    best_response, constant_rtp_tariff, design_ibr, eval_utility, find_chi_star, realized_welfare,
    verify_reconstruction, welfare, CostModel, DeltaPolicy, IbrTariff, Population,
};

fn instance() -> impl Strategy<Value = Population> {
    (2usize..=5, 0.5f64..0.95, 0.0f64..1.0).prop_flat_map(|(k, alpha, t)| {
        let lo = ((k - 1) as f64).powf(1.0 - alpha).max(1.0);
        let lambda = lo + t * (3.0 - lo);
        prop::collection::vec(0.5f64..3.0, k)
            .prop_map(move |r| Population::new(&r, lambda, alpha).unwrap())
    })
}

fn base() -> (Population, CostModel) {
    (
        Population::new(&[1.0, 1.5, 2.0, 2.5, 3.0], 1.5, 0.8).unwrap(),
        CostModel::quadratic(0.05, 0.5, 0.0),
    )
}

fn net(tariff: &IbrTariff, pop: &Population, i: usize, x: f64) -> f64 {
    eval_utility(x, pop.profile(i)).unwrap() - tariff.payment(i, x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn responses_reproduce_the_optimum(pop in instance(), a in 0.005f64..0.2, b in 0.0f64..1.0) {
        let cost = CostModel::quadratic(a, b, 0.0);
        let Ok(tariff) = design_ibr(&pop, &cost, DeltaPolicy::Midpoint) else {
            return Ok(());
        };
        let design = tariff.design.clone().unwrap();
        let report = verify_reconstruction(&tariff, &pop, &cost).unwrap();
        if !design.window_empty {
            prop_assert!(report.matches.iter().filter(|&&m| !m).count() <= 1);
            for (i, &m) in report.matches.iter().enumerate() {
                prop_assert!(m || report.exempt == Some(i), "consumer {} deviates: {:?}", i, report);
            }
        }
        if report.curvature_condition == Some(true) {
            prop_assert!(report.perfect, "{:?}", report);
        }
    }

    #[test]
    fn ibr_beats_flat_when_reconstruction_is_perfect(
        pop in instance(), a in 0.005f64..0.2, b in 0.0f64..1.0,
    ) {
        let cost = CostModel::quadratic(a, b, 0.0);
        let Ok(tariff) = design_ibr(&pop, &cost, DeltaPolicy::Midpoint) else {
            return Ok(());
        };
        prop_assume!(verify_reconstruction(&tariff, &pop, &cost).unwrap().perfect);
        let flat = constant_rtp_tariff(tariff.p).unwrap();
        let (w_ibr, _) = realized_welfare(&tariff, &pop, &cost);
        let (w_flat, _) = realized_welfare(&flat, &pop, &cost);
        prop_assert!(w_ibr >= w_flat - 1e-9, "ibr {} flat {}", w_ibr, w_flat);
    }

    #[test]
    fn midpoint_sits_inside_the_window(pop in instance(), a in 0.005f64..0.2, b in 0.0f64..1.0) {
        let cost = CostModel::quadratic(a, b, 0.0);
        let Ok(tariff) = design_ibr(&pop, &cost, DeltaPolicy::Midpoint) else {
            return Ok(());
        };
        let d = tariff.design.unwrap();
        if d.window_empty {
            prop_assert_eq!(d.delta, 0.0);
            prop_assert!(d.delta_lower >= 0.0);
        } else {
            prop_assert!(d.delta_lower < d.delta && d.delta < 0.0);
        }
    }

    #[test]
    fn schedule_is_monotone_and_continuous(pop in instance(), a in 0.005f64..0.2, b in 0.0f64..1.0) {
        let cost = CostModel::quadratic(a, b, 0.0);
        let Ok(tariff) = design_ibr(&pop, &cost, DeltaPolicy::Midpoint) else {
            return Ok(());
        };
        prop_assume!(tariff.q >= 0.0 && tariff.p >= 0.0);
        for i in 0..pop.len() {
            let pay: Vec<f64> = (0..=400).map(|j| tariff.payment(i, j as f64 * 0.025)).collect();
            prop_assert!(pay.windows(2).all(|w| w[1] >= w[0]));
            let bp = tariff.breakpoint(i);
            let gap = tariff.payment(i, bp + 1e-9) - tariff.payment(i, (bp - 1e-9).max(0.0));
            prop_assert!(gap.abs() < 1e-7);
        }
    }

    #[test]
    fn best_response_agrees_with_grid(pop in instance(), a in 0.005f64..0.2, b in 0.0f64..1.0) {
        let cost = CostModel::quadratic(a, b, 0.0);
        let Ok(tariff) = design_ibr(&pop, &cost, DeltaPolicy::Midpoint) else {
            return Ok(());
        };
        let sigma = (tariff.p / pop.alpha()).powf(1.0 / (pop.alpha() - 1.0)).min(50.0);
        let grid = GridSpec::new(1e-3, 3.0 + sigma + 1.0);
        for (i, c) in pop.profiles().iter().enumerate() {
            let fast = best_response(&tariff, i, c);
            let brute = bruteforce_best_response(&tariff, i, c, &grid).unwrap();
            // Near-ties between two local maxima can legitimately flip.
            let close = (fast - brute).abs() <= 1.0001e-3;
            let tie = (net(&tariff, &pop, i, fast) - net(&tariff, &pop, i, brute)).abs() < 1e-5;
            prop_assert!(close || tie, "consumer {}: {} vs {}", i, fast, brute);
            prop_assert!(net(&tariff, &pop, i, fast) >= net(&tariff, &pop, i, brute) - 1e-12);
        }
    }
}

#[test]
fn default_tariff_matches_fine_grid() {
    let (pop, cost) = base();
    let tariff = design_ibr(&pop, &cost, DeltaPolicy::Midpoint).unwrap();
    let report = verify_reconstruction(&tariff, &pop, &cost).unwrap();
    let grid = GridSpec::new(1e-4, 8.0);
    for (i, c) in pop.profiles().iter().enumerate() {
        let brute = bruteforce_best_response(&tariff, i, c, &grid).unwrap();
        assert!((brute - best_response(&tariff, i, c)).abs() <= 1e-4);
        if report.exempt != Some(i) {
            assert!((brute - report.x_star[i]).abs() <= 1e-4, "consumer {i}");
        }
    }
}

#[test]
fn default_participation_margins() {
    let (pop, cost) = base();
    let tariff = design_ibr(&pop, &cost, DeltaPolicy::Midpoint).unwrap();
    let d = tariff.design.clone().unwrap();
    let report = verify_reconstruction(&tariff, &pop, &cost).unwrap();
    let last_in = pop.order()[d.j_star - 1];
    assert!(net(&tariff, &pop, last_in, report.x_star[last_in]) > 0.0);
    if let Some(&out) = pop.order().get(d.j_star + 1) {
        assert_eq!(best_response(&tariff, out, pop.profile(out)), 0.0);
        let r = pop.profile(out).r;
        assert!(net(&tariff, &pop, out, r + d.sigma) < 0.0);
    }
}

#[test]
fn default_marginals_equal_price() {
    let (pop, cost) = base();
    let tariff = design_ibr(&pop, &cost, DeltaPolicy::Midpoint).unwrap();
    let report = verify_reconstruction(&tariff, &pop, &cost).unwrap();
    for &i in &pop.order()[..report.j_star] {
        let m = prospect_grid::marginal_benefit(report.x_star[i], pop.profile(i)).unwrap();
        assert!(
            (m - tariff.p).abs() < 1e-9 * tariff.p,
            "consumer {i}: {m} vs {}",
            tariff.p
        );
    }
}

#[test]
fn default_chi_star_matches_dense_scan() {
    let (pop, cost) = base();
    let star = find_chi_star(&pop, &cost).unwrap();
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    let n = (star.cap / 1e-4) as usize;
    for j in 0..=n {
        let chi = j as f64 * 1e-4;
        let w = welfare(chi, &pop, &cost).unwrap();
        if w > best {
            best = w;
            arg = chi;
        }
    }
    assert!((arg - star.chi).abs() < 1e-3, "scan {arg} vs {}", star.chi);
    assert!(star.welfare >= best - 1e-12);
}

#[test]
fn flat_response_is_surplus_or_nothing() {
    let pop = Population::new(&[1.0, 2.0], 1.5, 0.8).unwrap();
    for p in [0.3, 0.8, 1.2, 5.0] {
        let flat = constant_rtp_tariff(p).unwrap();
        for (i, c) in pop.profiles().iter().enumerate() {
            let x = c.r + (p / c.alpha).powf(1.0 / (c.alpha - 1.0));
            let expected = if net(&flat, &pop, i, x) >= 0.0 {
                x
            } else {
                0.0
            };
            assert!((best_response(&flat, i, c) - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn linear_cost_above_best_average_value_shuts_everything_off() {
    let (pop, _) = base();
    let best = prospect_grid::individual_ee(pop.profile(0)).unwrap().u_iee;
    let steep = CostModel::Linear {
        b: 1.01 * best,
        c: 0.0,
    };
    assert_eq!(find_chi_star(&pop, &steep).unwrap().chi, 0.0);
    // A slope equal to the marginal value at zero is not enough: the utility is
    // convex below the reference point, so its average value exceeds λα.
    let at_zero = CostModel::Linear {
        b: 1.5 * 0.8,
        c: 0.0,
    };
    assert!(find_chi_star(&pop, &at_zero).unwrap().chi > 0.0);
}
