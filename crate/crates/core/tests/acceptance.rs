//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prospect_grid::oracles::{
    bruteforce_best_response, finite_difference_marginal, grid_bruteforce_ee, grid_bruteforce_opg,
    GridSpec,
};
use prospect_grid::scenario::{
    local_peaks, run_allocation_study, run_pricing_study, Scenario, SlotTable,
};
use prospect_grid::{
    design_ibr, g_function, individual_ee, marginal_benefit, solve_opg, solve_see_constrained,
    verify_reconstruction, ConsumerProfile, CostModel, DeltaPolicy, Population,
};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_population(rng: &mut ChaCha8Rng, k: usize, min_need: bool) -> Population {
    let alpha = rng.random_range(0.5..0.95);
    let lo = ((k - 1) as f64).powf(1.0 - alpha).max(1.0);
    let lambda = rng.random_range(lo..=3.0);
    let r: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..3.0)).collect();
    if min_need {
        let m: Vec<f64> = r.iter().map(|x| x / 2.0).collect();
        Population::with_min_needs(&r, &m, lambda, alpha).unwrap()
    } else {
        Population::new(&r, lambda, alpha).unwrap()
    }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for _ in 0..100 {
        let k = rng.random_range(2..=3);
        let pop = random_population(&mut rng, k, false);
        let chi = rng.random_range(0.0..=1.5 * pop.total_reference());
        let fast = solve_opg(chi, &pop).unwrap().objective;
        let oracle = grid_bruteforce_opg(chi, &pop, &GridSpec::new(0.005, chi))
            .unwrap()
            .objective;
        worst = worst.max(oracle - fast);
        if fast < oracle - 1e-3 {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "{failures}/100 instances below the grid oracle; max(oracle − solver) = {worst:.3e}"
        ),
    )
}

fn allocation_curve() -> Outcome {
    let scn = Scenario::paper_defaults();
    let rows = run_allocation_study(&scn).unwrap();
    let mut sums = Vec::new();
    let mut acc = 0.0;
    for r in scn.population().unwrap().sorted_reference_points() {
        acc += r;
        sums.push(acc);
    }
    let chi: Vec<f64> = rows.iter().map(|r| r.chi).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, curve) in [
        (
            "UPA",
            rows.iter().map(|r| r.improvement_upa).collect::<Vec<_>>(),
        ),
        (
            "PPA",
            rows.iter().map(|r| r.improvement_ppa).collect::<Vec<_>>(),
        ),
    ] {
        let min = curve.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = curve.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let peaks: Vec<f64> = local_peaks(&curve).into_iter().map(|i| chi[i]).collect();
        let matched = sums
            .iter()
            .filter(|s| peaks.iter().any(|p| (p - *s).abs() <= 0.2))
            .count();
        pass &= min >= 0.0 && matched >= 4 && (0.15..=0.45).contains(&max);
        parts.push(format!(
            "{name}: min {min:.4}, max {:.1}%, {matched} peaks near cumulative sums (peaks at {})",
            100.0 * max,
            peaks
                .iter()
                .map(|p| format!("{p:.2}"))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    outcome(pass, parts.join("; "))
}

fn tariff_reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cost = CostModel::quadratic(0.05, 0.5, 0.0);
    let step = 1e-3;
    let (mut violations, mut full_checks) = (0, 0);
    let mut first = None;
    for n in 0..100 {
        let k = rng.random_range(2..=4);
        let pop = random_population(&mut rng, k, false);
        let tariff = design_ibr(&pop, &cost, DeltaPolicy::Midpoint).unwrap();
        let report = verify_reconstruction(&tariff, &pop, &cost).unwrap();
        let all = report.curvature_condition == Some(true);
        full_checks += all as usize;
        let sigma = (tariff.p / pop.alpha())
            .powf(1.0 / (pop.alpha() - 1.0))
            .min(50.0);
        let r_max = pop.sorted_reference_points()[k - 1];
        let grid = GridSpec::new(step, r_max + sigma + 1.0);
        for (i, c) in pop.profiles().iter().enumerate() {
            if !all && report.exempt == Some(i) {
                continue;
            }
            let brute = bruteforce_best_response(&tariff, i, c, &grid).unwrap();
            if (brute - report.x_star[i]).abs() > step * 1.0001 {
                violations += 1;
                first.get_or_insert(format!(
                    "instance {n} consumer {i}: oracle {brute}, optimum {}",
                    report.x_star[i]
                ));
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{violations} violations over 100 instances ({full_checks} with every consumer checked){}",
            first.map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn slot_dominance() -> Outcome {
    let scn = Scenario::paper_defaults();
    let study = run_pricing_study(&scn, &SlotTable::bundled()).unwrap();
    let slots = &study.slots;
    let weak = slots
        .iter()
        .filter(|s| s.welfare_ibr >= s.welfare_flat)
        .count();
    let mut by_demand: Vec<_> = slots.iter().collect();
    by_demand.sort_by(|a, b| b.demand.total_cmp(&a.demand));
    let top3_strict = by_demand[..3]
        .iter()
        .all(|s| s.welfare_ibr > s.welfare_flat);
    let (std_ibr, std_flat) = study.load_std();
    outcome(
        weak == 24 && top3_strict && std_ibr < std_flat,
        format!(
            "IBR ≥ flat in {weak}/24 slots, top-3 demand slots strict: {top3_strict}, load std {std_ibr:.3} vs {std_flat:.3}"
        ),
    )
}

fn efficiency_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut problems = Vec::new();
    let mut max_iter = 0;
    let mut worst_gap: f64 = 0.0;
    for n in 0..100 {
        let k = rng.random_range(2..=3);
        let pop = random_population(&mut rng, k, true);
        let res = solve_see_constrained(&pop, 1e-8, 60).unwrap();
        max_iter = max_iter.max(res.iterations);
        let mut fail = |what: String| problems.push(format!("instance {n}: {what}"));
        if !res.converged || res.residual > 1e-8 {
            fail(format!(
                "residual {:.2e} after {} iterations",
                res.residual, res.iterations
            ));
        }
        if !(res.lower_bound < res.e_star && res.e_star < res.upper_bound) {
            fail(format!(
                "E* = {} outside ({}, {})",
                res.e_star, res.lower_bound, res.upper_bound
            ));
        }

        let alpha = pop.alpha();
        let r_hat_max = pop.profiles().iter().map(|c| c.r - c.m).fold(0.0, f64::max);
        let surplus_cap = (res.lower_bound / alpha).powf(1.0 / (alpha - 1.0));
        let bound = r_hat_max + surplus_cap + 0.1;
        let n_steps = if k == 2 { 800.0 } else { 120.0 };
        let grid = GridSpec::new(bound / n_steps, bound).with_refine(5);
        let oracle = grid_bruteforce_ee(&pop, &grid).unwrap().e_star;
        let gap = (oracle - res.e_star).abs() / res.e_star;
        worst_gap = worst_gap.max(gap);
        if gap > 1e-3 {
            fail(format!("oracle {oracle} vs solver {}", res.e_star));
        }

        let sorted: Vec<&ConsumerProfile> = pop.order().iter().map(|&i| pop.profile(i)).collect();
        let iee: Vec<_> = sorted.iter().map(|c| individual_ee(c).unwrap()).collect();
        for w in 0..k - 1 {
            let (a, b) = (&iee[w], &iee[w + 1]);
            let (ra, rb) = (sorted[w].r, sorted[w + 1].r);
            if ra < rb && !(b.x_iee - rb > a.x_iee - ra && b.u_iee < a.u_iee) {
                fail(format!(
                    "individual optimum ordering broken between r = {ra} and r = {rb}"
                ));
            }
        }

        let (lo, hi) = (res.lower_bound, res.upper_bound);
        // Closed interval: the root can sit within one scan step of either end.
        let signs: Vec<bool> = (0..=1000)
            .map(|j| g_function(lo + (hi - lo) * j as f64 / 1000.0, &pop).unwrap() > 0.0)
            .collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        if changes != 1 {
            fail(format!("g changes sign {changes} times"));
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "{} problems over 100 instances; max iterations {max_iter}, max oracle gap {worst_gap:.2e}{}",
            problems.len(),
            problems.first().map(|p| format!("; first: {p}")).unwrap_or_default()
        ),
    )
}

fn marginal_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..20 {
        let p = ConsumerProfile::new(
            rng.random_range(0.5..3.0),
            rng.random_range(1.0..3.0),
            rng.random_range(0.5..0.95),
        );
        for j in 0..1000 {
            let x = 3.0 * p.r * (j as f64 + 0.5) / 1000.0;
            let Ok(fd) = finite_difference_marginal(x, &p, h) else {
                continue;
            };
            let exact = marginal_benefit(x, &p).unwrap();
            worst = worst.max((fd - exact).abs() / exact.abs());
            checked += 1;
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max relative error {worst:.2e} over {checked} points on 20 profiles"),
    )
}

fn run_cli(out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_prospect-grid"))
        .args([
            "run",
            "paper_defaults",
            "--study",
            "all",
            "--seed",
            "7",
            "--out",
        ])
        .arg(out)
        .env("PROSPECT_GRID_LOG", "error")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    if !dirs.iter().all(|d| run_cli(d.path())) {
        return outcome(false, "CLI run failed");
    }
    let mut names: Vec<String> = std::fs::read_dir(dirs[0].path())
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| {
            let a = std::fs::read(dirs[0].path().join(n)).ok();
            let b = std::fs::read(dirs[1].path().join(n)).ok();
            a.is_none() || a != b
        })
        .collect();
    outcome(
        names.len() == 4 && differing.is_empty(),
        format!(
            "{} CSV files compared, {} differ",
            names.len(),
            differing.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "oracle equivalence (allocation)",
            oracle_equivalence,
            Duration::from_secs(120),
        ),
        (
            "allocation improvement curve",
            allocation_curve,
            Duration::from_secs(30),
        ),
        (
            "tariff best responses",
            tariff_reconstruction,
            Duration::MAX,
        ),
        (
            "welfare dominance per slot",
            slot_dominance,
            Duration::from_secs(30),
        ),
        (
            "constrained efficiency solver",
            efficiency_solver,
            Duration::MAX,
        ),
        (
            "marginal vs finite differences",
            marginal_consistency,
            Duration::MAX,
        ),
        ("CLI determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (n, (name, check, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut out = check();
        let took = start.elapsed();
        if took > budget {
            out.pass = false;
            out.detail
                .push_str(&format!("; over the {budget:?} budget"));
        }
        failed += !out.pass as usize;
        println!(
            "{} [{}] {name}: {} ({:.1}s)",
            if out.pass { "PASS" } else { "FAIL" },
            n + 1,
            out.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {}/7 criteria passed", 7 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
