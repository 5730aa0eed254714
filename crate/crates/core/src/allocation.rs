//! Sum-utility maximization under a total power budget, and the two simple
//! baselines it is compared against.
//!
//! The exact solver works on consumers sorted by reference point. Consumers
//! are brought up to their reference points one at a time; the first `k` of
//! them form an aggregate whose utility surplus behaves like
//! `k^(1-α)·s^α` when a common surplus `s` is spread over them. The residual
//! budget is then split between that aggregate and the next consumer, which
//! is one of two two-variable subproblems depending on whether `k^(1-α) ≤ λ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{bisect, expand_bracket};
use crate::population::Population;
use crate::utility::{pow_pos, utility_unchecked};

/// Which case of a two-variable split produced the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// The whole budget stays with the aggregate.
    AllToX,
    /// The newcomer receives power but stays below its reference point.
    InteriorLoss,
    /// Both sides end above their reference points.
    InteriorGain,
}

/// A two-variable split `x + y = C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubproblemSolution {
    /// Power to the aggregate (concave) term.
    pub x: f64,
    /// Power to the newcomer (sigmoidal) term.
    pub y: f64,
    pub branch: Branch,
}

/// How the final residual budget was placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// Budget below the smallest reference point; one consumer takes it all.
    SingleConsumer,
    /// Aggregate coefficient `≤ λ`.
    LossDominant,
    /// Aggregate coefficient `> λ`; the split switched to the threshold rule.
    GainDominant,
    /// Every consumer is at or above its reference point.
    AllActive,
    /// One of the baseline allocators.
    Baseline,
    /// Exhaustive grid search.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    /// Consumption per consumer, in input order.
    pub x: Vec<f64>,
    /// Number of consumers at or above their reference point.
    pub active: usize,
    pub objective: f64,
    pub chi_used: f64,
    pub regime: Regime,
    /// Set when the last step was a two-variable split.
    pub branch: Option<Branch>,
}

fn check_shape(lambda: f64, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha outside (0,1): {alpha}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be positive: {lambda}")));
    }
    Ok(())
}

fn check_budget(c: f64) -> Result<()> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Domain(format!(
            "budget must be a finite non-negative number, got {c}"
        )));
    }
    Ok(())
}

/// Gain-side split shared by both subproblems once the newcomer is past `r`.
#[inline]
fn gain_split(c: f64, r: f64, s: f64) -> SubproblemSolution {
    SubproblemSolution {
        x: (c - r) * s / (1.0 + s),
        y: r + (c - r) / (1.0 + s),
        branch: Branch::InteriorGain,
    }
}

#[inline]
fn split_a(c: f64, r: f64, a1: f64, lambda: f64, alpha: f64) -> SubproblemSolution {
    let ratio = lambda / a1;
    let threshold = r * ratio.powf(1.0 / (alpha - 1.0));
    if c <= threshold {
        SubproblemSolution {
            x: c,
            y: 0.0,
            branch: Branch::AllToX,
        }
    } else if c <= r {
        let t = ratio.powf(1.0 / (1.0 - alpha));
        let x = (r - c) / (t - 1.0);
        SubproblemSolution {
            x,
            y: c - x,
            branch: Branch::InteriorLoss,
        }
    } else {
        gain_split(c, r, a1.powf(1.0 / (1.0 - alpha)))
    }
}

/// Maximizes `a1·x^α + λr^α − λ(r−y)^α` (or its gain form for `y ≥ r`)
/// subject to `x + y = C1`, for an aggregate coefficient `0 < a1 ≤ λ`.
pub fn solve_subproblem_a(
    c1: f64,
    r: f64,
    a1: f64,
    lambda: f64,
    alpha: f64,
) -> Result<SubproblemSolution> {
    check_shape(lambda, alpha)?;
    check_budget(c1)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!(
            "reference point must be positive, got {r}"
        )));
    }
    if !(a1 > 0.0) {
        return Err(Error::Domain(format!(
            "aggregate coefficient must be positive, got {a1}"
        )));
    }
    if a1 > lambda {
        return Err(Error::Regime(format!(
            "coefficient {a1} exceeds lambda {lambda}; use solve_subproblem_b"
        )));
    }
    Ok(split_a(c1, r, a1, lambda, alpha))
}

#[inline]
fn gamma1_residual(g: f64, a2: f64, lambda: f64, alpha: f64, scale: f64) -> f64 {
    a2 * g.powf(alpha) - pow_pos(g - 1.0, alpha) * scale - lambda
}

/// Threshold multiplier for the second subproblem: the unique `γ > 1` with
/// `a2·γ^α − (γ−1)^α·(1+a2^(1/(1−α)))^(1−α) = λ`.
///
/// The left side minus `λ` is `a2 − λ > 0` at `γ = 1` and strictly
/// decreasing afterwards, so a rightward scan always finds one sign change.
pub fn gamma1_root(a2: f64, lambda: f64, alpha: f64) -> Result<f64> {
    check_shape(lambda, alpha)?;
    if !(a2 > lambda) {
        return Err(Error::Regime(format!(
            "coefficient {a2} does not exceed lambda {lambda}; use solve_subproblem_a"
        )));
    }
    let s = a2.powf(1.0 / (1.0 - alpha));
    let scale = (1.0 + s).powf(1.0 - alpha);
    let h = |g: f64| gamma1_residual(g, a2, lambda, alpha, scale);
    let (lo, hi) = expand_bracket("gamma1", h, 1.0, 1e-2, 200)?;
    let root = bisect("gamma1", h, lo, hi, 1e-12, 400)?;
    if root.residual > 1e-10 {
        return Err(Error::Bracket {
            what: "gamma1 (residual above 1e-10)",
            lo,
            hi,
            f_lo: h(lo),
            f_hi: h(hi),
        });
    }
    Ok(root.x)
}

#[inline]
fn split_b(c: f64, r: f64, a2: f64, alpha: f64, gamma1: f64) -> SubproblemSolution {
    if c < r * gamma1 {
        SubproblemSolution {
            x: c,
            y: 0.0,
            branch: Branch::AllToX,
        }
    } else {
        gain_split(c, r, a2.powf(1.0 / (1.0 - alpha)))
    }
}

/// Same split as [`solve_subproblem_a`] for an aggregate coefficient `a2 > λ`.
/// Here the newcomer is either left out or pushed past its reference point.
pub fn solve_subproblem_b(
    c2: f64,
    r: f64,
    a2: f64,
    lambda: f64,
    alpha: f64,
) -> Result<SubproblemSolution> {
    check_budget(c2)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!(
            "reference point must be positive, got {r}"
        )));
    }
    let g = gamma1_root(a2, lambda, alpha)?;
    Ok(split_b(c2, r, a2, alpha, g))
}

/// Reusable solver for one population. Caches the sorted reference points,
/// prefix sums and the γ1 thresholds so that budget sweeps stay cheap.
#[derive(Debug, Clone)]
pub struct Allocator<'a> {
    pop: &'a Population,
    sorted: Vec<f64>,
    /// `prefix[k]` = sum of the `k` smallest reference points.
    prefix: Vec<f64>,
    /// `anchor_prefix[k]` = sum of `λr^α` over the `k` smallest.
    anchor_prefix: Vec<f64>,
    /// `gamma[k]` is γ1 for the `k`-consumer aggregate when `k^(1−α) > λ`.
    gamma: Vec<Option<f64>>,
}

/// Shape of the optimal point, in sorted order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AllocationPlan {
    /// Consumers `0..k` (sorted) sit at `r_i + surplus`.
    pub k: usize,
    pub surplus: f64,
    /// Power to sorted consumer `k`, if it exists.
    pub newcomer: f64,
    pub regime: Regime,
    pub branch: Option<Branch>,
}

impl<'a> Allocator<'a> {
    pub fn new(pop: &'a Population) -> Result<Self> {
        let (lambda, alpha) = (pop.lambda(), pop.alpha());
        let sorted = pop.sorted_reference_points();
        let k_total = sorted.len();
        let mut prefix = Vec::with_capacity(k_total + 1);
        let mut anchor_prefix = Vec::with_capacity(k_total + 1);
        prefix.push(0.0);
        anchor_prefix.push(0.0);
        for &r in &sorted {
            prefix.push(prefix.last().unwrap() + r);
            anchor_prefix.push(anchor_prefix.last().unwrap() + lambda * r.powf(alpha));
        }
        let mut gamma = vec![None; k_total + 1];
        for (k, slot) in gamma.iter_mut().enumerate().take(k_total).skip(1) {
            let a = (k as f64).powf(1.0 - alpha);
            if a > lambda {
                *slot = Some(gamma1_root(a, lambda, alpha)?);
            }
        }
        Ok(Self {
            pop,
            sorted,
            prefix,
            anchor_prefix,
            gamma,
        })
    }

    pub fn population(&self) -> &Population {
        self.pop
    }

    /// Sorted reference points.
    pub fn sorted_reference_points(&self) -> &[f64] {
        &self.sorted
    }

    /// Cumulative reference sums `S_0 = 0, S_1, …, S_K`.
    pub fn cumulative_references(&self) -> &[f64] {
        &self.prefix
    }

    /// Structure of the optimum at budget `chi` (assumed non-negative).
    pub fn plan(&self, chi: f64) -> AllocationPlan {
        let (lambda, alpha) = (self.pop.lambda(), self.pop.alpha());
        let k_total = self.sorted.len();
        if chi < self.sorted[0] {
            return AllocationPlan {
                k: 0,
                surplus: 0.0,
                newcomer: chi,
                regime: Regime::SingleConsumer,
                branch: None,
            };
        }
        let mut k = 1;
        loop {
            let c = chi - self.prefix[k];
            if k == k_total {
                return AllocationPlan {
                    k,
                    surplus: c / k as f64,
                    newcomer: 0.0,
                    regime: Regime::AllActive,
                    branch: None,
                };
            }
            let r_next = self.sorted[k];
            match self.gamma[k] {
                None if c < r_next => {
                    let a = (k as f64).powf(1.0 - alpha);
                    let s = split_a(c, r_next, a, lambda, alpha);
                    return AllocationPlan {
                        k,
                        surplus: s.x / k as f64,
                        newcomer: s.y,
                        regime: Regime::LossDominant,
                        branch: Some(s.branch),
                    };
                }
                Some(g) if c < r_next * g => {
                    return AllocationPlan {
                        k,
                        surplus: c / k as f64,
                        newcomer: 0.0,
                        regime: Regime::GainDominant,
                        branch: Some(Branch::AllToX),
                    };
                }
                _ => k += 1,
            }
        }
    }

    /// Optimal sum-utility at budget `chi` without building the allocation.
    pub fn objective(&self, chi: f64) -> f64 {
        let (lambda, alpha) = (self.pop.lambda(), self.pop.alpha());
        let plan = self.plan(chi);
        let aggregate = self.anchor_prefix[plan.k] + plan.k as f64 * pow_pos(plan.surplus, alpha);
        let newcomer = if plan.k < self.sorted.len() {
            utility_unchecked(plan.newcomer, self.sorted[plan.k], lambda, alpha)
        } else {
            0.0
        };
        aggregate + newcomer
    }

    /// Allocation in sorted order and the plan that produced it.
    fn sorted_allocation(&self, chi: f64) -> (Vec<f64>, AllocationPlan) {
        let plan = self.plan(chi);
        let mut x = vec![0.0; self.sorted.len()];
        for (xi, &ri) in x.iter_mut().zip(&self.sorted).take(plan.k) {
            *xi = ri + plan.surplus;
        }
        if plan.k < x.len() {
            x[plan.k] = plan.newcomer;
        }
        (x, plan)
    }

    pub fn solve(&self, chi: f64) -> Result<AllocationResult> {
        check_budget(chi)?;
        let (lambda, alpha) = (self.pop.lambda(), self.pop.alpha());
        let (xs, plan) = self.sorted_allocation(chi);
        let objective = xs
            .iter()
            .zip(&self.sorted)
            .map(|(&x, &r)| utility_unchecked(x, r, lambda, alpha))
            .sum();
        let active = xs
            .iter()
            .zip(&self.sorted)
            .filter(|(&x, &r)| x >= r - 1e-9)
            .count();
        Ok(AllocationResult {
            x: self.pop.unsort(&xs),
            active,
            objective,
            chi_used: xs.iter().sum(),
            regime: plan.regime,
            branch: plan.branch,
        })
    }
}

/// Exact sum-utility maximizer: maximize `Σ U(x_i; r_i)` subject to
/// `Σ x_i ≤ χ`, `x_i ≥ 0`.
pub fn solve_opg(chi: f64, pop: &Population) -> Result<AllocationResult> {
    check_budget(chi)?;
    Allocator::new(pop)?.solve(chi)
}

fn baseline(x: Vec<f64>, pop: &Population) -> AllocationResult {
    let (lambda, alpha) = (pop.lambda(), pop.alpha());
    let mut objective = 0.0;
    let mut active = 0;
    for (&xi, p) in x.iter().zip(pop.profiles()) {
        objective += utility_unchecked(xi, p.r, lambda, alpha);
        if xi >= p.r - 1e-9 {
            active += 1;
        }
    }
    AllocationResult {
        chi_used: x.iter().sum(),
        x,
        active,
        objective,
        regime: Regime::Baseline,
        branch: None,
    }
}

/// Proportional allocation: each consumer gets `χ·r_i/Σr`.
pub fn allocate_ppa(chi: f64, pop: &Population) -> Result<AllocationResult> {
    check_budget(chi)?;
    let total = pop.total_reference();
    let x = pop.profiles().iter().map(|p| chi * p.r / total).collect();
    Ok(baseline(x, pop))
}

/// Uniform allocation: each consumer gets `χ/K`.
pub fn allocate_upa(chi: f64, pop: &Population) -> Result<AllocationResult> {
    check_budget(chi)?;
    let share = chi / pop.len() as f64;
    Ok(baseline(vec![share; pop.len()], pop))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_consumers() -> Population {
        Population::new(&[1.0, 1.5, 2.0, 2.5, 3.0], 1.5, 0.8).unwrap()
    }

    #[test]
    fn subproblem_a_branches() {
        let s = solve_subproblem_a(0.1, 1.0, 1.0, 1.5, 0.8).unwrap();
        assert_eq!((s.x, s.y, s.branch), (0.1, 0.0, Branch::AllToX));

        let s = solve_subproblem_a(3.0, 1.0, 1.0, 1.5, 0.8).unwrap();
        assert!((s.x - 1.0).abs() < 1e-12 && (s.y - 2.0).abs() < 1e-12);
        assert_eq!(s.branch, Branch::InteriorGain);

        // 0.5 / (1.5^5 - 1)
        let s = solve_subproblem_a(0.5, 1.0, 1.0, 1.5, 0.8).unwrap();
        assert!((s.x - 0.075_829_383_886_255_92).abs() < 1e-12);
        assert!((s.x + s.y - 0.5).abs() < 1e-12);
        assert_eq!(s.branch, Branch::InteriorLoss);

        // threshold 1.5^-5
        let t = 0.131_687_242_798_353_91;
        assert_eq!(
            solve_subproblem_a(t - 1e-9, 1.0, 1.0, 1.5, 0.8)
                .unwrap()
                .branch,
            Branch::AllToX
        );
        assert_eq!(
            solve_subproblem_a(t + 1e-9, 1.0, 1.0, 1.5, 0.8)
                .unwrap()
                .branch,
            Branch::InteriorLoss
        );
    }

    #[test]
    fn subproblem_a_rejects() {
        assert!(matches!(
            solve_subproblem_a(1.0, 1.0, 2.0, 1.5, 0.8),
            Err(Error::Regime(_))
        ));
        assert!(matches!(
            solve_subproblem_a(-1.0, 1.0, 1.0, 1.5, 0.8),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gamma1_values() {
        let a2 = 2f64.powf(0.2);
        let g = gamma1_root(a2, 1.0, 0.8).unwrap();
        assert!((g - 1.171_108_217_151_765_6).abs() < 1e-9);
        assert!(g > 1.1 && g < 1.2);
        let s = a2.powf(5.0);
        let resid = a2 * g.powf(0.8) - (g - 1.0).powf(0.8) / (1.0 + s).powf(-0.2) - 1.0;
        assert!(resid.abs() <= 1e-10);

        let near = gamma1_root(1.0 + 1e-9, 1.0, 0.8).unwrap();
        assert!(near > 1.0 && near - 1.0 < 1e-2);
        assert!(matches!(gamma1_root(1.0, 1.5, 0.8), Err(Error::Regime(_))));
    }

    #[test]
    fn subproblem_b_branches() {
        let a2 = 2f64.powf(0.2);
        let g = gamma1_root(a2, 1.0, 0.8).unwrap();
        let s = solve_subproblem_b(0.5 * g, 1.0, a2, 1.0, 0.8).unwrap();
        assert_eq!((s.y, s.branch), (0.0, Branch::AllToX));
        let s = solve_subproblem_b(3.0, 1.0, a2, 1.0, 0.8).unwrap();
        assert_eq!(s.branch, Branch::InteriorGain);
        assert!((s.x + s.y - 3.0).abs() < 1e-12);
    }

    #[test]
    fn opg_boundaries() {
        let pop = five_consumers();
        let res = solve_opg(10.0, &pop).unwrap();
        for (x, r) in res.x.iter().zip([1.0, 1.5, 2.0, 2.5, 3.0]) {
            assert!((x - r).abs() < 1e-12);
        }
        assert_eq!(res.active, 5);
        // 1.5 * Σ r_i^0.8
        assert!((res.objective - 12.920_806_046_400_322).abs() < 1e-9);

        let res = solve_opg(0.0, &pop).unwrap();
        assert!(res.x.iter().all(|&x| x == 0.0));
        assert_eq!(res.active, 0);
        assert_eq!(res.objective, 0.0);
        assert!(solve_opg(-1.0, &pop).is_err());
    }

    #[test]
    fn objective_shortcut_agrees() {
        let pop = Population::new(&[2.0, 0.7, 1.3, 3.1], 1.1, 0.6).unwrap();
        let alloc = Allocator::new(&pop).unwrap();
        for i in 0..400 {
            let chi = i as f64 * 0.03;
            let full = alloc.solve(chi).unwrap();
            assert!((alloc.objective(chi) - full.objective).abs() < 1e-9);
            assert!(full.chi_used <= chi + 1e-9);
        }
    }

    #[test]
    fn input_order_is_restored() {
        let pop = Population::new(&[3.0, 1.0, 2.0], 1.5, 0.8).unwrap();
        let res = solve_opg(3.0, &pop).unwrap();
        assert!((res.x[1] - 1.0 - (res.x[2] - 2.0)).abs() < 1e-12);
        assert!(res.x[1] >= 1.0);
    }

    #[test]
    fn baselines() {
        let pop = five_consumers();
        let ppa = allocate_ppa(5.0, &pop).unwrap();
        assert_eq!(ppa.x, vec![0.5, 0.75, 1.0, 1.25, 1.5]);
        assert_eq!(ppa.chi_used, 5.0);
        let upa = allocate_upa(10.0, &pop).unwrap();
        assert_eq!(upa.x, vec![2.0; 5]);
        assert!(allocate_upa(0.0, &pop).unwrap().x.iter().all(|&x| x == 0.0));
    }
}
