//! Social welfare, its maximizer over total consumption, and the two-tier
//! (inclining block rate) tariff that makes consumers choose the
//! welfare-optimal consumption on their own.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::allocation::{Allocator, Branch};
use crate::error::{Error, Result};
use crate::numeric::golden_section_max;
use crate::population::Population;
use crate::utility::{pow_pos, utility_unchecked, ConsumerProfile};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Provider cost as a function of total consumption.
#[derive(Clone)]
pub enum CostModel {
    /// `aχ² + bχ + c`
    Quadratic { a: f64, b: f64, c: f64 },
    /// `bχ + c`
    Linear { b: f64, c: f64 },
    /// Arbitrary increasing cost given with its derivative.
    Custom {
        value: ScalarFn,
        derivative: ScalarFn,
    },
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostModel::Quadratic { a, b, c } => write!(f, "Quadratic {{ a: {a}, b: {b}, c: {c} }}"),
            CostModel::Linear { b, c } => write!(f, "Linear {{ b: {b}, c: {c} }}"),
            CostModel::Custom { .. } => f.write_str("Custom"),
        }
    }
}

impl CostModel {
    pub fn quadratic(a: f64, b: f64, c: f64) -> Self {
        CostModel::Quadratic { a, b, c }
    }

    pub fn custom(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CostModel::Custom {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }

    pub fn value(&self, chi: f64) -> f64 {
        match self {
            CostModel::Quadratic { a, b, c } => a * chi * chi + b * chi + c,
            CostModel::Linear { b, c } => b * chi + c,
            CostModel::Custom { value, .. } => value(chi),
        }
    }

    pub fn derivative(&self, chi: f64) -> f64 {
        match self {
            CostModel::Quadratic { a, b, .. } => 2.0 * a * chi + b,
            CostModel::Linear { b, .. } => *b,
            CostModel::Custom { derivative, .. } => derivative(chi),
        }
    }

    /// Checks `f_c' ≥ 0` on a 1001-point grid over `[0, upper]`.
    pub fn validate(&self, upper: f64) -> Result<()> {
        for i in 0..=1000 {
            let chi = upper * i as f64 / 1000.0;
            let d = self.derivative(chi);
            if !(d >= 0.0) {
                return Err(Error::Config(format!(
                    "cost must be non-decreasing: derivative {d} at chi = {chi}"
                )));
            }
        }
        Ok(())
    }
}

/// `Σ U(x_i*(χ)) − f_c(χ)` with `x*` the optimal split of `χ`.
pub fn welfare(chi: f64, pop: &Population, cost: &CostModel) -> Result<f64> {
    if !(chi >= 0.0) {
        return Err(Error::Domain(format!(
            "total consumption must be non-negative, got {chi}"
        )));
    }
    Ok(Allocator::new(pop)?.objective(chi) - cost.value(chi))
}

/// Welfare maximizer over total consumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiStar {
    pub chi: f64,
    /// Consumers at or above their reference point at `chi`.
    pub j_star: usize,
    pub welfare: f64,
    /// Upper end of the searched range.
    pub cap: f64,
}

/// Grid points per interval between consecutive cumulative reference sums.
const CHI_GRID: usize = 1000;

/// Global maximizer of [`welfare`] over `[0, χ_cap]`.
///
/// Each interval between consecutive cumulative reference sums is scanned on
/// a grid and the best grid point is refined by golden-section search.
pub fn find_chi_star(pop: &Population, cost: &CostModel) -> Result<ChiStar> {
    let alloc = Allocator::new(pop)?;
    let alpha = pop.alpha();
    let k = pop.len() as f64;
    let total = pop.total_reference();
    cost.validate(total + k * 10.0)?;
    let slope = cost.derivative(total);
    if !(slope > 0.0) {
        return Err(Error::Config(format!(
            "cost derivative at the total reference point must be positive, got {slope}"
        )));
    }
    let s_max = (slope / alpha).powf(1.0 / (alpha - 1.0));
    let cap = total + k * s_max;
    let w = |chi: f64| alloc.objective(chi) - cost.value(chi);

    let mut edges: Vec<f64> = alloc.cumulative_references().to_vec();
    edges.push(cap.max(total));
    let mut best = (0.0, w(0.0));
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let step = (hi - lo) / CHI_GRID as f64;
        let (mut idx, mut val) = (0, f64::NEG_INFINITY);
        for i in 0..=CHI_GRID {
            let v = w(lo + step * i as f64);
            if v > val {
                idx = i;
                val = v;
            }
        }
        let a = lo + step * idx.saturating_sub(1) as f64;
        let b = (lo + step * (idx + 1) as f64).min(hi);
        let (x, v) = golden_section_max(w, a, b, 1e-11);
        let (x, v) = if v >= val {
            (x, v)
        } else {
            (lo + step * idx as f64, val)
        };
        if v > best.1 {
            best = (x, v);
        }
    }
    let plan = alloc.plan(best.0);
    Ok(ChiStar {
        chi: best.0,
        j_star: plan.k,
        welfare: best.1,
        cap,
    })
}

/// `α·s^(α−1)`: marginal utility of a consumer with surplus `s` above its
/// reference point.
pub fn marginal_price_from_surplus(surplus: f64, alpha: f64) -> Result<f64> {
    if !(surplus > 0.0) {
        return Err(Error::DegenerateTariff(format!(
            "no surplus above the reference points (s = {surplus}); the marginal price is unbounded"
        )));
    }
    Ok(alpha * surplus.powf(alpha - 1.0))
}

/// Common marginal utility of the active consumers at the optimal split of
/// `chi_star`.
pub fn marginal_price_p(chi_star: f64, pop: &Population) -> Result<f64> {
    let alloc = Allocator::new(pop)?;
    let plan = alloc.plan(chi_star);
    if plan.k == 0 {
        return Err(Error::DegenerateTariff(
            "no consumer reaches its reference point".into(),
        ));
    }
    let sol = alloc.solve(chi_star)?;
    let surpluses: Vec<f64> = pop.order()[..plan.k]
        .iter()
        .map(|&i| sol.x[i] - pop.profile(i).r)
        .collect();
    let s0 = surpluses[0];
    if let Some(bad) = surpluses.iter().find(|s| (*s - s0).abs() > 1e-9) {
        return Err(Error::DegenerateTariff(format!(
            "active consumers have unequal surplus ({s0} vs {bad})"
        )));
    }
    marginal_price_from_surplus(if s0 > 1e-12 { s0 } else { 0.0 }, pop.alpha())
}

/// How Δ (the offset added to the lower-tier price) is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DeltaPolicy {
    /// Middle of the admissible window.
    Midpoint,
    /// A specific value; must lie in the window.
    Fixed(f64),
}

/// Quantities fixed while designing a tariff for one population.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignInfo {
    pub chi_star: f64,
    pub j_star: usize,
    pub welfare: f64,
    pub delta: f64,
    /// Lower end of the Δ window; the upper end is 0.
    pub delta_lower: f64,
    /// Set when the window was empty and Δ fell back to 0.
    pub window_empty: bool,
    /// `(p/(λα))^(1/(α−1))`, distance of each threshold below its reference point.
    pub theta: f64,
    /// `(p/α)^(1/(α−1))`, surplus of a consumer facing price `p`.
    pub sigma: f64,
    /// Newcomer branch at the optimum (None when every consumer is active or
    /// the split used the gain-side threshold rule).
    pub newcomer_branch: Option<Branch>,
    pub lambda: f64,
    pub alpha: f64,
}

/// Two-tier tariff: unit price `q` up to a per-consumer threshold, `p` above.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IbrTariff {
    pub q: f64,
    pub p: f64,
    /// `r_i − θ` per consumer, input order; may be negative. Empty for a flat tariff.
    pub thresholds: Vec<f64>,
    pub design: Option<DesignInfo>,
}

impl IbrTariff {
    /// Where the price switches from `q` to `p` for consumer `i`. Negative
    /// thresholds are clamped at zero so that `payment(0) = 0`.
    pub fn breakpoint(&self, i: usize) -> f64 {
        self.thresholds.get(i).map_or(0.0, |t| t.max(0.0))
    }

    /// Amount charged to consumer `i` for consuming `x`.
    pub fn payment(&self, i: usize, x: f64) -> f64 {
        let b = self.breakpoint(i);
        if x <= b {
            self.q * x
        } else {
            self.q * b + self.p * (x - b)
        }
    }

    pub fn is_flat(&self) -> bool {
        self.thresholds.is_empty() || self.q == self.p
    }
}

/// `(λr^α + σ^α − (σ+θ)p)/(r − θ)`: the lower-tier price at which a consumer
/// with reference point `r` is indifferent between 0 and `r + σ`.
fn indifference_price(r: f64, lambda: f64, alpha: f64, p: f64, theta: f64, sigma: f64) -> f64 {
    (lambda * r.powf(alpha) + sigma.powf(alpha) - (sigma + theta) * p) / (r - theta)
}

/// Designs the welfare-optimal two-tier tariff.
pub fn design_ibr(pop: &Population, cost: &CostModel, policy: DeltaPolicy) -> Result<IbrTariff> {
    let (lambda, alpha) = (pop.lambda(), pop.alpha());
    let opt = find_chi_star(pop, cost)?;
    if opt.j_star == 0 {
        return Err(Error::DegenerateTariff(format!(
            "welfare optimum chi* = {} leaves every consumer below its reference point",
            opt.chi
        )));
    }
    let alloc = Allocator::new(pop)?;
    let plan = alloc.plan(opt.chi);
    let p = marginal_price_p(opt.chi, pop)?;
    let theta = (p / (lambda * alpha)).powf(1.0 / (alpha - 1.0));
    let sigma = (p / alpha).powf(1.0 / (alpha - 1.0));
    let sorted = alloc.sorted_reference_points();
    let j = opt.j_star;
    let q_base = indifference_price(sorted[j - 1], lambda, alpha, p, theta, sigma);
    let q_next = if j < sorted.len() {
        indifference_price(sorted[j], lambda, alpha, p, theta, sigma)
    } else {
        0.0
    };
    let delta_lower = q_next - q_base;
    let window_empty = !(delta_lower < 0.0);
    let delta = match policy {
        DeltaPolicy::Midpoint if window_empty => {
            log::debug!("empty delta window (lower bound {delta_lower}); using delta = 0");
            0.0
        }
        DeltaPolicy::Midpoint => 0.5 * delta_lower,
        DeltaPolicy::Fixed(d) => {
            if !(d <= 0.0 && d > delta_lower) {
                return Err(Error::Config(format!(
                    "delta {d} outside the admissible window ({delta_lower}, 0]"
                )));
            }
            d
        }
    };
    let thresholds = pop.profiles().iter().map(|c| c.r - theta).collect();
    Ok(IbrTariff {
        q: q_base + delta,
        p,
        thresholds,
        design: Some(DesignInfo {
            chi_star: opt.chi,
            j_star: j,
            welfare: opt.welfare,
            delta,
            delta_lower,
            window_empty,
            theta,
            sigma,
            newcomer_branch: if j < sorted.len() { plan.branch } else { None },
            lambda,
            alpha,
        }),
    })
}

/// Flat single-rate tariff.
pub fn constant_rtp_tariff(p: f64) -> Result<IbrTariff> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!(
            "flat price must be positive, got {p}"
        )));
    }
    Ok(IbrTariff {
        q: p,
        p,
        thresholds: Vec::new(),
        design: None,
    })
}

/// Stationary points of `U(x) − c·x` on the loss and gain branches.
fn stationary_points(c: f64, r: f64, lambda: f64, alpha: f64) -> [Option<f64>; 2] {
    if !(c > 0.0) {
        return [None, None];
    }
    let loss = r - (c / (lambda * alpha)).powf(1.0 / (alpha - 1.0));
    let gain = r + (c / alpha).powf(1.0 / (alpha - 1.0));
    [
        (loss >= 0.0).then_some(loss),
        gain.is_finite().then_some(gain),
    ]
}

/// Consumption maximizing `U(x) − payment(x)` for consumer `i` with `profile`.
///
/// The candidates are the ends and kinks of the payment schedule and the
/// stationary points of each tier; ties go to the larger consumption.
pub fn best_response(tariff: &IbrTariff, i: usize, profile: &ConsumerProfile) -> f64 {
    let (r, lambda, alpha) = (profile.r, profile.lambda, profile.alpha);
    let b = tariff.breakpoint(i);
    let mut candidates = vec![0.0, b, r];
    for x in stationary_points(tariff.q, r, lambda, alpha)
        .into_iter()
        .flatten()
    {
        if x <= b {
            candidates.push(x);
        }
    }
    for x in stationary_points(tariff.p, r, lambda, alpha)
        .into_iter()
        .flatten()
    {
        if x >= b {
            candidates.push(x);
        }
    }
    let net = |x: f64| utility_unchecked(x, r, lambda, alpha) - tariff.payment(i, x);
    let mut best = (0.0, net(0.0));
    for x in candidates {
        let v = net(x);
        let tol = 1e-12 * (1.0 + v.abs());
        if v > best.1 + tol || ((v - best.1).abs() <= tol && x > best.0) {
            best = (x, v);
        }
    }
    best.0
}

/// Outcome of letting every consumer best-respond to a designed tariff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareReport {
    pub chi_star: f64,
    /// Welfare at the optimum.
    pub welfare: f64,
    pub j_star: usize,
    pub p: f64,
    /// Welfare-optimal consumption, input order.
    pub x_star: Vec<f64>,
    /// Best responses under the tariff, input order.
    pub responses: Vec<f64>,
    /// `responses[i]` equals `x_star[i]` within 1e-6 kW.
    pub matches: Vec<bool>,
    pub perfect: bool,
    /// Input index of the one consumer allowed to deviate, if any.
    pub exempt: Option<usize>,
    /// Positive residual budget with the next consumer left at zero, which
    /// guarantees every flag is set.
    pub full_match_condition: bool,
    /// For quadratic costs: `a ≤ α(1−α)r_K^(α−2)`.
    pub curvature_condition: Option<bool>,
}

/// Compares best responses with the welfare-optimal consumption.
pub fn verify_reconstruction(
    tariff: &IbrTariff,
    pop: &Population,
    cost: &CostModel,
) -> Result<WelfareReport> {
    let design = tariff.design.as_ref().ok_or_else(|| {
        Error::Config("reconstruction needs a designed tariff, not a flat one".into())
    })?;
    let alloc = Allocator::new(pop)?;
    let opt = alloc.solve(design.chi_star)?;
    let responses: Vec<f64> = pop
        .profiles()
        .iter()
        .enumerate()
        .map(|(i, c)| best_response(tariff, i, c))
        .collect();
    let matches: Vec<bool> = responses
        .iter()
        .zip(&opt.x)
        .map(|(a, b)| (a - b).abs() <= 1e-6)
        .collect();
    let plan = alloc.plan(design.chi_star);
    let exempt = pop.order().get(design.j_star).copied();
    let residual = design.chi_star - alloc.cumulative_references()[design.j_star];
    let full_match_condition =
        residual > 0.0 && (design.j_star == pop.len() || plan.newcomer == 0.0);
    let curvature_condition = match cost {
        CostModel::Quadratic { a, .. } => {
            let r_max = alloc.sorted_reference_points()[pop.len() - 1];
            let alpha = pop.alpha();
            Some(*a <= alpha * (1.0 - alpha) * pow_pos(r_max, alpha - 2.0))
        }
        _ => None,
    };
    Ok(WelfareReport {
        chi_star: design.chi_star,
        welfare: design.welfare,
        j_star: design.j_star,
        p: tariff.p,
        x_star: opt.x,
        perfect: matches.iter().all(|&m| m),
        responses,
        matches,
        exempt,
        full_match_condition,
        curvature_condition,
    })
}

/// Welfare actually realized when every consumer best-responds to `tariff`.
/// Returns `(welfare, responses)`.
pub fn realized_welfare(tariff: &IbrTariff, pop: &Population, cost: &CostModel) -> (f64, Vec<f64>) {
    let responses: Vec<f64> = pop
        .profiles()
        .iter()
        .enumerate()
        .map(|(i, c)| best_response(tariff, i, c))
        .collect();
    let utility: f64 = responses
        .iter()
        .zip(pop.profiles())
        .map(|(&x, c)| utility_unchecked(x, c.r, c.lambda, c.alpha))
        .sum();
    let total: f64 = responses.iter().sum();
    (utility - cost.value(total), responses)
}
