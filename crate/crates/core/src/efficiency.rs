//! Energy efficiency: utility delivered per kW consumed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::bisect;
use crate::population::Population;
use crate::utility::{pow_pos, utility_unchecked, ConsumerProfile};

/// Which stationarity condition defines the individual optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum IeeVariant {
    /// `xα(x−r)^(α−1) − (x−r)^α − λr^α = 0`, the true stationary point of `U(x)/x`.
    #[default]
    LossAverse,
    /// The same equation with the last term `r^α` (coincides with the above at `λ = 1`).
    Literal,
}

/// Individually most efficient consumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IeePoint {
    pub x_iee: f64,
    /// `U(x_iee)/x_iee`
    pub u_iee: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EeResult {
    pub e_star: f64,
    /// Consumption per consumer, input order.
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `|g(e_star)|`; zero for the closed-form unconstrained case.
    pub residual: f64,
    pub converged: bool,
    /// Bracket the root was searched in (`M1/M2`, `u_1^IEE`).
    pub lower_bound: f64,
    pub upper_bound: f64,
}

fn iee_residual(x: f64, r: f64, weight: f64, alpha: f64) -> f64 {
    let d = x - r;
    x * alpha * d.powf(alpha - 1.0) - d.powf(alpha) - weight * r.powf(alpha)
}

/// Root of the stationarity condition, bracketed in `(r, 2r)`.
pub fn individual_ee_with(p: &ConsumerProfile, variant: IeeVariant) -> Result<IeePoint> {
    p.validate()?;
    let (r, alpha) = (p.r, p.alpha);
    let weight = match variant {
        IeeVariant::LossAverse => p.lambda,
        IeeVariant::Literal => 1.0,
    };
    let f = |x: f64| iee_residual(x, r, weight, alpha);
    // Just right of r the first term dominates; at 2r the residual is r^α(2α−1−weight) < 0.
    let lo = r * (1.0 + 1e-14);
    let tol = 1e-13 * r.powf(alpha).max(1.0);
    let root = bisect("individual efficiency", f, lo, 2.0 * r, tol, 2000)?;
    Ok(IeePoint {
        x_iee: root.x,
        u_iee: utility_unchecked(root.x, r, p.lambda, alpha) / root.x,
    })
}

pub fn individual_ee(p: &ConsumerProfile) -> Result<IeePoint> {
    individual_ee_with(p, IeeVariant::default())
}

/// `ΣU(x_i)/Σx_i`; zero when nothing is consumed.
pub fn sum_efficiency(x: &[f64], pop: &Population) -> f64 {
    let total: f64 = x.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let u: f64 = x
        .iter()
        .zip(pop.profiles())
        .map(|(&xi, c)| utility_unchecked(xi, c.r, c.lambda, c.alpha))
        .sum();
    u / total
}

/// Most efficient allocation with no minimum needs: only the consumer with
/// the smallest reference point is served, at its individual optimum.
pub fn solve_see(pop: &Population) -> Result<EeResult> {
    if pop.profiles().iter().any(|c| c.m != 0.0) {
        return Err(Error::Config(
            "solve_see requires zero minimum needs; use solve_see_constrained".into(),
        ));
    }
    let first = pop.order()[0];
    let iee = individual_ee(pop.profile(first))?;
    let mut x = vec![0.0; pop.len()];
    x[first] = iee.x_iee;
    Ok(EeResult {
        e_star: iee.u_iee,
        x,
        iterations: 0,
        residual: 0.0,
        converged: true,
        lower_bound: 0.0,
        upper_bound: iee.u_iee,
    })
}

fn surplus_response(e: f64, r_hat: f64, lambda: f64, alpha: f64) -> f64 {
    let s = (e / alpha).powf(1.0 / (alpha - 1.0));
    let ratio = (lambda * pow_pos(r_hat, alpha) + pow_pos(s, alpha)) / (r_hat + s);
    if ratio > e {
        r_hat + s
    } else {
        0.0
    }
}

/// Consumption above the minimum needs that maximizes
/// `U(m+x̂; r) − E·x̂` per consumer, input order.
pub fn x_hat(e: f64, pop: &Population) -> Result<Vec<f64>> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::Domain(format!(
            "efficiency level must be positive, got {e}"
        )));
    }
    Ok(pop
        .profiles()
        .iter()
        .map(|c| surplus_response(e, c.r - c.m, c.lambda, c.alpha))
        .collect())
}

/// Utility and power already committed by the minimum needs.
fn committed(pop: &Population) -> (f64, f64) {
    pop.profiles().iter().fold((0.0, 0.0), |(u, x), c| {
        (u + utility_unchecked(c.m, c.r, c.lambda, c.alpha), x + c.m)
    })
}

fn g_inner(e: f64, pop: &Population, m1: f64, m2: f64) -> f64 {
    let (mut u, mut x) = (m1, m2);
    for c in pop.profiles() {
        let r_hat = c.r - c.m;
        let xh = surplus_response(e, r_hat, c.lambda, c.alpha);
        if xh > 0.0 {
            u += utility_unchecked(xh, r_hat, c.lambda, c.alpha);
            x += xh;
        }
    }
    u / x - e
}

/// `(M1 + ΣU(x̂_i(E); r̂_i))/(M2 + Σx̂_i(E)) − E`, whose unique root is the
/// best efficiency reachable while honouring the minimum needs.
pub fn g_function(e: f64, pop: &Population) -> Result<f64> {
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::Domain(format!(
            "efficiency level must be positive, got {e}"
        )));
    }
    let (m1, m2) = committed(pop);
    if !(m2 > 0.0) {
        return Err(Error::Config(
            "g is undefined without minimum needs (M2 = 0)".into(),
        ));
    }
    Ok(g_inner(e, pop, m1, m2))
}

pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_ITER_MAX: usize = 200;

/// Most efficient allocation subject to `x_i ≥ m_i`, by bisection on `g`.
///
/// Populations without minimum needs are delegated to [`solve_see`].
pub fn solve_see_constrained(pop: &Population, epsilon: f64, iter_max: usize) -> Result<EeResult> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {epsilon}"
        )));
    }
    let (m1, m2) = committed(pop);
    if m2 == 0.0 {
        return solve_see(pop);
    }
    let lower = m1 / m2;
    let upper = individual_ee(pop.profile(pop.order()[0]))?.u_iee;
    let g = |e: f64| g_inner(e, pop, m1, m2);

    let (mut lo, mut hi) = (lower, upper);
    let (mut g_lo, mut g_hi) = (g(lo), g(hi));
    let mut iterations = 0;
    while g_lo.abs().min(g_hi.abs()) > epsilon && iterations < iter_max {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid <= 0.0 {
            hi = mid;
            g_hi = g_mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
        iterations += 1;
    }
    let (e_star, residual) = if g_lo.abs() <= g_hi.abs() {
        (lo, g_lo.abs())
    } else {
        (hi, g_hi.abs())
    };
    let x = pop
        .profiles()
        .iter()
        .map(|c| c.m + surplus_response(e_star, c.r - c.m, c.lambda, c.alpha))
        .collect();
    Ok(EeResult {
        e_star,
        x,
        iterations,
        residual,
        converged: residual <= epsilon,
        lower_bound: lower,
        upper_bound: upper,
    })
}
