//! S-shaped consumer utility.
//!
//! Below its reference point `r` a consumer perceives consumption as a loss
//! (`-λ(r-x)^α`, convex in `x`), above it as a gain (`(x-r)^α`, concave). The
//! constant `λr^α` anchors the curve so that zero consumption is worth zero.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bases below this are treated as exactly zero when raised to a positive power.
const TINY_BASE: f64 = 1e-300;

/// `base^exp` with `base` clamped at zero; tiny bases yield 0 for `exp > 0`.
#[inline]
pub(crate) fn pow_pos(base: f64, exp: f64) -> f64 {
    if base < TINY_BASE {
        0.0
    } else {
        base.powf(exp)
    }
}

/// One consumer's behavioural parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsumerProfile {
    /// Reference point, kW.
    pub r: f64,
    /// Loss-aversion coefficient, `λ ≥ 1`.
    pub lambda: f64,
    /// Curvature exponent, `0 < α < 1`.
    pub alpha: f64,
    /// Saturation power, kW. Only used by [`eval_utility_saturating`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    /// Minimum need, kW.
    #[serde(default)]
    pub m: f64,
}

impl ConsumerProfile {
    pub fn new(r: f64, lambda: f64, alpha: f64) -> Self {
        Self {
            r,
            lambda,
            alpha,
            x_max: None,
            m: 0.0,
        }
    }

    pub fn with_saturation(mut self, x_max: f64) -> Self {
        self.x_max = Some(x_max);
        self
    }

    pub fn with_min_need(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    /// Same λ and α with a different reference point.
    pub fn with_reference(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let violations = validate_profile(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidProfile(violations))
        }
    }

    /// `λr^α`, the utility at the reference point.
    pub fn junction_value(&self) -> f64 {
        self.lambda * pow_pos(self.r, self.alpha)
    }
}

/// A broken [`ConsumerProfile`] invariant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Violation {
    AlphaOutOfRange(f64),
    LambdaBelowOne(f64),
    NonPositiveReference(f64),
    NegativeMinimumNeed(f64),
    MinimumNeedAtOrAboveReference { m: f64, r: f64 },
    SaturationNotAboveReference { x_max: f64, r: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AlphaOutOfRange(a) => write!(f, "alpha outside (0,1): {a}"),
            Violation::LambdaBelowOne(l) => write!(f, "lambda below 1: {l}"),
            Violation::NonPositiveReference(r) => write!(f, "reference point not positive: {r}"),
            Violation::NegativeMinimumNeed(m) => write!(f, "minimum need negative: {m}"),
            Violation::MinimumNeedAtOrAboveReference { m, r } => {
                write!(f, "minimum need ≥ reference point: m = {m}, r = {r}")
            }
            Violation::SaturationNotAboveReference { x_max, r } => {
                write!(
                    f,
                    "saturation not above reference point: x_max = {x_max}, r = {r}"
                )
            }
        }
    }
}

/// Lists every violated invariant; empty iff the profile is valid.
///
/// NaN parameters fail every comparison and are reported as out of range.
pub fn validate_profile(p: &ConsumerProfile) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(p.alpha > 0.0 && p.alpha < 1.0) {
        out.push(Violation::AlphaOutOfRange(p.alpha));
    }
    if !(p.lambda >= 1.0) || !p.lambda.is_finite() {
        out.push(Violation::LambdaBelowOne(p.lambda));
    }
    if !(p.r > 0.0) || !p.r.is_finite() {
        out.push(Violation::NonPositiveReference(p.r));
    }
    if !(p.m >= 0.0) {
        out.push(Violation::NegativeMinimumNeed(p.m));
    }
    if !(p.m < p.r) {
        out.push(Violation::MinimumNeedAtOrAboveReference { m: p.m, r: p.r });
    }
    if let Some(x_max) = p.x_max {
        if !(x_max > p.r) {
            out.push(Violation::SaturationNotAboveReference { x_max, r: p.r });
        }
    }
    out
}

/// Utility without saturation. Continuous at `x = r`, where both branches give `λr^α`.
pub fn eval_utility(x: f64, p: &ConsumerProfile) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "consumption must be non-negative, got {x}"
        )));
    }
    Ok(utility_unchecked(x, p.r, p.lambda, p.alpha))
}

/// Utility with the plateau at `x_max`.
pub fn eval_utility_saturating(x: f64, p: &ConsumerProfile) -> Result<f64> {
    let x_max = p.x_max.ok_or_else(|| {
        Error::Config("saturating utility requested for a profile without x_max".into())
    })?;
    eval_utility(x.min(x_max), p)
}

/// Hot-path evaluation shared by the solvers; callers guarantee `x ≥ 0`.
#[inline]
pub(crate) fn utility_unchecked(x: f64, r: f64, lambda: f64, alpha: f64) -> f64 {
    let anchor = lambda * pow_pos(r, alpha);
    if x < r {
        anchor - lambda * pow_pos(r - x, alpha)
    } else {
        pow_pos(x - r, alpha) + anchor
    }
}

/// Derivative of [`eval_utility`]; undefined exactly at the kink `x = r`.
pub fn marginal_benefit(x: f64, p: &ConsumerProfile) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "consumption must be non-negative, got {x}"
        )));
    }
    if x == p.r {
        return Err(Error::NonDifferentiable { x });
    }
    Ok(marginal_unchecked(x, p.r, p.lambda, p.alpha))
}

#[inline]
pub(crate) fn marginal_unchecked(x: f64, r: f64, lambda: f64, alpha: f64) -> f64 {
    if x < r {
        lambda * alpha * (r - x).powf(alpha - 1.0)
    } else {
        alpha * (x - r).powf(alpha - 1.0)
    }
}

/// Marginal benefit with the kink mapped to its one-sided limit, `+∞` from both sides.
pub fn marginal_benefit_or_limit(x: f64, p: &ConsumerProfile) -> Result<f64> {
    match marginal_benefit(x, p) {
        Err(Error::NonDifferentiable { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}
