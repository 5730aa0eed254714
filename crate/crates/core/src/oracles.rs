//! Slow, exhaustive reference computations used to certify the solvers.
//!
//! Nothing here calls into the allocation, tariff or efficiency solvers; only
//! the utility function itself and the tariff's payment schedule are used.

use serde::{Deserialize, Serialize};

use crate::allocation::{AllocationResult, Regime};
use crate::efficiency::EeResult;
use crate::error::{Error, Result};
use crate::population::Population;
use crate::tariff::IbrTariff;
use crate::utility::{utility_unchecked, ConsumerProfile};

/// Hard cap on grid points visited by a single oracle call.
pub const MAX_GRID_POINTS: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Step, kW.
    pub resolution: f64,
    /// Upper bound per variable, kW (relative to the variable's lower end).
    pub bound: f64,
    /// Zoom levels: each one re-grids ±2 steps around the incumbent at a
    /// tenth of the step. Only used by [`grid_bruteforce_ee`].
    #[serde(default)]
    pub refine: usize,
}

impl GridSpec {
    pub fn new(resolution: f64, bound: f64) -> Self {
        Self {
            resolution,
            bound,
            refine: 0,
        }
    }

    pub fn with_refine(mut self, levels: usize) -> Self {
        self.refine = levels;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.resolution > 0.0) || !(self.bound >= 0.0) {
            return Err(Error::Config(format!(
                "grid needs resolution > 0 and bound ≥ 0, got {} and {}",
                self.resolution, self.bound
            )));
        }
        Ok(())
    }
}

fn guard(points: f64) -> Result<()> {
    if points > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge {
            points,
            limit: MAX_GRID_POINTS,
        });
    }
    Ok(())
}

fn u(x: f64, c: &ConsumerProfile) -> f64 {
    utility_unchecked(x, c.r, c.lambda, c.alpha)
}

struct Simplex {
    /// `tables[i][j]` = utility of consumer `i` at `j` steps.
    tables: Vec<Vec<f64>>,
    /// Utility of the last consumer when the others used `j` steps in total.
    tail: Vec<f64>,
    /// Per-variable step cap.
    limit: usize,
    steps: Vec<usize>,
    best_value: f64,
    best_steps: Vec<usize>,
}

impl Simplex {
    fn search(&mut self, depth: usize, used: usize, value: f64) {
        if depth == self.tables.len() {
            let v = value + self.tail[used];
            if v > self.best_value {
                self.best_value = v;
                self.best_steps.clone_from(&self.steps);
            }
            return;
        }
        let hi = self.limit.min(self.tail.len() - 1 - used);
        for j in 0..=hi {
            self.steps[depth] = j;
            let v = value + self.tables[depth][j];
            self.search(depth + 1, used + j, v);
        }
    }
}

/// Best allocation on the budget simplex at the grid resolution.
///
/// Consumers `1..K-1` take multiples of the step (at most `bound` each), the
/// last consumer takes whatever remains.
pub fn grid_bruteforce_opg(
    chi: f64,
    pop: &Population,
    grid: &GridSpec,
) -> Result<AllocationResult> {
    grid.check()?;
    if !(chi >= 0.0) {
        return Err(Error::Domain(format!(
            "budget must be non-negative, got {chi}"
        )));
    }
    let k = pop.len();
    let n = (chi / grid.resolution + 1e-9).floor() as usize;
    let limit = ((grid.bound.min(chi)) / grid.resolution + 1e-9).floor() as usize;
    guard(((limit.min(n) + 1) as f64).powi(k as i32 - 1))?;

    let profiles = pop.profiles();
    let tables: Vec<Vec<f64>> = profiles[..k - 1]
        .iter()
        .map(|c| (0..=n).map(|j| u(j as f64 * grid.resolution, c)).collect())
        .collect();
    let last = &profiles[k - 1];
    let tail: Vec<f64> = (0..=n)
        .map(|j| u((chi - j as f64 * grid.resolution).max(0.0), last))
        .collect();
    let mut s = Simplex {
        tables,
        tail,
        limit,
        steps: vec![0; k - 1],
        best_value: f64::NEG_INFINITY,
        best_steps: vec![0; k - 1],
    };
    s.search(0, 0, 0.0);
    let best_steps = s.best_steps;
    let mut x: Vec<f64> = best_steps
        .iter()
        .map(|&j| j as f64 * grid.resolution)
        .collect();
    let used: usize = best_steps.iter().sum();
    x.push((chi - used as f64 * grid.resolution).max(0.0));
    let objective = x.iter().zip(profiles).map(|(&xi, c)| u(xi, c)).sum();
    let active = x
        .iter()
        .zip(profiles)
        .filter(|(&xi, c)| xi >= c.r - 1e-9)
        .count();
    Ok(AllocationResult {
        chi_used: x.iter().sum(),
        x,
        active,
        objective,
        regime: Regime::Oracle,
        branch: None,
    })
}

/// Visits every point of a box grid `lo_i + j·step_i`, `j = 0..=n`, and
/// keeps the lexicographically first maximizer of `f`.
fn box_search<F>(lo: &[f64], step: f64, n: usize, f: &F) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let k = lo.len();
    let mut idx = vec![0usize; k];
    let mut x = lo.to_vec();
    let mut best = (x.clone(), f64::NEG_INFINITY);
    loop {
        for i in 0..k {
            x[i] = lo[i] + idx[i] as f64 * step;
        }
        let v = f(&x);
        if v > best.1 {
            best = (x.clone(), v);
        }
        let mut d = k;
        loop {
            if d == 0 {
                return best;
            }
            d -= 1;
            if idx[d] < n {
                idx[d] += 1;
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Maximizes `ΣU(x_i)/Σx_i` over `x_i ∈ {m_i, m_i+δ, …, m_i+bound}`,
/// optionally zooming in around the incumbent.
pub fn grid_bruteforce_ee(pop: &Population, grid: &GridSpec) -> Result<EeResult> {
    grid.check()?;
    let k = pop.len();
    let n = (grid.bound / grid.resolution + 1e-9).floor() as usize;
    guard(((n + 1) as f64).powi(k as i32))?;
    let profiles = pop.profiles();
    let mins: Vec<f64> = profiles.iter().map(|c| c.m).collect();
    let ratio = |x: &[f64]| {
        let total: f64 = x.iter().sum();
        if total <= 0.0 {
            return f64::NEG_INFINITY;
        }
        x.iter().zip(profiles).map(|(&xi, c)| u(xi, c)).sum::<f64>() / total
    };

    let (mut x, mut e) = box_search(&mins, grid.resolution, n, &ratio);
    let mut step = grid.resolution;
    for _ in 0..grid.refine {
        let fine = step / 10.0;
        let lo: Vec<f64> = x
            .iter()
            .zip(&mins)
            .map(|(&xi, &m)| (xi - 2.0 * step).max(m))
            .collect();
        let (cand, v) = box_search(&lo, fine, 40, &ratio);
        if v > e {
            x = cand;
            e = v;
        }
        step = fine;
    }
    Ok(EeResult {
        e_star: e,
        x,
        iterations: 0,
        residual: 0.0,
        converged: true,
        lower_bound: f64::NAN,
        upper_bound: f64::NAN,
    })
}

/// Grid argmax of `U(x) − payment_i(x)` on `[0, bound]`; ties go to the larger `x`.
pub fn bruteforce_best_response(
    tariff: &IbrTariff,
    i: usize,
    profile: &ConsumerProfile,
    grid: &GridSpec,
) -> Result<f64> {
    grid.check()?;
    let n = (grid.bound / grid.resolution + 1e-9).floor() as usize;
    guard((n + 1) as f64)?;
    let mut best = (0.0, f64::NEG_INFINITY);
    for j in 0..=n {
        let x = j as f64 * grid.resolution;
        let v = u(x, profile) - tariff.payment(i, x);
        if v >= best.1 {
            best = (x, v);
        }
    }
    Ok(best.0)
}

/// `(U(x+h) − U(x−h))/(2h)`.
pub fn finite_difference_marginal(x: f64, profile: &ConsumerProfile, h: f64) -> Result<f64> {
    if !(h > 0.0) || !((x - profile.r).abs() > 10.0 * h) || !(x - h > 0.0) {
        return Err(Error::Domain(format!(
            "finite difference needs |x - r| > 10h and x - h > 0 (x = {x}, r = {}, h = {h})",
            profile.r
        )));
    }
    Ok((u(x + h, profile) - u(x - h, profile)) / (2.0 * h))
}
