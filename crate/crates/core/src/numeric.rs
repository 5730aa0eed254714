//! Scalar root finding and maximization used by the solvers.

use crate::error::{Error, Result};

/// Outcome of [`bisect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Bisection on `[lo, hi]` for a continuous `f` that changes sign there.
///
/// Stops once `|f(x)| ≤ tol` or the bracket cannot be split any further in
/// double precision. Returns the midpoint with the smallest residual seen.
pub fn bisect<F>(
    what: &'static str,
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Root>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Ok(Root {
            x: lo,
            residual: 0.0,
            iterations: 0,
        });
    }
    if f_hi == 0.0 {
        return Ok(Root {
            x: hi,
            residual: 0.0,
            iterations: 0,
        });
    }
    if !(f_lo.signum() != f_hi.signum()) || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Bracket {
            what,
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let lo_positive = f_lo > 0.0;
    let mut best = if f_lo.abs() < f_hi.abs() {
        Root {
            x: lo,
            residual: f_lo.abs(),
            iterations: 0,
        }
    } else {
        Root {
            x: hi,
            residual: f_hi.abs(),
            iterations: 0,
        }
    };
    for it in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.abs() < best.residual {
            best = Root {
                x: mid,
                residual: fm.abs(),
                iterations: it,
            };
        }
        best.iterations = it;
        if fm.abs() <= tol {
            break;
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Walks right from `start` with geometrically growing steps until `f` changes
/// sign relative to `f(start)`; returns the bracketing pair.
pub fn expand_bracket<F>(
    what: &'static str,
    f: F,
    start: f64,
    first_step: f64,
    max_steps: usize,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let f0 = f(start);
    let mut prev = start;
    let mut step = first_step;
    let mut last = f0;
    for _ in 0..max_steps {
        let next = start + step;
        let fv = f(next);
        if fv.signum() != f0.signum() || fv == 0.0 {
            return Ok((prev, next));
        }
        prev = next;
        last = fv;
        step *= 2.0;
    }
    Err(Error::Bracket {
        what,
        lo: start,
        hi: prev,
        f_lo: f0,
        f_hi: last,
    })
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of `f` on `[lo, hi]`.
///
/// Assumes unimodality on the interval; the endpoints are compared against
/// the interior result so a monotone `f` still returns its best end.
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid));
    for x in [lo, hi] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}
