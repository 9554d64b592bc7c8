//! Bracketed bisection for monotone scalar equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_BISECTIONS: usize = 60;
pub const BRACKET_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub root: f64,
    /// `|F(root) - target|`.
    pub residual: f64,
    pub iterations: usize,
}

/// Root of `f(x) = target` for decreasing `f` with `f(lo) > target > f(hi)`.
pub fn bisect_decreasing<F: Fn(f64) -> Result<f64>>(
    f: F,
    target: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<RootReport> {
    bisect(|x| Ok(target - f(x)?), lo, hi, tol, target)
}

/// Root of `g(x) = target` for increasing `g` with `g(lo) < target <= g(hi)`.
pub fn bisect_increasing<G: Fn(f64) -> Result<f64>>(
    g: G,
    target: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<RootReport> {
    bisect(|x| Ok(g(x)? - target), lo, hi, tol, target)
}

// `h` is increasing with h(lo) < 0 <= h(hi).
fn bisect<H: Fn(f64) -> Result<f64>>(h: H, mut lo: f64, mut hi: f64, tol: f64, target: f64) -> Result<RootReport> {
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS && hi - lo > BRACKET_WIDTH {
        let mid = 0.5 * (lo + hi);
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let (hl, hh) = (h(lo)?, h(hi)?);
    let (root, residual) = if hl.abs() <= hh.abs() {
        (lo, hl.abs())
    } else {
        (hi, hh.abs())
    };
    if residual > tol {
        return Err(Error::Numerical {
            what: format!("bisection for target {target} ended with residual {residual:e} above {tol:e}"),
            estimate: root,
            error_estimate: hi - lo,
            evaluations: iterations,
        });
    }
    Ok(RootReport {
        root,
        residual,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt2() {
        let r = bisect_increasing(|x| Ok(x * x), 2.0, 0.0, 2.0, 1e-10).unwrap();
        assert!((r.root - 2f64.sqrt()).abs() < 1e-12);
        let r = bisect_decreasing(|x| Ok((-x).exp()), 0.5, 0.0, 5.0, 1e-10).unwrap();
        assert!((r.root - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn residual_gate() {
        // a jump: no point reaches the target within tolerance
        let e = bisect_increasing(|x| Ok(if x < 1.0 { 0.0 } else { 2.0 }), 1.0, 0.0, 2.0, 1e-6);
        assert!(e.is_err());
    }
}
