//! Fixed-point iteration of the discretized renewal inequality
//! `M <= m (M * mu~) + gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::malthus::{reproduction_density, Kernel};
use crate::point_process::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalResult {
    pub iterate: Vec<f64>,
    pub sup: f64,
    /// Supremum after each iteration.
    pub sups: Vec<f64>,
    /// `gamma / (1 - m)`.
    pub limit: f64,
}

/// Iterates `M <- m (M * mu_tilde) + gamma` on a uniform grid, where
/// `mu_tilde[j]` is the mass at lag `j` grid steps and the convolution is
/// causal. Errors if an iterate breaks the contraction bound
/// `sup M' <= m max(sup M, 0) + gamma`.
pub fn renewal_iterate(m: f64, gamma: f64, mu_tilde: &[f64], m0: &[f64], n_iters: usize) -> Result<RenewalResult> {
    if !(m > 0.0 && m < 1.0) {
        return Err(param("m", format!("must lie in (0, 1), got {m}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(param("gamma", format!("must be finite and positive, got {gamma}")));
    }
    if mu_tilde.is_empty() || mu_tilde.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(param("mu_tilde", "must be a nonempty list of nonnegative weights"));
    }
    let total: f64 = mu_tilde.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(param("mu_tilde", format!("must sum to 1, sums to {total}")));
    }
    if m0.is_empty() || m0.iter().any(|x| !x.is_finite()) {
        return Err(param("m0", "must be a nonempty bounded function"));
    }
    if n_iters == 0 {
        return Err(param("n_iters", "must be positive"));
    }
    let sup_of = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cur = m0.to_vec();
    let mut next = vec![0.0; cur.len()];
    let mut sup = sup_of(&cur);
    let mut sups = Vec::with_capacity(n_iters);
    for _ in 0..n_iters {
        for (i, slot) in next.iter_mut().enumerate() {
            let lags = mu_tilde.len().min(i + 1);
            let conv: f64 = (0..lags).map(|j| mu_tilde[j] * cur[i - j]).sum();
            *slot = m * conv + gamma;
        }
        std::mem::swap(&mut cur, &mut next);
        let new_sup = sup_of(&cur);
        let allowed = m * sup.max(0.0) + gamma;
        if new_sup > allowed + 1e-12 * (1.0 + allowed.abs()) {
            return Err(Error::Consistency(format!(
                "renewal iterate diverges: sup {new_sup} exceeds contraction bound {allowed}"
            )));
        }
        sup = new_sup;
        sups.push(sup);
    }
    Ok(RenewalResult {
        iterate: cur,
        sup,
        sups,
        limit: gamma / (1.0 - m),
    })
}

/// `mu~(dt) = exp(-k alpha t) mu(dt) / m` binned into `n` cells of width `h`
/// (Simpson's rule per cell), renormalized to total mass 1.
pub fn discretized_mu_tilde(params: &ModelParams, k: f64, alpha: f64, h: f64, n: usize) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) || n == 0 {
        return Err(param("h, n", "need a positive step and at least one cell"));
    }
    Kernel::new(*params).discount_m(k, alpha)?;
    let g = |t: f64| (-k * alpha * t).exp() * reproduction_density(params, t);
    let mut w: Vec<f64> = (0..n)
        .map(|j| {
            let a = j as f64 * h;
            h / 6.0 * (g(a) + 4.0 * g(a + 0.5 * h) + g(a + h))
        })
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    // Push the rounding residue into the largest cell.
    let residue = 1.0 - w.iter().sum::<f64>();
    let imax = (0..n).max_by(|&i, &j| w[i].total_cmp(&w[j])).unwrap_or(0);
    w[imax] += residue;
    Ok(w)
}
