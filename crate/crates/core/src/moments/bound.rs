//! The recursive `C_k` moment bound and the sufficient conditions for it.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exec::Threads;
use crate::malthus::Kernel;
use crate::point_process::{Characteristic, ModelParams};
use crate::rng;
use crate::stats::Estimate;

use super::{estimate_a, estimate_b, linear_grid};

pub const MAX_K: u32 = 12;

/// `max prod_i C_i^{nu_i}` over `nu_i >= 0` with `sum_i i nu_i = h`, parts
/// `i` ranging over `1..k-1`.
pub fn rho_max(k: u32, h: u32, c: &[f64]) -> Result<f64> {
    if !(2..=MAX_K).contains(&k) {
        return Err(param("k", format!("must lie in 2..={MAX_K}, got {k}")));
    }
    if h == 0 || h > k {
        return Err(param("h", format!("must lie in 1..={k}, got {h}")));
    }
    if c.len() < (k - 1) as usize {
        return Err(param("c", format!("need C_1..C_{}, got {} values", k - 1, c.len())));
    }
    if let Some(bad) = c.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(param("c", format!("entries must be finite and positive, got {bad}")));
    }
    // Largest part first; `best(rest, top)` maximizes over partitions of
    // `rest` into parts no larger than `top`.
    fn best(rest: u32, top: u32, c: &[f64]) -> f64 {
        if rest == 0 {
            return 1.0;
        }
        (1..=top.min(rest))
            .map(|part| c[(part - 1) as usize] * best(rest - part, part, c))
            .fold(f64::NEG_INFINITY, f64::max)
    }
    Ok(best(h, k - 1, c))
}

/// `rho (A + B)^k / (1 - m)` with `rho = max(1, max_h rho_max(k, h, C))`.
pub fn ck_bound(k: u32, a: f64, b: f64, m: f64, c: &[f64]) -> Result<f64> {
    if !(m < 1.0) {
        return Err(Error::Regime(format!("m = {m} is not below 1")));
    }
    if !(a >= 0.0 && b >= 0.0 && m >= 0.0) {
        return Err(param("a, b, m", "must be nonnegative"));
    }
    let rho = rho_for(k, c)?;
    Ok(rho * (a + b).powi(k as i32) / (1.0 - m))
}

fn rho_for(k: u32, c: &[f64]) -> Result<f64> {
    let mut rho: f64 = 1.0;
    for h in 1..=k {
        rho = rho.max(rho_max(k, h, c)?);
    }
    Ok(rho)
}

/// Ingredients and value of the bound on `(exp(-alpha t) ||Z(t)||_k)^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub k: u32,
    pub alpha: f64,
    /// `||alpha xi(inf)||_k`.
    pub a: Estimate,
    /// `sup_t exp(-alpha t) ||phi(t)||_k`.
    pub b: Estimate,
    /// `f(k alpha)`.
    pub m: f64,
    /// `C_1..C_k`; `C_1` is supplied, the rest follow the recursion.
    pub c: Vec<f64>,
    pub rho: f64,
    /// `C_k`.
    pub bound: f64,
    /// `C_k^{1/k}`, directly comparable with `exp(-alpha t) ||Z(t)||_k`.
    pub bound_norm: f64,
    pub n: usize,
    pub seed: u64,
}

/// Builds `C_2..C_k` from `C_1`, estimating `A` and `B` at every order.
pub fn bound_report(
    params: &ModelParams,
    ch: &Characteristic,
    k: u32,
    alpha: f64,
    c1: f64,
    n: usize,
    seed: u64,
    threads: Threads,
) -> Result<BoundReport> {
    if !(2..=MAX_K).contains(&k) {
        return Err(param("k", format!("must lie in 2..={MAX_K}, got {k}")));
    }
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(param("c1", format!("must be finite and positive, got {c1}")));
    }
    let kernel = Kernel::new(*params);
    let b_grid = linear_grid(0.0, 10.0 / alpha, 201);
    let mut c = vec![c1];
    let mut last = None;
    for j in 2..=k {
        let a = estimate_a(params, j as f64, alpha, n, rng::derive(seed, j as u64), threads)?;
        let b = estimate_b(
            ch,
            params,
            j as f64,
            alpha,
            &b_grid,
            n,
            rng::derive(seed, 0x100 + j as u64),
            threads,
        )?;
        let m = kernel.discount_m(j as f64, alpha)?;
        let rho = rho_for(j, &c)?;
        let cj = ck_bound(j, a.value, b.value, m, &c)?;
        c.push(cj);
        last = Some((a, b, m, rho, cj));
    }
    let (a, b, m, rho, bound) = last.expect("k >= 2");
    Ok(BoundReport {
        k,
        alpha,
        a,
        b,
        m,
        c,
        rho,
        bound,
        bound_norm: bound.powf(1.0 / k as f64),
        n,
        seed,
    })
}

/// Which sufficient condition set for uniform `L_k` boundedness holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub k: f64,
    pub p_exp: f64,
    pub alpha: f64,
    /// `||xi(0)||_k`; exactly 0 since a unit-rate Poisson process has no event at 0.
    pub xi0_norm_k: f64,
    pub xi0_norm_p: f64,
    pub a_k: Estimate,
    pub a_p: Estimate,
    /// `||sup_t exp(-alpha t) phi(t)||_k`, exact for the supported characteristics.
    pub sup_phi_norm: f64,
    /// `sup_t exp(-alpha t) ||phi(t)||_k`.
    pub b_k: Estimate,
    /// First condition set: `||xi(0)||_k < 1`, finite `A_k`, finite `||sup phi||_k`.
    pub first_set: bool,
    /// Second condition set: `||xi(0)||_p < 1`, finite `A_p`, finite `B_k`.
    pub second_set: bool,
}

pub fn corollary_conditions(
    params: &ModelParams,
    ch: &Characteristic,
    k: f64,
    p_exp: f64,
    n: usize,
    seed: u64,
    threads: Threads,
) -> Result<CorollaryReport> {
    if !(k >= 1.0) {
        return Err(param("k", format!("must be at least 1, got {k}")));
    }
    if !(p_exp > k) {
        return Err(param("p_exp", format!("must exceed k = {k}, got {p_exp}")));
    }
    let alpha = Kernel::new(*params)
        .solve_alpha()?
        .rate()
        .ok_or_else(|| Error::Regime("the edge process is not supercritical".into()))?;
    let a_k = estimate_a(params, k, alpha, n, rng::derive(seed, 1), threads)?;
    let a_p = estimate_a(params, p_exp, alpha, n, rng::derive(seed, 1), threads)?;
    let sup_phi_norm = match ch {
        Characteristic::Born | Characteristic::Alive => 1.0,
        Characteristic::Weighted(w) => w.discounted_sup(alpha),
    };
    let b_grid = linear_grid(0.0, 10.0 / alpha, 201);
    let b_k = estimate_b(ch, params, k, alpha, &b_grid, n, rng::derive(seed, 2), threads)?;
    let finite = |e: &Estimate| e.value.is_finite() && e.se.is_finite();
    Ok(CorollaryReport {
        k,
        p_exp,
        alpha,
        xi0_norm_k: 0.0,
        xi0_norm_p: 0.0,
        first_set: finite(&a_k) && sup_phi_norm.is_finite(),
        second_set: finite(&a_p) && finite(&b_k),
        a_k,
        a_p,
        sup_phi_norm,
        b_k,
    })
}
