//! `L_k` norms of counted CMJ processes and the ingredients of their bounds.

mod bound;
mod delta;
mod renewal;

use serde::{Deserialize, Serialize};

use crate::cmj::{life_until, run_cmj};
use crate::error::{param, Error, Result};
use crate::exec::{map_indexed, Threads};
use crate::malthus::{discounted_reproduction_samples, negligible_horizon};
use crate::point_process::{Characteristic, ModelParams, Mortality};
use crate::rng;
use crate::stats::{lk_norm, mean_se, Estimate};

pub use bound::{bound_report, ck_bound, corollary_conditions, rho_max, BoundReport, CorollaryReport, MAX_K};
pub use delta::{delta_gate, delta_report, DeltaConfig, DeltaReport, DeltaRow, ReplicaDelta, TrendTest};
pub use renewal::{discretized_mu_tilde, renewal_iterate, RenewalResult};

pub const DEFAULT_EVENT_BUDGET: usize = 1_000_000;

/// Normalized `L_k` norm of `Z^phi` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    pub characteristic: String,
    pub k: f64,
    /// Exponential normalization.
    pub rate: f64,
    pub t_grid: Vec<f64>,
    /// `exp(-rate t) (mean |Z(t)|^k)^{1/k}`.
    pub estimates: Vec<f64>,
    pub se: Vec<f64>,
    pub replicas: usize,
    pub excluded: usize,
    pub seed: u64,
}

impl MomentSeries {
    /// Plateau estimate for `C_1`: largest `estimate + z se` over the last
    /// half of the grid.
    pub fn plateau(&self, z: f64) -> f64 {
        let from = self.t_grid.len() / 2;
        self.estimates[from..]
            .iter()
            .zip(&self.se[from..])
            .map(|(e, s)| e + z * s)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `Z^phi(t)` of every usable replica on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSamples {
    pub characteristic: String,
    pub t_grid: Vec<f64>,
    /// `values[r][i]` is replica `r` at `t_grid[i]`.
    pub values: Vec<Vec<f64>>,
    pub replicas: usize,
    pub excluded: usize,
    pub seed: u64,
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(param("t_grid", "must not be empty"));
    }
    if !grid.iter().all(|t| t.is_finite() && *t >= 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(param("t_grid", "must be finite, nonnegative and strictly increasing"));
    }
    Ok(())
}

pub(crate) fn check_reliability(excluded: usize, total: usize) -> Result<()> {
    if excluded * 100 > total {
        return Err(Error::Reliability { excluded, total });
    }
    Ok(())
}

/// Runs single-ancestor paths up to the last grid time. Paths cut short by
/// the event budget are excluded; more than 1% exclusions is an error.
pub fn count_samples(
    params: &ModelParams,
    ch: &Characteristic,
    t_grid: &[f64],
    replicas: usize,
    seed: u64,
    event_budget: usize,
    threads: Threads,
) -> Result<CountSamples> {
    check_grid(t_grid)?;
    if replicas < 2 {
        return Err(param("replicas", "need at least 2"));
    }
    let horizon = t_grid[t_grid.len() - 1];
    let runs: Vec<Result<Option<Vec<f64>>>> = map_indexed(replicas, threads, |r| {
        let path = run_cmj(params, 1, horizon, event_budget, rng::replica_seed(seed, r as u64))?;
        if path.known_until() < horizon {
            return Ok(None);
        }
        t_grid
            .iter()
            .map(|&t| path.z_phi(ch, t))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    });
    let mut values = Vec::with_capacity(replicas);
    let mut excluded = 0;
    for run in runs {
        match run? {
            Some(v) => values.push(v),
            None => excluded += 1,
        }
    }
    check_reliability(excluded, replicas)?;
    Ok(CountSamples {
        characteristic: ch.name().to_string(),
        t_grid: t_grid.to_vec(),
        values,
        replicas,
        excluded,
        seed,
    })
}

impl CountSamples {
    pub fn series(&self, k: f64, rate: f64) -> MomentSeries {
        let mut estimates = Vec::with_capacity(self.t_grid.len());
        let mut se = Vec::with_capacity(self.t_grid.len());
        for (i, &t) in self.t_grid.iter().enumerate() {
            let col: Vec<f64> = self.values.iter().map(|v| v[i]).collect();
            let e = lk_norm(&col, k);
            let scale = (-rate * t).exp();
            estimates.push(scale * e.value);
            se.push(scale * e.se);
        }
        MomentSeries {
            characteristic: self.characteristic.clone(),
            k,
            rate,
            t_grid: self.t_grid.clone(),
            estimates,
            se,
            replicas: self.replicas,
            excluded: self.excluded,
            seed: self.seed,
        }
    }

    /// Slope of `exp(-rate t) Z(t)` against `t` over grid points with
    /// `t >= from`, averaged over replicas. Each replica contributes its own
    /// least-squares slope, which makes the standard error honest about the
    /// correlation along a path.
    pub fn tail_slope(&self, rate: f64, from: f64) -> Result<Estimate> {
        let idx: Vec<usize> = (0..self.t_grid.len()).filter(|&i| self.t_grid[i] >= from).collect();
        if idx.len() < 2 {
            return Err(param("from", "leaves fewer than two grid points"));
        }
        let xs: Vec<f64> = idx.iter().map(|&i| self.t_grid[i]).collect();
        let slopes: Vec<f64> = self
            .values
            .iter()
            .map(|v| {
                let ys: Vec<f64> = idx.iter().map(|&i| (-rate * self.t_grid[i]).exp() * v[i]).collect();
                crate::stats::ols_slope(&xs, &ys)
            })
            .collect();
        Ok(mean_se(&slopes))
    }
}

/// Monte Carlo `exp(-rate t) ||Z^phi(t)||_k` on a grid from `replicas` paths.
#[allow(clippy::too_many_arguments)]
pub fn lk_series(
    params: &ModelParams,
    ch: &Characteristic,
    k: f64,
    rate: f64,
    t_grid: &[f64],
    replicas: usize,
    seed: u64,
    event_budget: usize,
    threads: Threads,
) -> Result<MomentSeries> {
    if !(k >= 1.0) {
        return Err(param("k", format!("must be at least 1, got {k}")));
    }
    if replicas < 100 {
        return Err(param("replicas", format!("need at least 100, got {replicas}")));
    }
    Ok(count_samples(params, ch, t_grid, replicas, seed, event_budget, threads)?.series(k, rate))
}

/// `||alpha xi(inf)||_k`, the `L_k` norm of the discounted offspring of one life.
pub fn estimate_a(params: &ModelParams, k: f64, alpha: f64, n: usize, seed: u64, threads: Threads) -> Result<Estimate> {
    if !(k >= 1.0) {
        return Err(param("k", format!("must be at least 1, got {k}")));
    }
    if n < 1000 {
        return Err(param("n", format!("need at least 1000 lives, got {n}")));
    }
    let xs = discounted_reproduction_samples(params, alpha, n, seed, negligible_horizon(alpha), threads)?;
    Ok(lk_norm(&xs, k))
}

/// `sup_t exp(-rate t) ||phi(t)||_k` over the grid, with the SE of the
/// maximizing grid point.
pub fn estimate_b(
    ch: &Characteristic,
    params: &ModelParams,
    k: f64,
    rate: f64,
    t_grid: &[f64],
    n: usize,
    seed: u64,
    threads: Threads,
) -> Result<Estimate> {
    check_grid(t_grid)?;
    if n < 2 {
        return Err(param("n", "need at least 2 lives"));
    }
    let horizon = t_grid[t_grid.len() - 1];
    let rows: Vec<Result<Vec<f64>>> = map_indexed(n, threads, |i| {
        let mut r = rng::individual_stream(seed, i as u64);
        let life = life_until(params, Mortality::Hazard, horizon, &mut r)?;
        Ok(t_grid.iter().map(|&t| ch.eval(&life, t)).collect())
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut best = Estimate::new(f64::NEG_INFINITY, 0.0);
    for (j, &t) in t_grid.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let e = lk_norm(&col, k);
        let scale = (-rate * t).exp();
        if scale * e.value > best.value {
            best = Estimate::new(scale * e.value, scale * e.se);
        }
    }
    Ok(best)
}

/// `points` equally spaced times on `[start, stop]`.
pub fn linear_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![start];
    }
    (0..points)
        .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
        .collect()
}

/// `points` geometrically spaced times on `[start, stop]`, `start > 0`.
pub fn log_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![start];
    }
    let ratio = (stop / start).ln();
    let mut g: Vec<f64> = (0..points)
        .map(|i| start * (ratio * i as f64 / (points - 1) as f64).exp())
        .collect();
    g[points - 1] = stop;
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::WeightTable;

    fn prm() -> ModelParams {
        ModelParams::new(0.1, 0.1, 0.5).unwrap()
    }

    #[test]
    fn born_at_zero_is_one() {
        let s = lk_series(
            &prm(),
            &Characteristic::Born,
            2.0,
            1.3,
            &[0.0, 0.5],
            100,
            1,
            100_000,
            Threads::SINGLE,
        )
        .unwrap();
        assert_eq!(s.estimates[0], 1.0);
        assert_eq!(s.se[0], 0.0);
    }

    #[test]
    fn validation() {
        assert!(lk_series(
            &prm(),
            &Characteristic::Born,
            0.5,
            1.0,
            &[0.0],
            100,
            1,
            1000,
            Threads::SINGLE
        )
        .is_err());
        assert!(lk_series(
            &prm(),
            &Characteristic::Born,
            1.0,
            1.0,
            &[0.0],
            10,
            1,
            1000,
            Threads::SINGLE
        )
        .is_err());
        assert!(lk_series(
            &prm(),
            &Characteristic::Born,
            1.0,
            1.0,
            &[1.0, 0.5],
            100,
            1,
            1000,
            Threads::SINGLE
        )
        .is_err());
    }

    #[test]
    fn budget_exclusions_trigger_reliability_error() {
        let e = lk_series(
            &prm(),
            &Characteristic::Born,
            1.0,
            1.0,
            &[0.0, 6.0],
            100,
            1,
            50,
            Threads::SINGLE,
        )
        .unwrap_err();
        assert!(matches!(e, Error::Reliability { .. }));
    }

    #[test]
    fn b_for_simple_characteristics() {
        let grid = linear_grid(0.0, 3.0, 31);
        let b = estimate_b(&Characteristic::Born, &prm(), 2.0, 1.0, &grid, 500, 3, Threads::SINGLE).unwrap();
        assert_eq!(b.value, 1.0);
        let b = estimate_b(&Characteristic::Alive, &prm(), 2.0, 1.0, &grid, 500, 3, Threads::SINGLE).unwrap();
        assert_eq!(b.value, 1.0);
        let w = Characteristic::Weighted(WeightTable::single(0.7, 0.0, 1.0).unwrap());
        let b = estimate_b(&w, &prm(), 2.0, 1.0, &grid, 500, 3, Threads::SINGLE).unwrap();
        assert!((b.value - 0.7).abs() < 1e-15);
    }

    #[test]
    fn a_power_mean_and_jump_size() {
        let p = prm();
        let alpha = crate::malthus::solve_alpha(&p, 1e-10).unwrap().rate().unwrap();
        let a1 = estimate_a(&p, 1.0, alpha, 20_000, 5, Threads(2)).unwrap();
        let a2 = estimate_a(&p, 2.0, alpha, 20_000, 5, Threads(2)).unwrap();
        assert!(a1.within(1.0, 3.0));
        assert!(a2.value + 3.0 * a2.se >= a1.value - 3.0 * a1.se);
    }

    #[test]
    fn grid_helper() {
        assert_eq!(linear_grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linear_grid(2.0, 5.0, 1), vec![2.0]);
    }
}
