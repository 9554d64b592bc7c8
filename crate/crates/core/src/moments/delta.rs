//! Maximal degree against the plug-in limit `sup_i exp(-beta tau_i) Y_i`.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exec::{map_indexed, Threads};
use crate::graph::{run_collab, DegreeMode};
use crate::malthus::Kernel;
use crate::point_process::ModelParams;
use crate::rng;
use crate::stats::{lk_norm, mean_se, Estimate, Z95_ONE_SIDED};

use super::{check_grid, check_reliability, DEFAULT_EVENT_BUDGET};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaConfig {
    pub params: ModelParams,
    /// Increasing positive horizons; the last one is `T_max`.
    pub horizons: Vec<f64>,
    pub replicas: usize,
    pub k: f64,
    pub seed: u64,
    pub event_budget: usize,
}

impl DeltaConfig {
    pub fn new(params: ModelParams, horizons: Vec<f64>, replicas: usize, k: f64, seed: u64) -> Self {
        Self {
            params,
            horizons,
            replicas,
            k,
            seed,
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }
}

/// One replica across all horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaDelta {
    pub index: usize,
    pub seed: u64,
    /// No living edge at `T_max`.
    pub extinct: bool,
    pub max_degree: Vec<u64>,
    /// `exp(-beta T) M(T)`.
    pub scaled_max: Vec<f64>,
    /// `max_i exp(-beta tau_i) (exp(-beta (T - tau_i)) D_i(T))`.
    pub delta_hat: Vec<f64>,
    /// `delta_hat >= scaled_max`, with the attaining degree checked as an integer.
    pub identity: Vec<bool>,
    /// Minimum of `scaled_max` over the second half of the horizons.
    pub liminf_proxy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub horizon: f64,
    /// `|| exp(-beta T) M(T) - delta_hat(T_max) ||_k` over all replicas.
    pub distance: Estimate,
    /// Same, over replicas that did not die out.
    pub distance_surviving: Estimate,
}

/// One-sided test that the distance at the first horizon exceeds the one at
/// the last, on paired per-replica `|.|^k` differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendTest {
    pub mean_difference: f64,
    pub se: f64,
    pub z: f64,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub config: DeltaConfig,
    pub alpha: f64,
    pub beta: f64,
    /// `alpha / beta`; `k` must exceed it.
    pub threshold: f64,
    pub excluded: usize,
    pub extinct: usize,
    pub rows: Vec<DeltaRow>,
    pub identity_holds: bool,
    pub trend: TrendTest,
    pub per_replica: Vec<ReplicaDelta>,
}

/// Solves for `alpha` and `beta` and checks `k > alpha / beta`.
pub fn delta_gate(params: &ModelParams, k: f64) -> Result<(f64, f64)> {
    let kernel = Kernel::new(*params);
    let alpha = kernel
        .solve_alpha()?
        .rate()
        .ok_or_else(|| Error::Regime("the edge process is not supercritical".into()))?;
    let beta = kernel
        .solve_beta()?
        .rate()
        .ok_or_else(|| Error::Regime("the degree process is not supercritical: beta does not exist".into()))?;
    let threshold = alpha / beta;
    if !(k > threshold) {
        return Err(Error::Regime(format!("k = {k} must exceed alpha/beta = {threshold}")));
    }
    Ok((alpha, beta))
}

pub fn delta_report(cfg: &DeltaConfig, threads: Threads) -> Result<DeltaReport> {
    check_grid(&cfg.horizons)?;
    if cfg.horizons[0] <= 0.0 {
        return Err(param("horizons", "must be positive"));
    }
    if cfg.replicas < 100 {
        return Err(param("replicas", format!("need at least 100, got {}", cfg.replicas)));
    }
    let (alpha, beta) = delta_gate(&cfg.params, cfg.k)?;
    let t_max = cfg.horizons[cfg.horizons.len() - 1];
    let tail_from = cfg.horizons.len() / 2;

    let runs: Vec<Result<Option<ReplicaDelta>>> = map_indexed(cfg.replicas, threads, |r| {
        let seed = rng::replica_seed(cfg.seed, r as u64);
        let g = run_collab(&cfg.params, t_max, cfg.event_budget, seed)?;
        if g.known_until() < t_max {
            return Ok(None);
        }
        let series = g.max_degree_series(&cfg.horizons, DegreeMode::Living)?;
        let mut scaled_max = Vec::with_capacity(cfg.horizons.len());
        let mut delta_hat = Vec::with_capacity(cfg.horizons.len());
        let mut identity = Vec::with_capacity(cfg.horizons.len());
        for (i, &t) in cfg.horizons.iter().enumerate() {
            let degrees = g.degrees_at(t, DegreeMode::Living)?;
            let mut dh: f64 = 0.0;
            let mut top = 0u64;
            for (v, &d) in degrees.iter().enumerate() {
                let tau = g.vertices[v].birth_time;
                dh = dh.max((-beta * tau).exp() * ((-beta * (t - tau)).exp() * d as f64));
                top = top.max(d);
            }
            let sm = (-beta * t).exp() * series.values[i] as f64;
            // The two exponentials multiply to exp(-beta T) up to rounding.
            identity.push(top == series.values[i] && dh >= sm * (1.0 - 8.0 * f64::EPSILON));
            scaled_max.push(sm);
            delta_hat.push(dh);
        }
        let liminf_proxy = scaled_max[tail_from..].iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Some(ReplicaDelta {
            index: r,
            seed,
            extinct: g.living_edges(t_max)? == 0,
            max_degree: series.values,
            scaled_max,
            delta_hat,
            identity,
            liminf_proxy,
        }))
    });
    let mut per_replica = Vec::with_capacity(cfg.replicas);
    let mut excluded = 0;
    for run in runs {
        match run? {
            Some(d) => per_replica.push(d),
            None => excluded += 1,
        }
    }
    check_reliability(excluded, cfg.replicas)?;

    let last = cfg.horizons.len() - 1;
    let gap = |d: &ReplicaDelta, i: usize| d.scaled_max[i] - d.delta_hat[last];
    let rows = cfg
        .horizons
        .iter()
        .enumerate()
        .map(|(i, &horizon)| {
            let all: Vec<f64> = per_replica.iter().map(|d| gap(d, i)).collect();
            let surv: Vec<f64> = per_replica.iter().filter(|d| !d.extinct).map(|d| gap(d, i)).collect();
            DeltaRow {
                horizon,
                distance: lk_norm(&all, cfg.k),
                distance_surviving: lk_norm(&surv, cfg.k),
            }
        })
        .collect();
    let diffs: Vec<f64> = per_replica
        .iter()
        .map(|d| gap(d, 0).abs().powf(cfg.k) - gap(d, last).abs().powf(cfg.k))
        .collect();
    let e = mean_se(&diffs);
    let z = if e.se > 0.0 { e.value / e.se } else { 0.0 };
    Ok(DeltaReport {
        config: cfg.clone(),
        alpha,
        beta,
        threshold: alpha / beta,
        excluded,
        extinct: per_replica.iter().filter(|d| d.extinct).count(),
        rows,
        identity_holds: per_replica.iter().all(|d| d.identity.iter().all(|&x| x)),
        trend: TrendTest {
            mean_difference: e.value,
            se: e.se,
            z,
            decreasing: z > Z95_ONE_SIDED,
        },
        per_replica,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gate() {
        let prm = ModelParams::new(0.1, 0.1, 0.5).unwrap();
        let e = delta_gate(&prm, 2.0).unwrap_err();
        assert!(matches!(e, Error::Regime(ref s) if s.contains("alpha/beta")));
        assert!(delta_gate(&prm, 3.0).is_ok());
        assert!(matches!(
            delta_gate(&ModelParams::new(1.0, 1.0, 0.5).unwrap(), 50.0),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn small_report() {
        let prm = ModelParams::new(0.1, 0.1, 0.5).unwrap();
        let cfg = DeltaConfig::new(prm, vec![1.0, 2.0, 3.0], 100, 3.0, 2);
        let rep = delta_report(&cfg, Threads(2)).unwrap();
        assert!(rep.identity_holds);
        assert_eq!(rep.rows.len(), 3);
        assert!(rep.rows[2].distance.value <= 1e-12);
        for d in rep.per_replica.iter().filter(|d| d.extinct) {
            assert_eq!(d.scaled_max[2], 0.0);
        }
    }
}
