//! The degree of a vertex as a CMJ process of its incident edges.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmj::{run_cmj_with, CmjConfig, Reproduction};
use crate::error::{param, Error, Result};
use crate::exec::{map_indexed, Threads};
use crate::point_process::{sample_degree_marks, sample_edge_life, Characteristic, ModelParams};
use crate::rng::{self, TAG_ANCESTORS, TAG_MARKS};
use crate::stats::{Estimate, Running};

use super::{run_collab, DegreeMode};

const STANDALONE_STREAM: u64 = 0x7374_616e;
const GRAPH_STREAM: u64 = 0x6772_6170;

/// Number of initial incident edges of a newborn vertex: 2 with probability `p`.
fn initial_degree(params: &ModelParams, replica_seed: u64) -> usize {
    let mut r = rng::stream(rng::derive(replica_seed, TAG_ANCESTORS));
    1 + (r.random::<f64>() < params.p()) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckConfig {
    pub params: ModelParams,
    /// Largest vertex age compared.
    pub horizon: f64,
    pub replicas: usize,
    pub seed: u64,
    pub grid_points: usize,
    /// The in-graph vertex must be born by this time.
    pub wait: f64,
    pub event_budget: usize,
}

impl CrosscheckConfig {
    pub fn new(params: ModelParams, horizon: f64, replicas: usize, seed: u64) -> Self {
        Self {
            params,
            horizon,
            replicas,
            seed,
            grid_points: 5,
            wait: 5.0 / (1.0 + params.b()),
            event_budget: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckRow {
    pub age: f64,
    pub standalone_living: Estimate,
    pub graph_living: Estimate,
    pub standalone_with_blue: Estimate,
    pub graph_with_blue: Estimate,
    /// `|difference| / combined SE` of the living means.
    pub z_living: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub config: CrosscheckConfig,
    /// `q * 1 + p * 2`.
    pub expected_initial_degree: f64,
    pub standalone_used: usize,
    pub standalone_excluded: usize,
    pub graph_used: usize,
    /// Graph replicas whose first newborn vertex came after `wait` or never.
    pub graph_no_newborn: usize,
    pub graph_excluded: usize,
    pub rows: Vec<CrosscheckRow>,
    pub all_agree: bool,
}

type Trajectory = Option<(Vec<u64>, Vec<u64>)>;

fn summarize(trajs: &[(Vec<u64>, Vec<u64>)], i: usize) -> (Estimate, Estimate) {
    let living: Running = trajs.iter().map(|t| t.0[i] as f64).collect();
    let blue: Running = trajs.iter().map(|t| t.1[i] as f64).collect();
    (living.estimate(), blue.estimate())
}

fn check_reliability(excluded: usize, total: usize) -> Result<()> {
    if total > 0 && excluded * 100 > total {
        return Err(Error::Reliability { excluded, total });
    }
    Ok(())
}

/// Mean degree by vertex age from the standalone degree CMJ and from the
/// first newborn vertex of simulated graphs.
pub fn degree_cmj_crosscheck(cfg: &CrosscheckConfig, threads: Threads) -> Result<CrosscheckReport> {
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
        return Err(param(
            "horizon",
            format!("must be finite and positive, got {}", cfg.horizon),
        ));
    }
    if cfg.replicas < 2 {
        return Err(param("replicas", "need at least 2"));
    }
    if cfg.grid_points < 2 {
        return Err(param("grid_points", "need at least 2"));
    }
    if !(cfg.wait > 0.0) {
        return Err(param("wait", "must be positive"));
    }
    let ages: Vec<f64> = (0..cfg.grid_points)
        .map(|i| cfg.horizon * i as f64 / (cfg.grid_points - 1) as f64)
        .collect();
    let params = cfg.params;

    let standalone: Vec<Result<Trajectory>> = map_indexed(cfg.replicas, threads, |r| {
        let rs = rng::replica_seed(rng::derive(cfg.seed, STANDALONE_STREAM), r as u64);
        let ancestors = initial_degree(&params, rs);
        let c = CmjConfig::new(params, ancestors, cfg.horizon, cfg.event_budget.max(ancestors), rs)
            .with_reproduction(Reproduction::Marks);
        let path = run_cmj_with(&c)?;
        if path.known_until() < cfg.horizon {
            return Ok(None);
        }
        let mut living = Vec::with_capacity(ages.len());
        let mut blue = Vec::with_capacity(ages.len());
        for &s in &ages {
            living.push(path.z_phi(&Characteristic::Alive, s)? as u64);
            blue.push(path.total_born(s)? as u64);
        }
        Ok(Some((living, blue)))
    });

    enum Outcome {
        Used(Vec<u64>, Vec<u64>),
        NoNewborn,
        Excluded,
    }
    let graph: Vec<Result<Outcome>> = map_indexed(cfg.replicas, threads, |r| {
        let rs = rng::replica_seed(rng::derive(cfg.seed, GRAPH_STREAM), r as u64);
        let g = run_collab(&params, cfg.wait + cfg.horizon, cfg.event_budget, rs)?;
        let tau = match g.vertices.get(2) {
            Some(v) if v.birth_time <= cfg.wait => v.birth_time,
            // A budget hit before any newborn leaves the question open.
            _ if g.exhausted_budget && g.known_until() < cfg.wait => return Ok(Outcome::Excluded),
            _ => return Ok(Outcome::NoNewborn),
        };
        if g.known_until() < tau + cfg.horizon {
            return Ok(Outcome::Excluded);
        }
        let mut living = Vec::with_capacity(ages.len());
        let mut blue = Vec::with_capacity(ages.len());
        for &s in &ages {
            living.push(g.degree_of(2, tau + s, DegreeMode::Living)?);
            blue.push(g.degree_of(2, tau + s, DegreeMode::WithBlue)?);
        }
        Ok(Outcome::Used(living, blue))
    });

    let mut st = Vec::new();
    let mut st_excluded = 0;
    for t in standalone {
        match t? {
            Some(x) => st.push(x),
            None => st_excluded += 1,
        }
    }
    let (mut gr, mut no_newborn, mut gr_excluded) = (Vec::new(), 0, 0);
    for o in graph {
        match o? {
            Outcome::Used(l, b) => gr.push((l, b)),
            Outcome::NoNewborn => no_newborn += 1,
            Outcome::Excluded => gr_excluded += 1,
        }
    }
    check_reliability(st_excluded, cfg.replicas)?;
    check_reliability(gr_excluded, cfg.replicas - no_newborn)?;
    if st.len() < 2 || gr.len() < 2 {
        return Err(Error::Precondition("too few usable replicas for a comparison".into()));
    }

    let mut rows = Vec::with_capacity(ages.len());
    for (i, &age) in ages.iter().enumerate() {
        let (sl, sb) = summarize(&st, i);
        let (gl, gb) = summarize(&gr, i);
        let se = (sl.se * sl.se + gl.se * gl.se).sqrt();
        let diff = (sl.value - gl.value).abs();
        let z = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(CrosscheckRow {
            age,
            standalone_living: sl,
            graph_living: gl,
            standalone_with_blue: sb,
            graph_with_blue: gb,
            z_living: z,
            agree: z <= 3.0,
        });
    }
    Ok(CrosscheckReport {
        config: *cfg,
        expected_initial_degree: 1.0 + params.p(),
        standalone_used: st.len(),
        standalone_excluded: st_excluded,
        graph_used: gr.len(),
        graph_no_newborn: no_newborn,
        graph_excluded: gr_excluded,
        all_agree: rows.iter().all(|r| r.agree),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolationReport {
    pub replicas: usize,
    pub isolated: usize,
    /// A replica counts as surviving once this many incident edges were ever born.
    pub threshold: usize,
    pub frequency: Estimate,
}

/// Frequency with which a newborn vertex ends up isolated for good.
///
/// The vertex starts with one incident edge, or two with probability `p`;
/// every incident edge adds further incident edges through its degree marks.
/// Lives are run to death, so a replica either runs out of incident edges
/// (isolation) or passes `threshold` edges ever born (survival).
pub fn isolation_mc(
    params: &ModelParams,
    replicas: usize,
    threshold: usize,
    seed: u64,
    threads: Threads,
) -> Result<IsolationReport> {
    if replicas < 2 {
        return Err(param("replicas", "need at least 2"));
    }
    if threshold == 0 {
        return Err(param("threshold", "must be positive"));
    }
    let outcomes: Vec<Result<bool>> = map_indexed(replicas, threads, |r| {
        let rs = rng::replica_seed(seed, r as u64);
        let mut pending = initial_degree(params, rs);
        let mut born = pending;
        let mut next = 0u64;
        while pending > 0 {
            if born > threshold {
                return Ok(false);
            }
            let life = sample_edge_life(params, f64::INFINITY, &mut rng::individual_stream(rs, next))?;
            let marks = sample_degree_marks(&life, &mut rng::tagged_stream(rs, next, TAG_MARKS));
            let k = marks.total() as usize;
            pending += k;
            born += k;
            pending -= 1;
            next += 1;
        }
        Ok(true)
    });
    let mut isolated = 0;
    let mut acc = Running::default();
    for o in outcomes {
        let iso = o?;
        isolated += iso as usize;
        acc.push(iso as u8 as f64);
    }
    Ok(IsolationReport {
        replicas,
        isolated,
        threshold,
        frequency: acc.estimate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standalone_initial_degree_law() {
        let prm = ModelParams::new(1.0, 1.0, 0.0).unwrap();
        assert!((0..200).all(|r| initial_degree(&prm, r) == 1));
        let prm = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        assert!((0..200).all(|r| initial_degree(&prm, r) == 2));
    }

    #[test]
    fn crosscheck_small() {
        let prm = ModelParams::new(1.0, 1.0, 0.5).unwrap();
        let rep = degree_cmj_crosscheck(&CrosscheckConfig::new(prm, 2.0, 2000, 4), Threads(2)).unwrap();
        assert_eq!(rep.rows.len(), 5);
        assert_eq!(rep.expected_initial_degree, 1.5);
        assert!(rep.rows[0].standalone_living.within(1.5, 4.0));
        assert!(rep.graph_no_newborn > 0);
    }

    #[test]
    fn isolation_is_certain_when_subcritical() {
        let prm = ModelParams::new(5.0, 1.0, 0.0).unwrap();
        let rep = isolation_mc(&prm, 500, 1000, 1, Threads::SINGLE).unwrap();
        assert_eq!(rep.isolated, 500);
    }
}
