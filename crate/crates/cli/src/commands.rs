use std::path::PathBuf;

use cmjlab::coupling::relabel_tree;
use cmjlab::exec::map_indexed;
use cmjlab::graph::{degree_cmj_crosscheck, run_collab, CrosscheckConfig, CrosscheckReport, GraphSnapshot, SeriesRow};
use cmjlab::malthus::{mc_discounted_reproduction, solve_report, Kernel};
use cmjlab::moments::{bound_report, count_samples, delta_gate, delta_report, DeltaConfig, MAX_K};
use cmjlab::rng;
use cmjlab::stats::Running;
use cmjlab::{BoundReport, DeltaReport, Error, Estimate, FamilyTree, MomentSeries, SolveReport, Threads};
use serde::Serialize;

use crate::config::{RateSpec, RunConfig};
use crate::output::{ensure_dir, json_bytes, num, write_file, CsvDoc, Status};
use crate::CliError;

/// How a command finished; maps onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Regime,
    CapHit,
}

const BOUND_STREAM: u64 = 0x626f_756e;
const MALTHUS_STREAM: u64 = 0x6d61_6c74;

fn report(path: &std::path::Path) {
    eprintln!("wrote {}", path.display());
}

fn alpha_of(kernel: &Kernel) -> Result<f64, CliError> {
    kernel
        .solve_alpha()?
        .rate()
        .ok_or_else(|| Error::Regime("the edge process is not supercritical".into()).into())
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let rep = solve_report(&params, &[cfg.k], cfg.tolerances())?;
    let status = if rep.supercritical {
        Status::Ok
    } else {
        Status::NotSupercritical
    };
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let path = write_file(
        &dir.join(format!("{}.json", cfg.stem())),
        &json_bytes(cfg, status, &rep),
        true,
    )?;
    report(&path);
    if rep.supercritical {
        Ok(Outcome::Ok)
    } else {
        eprintln!(
            "not supercritical: mean offspring f(0) = {} is not above 1",
            2.0 * rep.eta_mean
        );
        Ok(Outcome::Regime)
    }
}

#[derive(Serialize)]
struct ReplicaStatus {
    replica: usize,
    seed: u64,
    exhausted_budget: bool,
    known_until: f64,
    edges: usize,
    rows: usize,
}

#[derive(Serialize)]
struct SimulateSummary {
    t_grid: Vec<f64>,
    exhausted: usize,
    replicas: Vec<ReplicaStatus>,
}

#[derive(Serialize)]
struct SnapshotDoc<'a> {
    replica: usize,
    replica_seed: u64,
    snapshots: &'a [GraphSnapshot],
}

struct ReplicaRun {
    status: ReplicaStatus,
    rows: Vec<SeriesRow>,
    snapshots: Vec<GraphSnapshot>,
}

const SERIES_COLUMNS: [&str; 7] = [
    "t",
    "vertices",
    "living_edges",
    "total_edges",
    "max_degree_living",
    "max_degree_with_blue",
    "argmax_vertex_birth_time",
];

fn row_values(r: &SeriesRow) -> [f64; 6] {
    [
        r.vertices as f64,
        r.living_edges as f64,
        r.total_edges as f64,
        r.max_degree_living as f64,
        r.max_degree_with_blue as f64,
        r.argmax_vertex_birth_time,
    ]
}

pub fn simulate(cfg: &RunConfig, threads: Threads) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    if cfg.t_stop() > cfg.horizon {
        return Err(CliError::Input(format!(
            "invalid `t_stop`: {} exceeds the horizon {}",
            cfg.t_stop(),
            cfg.horizon
        )));
    }
    if let Some(t) = cfg.snapshots.iter().find(|&&t| t > cfg.horizon) {
        return Err(CliError::Input(format!(
            "invalid `snapshots`: {t} exceeds the horizon {}",
            cfg.horizon
        )));
    }
    let grid = cfg.t_grid();
    let runs: Vec<Result<ReplicaRun, Error>> = map_indexed(cfg.replicas, threads, |r| {
        let seed = rng::replica_seed(cfg.seed, r as u64);
        let g = run_collab(&params, cfg.horizon, cfg.event_budget, seed)?;
        let known = g.known_until();
        let covered: Vec<f64> = grid.iter().copied().filter(|&t| t <= known).collect();
        let rows = g.time_series(&covered)?;
        let snapshots = cfg
            .snapshots
            .iter()
            .filter(|&&t| t <= known)
            .map(|&t| g.snapshot(t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ReplicaRun {
            status: ReplicaStatus {
                replica: r,
                seed,
                exhausted_budget: g.exhausted_budget,
                known_until: known,
                edges: g.edges.len(),
                rows: rows.len(),
            },
            rows,
            snapshots,
        })
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let exhausted = runs.iter().filter(|r| r.status.exhausted_budget).count();
    let status = if exhausted > 0 {
        Status::BudgetExhausted
    } else {
        Status::Ok
    };

    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let stem = cfg.stem();
    if cfg.aggregate {
        let mut header = vec!["t".to_string(), "replicas".to_string()];
        for col in &SERIES_COLUMNS[1..] {
            header.push(format!("{col}_mean"));
            header.push(format!("{col}_se"));
        }
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut doc = CsvDoc::new(cfg, &header);
        for (i, &t) in grid.iter().enumerate() {
            let mut acc: [Running; 6] = Default::default();
            let mut n = 0;
            for run in runs.iter().filter(|r| r.rows.len() > i) {
                n += 1;
                for (a, v) in acc.iter_mut().zip(row_values(&run.rows[i])) {
                    a.push(v);
                }
            }
            let mut fields = vec![num(t), n.to_string()];
            for a in &acc {
                let e = a.estimate();
                fields.push(num(e.value));
                fields.push(num(e.se));
            }
            doc.row(fields);
        }
        report(&write_file(&dir.join(format!("{stem}.csv")), &doc.into_bytes(), true)?);
    } else {
        for run in &runs {
            let mut doc = CsvDoc::new(cfg, &SERIES_COLUMNS);
            for r in &run.rows {
                let mut fields = vec![num(r.t)];
                fields.extend([
                    r.vertices.to_string(),
                    r.living_edges.to_string(),
                    r.total_edges.to_string(),
                    r.max_degree_living.to_string(),
                    r.max_degree_with_blue.to_string(),
                ]);
                fields.push(num(r.argmax_vertex_birth_time));
                doc.row(fields);
            }
            let complete = run.rows.len() == grid.len();
            let path = dir.join(format!("{stem}_r{:04}.csv", run.status.replica));
            report(&write_file(&path, &doc.into_bytes(), complete)?);
        }
    }
    if !cfg.snapshots.is_empty() {
        for run in &runs {
            let body = SnapshotDoc {
                replica: run.status.replica,
                replica_seed: run.status.seed,
                snapshots: &run.snapshots,
            };
            let complete = run.snapshots.len() == cfg.snapshots.len();
            let path = dir.join(format!("{stem}_r{:04}_snapshots.json", run.status.replica));
            report(&write_file(&path, &json_bytes(cfg, status, &body), complete)?);
        }
    }
    let summary = SimulateSummary {
        t_grid: grid,
        exhausted,
        replicas: runs.into_iter().map(|r| r.status).collect(),
    };
    report(&write_file(
        &dir.join(format!("{stem}_replicas.json")),
        &json_bytes(cfg, status, &summary),
        true,
    )?);
    if exhausted > 0 {
        eprintln!("{exhausted} of {} replicas exhausted the event budget", cfg.replicas);
        return Ok(Outcome::CapHit);
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct MomentsDoc {
    alpha: f64,
    rate: f64,
    series: MomentSeries,
    /// Per-replica OLS slope of `exp(-rate t) Z(t)` over the second half of the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_slope: Option<Estimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<BoundReport>,
    /// Every series point is at most `bound_norm` plus three standard errors.
    #[serde(skip_serializing_if = "Option::is_none")]
    dominated: Option<bool>,
}

pub fn moments(cfg: &RunConfig, threads: Threads) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let ch = cfg.characteristic()?;
    if cfg.replicas < 100 {
        return Err(CliError::Input(format!(
            "invalid `replicas`: need at least 100, got {}",
            cfg.replicas
        )));
    }
    let kernel = Kernel::with_tolerances(params, cfg.tolerances());
    let alpha = alpha_of(&kernel)?;
    let rate = match cfg.rate_spec()? {
        RateSpec::Alpha => alpha,
        RateSpec::Beta => kernel
            .solve_beta()?
            .rate()
            .ok_or_else(|| Error::Regime("the degree process is not supercritical: beta does not exist".into()))?,
        RateSpec::Value(x) => x,
    };
    let grid = cfg.t_grid();
    let samples = count_samples(&params, &ch, &grid, cfg.replicas, cfg.seed, cfg.event_budget, threads)?;
    let series = samples.series(cfg.k, rate);
    let tail_slope = if cfg.k == 1.0 && grid.len() >= 4 {
        Some(samples.tail_slope(rate, grid[grid.len() / 2])?)
    } else {
        None
    };
    let with_bound = cfg.k >= 2.0 && cfg.k.fract() == 0.0 && cfg.k <= MAX_K as f64 && rate == alpha;
    let (c1, bound, dominated) = if with_bound {
        if cfg.lives < 1000 {
            return Err(CliError::Input(format!(
                "invalid `lives`: need at least 1000, got {}",
                cfg.lives
            )));
        }
        let first = samples.series(1.0, alpha);
        let c1 = cfg.c1.unwrap_or_else(|| first.plateau(3.0));
        let b = bound_report(
            &params,
            &ch,
            cfg.k as u32,
            alpha,
            c1,
            cfg.lives,
            rng::derive(cfg.seed, BOUND_STREAM),
            threads,
        )?;
        let dominated = series
            .estimates
            .iter()
            .zip(&series.se)
            .all(|(e, s)| *e <= b.bound_norm + 3.0 * s);
        (Some(c1), Some(b), Some(dominated))
    } else {
        (None, None, None)
    };

    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let stem = cfg.stem();
    let mut header = vec!["t", "estimate", "se"];
    if bound.is_some() {
        header.push("bound_norm");
    }
    let mut doc = CsvDoc::new(cfg, &header);
    for ((t, e), se) in grid.iter().zip(&series.estimates).zip(&series.se) {
        let mut fields = vec![num(*t), num(*e), num(*se)];
        if let Some(b) = &bound {
            fields.push(num(b.bound_norm));
        }
        doc.row(fields);
    }
    report(&write_file(&dir.join(format!("{stem}.csv")), &doc.into_bytes(), true)?);
    let body = MomentsDoc {
        alpha,
        rate,
        series,
        tail_slope,
        c1,
        bound,
        dominated,
    };
    report(&write_file(
        &dir.join(format!("{stem}.json")),
        &json_bytes(cfg, Status::Ok, &body),
        true,
    )?);
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct GateDoc<'a> {
    solve: &'a SolveReport,
    message: String,
}

#[derive(Serialize)]
struct MaxdegDoc<'a> {
    solve: &'a SolveReport,
    delta: &'a DeltaReport,
}

pub fn maxdeg(cfg: &RunConfig, threads: Threads) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let solved = solve_report(&params, &[cfg.k], cfg.tolerances())?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let stem = cfg.stem();
    if let Err(e) = delta_gate(&params, cfg.k) {
        let Error::Regime(message) = e else {
            return Err(e.into());
        };
        let body = GateDoc {
            solve: &solved,
            message: message.clone(),
        };
        report(&write_file(
            &dir.join(format!("{stem}.json")),
            &json_bytes(cfg, Status::Regime, &body),
            true,
        )?);
        eprintln!("{message}");
        return Ok(Outcome::Regime);
    }
    if cfg.replicas < 100 {
        return Err(CliError::Input(format!(
            "invalid `replicas`: need at least 100, got {}",
            cfg.replicas
        )));
    }
    let dcfg = DeltaConfig {
        event_budget: cfg.event_budget,
        ..DeltaConfig::new(params, cfg.horizons.clone(), cfg.replicas, cfg.k, cfg.seed)
    };
    let rep = delta_report(&dcfg, threads)?;

    let mut doc = CsvDoc::new(
        cfg,
        &[
            "horizon",
            "distance",
            "distance_se",
            "distance_surviving",
            "distance_surviving_se",
        ],
    );
    for r in &rep.rows {
        doc.row([
            num(r.horizon),
            num(r.distance.value),
            num(r.distance.se),
            num(r.distance_surviving.value),
            num(r.distance_surviving.se),
        ]);
    }
    report(&write_file(
        &dir.join(format!("{stem}_distances.csv")),
        &doc.into_bytes(),
        true,
    )?);
    let mut doc = CsvDoc::new(
        cfg,
        &[
            "replica",
            "seed",
            "horizon",
            "extinct",
            "max_degree",
            "scaled_max",
            "delta_hat",
            "identity",
        ],
    );
    for d in &rep.per_replica {
        for (i, &h) in rep.config.horizons.iter().enumerate() {
            doc.row([
                d.index.to_string(),
                d.seed.to_string(),
                num(h),
                d.extinct.to_string(),
                d.max_degree[i].to_string(),
                num(d.scaled_max[i]),
                num(d.delta_hat[i]),
                d.identity[i].to_string(),
            ]);
        }
    }
    report(&write_file(
        &dir.join(format!("{stem}_replicas.csv")),
        &doc.into_bytes(),
        true,
    )?);
    let body = MaxdegDoc {
        solve: &solved,
        delta: &rep,
    };
    report(&write_file(
        &dir.join(format!("{stem}.json")),
        &json_bytes(cfg, Status::Ok, &body),
        true,
    )?);
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct RelabelDoc<'a> {
    depth_cap: usize,
    steps: usize,
    cap_hit: bool,
    #[serde(flatten)]
    tree: &'a FamilyTree,
}

pub fn relabel(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Input("invalid `input`: relabel needs a tree file".into()))?;
    let text = std::fs::read_to_string(input).map_err(|e| CliError::Io {
        path: input.display().to_string(),
        source: e,
    })?;
    let tree: FamilyTree =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
    let out = relabel_tree(&tree, cfg.depth_cap)?;
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let name = match &cfg.output {
        Some(name) => name.clone(),
        None => {
            let stem = input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "tree".into());
            format!("{stem}_relabeled.json")
        }
    };
    let path: PathBuf = dir.join(name);
    let status = if out.cap_hit { Status::CapHit } else { Status::Ok };
    let body = RelabelDoc {
        depth_cap: cfg.depth_cap,
        steps: out.steps,
        cap_hit: out.cap_hit,
        tree: &out.tree,
    };
    let written = write_file(&path, &json_bytes(cfg, status, &body), !out.cap_hit)?;
    report(&written);
    if out.cap_hit {
        eprintln!("red labels remain beyond depth {}; partial tree kept", cfg.depth_cap);
        return Ok(Outcome::CapHit);
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct MalthusCheck {
    alpha: f64,
    lives: usize,
    /// Monte Carlo `E sum_j jump_j exp(-alpha sigma_j)`; the target is 1.
    estimate: Estimate,
    within_3se: bool,
}

#[derive(Serialize)]
struct CrosscheckDoc {
    degree: CrosscheckReport,
    malthus: MalthusCheck,
}

pub fn crosscheck(cfg: &RunConfig, threads: Threads) -> Result<Outcome, CliError> {
    let params = cfg.params()?;
    let kernel = Kernel::with_tolerances(params, cfg.tolerances());
    let alpha = alpha_of(&kernel)?;
    let cc = CrosscheckConfig {
        event_budget: cfg.event_budget,
        ..CrosscheckConfig::new(params, cfg.horizon, cfg.replicas, cfg.seed)
    };
    let degree = degree_cmj_crosscheck(&cc, threads)?;
    let estimate = mc_discounted_reproduction(
        &params,
        alpha,
        cfg.lives,
        rng::derive(cfg.seed, MALTHUS_STREAM),
        threads,
    )?;
    let malthus = MalthusCheck {
        alpha,
        lives: cfg.lives,
        within_3se: estimate.within(1.0, 3.0),
        estimate,
    };
    let status = if degree.all_agree && malthus.within_3se {
        Status::Ok
    } else {
        Status::Mismatch
    };
    let dir = cfg.out_dir();
    ensure_dir(&dir)?;
    let stem = cfg.stem();
    let mut doc = CsvDoc::new(
        cfg,
        &[
            "age",
            "standalone_living",
            "standalone_living_se",
            "graph_living",
            "graph_living_se",
            "standalone_with_blue",
            "standalone_with_blue_se",
            "graph_with_blue",
            "graph_with_blue_se",
            "z_living",
            "agree",
        ],
    );
    for r in &degree.rows {
        doc.row([
            num(r.age),
            num(r.standalone_living.value),
            num(r.standalone_living.se),
            num(r.graph_living.value),
            num(r.graph_living.se),
            num(r.standalone_with_blue.value),
            num(r.standalone_with_blue.se),
            num(r.graph_with_blue.value),
            num(r.graph_with_blue.se),
            num(r.z_living),
            r.agree.to_string(),
        ]);
    }
    report(&write_file(&dir.join(format!("{stem}.csv")), &doc.into_bytes(), true)?);
    let body = CrosscheckDoc { degree, malthus };
    report(&write_file(
        &dir.join(format!("{stem}.json")),
        &json_bytes(cfg, status, &body),
        true,
    )?);
    if status == Status::Mismatch {
        eprintln!("cross-check disagreement beyond 3 standard errors; see {stem}.json");
    }
    Ok(Outcome::Ok)
}
