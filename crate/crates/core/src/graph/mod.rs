//! The collaboration graph.
//!
//! Edges are the individuals of a CMJ process. A birth event of an edge adds a
//! vertex that is joined to both endpoints of the edge (jump 2) or to one of
//! them chosen by a fair coin (jump 1). Vertices are never removed; edges die
//! with the `b + c * xi` hazard and may be kept as "blue" edges for degree
//! counting.

mod degree;
mod export;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmj::{life_until, Pending};
use crate::error::{param, Error, Result};
use crate::point_process::{EdgeLife, ModelParams, Mortality};
use crate::rng::{self, TAG_COINS};

pub use degree::{
    degree_cmj_crosscheck, isolation_mc, CrosscheckConfig, CrosscheckReport, CrosscheckRow, IsolationReport,
};
pub use export::{write_series_csv, GraphSnapshot, SeriesRow, SnapshotEdge, SnapshotVertex};

/// Attachment of a jump-1 newcomer to the first endpoint.
pub const ATTACH_FIRST: u8 = 0;
/// Attachment of a jump-1 newcomer to the second endpoint.
pub const ATTACH_SECOND: u8 = 1;
/// Attachment of a jump-2 newcomer to both endpoints.
pub const ATTACH_BOTH: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DegreeMode {
    /// Living incident edges only.
    #[default]
    Living,
    /// Living and dead ("blue") incident edges.
    WithBlue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub birth_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub id: usize,
    pub endpoints: (usize, usize),
    pub birth_time: f64,
    pub parent: Option<usize>,
    pub life: EdgeLife,
    /// One entry per birth event, see [`ATTACH_BOTH`] and friends.
    pub attach: Vec<u8>,
}

impl GraphEdge {
    /// Absolute death time; infinite for a life cut by the horizon.
    pub fn death_time(&self) -> f64 {
        if self.life.truncated {
            f64::INFINITY
        } else {
            self.birth_time + self.life.lifetime
        }
    }

    /// `birth <= t < death`.
    pub fn is_alive(&self, t: f64) -> bool {
        self.birth_time <= t && t < self.death_time()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphPath {
    /// In birth order; ids equal positions.
    pub vertices: Vec<Vertex>,
    /// In birth order; ids equal positions.
    pub edges: Vec<GraphEdge>,
    pub horizon: f64,
    pub event_budget: usize,
    pub exhausted_budget: bool,
    /// Every vertex and edge born at or before this time is recorded.
    pub complete_until: f64,
    pub seed: u64,
    #[serde(skip)]
    incident: Vec<Vec<usize>>,
}

fn spawn_edge(
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    id: usize,
    endpoints: (usize, usize),
    parent: Option<usize>,
    birth_time: f64,
    queue: &mut BinaryHeap<Reverse<Pending>>,
) -> Result<GraphEdge> {
    let mut r = rng::individual_stream(seed, id as u64);
    let life = life_until(params, Mortality::Hazard, horizon - birth_time, &mut r)?;
    let mut coins = rng::tagged_stream(seed, id as u64, TAG_COINS);
    let attach = life
        .jump_sizes
        .iter()
        .map(|&j| {
            if j == 2 {
                ATTACH_BOTH
            } else {
                coins.random_bool(0.5) as u8
            }
        })
        .collect();
    for (event, &age) in life.event_ages.iter().enumerate() {
        queue.push(Reverse(Pending {
            time: birth_time + age,
            parent: id,
            event,
        }));
    }
    Ok(GraphEdge {
        id,
        endpoints,
        birth_time,
        parent,
        life,
        attach,
    })
}

/// Simulates the graph from two vertices joined by one edge. `event_budget`
/// caps the number of edges ever born.
pub fn run_collab(params: &ModelParams, horizon: f64, event_budget: usize, seed: u64) -> Result<GraphPath> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(param(
            "horizon",
            format!("must be finite and nonnegative, got {horizon}"),
        ));
    }
    if event_budget == 0 {
        return Err(param("event_budget", "must be positive"));
    }
    let mut vertices = vec![Vertex { id: 0, birth_time: 0.0 }, Vertex { id: 1, birth_time: 0.0 }];
    let mut queue = BinaryHeap::new();
    let mut edges = vec![spawn_edge(params, horizon, seed, 0, (0, 1), None, 0.0, &mut queue)?];

    let mut exhausted = false;
    let mut last_time = 0.0;
    let mut prev_distinct = 0.0;
    while let Some(Reverse(ev)) = queue.peek().copied() {
        let parent = &edges[ev.parent];
        let how = parent.attach[ev.event];
        let (a, b) = parent.endpoints;
        if a == b {
            return Err(Error::Consistency(format!("edge {} is a self-loop", parent.id)));
        }
        let targets: &[usize] = match how {
            ATTACH_BOTH => &[a, b],
            ATTACH_FIRST => &[a],
            _ => &[b],
        };
        let targets = targets.to_vec();
        if edges.len() + targets.len() > event_budget {
            exhausted = true;
            break;
        }
        queue.pop();
        if ev.time > last_time {
            prev_distinct = last_time;
            last_time = ev.time;
        }
        let v = vertices.len();
        vertices.push(Vertex {
            id: v,
            birth_time: ev.time,
        });
        for old in targets {
            let id = edges.len();
            let e = spawn_edge(
                params,
                horizon,
                seed,
                id,
                (old, v),
                Some(ev.parent),
                ev.time,
                &mut queue,
            )?;
            edges.push(e);
        }
    }

    let complete_until = if exhausted {
        match queue.peek() {
            Some(Reverse(next)) if next.time <= last_time => prev_distinct,
            _ => last_time,
        }
    } else {
        horizon
    };

    let mut incident = vec![Vec::new(); vertices.len()];
    for e in &edges {
        incident[e.endpoints.0].push(e.id);
        incident[e.endpoints.1].push(e.id);
    }
    Ok(GraphPath {
        vertices,
        edges,
        horizon,
        event_budget,
        exhausted_budget: exhausted,
        complete_until,
        seed,
        incident,
    })
}

/// Per-vertex degrees with a lazily cleaned max-heap over `(degree, vertex)`.
/// Ties in degree go to the older vertex.
#[derive(Debug, Default)]
struct DegreeTracker {
    deg: Vec<u64>,
    heap: BinaryHeap<(u64, Reverse<usize>)>,
}

impl DegreeTracker {
    fn add(&mut self, v: usize, delta: i64) {
        if v >= self.deg.len() {
            self.deg.resize(v + 1, 0);
        }
        self.deg[v] = (self.deg[v] as i64 + delta) as u64;
        self.heap.push((self.deg[v], Reverse(v)));
    }

    fn max(&mut self) -> Option<(u64, usize)> {
        while let Some(&(d, Reverse(v))) = self.heap.peek() {
            if self.deg[v] == d {
                return Some((d, v));
            }
            self.heap.pop();
        }
        None
    }
}

/// Maximal degree at each grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSeries {
    pub mode: DegreeMode,
    pub t_grid: Vec<f64>,
    pub values: Vec<u64>,
    /// A vertex attaining the maximum at each grid time.
    pub argmax: Vec<usize>,
}

/// Combined sweep result for both degree modes.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SweepPoint {
    pub t: f64,
    pub vertices: usize,
    pub living_edges: usize,
    pub total_edges: usize,
    pub max_living: (u64, usize),
    pub max_blue: (u64, usize),
}

impl GraphPath {
    /// Latest time up to which the graph is exact.
    pub fn known_until(&self) -> f64 {
        if self.exhausted_budget {
            self.complete_until
        } else {
            self.horizon
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let known = self.known_until();
        if !(t <= known) {
            return Err(Error::OutOfRange { t, known_until: known });
        }
        Ok(())
    }

    fn check_grid(&self, grid: &[f64]) -> Result<()> {
        if grid.is_empty() {
            return Err(param("t_grid", "must not be empty"));
        }
        if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(param("t_grid", "must be nonnegative and strictly increasing"));
        }
        self.check_time(grid[grid.len() - 1])
    }

    /// Edge ids incident to `v`.
    pub fn incident(&self, v: usize) -> Result<&[usize]> {
        self.incident.get(v).map(Vec::as_slice).ok_or(Error::UnknownVertex(v))
    }

    /// `V(t)`.
    pub fn vertex_count(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        Ok(self.vertices.partition_point(|v| v.birth_time <= t))
    }

    pub fn living_edges(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        Ok(self.edges.iter().filter(|e| e.is_alive(t)).count())
    }

    /// Number of birth events up to and including `t`.
    pub fn births(&self, t: f64) -> Result<usize> {
        Ok(self.vertex_count(t)? - 2)
    }

    pub fn degree_of(&self, v: usize, t: f64, mode: DegreeMode) -> Result<u64> {
        let vertex = self.vertices.get(v).ok_or(Error::UnknownVertex(v))?;
        self.check_time(t)?;
        if vertex.birth_time > t {
            return Err(Error::VertexNotBorn {
                vertex: v,
                birth_time: vertex.birth_time,
                t,
            });
        }
        let count = self.incident[v]
            .iter()
            .map(|&e| &self.edges[e])
            .filter(|e| match mode {
                DegreeMode::Living => e.is_alive(t),
                DegreeMode::WithBlue => e.birth_time <= t,
            })
            .count();
        Ok(count as u64)
    }

    /// One pass over birth and death events, sampled at the grid times.
    pub(crate) fn sweep(&self, grid: &[f64]) -> Result<Vec<SweepPoint>> {
        self.check_grid(grid)?;
        // Edges are already in birth order; deaths need sorting.
        let mut deaths: Vec<(f64, usize)> = self
            .edges
            .iter()
            .filter(|e| !e.life.truncated)
            .map(|e| (e.death_time(), e.id))
            .collect();
        deaths.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut living = DegreeTracker::default();
        let mut blue = DegreeTracker::default();
        let (mut bi, mut di, mut alive) = (0, 0, 0usize);
        let mut out = Vec::with_capacity(grid.len());
        for &t in grid {
            while bi < self.edges.len() && self.edges[bi].birth_time <= t {
                let (a, b) = self.edges[bi].endpoints;
                for v in [a, b] {
                    living.add(v, 1);
                    blue.add(v, 1);
                }
                alive += 1;
                bi += 1;
            }
            while di < deaths.len() && deaths[di].0 <= t {
                let (a, b) = self.edges[deaths[di].1].endpoints;
                living.add(a, -1);
                living.add(b, -1);
                alive -= 1;
                di += 1;
            }
            out.push(SweepPoint {
                t,
                vertices: self.vertices.partition_point(|v| v.birth_time <= t),
                living_edges: alive,
                total_edges: bi,
                max_living: living.max().unwrap_or((0, 0)),
                max_blue: blue.max().unwrap_or((0, 0)),
            });
        }
        Ok(out)
    }

    /// `M(t)` on the grid.
    pub fn max_degree_series(&self, grid: &[f64], mode: DegreeMode) -> Result<DegreeSeries> {
        let points = self.sweep(grid)?;
        let pick = |p: &SweepPoint| match mode {
            DegreeMode::Living => p.max_living,
            DegreeMode::WithBlue => p.max_blue,
        };
        Ok(DegreeSeries {
            mode,
            t_grid: grid.to_vec(),
            values: points.iter().map(|p| pick(p).0).collect(),
            argmax: points.iter().map(|p| pick(p).1).collect(),
        })
    }

    /// Rows of the CSV time-series export.
    pub fn time_series(&self, grid: &[f64]) -> Result<Vec<SeriesRow>> {
        Ok(self
            .sweep(grid)?
            .into_iter()
            .map(|p| SeriesRow {
                t: p.t,
                vertices: p.vertices,
                living_edges: p.living_edges,
                total_edges: p.total_edges,
                max_degree_living: p.max_living.0,
                max_degree_with_blue: p.max_blue.0,
                argmax_vertex_birth_time: self.vertices[p.max_living.1].birth_time,
            })
            .collect())
    }

    /// Living degrees of every vertex born by `t`.
    pub fn degrees_at(&self, t: f64, mode: DegreeMode) -> Result<Vec<u64>> {
        let n = self.vertex_count(t)?;
        let mut deg = vec![0u64; n];
        for e in &self.edges {
            if e.birth_time > t {
                break;
            }
            let counted = match mode {
                DegreeMode::Living => e.is_alive(t),
                DegreeMode::WithBlue => true,
            };
            if counted {
                deg[e.endpoints.0] += 1;
                deg[e.endpoints.1] += 1;
            }
        }
        Ok(deg)
    }

    pub fn snapshot(&self, t: f64) -> Result<GraphSnapshot> {
        let living = self.degrees_at(t, DegreeMode::Living)?;
        let blue = self.degrees_at(t, DegreeMode::WithBlue)?;
        Ok(GraphSnapshot {
            t,
            vertices: self.vertices[..living.len()]
                .iter()
                .map(|v| SnapshotVertex {
                    id: v.id,
                    birth_time: v.birth_time,
                    degree_living: living[v.id],
                    degree_with_blue: blue[v.id],
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .take_while(|e| e.birth_time <= t)
                .map(|e| SnapshotEdge {
                    id: e.id,
                    endpoints: [e.endpoints.0, e.endpoints.1],
                    birth_time: e.birth_time,
                    alive: e.is_alive(t),
                })
                .collect(),
        })
    }
}
