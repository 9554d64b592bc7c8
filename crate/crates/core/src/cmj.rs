//! Generic CMJ population simulator with full genealogy.
//!
//! Births are processed in time order from a priority queue keyed by
//! `(absolute time, parent id, event index)`. Individual `i` draws its life
//! from the stream derived from `(replica seed, i)`, and ids are assigned in
//! chronological order, so a run with a longer horizon reproduces every
//! individual of a shorter run with the same seed.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::point_process::{
    sample_degree_marks, sample_edge_life_with, Characteristic, DegreeMarks, EdgeLife, ModelParams, Mortality,
};
use crate::rng::{self, TAG_MARKS};

/// What an individual's birth events produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reproduction {
    /// `jump` children per event (the edge process `xi`).
    #[default]
    Jumps,
    /// One child per event with mark 1 (the degree process `eta`).
    Marks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmjConfig {
    pub params: ModelParams,
    pub mortality: Mortality,
    pub reproduction: Reproduction,
    pub ancestors: usize,
    pub horizon: f64,
    pub event_budget: usize,
    pub seed: u64,
}

impl CmjConfig {
    pub fn new(params: ModelParams, ancestors: usize, horizon: f64, event_budget: usize, seed: u64) -> Self {
        Self {
            params,
            mortality: Mortality::Hazard,
            reproduction: Reproduction::Jumps,
            ancestors,
            horizon,
            event_budget,
            seed,
        }
    }

    pub fn with_mortality(mut self, mortality: Mortality) -> Self {
        self.mortality = mortality;
        self
    }

    pub fn with_reproduction(mut self, reproduction: Reproduction) -> Self {
        self.reproduction = reproduction;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(param(
                "horizon",
                format!("must be finite and nonnegative, got {}", self.horizon),
            ));
        }
        if self.ancestors == 0 {
            return Err(param("ancestors", "must be positive"));
        }
        if self.event_budget < self.ancestors {
            return Err(param("event_budget", "must be at least the number of ancestors"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth_time: f64,
    pub life: EdgeLife,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marks: Option<DegreeMarks>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationPath {
    pub individuals: Vec<Individual>,
    pub ancestors: usize,
    pub horizon: f64,
    pub event_budget: usize,
    pub exhausted_budget: bool,
    /// Every birth at or before this time is recorded.
    pub complete_until: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Pending {
    pub(crate) time: f64,
    pub(crate) parent: usize,
    pub(crate) event: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.parent.cmp(&other.parent))
            .then(self.event.cmp(&other.event))
    }
}

/// Life cut at `remaining` age; a zero remaining horizon gives an empty life.
pub(crate) fn life_until(
    params: &ModelParams,
    mortality: Mortality,
    remaining: f64,
    rng: &mut rng::SimRng,
) -> Result<EdgeLife> {
    if remaining <= 0.0 {
        return Ok(EdgeLife {
            event_ages: Vec::new(),
            jump_sizes: Vec::new(),
            lifetime: 0.0,
            truncated: true,
        });
    }
    sample_edge_life_with(params, mortality, remaining, rng)
}

/// Single-ancestor-count convenience wrapper over [`run_cmj_with`].
pub fn run_cmj(
    params: &ModelParams,
    ancestors: usize,
    horizon: f64,
    event_budget: usize,
    seed: u64,
) -> Result<PopulationPath> {
    run_cmj_with(&CmjConfig::new(*params, ancestors, horizon, event_budget, seed))
}

pub fn run_cmj_with(cfg: &CmjConfig) -> Result<PopulationPath> {
    cfg.validate()?;
    let mut individuals: Vec<Individual> = Vec::with_capacity(cfg.ancestors.min(cfg.event_budget).max(16));
    let mut queue: BinaryHeap<Reverse<Pending>> = BinaryHeap::new();

    let spawn = |id: usize,
                 parent: Option<usize>,
                 birth_time: f64,
                 queue: &mut BinaryHeap<Reverse<Pending>>|
     -> Result<Individual> {
        let mut r = rng::individual_stream(cfg.seed, id as u64);
        let life = life_until(&cfg.params, cfg.mortality, cfg.horizon - birth_time, &mut r)?;
        let marks = match cfg.reproduction {
            Reproduction::Marks => Some(sample_degree_marks(
                &life,
                &mut rng::tagged_stream(cfg.seed, id as u64, TAG_MARKS),
            )),
            Reproduction::Jumps => None,
        };
        for (event, &age) in life.event_ages.iter().enumerate() {
            queue.push(Reverse(Pending {
                time: birth_time + age,
                parent: id,
                event,
            }));
        }
        Ok(Individual {
            id,
            parent,
            birth_time,
            life,
            marks,
        })
    };

    for id in 0..cfg.ancestors {
        let ind = spawn(id, None, 0.0, &mut queue)?;
        individuals.push(ind);
    }

    let mut exhausted = false;
    let mut last_time = 0.0;
    let mut prev_distinct = 0.0;
    while let Some(Reverse(ev)) = queue.peek().copied() {
        let parent = &individuals[ev.parent];
        let children = match cfg.reproduction {
            Reproduction::Jumps => parent.life.jump_sizes[ev.event] as usize,
            Reproduction::Marks => parent.marks.as_ref().map_or(0, |m| m.marks[ev.event] as usize),
        };
        if individuals.len() + children > cfg.event_budget {
            exhausted = true;
            break;
        }
        queue.pop();
        if ev.time > last_time {
            prev_distinct = last_time;
            last_time = ev.time;
        }
        for _ in 0..children {
            let id = individuals.len();
            let ind = spawn(id, Some(ev.parent), ev.time, &mut queue)?;
            individuals.push(ind);
        }
    }

    let complete_until = if exhausted {
        match queue.peek() {
            Some(Reverse(next)) if next.time <= last_time => prev_distinct,
            _ => last_time,
        }
    } else {
        cfg.horizon
    };

    Ok(PopulationPath {
        individuals,
        ancestors: cfg.ancestors,
        horizon: cfg.horizon,
        event_budget: cfg.event_budget,
        exhausted_budget: exhausted,
        complete_until,
        seed: cfg.seed,
    })
}

impl PopulationPath {
    /// Latest time up to which counts are exact.
    pub fn known_until(&self) -> f64 {
        if self.exhausted_budget {
            self.complete_until
        } else {
            self.horizon
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let known = self.known_until();
        if t > known {
            Err(Error::OutOfRange { t, known_until: known })
        } else {
            Ok(())
        }
    }

    fn born_prefix(&self, t: f64) -> usize {
        self.individuals.partition_point(|ind| ind.birth_time <= t)
    }

    /// `T(t)`: individuals born up to and including `t`.
    pub fn total_born(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        if t < 0.0 {
            return Ok(0);
        }
        Ok(self.born_prefix(t))
    }

    /// `Z^phi(t) = sum_i phi_i(t - tau_i)` over individuals born by `t`.
    pub fn z_phi(&self, ch: &Characteristic, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if t < 0.0 {
            return Ok(0.0);
        }
        Ok(self.individuals[..self.born_prefix(t)]
            .iter()
            .map(|ind| ch.eval(&ind.life, t - ind.birth_time))
            .sum())
    }

    /// Children of every individual, in id (= birth) order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut kids = vec![Vec::new(); self.individuals.len()];
        for ind in &self.individuals {
            if let Some(p) = ind.parent {
                kids[p].push(ind.id);
            }
        }
        kids
    }

    /// Both sides of the self-similarity identity
    /// `Z(t) = phi_0(t) + sum_{children j} Z_j(t - sigma_j)`.
    pub fn decomposition(&self, ch: &Characteristic, t: f64) -> Result<(f64, f64)> {
        if self.ancestors != 1 {
            return Err(Error::Precondition(format!(
                "decomposition needs a single-ancestor path, got {} ancestors",
                self.ancestors
            )));
        }
        let direct = self.z_phi(ch, t)?;
        let kids = self.children();
        let root = &self.individuals[0];
        let mut decomposed = ch.eval(&root.life, t);
        for &child in &kids[0] {
            decomposed += self.subtree_z(&kids, child, ch, t);
        }
        Ok((direct, decomposed))
    }

    /// `decomposition` sides agree exactly.
    pub fn decompose_check(&self, ch: &Characteristic, t: f64) -> Result<bool> {
        let (direct, decomposed) = self.decomposition(ch, t)?;
        Ok(direct == decomposed)
    }

    /// `Z` of the subtree rooted at `root` at absolute time `t`, i.e. at the
    /// root's age `t - tau_root`. Member ages are taken as `t - tau_i`, which
    /// equals `(t - tau_root) - (tau_i - tau_root)` without the rounding.
    fn subtree_z(&self, kids: &[Vec<usize>], root: usize, ch: &Characteristic, t: f64) -> f64 {
        let mut total = 0.0;
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            let ind = &self.individuals[i];
            let a = t - ind.birth_time;
            if a < 0.0 {
                continue;
            }
            total += ch.eval(&ind.life, a);
            stack.extend(kids[i].iter().rev());
        }
        total
    }

    pub fn to_genealogy(&self) -> GenealogyDoc {
        GenealogyDoc {
            schema: GENEALOGY_SCHEMA.to_string(),
            version: GENEALOGY_VERSION,
            ancestors: self.ancestors,
            horizon: self.horizon,
            event_budget: self.event_budget,
            exhausted_budget: self.exhausted_budget,
            complete_until: self.complete_until,
            seed: self.seed,
            individuals: self
                .individuals
                .iter()
                .map(|ind| IndividualRecord {
                    id: ind.id,
                    parent: ind.parent,
                    birth_time: ind.birth_time,
                    event_ages: ind.life.event_ages.clone(),
                    jump_sizes: ind.life.jump_sizes.clone(),
                    lifetime: ind.life.lifetime,
                    truncated: ind.life.truncated,
                })
                .collect(),
        }
    }
}

pub const GENEALOGY_SCHEMA: &str = "cmjlab/genealogy";
pub const GENEALOGY_VERSION: u32 = 1;

/// Versioned JSON export of a [`PopulationPath`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenealogyDoc {
    pub schema: String,
    pub version: u32,
    pub ancestors: usize,
    pub horizon: f64,
    pub event_budget: usize,
    pub exhausted_budget: bool,
    pub complete_until: f64,
    pub seed: u64,
    pub individuals: Vec<IndividualRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth_time: f64,
    pub event_ages: Vec<f64>,
    pub jump_sizes: Vec<u8>,
    pub lifetime: f64,
    pub truncated: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::WeightTable;

    fn params() -> ModelParams {
        ModelParams::new(0.5, 0.5, 0.5).unwrap()
    }

    #[test]
    fn zero_horizon() {
        let path = run_cmj(&params(), 3, 0.0, 10, 1).unwrap();
        assert_eq!(path.individuals.len(), 3);
        assert!(path.individuals.iter().all(|i| i.birth_time == 0.0));
        assert_eq!(path.total_born(0.0).unwrap(), 3);
    }

    #[test]
    fn deterministic() {
        let a = run_cmj(&params(), 1, 6.0, 100_000, 42).unwrap();
        let b = run_cmj(&params(), 1, 6.0, 100_000, 42).unwrap();
        assert_eq!(
            serde_json::to_string(&a.to_genealogy()).unwrap(),
            serde_json::to_string(&b.to_genealogy()).unwrap()
        );
    }

    #[test]
    fn chronological_and_parent_consistent() {
        let path = run_cmj(&ModelParams::new(0.1, 0.1, 0.5).unwrap(), 2, 4.0, 100_000, 7).unwrap();
        for w in path.individuals.windows(2) {
            assert!(w[0].birth_time <= w[1].birth_time);
        }
        for ind in &path.individuals {
            match ind.parent {
                None => assert_eq!(ind.birth_time, 0.0),
                Some(p) => {
                    let par = &path.individuals[p];
                    let age = ind.birth_time - par.birth_time;
                    assert!(
                        par.life
                            .event_ages
                            .iter()
                            .any(|&a| par.birth_time + a == ind.birth_time),
                        "age {age}"
                    );
                }
            }
        }
    }

    #[test]
    fn total_born_errors_and_edges() {
        let path = run_cmj(&params(), 2, 3.0, 10_000, 3).unwrap();
        assert_eq!(path.total_born(-1.0).unwrap(), 0);
        assert_eq!(path.total_born(0.0).unwrap(), 2);
        assert_eq!(path.total_born(3.0).unwrap(), path.individuals.len());
        assert!(matches!(path.total_born(3.5), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn z_phi_kinds() {
        let path = run_cmj(&ModelParams::new(0.1, 0.1, 0.5).unwrap(), 1, 3.0, 100_000, 5).unwrap();
        for t in [0.0, 0.5, 1.7, 3.0] {
            assert_eq!(
                path.z_phi(&Characteristic::Born, t).unwrap(),
                path.total_born(t).unwrap() as f64
            );
        }
        assert_eq!(path.z_phi(&Characteristic::Alive, 0.0).unwrap(), 1.0);
        let zero = Characteristic::Weighted(WeightTable::new(vec![0.0, f64::INFINITY], vec![0.0]).unwrap());
        assert_eq!(path.z_phi(&zero, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let path = run_cmj(&ModelParams::new(0.1, 0.1, 0.5).unwrap(), 1, 20.0, 500, 9).unwrap();
        if path.exhausted_budget {
            assert!(path.individuals.len() <= 500);
            assert!(path.complete_until < 20.0);
            assert!(path.total_born(path.complete_until).is_ok());
            assert!(path.total_born(path.complete_until + 1e-9).is_err());
        }
        assert!(run_cmj(&params(), 3, 1.0, 2, 1).is_err());
    }

    #[test]
    fn decomposition_holds() {
        let m = ModelParams::new(0.2, 0.2, 0.5).unwrap();
        let w = Characteristic::Weighted(WeightTable::new(vec![0.0, 0.5, 2.0], vec![0.25, 1.5]).unwrap());
        for seed in 0..30 {
            let path = run_cmj(&m, 1, 3.0, 100_000, seed).unwrap();
            for ch in [Characteristic::Born, Characteristic::Alive, w.clone()] {
                for t in [0.0, 1.0, 2.2, 3.0] {
                    assert!(path.decompose_check(&ch, t).unwrap());
                }
            }
        }
        let two = run_cmj(&m, 2, 1.0, 100, 0).unwrap();
        assert!(matches!(
            two.decompose_check(&Characteristic::Born, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn longer_horizon_extends_genealogy() {
        let m = ModelParams::new(0.2, 0.2, 0.5).unwrap();
        let short = run_cmj(&m, 1, 2.0, 1_000_000, 77).unwrap();
        let long = run_cmj(&m, 1, 3.5, 1_000_000, 77).unwrap();
        assert!(long.individuals.len() >= short.individuals.len());
        for (s, l) in short.individuals.iter().zip(&long.individuals) {
            assert_eq!(s.parent, l.parent);
            assert_eq!(s.birth_time, l.birth_time);
            let n = s.life.event_ages.len();
            assert_eq!(s.life.event_ages[..], l.life.event_ages[..n]);
            if !s.life.truncated {
                assert_eq!(s.life, l.life);
            }
        }
    }

    #[test]
    fn marks_reproduction_uses_marks() {
        let m = ModelParams::new(0.2, 0.2, 0.5).unwrap();
        let cfg = CmjConfig::new(m, 1, 3.0, 100_000, 4).with_reproduction(Reproduction::Marks);
        let path = run_cmj_with(&cfg).unwrap();
        let kids = path.children();
        for ind in &path.individuals {
            let marks = ind.marks.as_ref().unwrap();
            assert_eq!(kids[ind.id].len() as u64, marks.total());
        }
    }
}
