//! Coupling constructions: advancing births, sibling Galton-Watson trees and
//! family-tree relabelling.

mod tree;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exec::{map_indexed, Threads};
use crate::point_process::EdgeLife;
use crate::rng;
use crate::stats::{lk_norm, Estimate, Running};

pub use tree::{births_up_to, random_tied_tree, relabel_tree, FamilyTree, RelabelOutcome, TreeNode};

/// Moves events at ages in `[0, eps]` to age 0 and events in `(eps, t]` to
/// age `eps`; later events, jump sizes and the lifetime are kept.
pub fn advance_births(life: &EdgeLife, t: f64, eps: f64) -> Result<EdgeLife> {
    if !(eps > 0.0 && eps < t && t.is_finite()) {
        return Err(param("eps", format!("need 0 < eps < t, got eps = {eps}, t = {t}")));
    }
    let event_ages = life
        .event_ages
        .iter()
        .map(|&a| {
            if a <= eps {
                0.0
            } else if a <= t {
                eps
            } else {
                a
            }
        })
        .collect();
    Ok(EdgeLife {
        event_ages,
        ..life.clone()
    })
}

/// `advanced(s) >= original(s)` at every breakpoint of either counting function.
pub fn dominates(advanced: &EdgeLife, original: &EdgeLife) -> bool {
    advanced
        .event_ages
        .iter()
        .chain(&original.event_ages)
        .chain(std::iter::once(&0.0))
        .all(|&s| advanced.xi_at(s) >= original.xi_at(s))
}

/// Offspring distribution with finite support: `probs[j] = P(j children)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OffspringLaw {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for OffspringLaw {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        OffspringLaw::new(probs)
    }
}

impl From<OffspringLaw> for Vec<f64> {
    fn from(l: OffspringLaw) -> Self {
        l.probs
    }
}

impl OffspringLaw {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(param("law", "need a nonempty table of nonnegative probabilities"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(param("law", format!("probabilities sum to {s}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Table from `(value, probability)` pairs.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self> {
        let n = pairs.iter().map(|p| p.0).max().unwrap_or(0) + 1;
        let mut probs = vec![0.0; n];
        for &(j, p) in pairs {
            probs[j] += p;
        }
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }

    /// `(E X^k)^{1/k}`.
    pub fn lk_norm(&self, k: f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, p)| (j as f64).powf(k) * p)
            .sum::<f64>()
            .powf(1.0 / k)
    }

    fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.probs).expect("validated table")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Progeny {
    /// Everyone ever born, the root included.
    Total(u64),
    CapHit,
}

impl Progeny {
    /// Descendants of the root, i.e. the total minus one.
    pub fn descendants(&self) -> Option<u64> {
        match self {
            Progeny::Total(n) => Some(n - 1),
            Progeny::CapHit => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgenyRun {
    pub outcome: Progeny,
    pub regime_warning: Option<String>,
}

fn regime_warning(law: &OffspringLaw) -> Option<String> {
    let m = law.mean();
    (m >= 1.0).then(|| format!("offspring mean {m} is not below 1; the tree may be infinite"))
}

/// Total progeny of a Galton-Watson tree with one root; `CapHit` once more
/// than `cap` individuals have been born.
pub fn gw_total_progeny<R: Rng + ?Sized>(law: &OffspringLaw, cap: u64, rng: &mut R) -> ProgenyRun {
    let sampler = law.sampler();
    let mut pending = 1u64;
    let mut total = 1u64;
    let outcome = loop {
        if total > cap {
            break Progeny::CapHit;
        }
        if pending == 0 {
            break Progeny::Total(total);
        }
        let kids = sampler.sample(rng) as u64;
        pending = pending - 1 + kids;
        total += kids;
    };
    ProgenyRun {
        outcome,
        regime_warning: regime_warning(law),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgenyStats {
    pub runs: usize,
    pub cap_hits: usize,
    pub mean_total: Estimate,
    pub mean_descendants: Estimate,
    /// `1 / (1 - mean)`, for subcritical laws.
    pub expected_total: Option<f64>,
    pub regime_warning: Option<String>,
}

pub fn gw_progeny_stats(law: &OffspringLaw, runs: usize, cap: u64, seed: u64, threads: Threads) -> ProgenyStats {
    const BLOCK: usize = 4096;
    let blocks = runs.div_ceil(BLOCK);
    let parts = map_indexed(blocks, threads, |b| {
        (b * BLOCK..((b + 1) * BLOCK).min(runs))
            .map(|i| gw_total_progeny(law, cap, &mut rng::stream(rng::replica_seed(seed, i as u64))).outcome)
            .collect::<Vec<_>>()
    });
    let mut acc = Running::default();
    let mut cap_hits = 0;
    for o in parts.into_iter().flatten() {
        match o {
            Progeny::Total(n) => acc.push(n as f64),
            Progeny::CapHit => cap_hits += 1,
        }
    }
    let mean_total = acc.estimate();
    let m = law.mean();
    ProgenyStats {
        runs,
        cap_hits,
        mean_total,
        mean_descendants: Estimate::new(mean_total.value - 1.0, mean_total.se),
        expected_total: (m < 1.0).then(|| 1.0 / (1.0 - m)),
        regime_warning: regime_warning(law),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationNorm {
    pub generation: usize,
    pub norm: Estimate,
    /// `||law||_k^n`.
    pub bound: f64,
    /// Lower 95% bound of the estimate exceeds `bound`.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwNormReport {
    pub k: f64,
    pub law_norm: f64,
    pub replicas: usize,
    pub generations: Vec<GenerationNorm>,
    pub any_flagged: bool,
}

/// Empirical `||G_n||_k` of generation sizes against `||law||_k^n`.
pub fn gw_norm_check(
    law: &OffspringLaw,
    k: f64,
    n_gens: usize,
    replicas: usize,
    seed: u64,
    threads: Threads,
) -> Result<GwNormReport> {
    if !(k >= 1.0) {
        return Err(param("k", format!("must be at least 1, got {k}")));
    }
    let law_norm = law.lk_norm(k);
    if !(law_norm < 1.0) {
        return Err(param("law", format!("||law||_k = {law_norm} must be below 1")));
    }
    if replicas < 2 {
        return Err(param("replicas", "need at least 2"));
    }
    let sampler = law.sampler();
    let sizes: Vec<Vec<f64>> = map_indexed(replicas, threads, |r| {
        let mut rng = rng::stream(rng::replica_seed(seed, r as u64));
        let mut g = 1u64;
        let mut out = Vec::with_capacity(n_gens + 1);
        out.push(1.0);
        for _ in 0..n_gens {
            g = (0..g).map(|_| sampler.sample(&mut rng) as u64).sum();
            out.push(g as f64);
        }
        out
    });
    let generations: Vec<GenerationNorm> = (0..=n_gens)
        .map(|n| {
            let col: Vec<f64> = sizes.iter().map(|s| s[n]).collect();
            let norm = lk_norm(&col, k);
            let bound = law_norm.powi(n as i32);
            GenerationNorm {
                generation: n,
                norm,
                bound,
                flagged: norm.lower(crate::stats::Z95_TWO_SIDED) > bound,
            }
        })
        .collect();
    Ok(GwNormReport {
        k,
        law_norm,
        replicas,
        any_flagged: generations.iter().any(|g| g.flagged),
        generations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{sample_edge_life, ModelParams};

    fn life(ages: &[f64], jumps: &[u8], lifetime: f64) -> EdgeLife {
        EdgeLife {
            event_ages: ages.to_vec(),
            jump_sizes: jumps.to_vec(),
            lifetime,
            truncated: false,
        }
    }

    #[test]
    fn advance_examples() {
        let l = life(&[], &[], 3.0);
        assert_eq!(advance_births(&l, 2.0, 0.5).unwrap(), l);
        let l = life(&[1.0], &[2], 3.0);
        let a = advance_births(&l, 2.0, 0.5).unwrap();
        assert_eq!(a.event_ages, vec![0.5]);
        assert_eq!(a.jump_sizes, vec![2]);
        assert!(dominates(&a, &l));
        let l = life(&[0.1, 0.7, 2.0, 2.5], &[1, 2, 1, 2], 3.0);
        let a = advance_births(&l, 2.0, 0.5).unwrap();
        assert_eq!(a.event_ages, vec![0.0, 0.5, 0.5, 2.5]);
        assert_eq!(a.xi_at(0.0), 1);
        assert!(advance_births(&l, 2.0, 2.0).is_err());
    }

    #[test]
    fn advance_dominates_sampled_lives() {
        let prm = ModelParams::new(0.3, 0.2, 0.5).unwrap();
        let mut r = rng::stream(4);
        for _ in 0..10_000 {
            let l = sample_edge_life(&prm, 10.0, &mut r).unwrap();
            let a = advance_births(&l, 2.0, 0.25).unwrap();
            assert!(dominates(&a, &l));
            assert_eq!(a.total_offspring(), l.total_offspring());
        }
    }

    #[test]
    fn law_validation_and_moments() {
        assert!(OffspringLaw::new(vec![0.5, 0.6]).is_err());
        assert!(OffspringLaw::new(vec![]).is_err());
        let l = OffspringLaw::from_pairs(&[(0, 0.75), (2, 0.25)]).unwrap();
        assert_eq!(l.mean(), 0.5);
        assert_eq!(l.lk_norm(2.0), 1.0);
        let l: OffspringLaw = serde_json::from_str("[0.5, 0.5]").unwrap();
        assert_eq!(l.mean(), 0.5);
    }

    #[test]
    fn point_mass_at_zero() {
        let l = OffspringLaw::new(vec![1.0]).unwrap();
        let run = gw_total_progeny(&l, 10, &mut rng::stream(0));
        assert_eq!(run.outcome, Progeny::Total(1));
        assert_eq!(run.outcome.descendants(), Some(0));
        assert!(run.regime_warning.is_none());
    }

    #[test]
    fn supercritical_hits_cap_with_warning() {
        let l = OffspringLaw::new(vec![0.0, 0.0, 1.0]).unwrap();
        let run = gw_total_progeny(&l, 100, &mut rng::stream(0));
        assert_eq!(run.outcome, Progeny::CapHit);
        assert!(run.regime_warning.is_some());
    }

    #[test]
    fn norm_check_generation_zero() {
        let l = OffspringLaw::new(vec![0.5, 0.5]).unwrap();
        let rep = gw_norm_check(&l, 2.0, 4, 1000, 1, Threads::SINGLE).unwrap();
        assert_eq!(rep.generations[0].norm.value, 1.0);
        assert!(gw_norm_check(
            &OffspringLaw::new(vec![0.0, 1.0]).unwrap(),
            2.0,
            3,
            100,
            1,
            Threads::SINGLE
        )
        .is_err());
    }
}
