//! Per-individual stochastic primitives of the collaboration model.
//!
//! An edge reproduces at the events of a unit-rate Poisson process; each event
//! adds one or two offspring (jump size 2 with probability `p`). Its death
//! hazard at biological age `xi` (offspring so far) is `b + c * xi`, which is
//! piecewise constant between events, so lives are sampled exactly by
//! sequential competing exponentials.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Collaboration model parameters `(b, c, p)`; `q = 1 - p` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    b: f64,
    c: f64,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    b: f64,
    c: f64,
    p: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.b, r.c, r.p)
    }
}

impl From<ModelParams> for RawParams {
    fn from(m: ModelParams) -> Self {
        RawParams { b: m.b, c: m.c, p: m.p }
    }
}

impl ModelParams {
    pub fn new(b: f64, c: f64, p: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(param("b", format!("must be finite and positive, got {b}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(param("c", format!("must be finite and positive, got {c}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(param("p", format!("must lie in [0, 1], got {p}")));
        }
        Ok(Self { b, c, p })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// Mean jump size `1 + p`.
    pub fn mean_jump(&self) -> f64 {
        1.0 + self.p
    }
}

/// Whether lives end by the `b + c * xi` hazard or never (pure birth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mortality {
    #[default]
    Hazard,
    Disabled,
}

/// One individual's reproduction record.
///
/// `event_ages` are ages relative to the individual's own birth. Sampled lives
/// have strictly increasing positive ages, all below `lifetime`. When the
/// simulation horizon cuts the life short, `truncated` is set and `lifetime`
/// holds the horizon age, not a death age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeLife {
    pub event_ages: Vec<f64>,
    pub jump_sizes: Vec<u8>,
    pub lifetime: f64,
    pub truncated: bool,
}

impl EdgeLife {
    /// Number of offspring up to and including age `t`.
    pub fn xi_at(&self, t: f64) -> u64 {
        if t < 0.0 {
            return 0;
        }
        let n = self.event_ages.partition_point(|&a| a <= t);
        self.jump_sizes[..n].iter().map(|&j| j as u64).sum()
    }

    /// Number of birth events up to and including age `t`.
    pub fn births_at(&self, t: f64) -> usize {
        if t < 0.0 {
            return 0;
        }
        self.event_ages.partition_point(|&a| a <= t)
    }

    pub fn total_births(&self) -> usize {
        self.event_ages.len()
    }

    pub fn total_offspring(&self) -> u64 {
        self.jump_sizes.iter().map(|&j| j as u64).sum()
    }

    /// Death age, or `None` when the life was cut by the horizon.
    pub fn death_age(&self) -> Option<f64> {
        (!self.truncated).then_some(self.lifetime)
    }

    /// `0 <= age < lifetime`, treating a truncated life as alive up to and
    /// including its horizon age.
    pub fn is_alive_at(&self, age: f64) -> bool {
        age >= 0.0 && (age < self.lifetime || (self.truncated && age <= self.lifetime))
    }

    /// `sum_j jump_j * exp(-theta * sigma_j)`.
    pub fn discounted_offspring(&self, theta: f64) -> f64 {
        self.event_ages
            .iter()
            .zip(&self.jump_sizes)
            .map(|(&a, &j)| j as f64 * (-theta * a).exp())
            .sum()
    }

    /// Checks the invariants of a sampled life.
    pub fn check_invariants(&self) -> Result<()> {
        if self.event_ages.len() != self.jump_sizes.len() {
            return Err(Error::Consistency("event_ages and jump_sizes differ in length".into()));
        }
        if !(self.lifetime > 0.0) {
            return Err(Error::Consistency(format!("non-positive lifetime {}", self.lifetime)));
        }
        let mut prev = 0.0;
        for (&a, &j) in self.event_ages.iter().zip(&self.jump_sizes) {
            if !(a > prev) {
                return Err(Error::Consistency(format!("event ages not strictly increasing at {a}")));
            }
            if !(a < self.lifetime) {
                return Err(Error::Consistency(format!(
                    "event age {a} not before lifetime {}",
                    self.lifetime
                )));
            }
            if j != 1 && j != 2 {
                return Err(Error::Consistency(format!("jump size {j}")));
            }
            prev = a;
        }
        Ok(())
    }
}

/// Samples a life with the `b + c * xi` death hazard.
pub fn sample_edge_life<R: Rng + ?Sized>(params: &ModelParams, horizon: f64, rng: &mut R) -> Result<EdgeLife> {
    sample_edge_life_with(params, Mortality::Hazard, horizon, rng)
}

pub fn sample_edge_life_with<R: Rng + ?Sized>(
    params: &ModelParams,
    mortality: Mortality,
    horizon: f64,
    rng: &mut R,
) -> Result<EdgeLife> {
    if !(horizon > 0.0) {
        return Err(param("horizon", format!("must be positive, got {horizon}")));
    }
    if mortality == Mortality::Disabled && !horizon.is_finite() {
        return Err(param("horizon", "must be finite when mortality is disabled"));
    }
    let mut age = 0.0;
    let mut xi = 0u64;
    let mut event_ages = Vec::new();
    let mut jump_sizes = Vec::new();
    loop {
        let death_rate = match mortality {
            Mortality::Hazard => params.b + params.c * xi as f64,
            Mortality::Disabled => 0.0,
        };
        let total = 1.0 + death_rate;
        let wait: f64 = Exp1.sample(rng);
        age += wait / total;
        if age > horizon {
            return Ok(EdgeLife {
                event_ages,
                jump_sizes,
                lifetime: horizon,
                truncated: true,
            });
        }
        let is_birth = death_rate == 0.0 || rng.random::<f64>() * total < 1.0;
        if !is_birth {
            return Ok(EdgeLife {
                event_ages,
                jump_sizes,
                lifetime: age,
                truncated: false,
            });
        }
        let jump = if rng.random::<f64>() < params.p { 2 } else { 1 };
        xi += jump as u64;
        event_ages.push(age);
        jump_sizes.push(jump);
    }
}

/// Degree increments seen by one endpoint of an edge, one per birth event.
///
/// A jump-2 event always attaches the newcomer to both endpoints (mark 1); a
/// jump-1 event attaches it to this endpoint with probability 1/2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeMarks {
    pub marks: Vec<u8>,
}

impl DegreeMarks {
    /// `eta(t)`: degree increments up to and including age `t`.
    pub fn eta_at(&self, life: &EdgeLife, t: f64) -> u64 {
        let n = life.births_at(t);
        self.marks[..n].iter().map(|&m| m as u64).sum()
    }

    pub fn total(&self) -> u64 {
        self.marks.iter().map(|&m| m as u64).sum()
    }
}

pub fn sample_degree_marks<R: Rng + ?Sized>(life: &EdgeLife, rng: &mut R) -> DegreeMarks {
    let marks = life
        .jump_sizes
        .iter()
        .map(|&j| if j == 2 { 1 } else { rng.random_bool(0.5) as u8 })
        .collect();
    DegreeMarks { marks }
}

/// Piecewise-constant age weights: `weights[i]` on `[knots[i], knots[i+1])`,
/// zero elsewhere. The last knot may be `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct WeightTable {
    knots: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightTable {
    pub fn new(knots: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || knots.len() != weights.len() + 1 {
            return Err(param("weights", "need one more knot than weights"));
        }
        if !(knots[0] >= 0.0) {
            return Err(param("weights", "first knot must be nonnegative"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(param("weights", "knots must be strictly increasing"));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(param(
                "weights",
                format!("weights must be finite and nonnegative, got {w}"),
            ));
        }
        Ok(Self { knots, weights })
    }

    /// Weight `w` on `[from, to)`.
    pub fn single(w: f64, from: f64, to: f64) -> Result<Self> {
        Self::new(vec![from, to], vec![w])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eval(&self, age: f64) -> f64 {
        if age < self.knots[0] {
            return 0.0;
        }
        let i = self.knots.partition_point(|&k| k <= age);
        if i >= self.knots.len() {
            0.0
        } else {
            self.weights[i - 1]
        }
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// `sup_{t >= 0} exp(-theta t) w(t)`, attained at a piece start.
    pub fn discounted_sup(&self, theta: f64) -> f64 {
        self.knots
            .iter()
            .zip(&self.weights)
            .map(|(&k, &w)| w * (-theta * k).exp())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    knots: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawTable> for WeightTable {
    type Error = Error;
    fn try_from(r: RawTable) -> Result<Self> {
        WeightTable::new(r.knots, r.weights)
    }
}

impl From<WeightTable> for RawTable {
    fn from(w: WeightTable) -> Self {
        RawTable {
            knots: w.knots,
            weights: w.weights,
        }
    }
}

/// Random characteristic evaluated at an individual's age.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Characteristic {
    /// `1(age >= 0)`.
    Born,
    /// `1(0 <= age < lifetime)`.
    Alive,
    Weighted(WeightTable),
}

impl Characteristic {
    pub fn eval(&self, life: &EdgeLife, age: f64) -> f64 {
        if age < 0.0 {
            return 0.0;
        }
        match self {
            Characteristic::Born => 1.0,
            Characteristic::Alive => {
                if life.is_alive_at(age) {
                    1.0
                } else {
                    0.0
                }
            }
            Characteristic::Weighted(table) => table.eval(age),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Characteristic::Born => "born",
            Characteristic::Alive => "alive",
            Characteristic::Weighted(_) => "weighted",
        }
    }
}

pub fn eval_characteristic(ch: &Characteristic, life: &EdgeLife, age: f64) -> f64 {
    ch.eval(life, age)
}
