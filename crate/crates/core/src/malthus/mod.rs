//! Growth rates and extinction of the collaboration model.
//!
//! The Laplace transform of the edge reproduction measure reduces to
//!
//! ```text
//! f(theta) = (1+p)/c * int_0^1 (1-u)^{a-1} exp(u(2-pu)/(2c)) du,  a = (theta+1+b)/c
//! ```
//!
//! which is strictly decreasing in `theta`. The edge Malthusian parameter
//! `alpha` solves `f = 1`, the vertex-degree one `beta` solves `f = 2`.
//! Integrals of the form `int (1-u)^{a-1} h(u) du` are evaluated after
//! `u = 1 - v^{1/a}`, which turns them into `(1/a) int_0^1 h(1 - v^{1/a}) dv`
//! with a bounded integrand for every `a > 0`.

pub mod quadrature;
pub mod roots;

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::exec::{map_indexed, Threads};
use crate::point_process::{sample_edge_life, ModelParams};
use crate::rng;
use crate::stats::{Estimate, Running};

pub use quadrature::QuadResult;
pub use roots::RootReport;

pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
pub const DEFAULT_ROOT_TOL: f64 = 1e-9;
const MAX_PANELS: usize = 4000;

/// Tolerances for the solver kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute tolerance of every kernel integral.
    pub quadrature: f64,
    /// Bound on the residual of every returned root.
    pub root: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: DEFAULT_QUAD_TOL,
            root: DEFAULT_ROOT_TOL,
        }
    }
}

/// `int_0^1 (1-u)^{a-1} h(u) du` via the singularity-removing substitution.
pub fn kernel_integral<H: Fn(f64) -> f64>(a: f64, h: H, tol: f64) -> Result<QuadResult> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(param("exponent", format!("must be finite and positive, got {a}")));
    }
    let inv = 1.0 / a;
    // Scale the tolerance so the final (1/a)-weighted value meets `tol`.
    let r = quadrature::integrate(|v: f64| h(1.0 - (inv * v.ln()).exp()), 0.0, 1.0, tol * a, MAX_PANELS)?;
    Ok(QuadResult {
        value: r.value * inv,
        error_estimate: r.error_estimate * inv,
        ..r
    })
}

/// Evaluator for the collaboration model's transforms; counts quadrature work.
#[derive(Debug)]
pub struct Kernel {
    params: ModelParams,
    tol: Tolerances,
    evaluations: Cell<usize>,
    max_panels: Cell<usize>,
}

impl Kernel {
    pub fn new(params: ModelParams) -> Self {
        Self::with_tolerances(params, Tolerances::default())
    }

    pub fn with_tolerances(params: ModelParams, tol: Tolerances) -> Self {
        Self {
            params,
            tol,
            evaluations: Cell::new(0),
            max_panels: Cell::new(0),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Integrand evaluations spent so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations.get()
    }

    /// Largest panel count used by a single integral so far.
    pub fn max_panels(&self) -> usize {
        self.max_panels.get()
    }

    fn integral<H: Fn(f64) -> f64>(&self, prefactor: f64, a: f64, h: H) -> Result<f64> {
        let r = kernel_integral(a, h, self.tol.quadrature / prefactor)?;
        self.evaluations.set(self.evaluations.get() + r.evaluations);
        self.max_panels.set(self.max_panels.get().max(r.intervals));
        Ok(prefactor * r.value)
    }

    /// `f(theta)`, the Laplace transform of the reproduction measure.
    pub fn laplace_mu(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(param("theta", format!("must be finite and nonnegative, got {theta}")));
        }
        let (b, c, p) = (self.params.b(), self.params.c(), self.params.p());
        self.integral((1.0 + p) / c, (theta + 1.0 + b) / c, |u| {
            (u * (2.0 - p * u) / (2.0 * c)).exp()
        })
    }

    /// `E eta(inf)`, the mean total degree increment produced by one edge.
    pub fn degree_mean(&self) -> Result<f64> {
        let (b, c, p) = (self.params.b(), self.params.c(), self.params.p());
        let v = self.integral((1.0 + p) / (2.0 * c), (1.0 + b) / c, |u| {
            (u * (2.0 - p * u) / (2.0 * c)).exp()
        })?;
        debug_assert!({
            let f0 = self.laplace_mu(0.0)?;
            (v - 0.5 * f0).abs() <= 4.0 * self.tol.quadrature
        });
        Ok(v)
    }

    /// Left side of the published extinction-root equation,
    /// `(1+p)/(2c) int (1-u)^{(1+b)/c-1} exp((1+p)/(2c) u(1-u) z) du`.
    pub fn extinction_g(&self, z: f64) -> Result<f64> {
        let (b, c, p) = (self.params.b(), self.params.c(), self.params.p());
        let k = (1.0 + p) / (2.0 * c);
        self.integral(k, (1.0 + b) / c, |u| (k * u * (1.0 - u) * z).exp())
    }

    /// `G(z)` with `E z^{eta(inf)} = 1 - (1-z) G(z)`:
    /// `(1+p)/(2c) int (1-u)^{(1+b)/c-1} exp(u [p z (2-u) + q (1+z)] / (2c)) du`.
    ///
    /// A single-edge degree process dies out with the smallest root of
    /// `G(z) = 1` in `(0, 1)`, or with certainty when `G(1) <= 1`.
    pub fn extinction_fixed_point_g(&self, z: f64) -> Result<f64> {
        let (b, c, p, q) = (self.params.b(), self.params.c(), self.params.p(), self.params.q());
        self.integral((1.0 + p) / (2.0 * c), (1.0 + b) / c, |u| {
            (u * (p * z * (2.0 - u) + q * (1.0 + z)) / (2.0 * c)).exp()
        })
    }

    /// `E z^{eta(inf)}`.
    pub fn degree_pgf(&self, z: f64) -> Result<f64> {
        Ok(1.0 - (1.0 - z) * self.extinction_fixed_point_g(z)?)
    }

    /// Edge Malthusian parameter: the root of `f(theta) = 1`.
    pub fn solve_alpha(&self) -> Result<Growth> {
        self.solve_rate(1.0)
    }

    /// Degree Malthusian parameter: the root of `f(theta) = 2`.
    pub fn solve_beta(&self) -> Result<Growth> {
        self.solve_rate(2.0)
    }

    fn solve_rate(&self, target: f64) -> Result<Growth> {
        let f0 = self.laplace_mu(0.0)?;
        if f0 <= target {
            return Ok(Growth::NotSupercritical { f_at_zero: f0 });
        }
        let f = |t: f64| self.laplace_mu(t);
        let mut hi = 1.0;
        // Envelope: f(theta) <= (1+p) e^{(2-p)/(2c)} / (theta+1+b) bounds the search.
        let (b, c, p) = (self.params.b(), self.params.c(), self.params.p());
        let envelope_hi = ((1.0 + p) * ((2.0 - p) / (2.0 * c)).exp() / target - 1.0 - b).max(1.0);
        while f(hi)? >= target {
            hi *= 2.0;
            if hi > 2.0 * envelope_hi {
                return Err(Error::Numerical {
                    what: format!("no bracket for f(theta) = {target} below the envelope bound {envelope_hi}"),
                    estimate: hi,
                    error_estimate: f64::NAN,
                    evaluations: self.evaluations(),
                });
            }
        }
        let root = roots::bisect_decreasing(f, target, 0.0, hi, self.tol.root)?;
        Ok(Growth::Root(root))
    }

    fn smallest_unit_root<G: Fn(f64) -> Result<f64>>(&self, g: G) -> Result<Option<RootReport>> {
        const STEPS: usize = 64;
        let mut lo = 0.0;
        for i in 1..=STEPS {
            let z = i as f64 / STEPS as f64;
            if g(z)? >= 1.0 {
                let r = roots::bisect_increasing(&g, 1.0, lo, z, self.tol.root)?;
                return Ok(Some(r));
            }
            lo = z;
        }
        Ok(None)
    }

    /// Smallest positive root of the published equation `g(z) = 1` on `(0, 1]`.
    pub fn solve_extinction_z(&self) -> Result<ExtinctionRoot> {
        Ok(match self.smallest_unit_root(|z| self.extinction_g(z))? {
            Some(r) => ExtinctionRoot::Root(r),
            None => ExtinctionRoot::NoRootInUnit,
        })
    }

    /// Extinction probability of a single-edge degree process from the
    /// generating-function fixed point `z = E z^{eta(inf)}`.
    pub fn solve_extinction_fixed_point(&self) -> Result<RootReport> {
        if self.extinction_fixed_point_g(1.0)? <= 1.0 {
            return Ok(RootReport {
                root: 1.0,
                residual: 0.0,
                iterations: 0,
            });
        }
        // G(1) > 1 guarantees a sign change strictly inside (0, 1).
        let found = self.smallest_unit_root(|z| self.extinction_fixed_point_g(z))?;
        found.ok_or_else(|| Error::Consistency("G(1) > 1 but no root of G(z) = 1 found in (0, 1]".into()))
    }

    /// `m = f(k alpha)`; below 1 for every `k > 1` when `alpha` is the root.
    pub fn discount_m(&self, k: f64, alpha: f64) -> Result<f64> {
        if !(k >= 1.0) {
            return Err(param("k", format!("must be at least 1, got {k}")));
        }
        let m = self.laplace_mu(k * alpha)?;
        if k > 1.0 && m >= 1.0 {
            return Err(Error::Consistency(format!(
                "m = {m} >= 1 at k = {k}: alpha = {alpha} does not solve f(alpha) = 1"
            )));
        }
        Ok(m)
    }
}

/// Outcome of a growth-rate solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    Root(RootReport),
    NotSupercritical { f_at_zero: f64 },
}

impl Growth {
    pub fn rate(&self) -> Option<f64> {
        match self {
            Growth::Root(r) => Some(r.root),
            Growth::NotSupercritical { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtinctionRoot {
    Root(RootReport),
    NoRootInUnit,
}

impl ExtinctionRoot {
    pub fn root(&self) -> Option<f64> {
        match self {
            ExtinctionRoot::Root(r) => Some(r.root),
            ExtinctionRoot::NoRootInUnit => None,
        }
    }
}

pub fn laplace_mu(theta: f64, params: &ModelParams) -> Result<f64> {
    Kernel::new(*params).laplace_mu(theta)
}

pub fn solve_alpha(params: &ModelParams, tol: f64) -> Result<Growth> {
    Kernel::with_tolerances(
        *params,
        Tolerances {
            root: tol,
            ..Tolerances::default()
        },
    )
    .solve_alpha()
}

pub fn solve_beta(params: &ModelParams, tol: f64) -> Result<Growth> {
    Kernel::with_tolerances(
        *params,
        Tolerances {
            root: tol,
            ..Tolerances::default()
        },
    )
    .solve_beta()
}

pub fn degree_mean(params: &ModelParams) -> Result<f64> {
    Kernel::new(*params).degree_mean()
}

pub fn solve_extinction_z(params: &ModelParams, tol: f64) -> Result<ExtinctionRoot> {
    Kernel::with_tolerances(
        *params,
        Tolerances {
            root: tol,
            ..Tolerances::default()
        },
    )
    .solve_extinction_z()
}

pub fn discount_m(params: &ModelParams, k: f64, alpha: f64) -> Result<f64> {
    Kernel::new(*params).discount_m(k, alpha)
}

/// One `m_k` entry of a [`SolveReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountEntry {
    pub k: f64,
    pub m: f64,
}

/// Everything the solver knows about one parameter triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub params: ModelParams,
    pub supercritical: bool,
    pub alpha: Option<f64>,
    pub alpha_residual: Option<f64>,
    pub degree_supercritical: bool,
    pub beta: Option<f64>,
    pub beta_residual: Option<f64>,
    pub eta_mean: f64,
    /// Root of the published extinction equation `g(z) = 1`, if one lies in `(0, 1]`.
    pub z: Option<f64>,
    pub z_residual: Option<f64>,
    pub z_status: ZStatus,
    /// `p z^2 + q z` with `z` from the published equation.
    pub extinction_prob_degree: Option<f64>,
    /// Extinction probability of one incident edge's degree process from `z = E z^{eta(inf)}`.
    pub z_fixed_point: f64,
    pub z_fixed_point_residual: f64,
    /// `p z^2 + q z` with the fixed-point `z`.
    pub extinction_prob_fixed_point: f64,
    pub m_k: Vec<DiscountEntry>,
    pub tolerances: Tolerances,
    pub quadrature_evaluations: usize,
    pub quadrature_max_panels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZStatus {
    Root,
    NoRootInUnit,
}

/// Runs every solver for `params` and collects the results.
pub fn solve_report(params: &ModelParams, ks: &[f64], tol: Tolerances) -> Result<SolveReport> {
    let kernel = Kernel::with_tolerances(*params, tol);
    let alpha = kernel.solve_alpha()?;
    let beta = kernel.solve_beta()?;
    let eta_mean = kernel.degree_mean()?;
    let z = kernel.solve_extinction_z()?;
    let zf = kernel.solve_extinction_fixed_point()?;
    let (p, q) = (params.p(), params.q());
    let mut m_k = Vec::new();
    if let Some(a) = alpha.rate() {
        for &k in ks {
            m_k.push(DiscountEntry {
                k,
                m: kernel.discount_m(k, a)?,
            });
        }
    }
    let residual = |g: &Growth| match g {
        Growth::Root(r) => Some(r.residual),
        Growth::NotSupercritical { .. } => None,
    };
    Ok(SolveReport {
        params: *params,
        supercritical: alpha.rate().is_some(),
        alpha: alpha.rate(),
        alpha_residual: residual(&alpha),
        degree_supercritical: beta.rate().is_some(),
        beta: beta.rate(),
        beta_residual: residual(&beta),
        eta_mean,
        z: z.root(),
        z_residual: match z {
            ExtinctionRoot::Root(r) => Some(r.residual),
            ExtinctionRoot::NoRootInUnit => None,
        },
        z_status: match z {
            ExtinctionRoot::Root(_) => ZStatus::Root,
            ExtinctionRoot::NoRootInUnit => ZStatus::NoRootInUnit,
        },
        extinction_prob_degree: z.root().map(|z| p * z * z + q * z),
        z_fixed_point: zf.root,
        z_fixed_point_residual: zf.residual,
        extinction_prob_fixed_point: p * zf.root * zf.root + q * zf.root,
        m_k,
        tolerances: tol,
        quadrature_evaluations: kernel.evaluations(),
        quadrature_max_panels: kernel.max_panels(),
    })
}

/// Density of the reproduction measure,
/// `mu(dt) = (1+p) exp(-(1+b)t + p(1-e^{-2ct})/(2c) + q(1-e^{-ct})/c) dt`.
pub fn reproduction_density(params: &ModelParams, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let (b, c, p, q) = (params.b(), params.c(), params.p(), params.q());
    (1.0 + p) * (-(1.0 + b) * t + p * (1.0 - (-2.0 * c * t).exp()) / (2.0 * c) + q * (1.0 - (-c * t).exp()) / c).exp()
}

/// Horizon beyond which `exp(-theta t)` falls below `1e-13`.
pub fn negligible_horizon(theta: f64) -> f64 {
    (13.0 * std::f64::consts::LN_10 / theta).max(10.0)
}

/// Discounted offspring `sum_j jump_j exp(-theta sigma_j)` of `n` sampled
/// lives, one stream per life. Errors if a truncated life leaves a tail that
/// is not negligible relative to the mean.
pub fn discounted_reproduction_samples(
    params: &ModelParams,
    theta: f64,
    n: usize,
    seed: u64,
    horizon: f64,
    threads: Threads,
) -> Result<Vec<f64>> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(param("theta", format!("must be finite and positive, got {theta}")));
    }
    const BLOCK: usize = 4096;
    let blocks = n.div_ceil(BLOCK);
    let parts = map_indexed(blocks, threads, |bi| -> Result<(Vec<f64>, usize)> {
        let mut out = Vec::with_capacity(BLOCK);
        let mut truncated = 0;
        for i in bi * BLOCK..((bi + 1) * BLOCK).min(n) {
            let mut r = rng::individual_stream(seed, i as u64);
            let life = sample_edge_life(params, horizon, &mut r)?;
            truncated += life.truncated as usize;
            out.push(life.discounted_offspring(theta));
        }
        Ok((out, truncated))
    });
    let mut values = Vec::with_capacity(n);
    let mut truncated = 0;
    for part in parts {
        let (v, t) = part?;
        values.extend(v);
        truncated += t;
    }
    if truncated > 0 {
        let mean = values.iter().sum::<f64>() / n as f64;
        let tail = (-theta * horizon).exp();
        if tail > 1e-12 * mean {
            return Err(Error::HorizonTooShort { horizon, theta, tail });
        }
    }
    Ok(values)
}

/// Monte Carlo estimate of `E sum_j jump_j exp(-theta sigma_j) = f(theta)`.
pub fn mc_discounted_reproduction(
    params: &ModelParams,
    theta: f64,
    n: usize,
    seed: u64,
    threads: Threads,
) -> Result<Estimate> {
    mc_discounted_reproduction_with_horizon(params, theta, n, seed, negligible_horizon(theta), threads)
}

pub fn mc_discounted_reproduction_with_horizon(
    params: &ModelParams,
    theta: f64,
    n: usize,
    seed: u64,
    horizon: f64,
    threads: Threads,
) -> Result<Estimate> {
    if n < 100 {
        return Err(param("n", format!("need at least 100 lives, got {n}")));
    }
    let values = discounted_reproduction_samples(params, theta, n, seed, horizon, threads)?;
    Ok(values.into_iter().collect::<Running>().estimate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(b: f64, c: f64, p: f64) -> ModelParams {
        ModelParams::new(b, c, p).unwrap()
    }

    /// Time-domain form: f(theta) = (1+p) int_0^inf e^{-(theta+1+b)t}
    /// exp(p(1-e^{-2ct})/(2c) + q(1-e^{-ct})/c) dt, by composite Simpson.
    fn laplace_time_domain(theta: f64, prm: &ModelParams) -> f64 {
        let (b, c, p, q) = (prm.b(), prm.c(), prm.p(), prm.q());
        let r = theta + 1.0 + b;
        let upper = 40.0 / r;
        let n = 200_000;
        let h = upper / n as f64;
        let f = |t: f64| (-r * t + p * (1.0 - (-2.0 * c * t).exp()) / (2.0 * c) + q * (1.0 - (-c * t).exp()) / c).exp();
        let mut s = f(0.0) + f(upper);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        (1.0 + p) * s * h / 3.0
    }

    #[test]
    fn closed_form_kernel() {
        for a in [0.05, 0.3, 1.0, 2.5, 11.0, 40.0] {
            let r = kernel_integral(a, |_| 1.0, 1e-13).unwrap();
            assert!((r.value - 1.0 / a).abs() < 1e-12, "a={a}");
        }
        assert!(kernel_integral(0.0, |_| 1.0, 1e-10).is_err());
    }

    #[test]
    fn envelope() {
        for prm in [m(1.0, 1.0, 0.5), m(0.1, 0.1, 0.5), m(0.5, 2.0, 0.0), m(0.05, 0.02, 1.0)] {
            for theta in [0.0, 0.3, 1.0, 5.0] {
                let f = laplace_mu(theta, &prm).unwrap();
                let lo = (1.0 + prm.p()) / (theta + 1.0 + prm.b());
                let hi = lo * ((2.0 - prm.p()) / (2.0 * prm.c())).exp();
                assert!(lo <= f && f <= hi, "{prm:?} {theta}: {lo} {f} {hi}");
            }
        }
    }

    #[test]
    fn matches_time_domain_oracle() {
        let prm = m(1.0, 1.0, 0.5);
        let f = laplace_mu(0.0, &prm).unwrap();
        assert!((f - laplace_time_domain(0.0, &prm)).abs() < 1e-8);
        let prm = m(0.1, 0.1, 0.5);
        for theta in [0.0, 0.5, 2.0] {
            assert!((laplace_mu(theta, &prm).unwrap() - laplace_time_domain(theta, &prm)).abs() < 1e-8);
        }
    }

    #[test]
    fn strictly_decreasing() {
        let prm = m(0.3, 0.2, 0.7);
        let vals: Vec<f64> = (0..30).map(|i| laplace_mu(i as f64 * 0.2, &prm).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn alpha_residual_and_gate() {
        let prm = m(0.1, 0.1, 0.5);
        let a = solve_alpha(&prm, 1e-9).unwrap();
        let alpha = a.rate().unwrap();
        assert!((laplace_mu(alpha, &prm).unwrap() - 1.0).abs() <= 1e-9);
        assert!(matches!(
            solve_alpha(&m(1000.0, 1.0, 0.0), 1e-9).unwrap(),
            Growth::NotSupercritical { .. }
        ));
    }

    #[test]
    fn degree_mean_is_half_f0() {
        let mut s = 0x1234u64;
        for _ in 0..20 {
            let mut next = || {
                s = rng::splitmix64(s);
                (s >> 11) as f64 / (1u64 << 53) as f64
            };
            let prm = m(0.05 + 2.0 * next(), 0.05 + 2.0 * next(), next());
            let k = Kernel::new(prm);
            let d = k.degree_mean().unwrap();
            assert!((d - 0.5 * k.laplace_mu(0.0).unwrap()).abs() < 1e-10);
            assert!(k.extinction_g(0.2).unwrap() < k.extinction_g(0.8).unwrap());
        }
        assert!(degree_mean(&m(0.1, 0.1, 0.5)).unwrap() > 1.0);
        assert!(degree_mean(&m(50.0, 1.0, 0.5)).unwrap() < 1.0);
    }

    #[test]
    fn beta_below_alpha() {
        let prm = m(0.1, 0.1, 0.5);
        let alpha = solve_alpha(&prm, 1e-9).unwrap().rate().unwrap();
        let beta = solve_beta(&prm, 1e-9).unwrap().rate().unwrap();
        assert!(0.0 < beta && beta < alpha);
        assert!((laplace_mu(beta, &prm).unwrap() - 2.0).abs() <= 1e-9);
        assert!(matches!(
            solve_beta(&m(1.0, 1.0, 0.5), 1e-9).unwrap(),
            Growth::NotSupercritical { .. }
        ));
    }

    #[test]
    fn discount() {
        let prm = m(0.1, 0.1, 0.5);
        let alpha = solve_alpha(&prm, 1e-10).unwrap().rate().unwrap();
        let m1 = discount_m(&prm, 1.0, alpha).unwrap();
        assert!((m1 - 1.0).abs() < 1e-9);
        let m2 = discount_m(&prm, 2.0, alpha).unwrap();
        let m3 = discount_m(&prm, 3.0, alpha).unwrap();
        assert!(m3 < m2 && m2 < 1.0);
        assert!((m2 - laplace_time_domain(2.0 * alpha, &prm)).abs() < 1e-8);
        assert!(matches!(
            discount_m(&prm, 2.0, 0.01 * alpha),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn extinction_roots() {
        let prm = m(0.1, 0.1, 0.5);
        let k = Kernel::new(prm);
        let z = k.solve_extinction_z().unwrap();
        let z = z.root().unwrap();
        assert!((k.extinction_g(z).unwrap() - 1.0).abs() <= DEFAULT_ROOT_TOL);
        let zf = k.solve_extinction_fixed_point().unwrap();
        assert!((k.degree_pgf(zf.root).unwrap() - zf.root).abs() < 1e-9);
        // subcritical degree process dies out surely
        let sub = Kernel::new(m(1.0, 1.0, 0.5));
        assert_eq!(sub.solve_extinction_fixed_point().unwrap().root, 1.0);
        assert_eq!(sub.solve_extinction_z().unwrap(), ExtinctionRoot::NoRootInUnit);
    }

    #[test]
    fn mc_short_horizon_is_an_error() {
        let prm = m(0.1, 0.1, 0.5);
        let e = mc_discounted_reproduction_with_horizon(&prm, 0.5, 2000, 1, 1.0, Threads::SINGLE).unwrap_err();
        assert!(matches!(e, Error::HorizonTooShort { .. }));
        assert!(mc_discounted_reproduction(&prm, 0.5, 10, 1, Threads::SINGLE).is_err());
    }

    #[test]
    fn mc_large_theta_vanishes() {
        let prm = m(0.5, 0.5, 0.5);
        let e = mc_discounted_reproduction(&prm, 200.0, 2000, 3, Threads::SINGLE).unwrap();
        assert!(e.value < 0.02);
    }
}
