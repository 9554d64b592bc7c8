//! Small Monte Carlo summaries: means with standard errors and L_k norms.

use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Self { value, se }
    }

    /// `|value - target| <= z * se`.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.value - target).abs() <= z * self.se
    }

    pub fn upper(&self, z: f64) -> f64 {
        self.value + z * self.se
    }

    pub fn lower(&self, z: f64) -> f64 {
        self.value - z * self.se
    }
}

/// Welford accumulator; merging in a fixed order keeps results deterministic.
#[derive(Debug, Clone, Copy, Default)]
pub struct Running {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two points.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn se(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::new(self.mean(), self.se())
    }
}

impl FromIterator<f64> for Running {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut r = Running::default();
        for x in iter {
            r.push(x);
        }
        r
    }
}

pub fn mean_se(xs: &[f64]) -> Estimate {
    xs.iter().copied().collect::<Running>().estimate()
}

/// Empirical `(E|X|^k)^{1/k}` with a delta-method standard error.
pub fn lk_norm(xs: &[f64], k: f64) -> Estimate {
    let moment: Running = xs.iter().map(|x| x.abs().powf(k)).collect();
    let s = moment.mean();
    if s <= 0.0 {
        return Estimate::new(0.0, 0.0);
    }
    let value = s.powf(1.0 / k);
    let se = value / (k * s) * moment.se();
    Estimate::new(value, se)
}

/// Ordinary least squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Two-sided 95% normal quantile.
pub const Z95_TWO_SIDED: f64 = 1.959_963_984_540_054;
/// One-sided 95% normal quantile.
pub const Z95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;
