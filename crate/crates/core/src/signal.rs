//! Test signals and heteroscedastic noise models.
//!
//! The blocks and bumps generators use the Donoho-Johnstone constants listed
//! in `docs/test_signals.md`, evaluated on the grid `t/n` for `t = 1..=n` and
//! then affinely rescaled to a requested `[min, max]` range.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{FiszError, Result};

/// An equispaced real series of dyadic length `n = 2^J`, `J >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_dyadic(values.len())?;
        if let Some(t) = values.iter().position(|v| !v.is_finite()) {
            return Err(FiszError::domain(format!("non-finite value at index {t}")));
        }
        Ok(Self { values })
    }

    /// Constant series of length `n`.
    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `J = log2(n)`.
    pub fn levels(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Multiply every value by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| c * v).collect())
    }
}

impl AsRef<[f64]> for Signal {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

pub(crate) fn check_dyadic(n: usize) -> Result<()> {
    if n >= 2 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(FiszError::NonDyadicLength(n))
    }
}

/// Noise laws with a known mean-variance link `Var(X_t) = h(E X_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// `X_t ~ Pois(alpha_t)`, `h(u) = u`.
    Poisson,
    /// `X_t ~ alpha_t Exp(1)`, `h(u) = u^2`.
    ExponentialMultiplicative,
    /// `X_t = alpha_t + sigma Z_t`, `h(u) = sigma^2`.
    GaussianAdditive { sigma: f64 },
}

impl NoiseModel {
    fn requires_positive_truth(&self) -> bool {
        !matches!(self, NoiseModel::GaussianAdditive { .. })
    }
}

/// Seed for one replication: `(master_seed, replication_index)` selects a
/// ChaCha8 key and stream, so distinct pairs never share state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replication_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replication_index: u64) -> Self {
        Self {
            master_seed,
            replication_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replication_index);
        rng
    }
}

// Donoho-Johnstone breakpoints, shared by blocks and bumps.
const BREAKPOINTS: [f64; 11] = [
    0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81,
];
const BLOCKS_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMPS_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMPS_WIDTHS: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];

/// Unscaled blocks function at `z in [0, 1]`.
pub fn blocks_at(z: f64) -> f64 {
    BREAKPOINTS
        .iter()
        .zip(BLOCKS_HEIGHTS)
        .map(|(&b, h)| h * (1.0 + sign(z - b)) / 2.0)
        .sum()
}

/// Unscaled bumps function at `z in [0, 1]`.
pub fn bumps_at(z: f64) -> f64 {
    BREAKPOINTS
        .iter()
        .zip(BUMPS_HEIGHTS)
        .zip(BUMPS_WIDTHS)
        .map(|((&b, h), w)| h * (1.0 + ((z - b) / w).abs()).powi(-4))
        .sum()
}

// sign(0) = 0, so a breakpoint that falls exactly on the grid gets a half step.
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn sample_and_rescale(n: usize, min_val: f64, max_val: f64, f: fn(f64) -> f64) -> Result<Signal> {
    check_dyadic(n)?;
    check_range(min_val, max_val)?;
    let raw: Vec<f64> = (1..=n).map(|t| f(t as f64 / n as f64)).collect();
    Signal::new(rescale(&raw, min_val, max_val)?)
}

fn check_range(min_val: f64, max_val: f64) -> Result<()> {
    if !(min_val.is_finite() && max_val.is_finite()) || min_val >= max_val {
        return Err(FiszError::domain(format!(
            "target range requires min < max, got [{min_val}, {max_val}]"
        )));
    }
    Ok(())
}

/// Affine map of `values` onto `[min_val, max_val]`.
pub fn rescale(values: &[f64], min_val: f64, max_val: f64) -> Result<Vec<f64>> {
    check_range(min_val, max_val)?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(FiszError::domain("cannot rescale a constant series"));
    }
    let scale = (max_val - min_val) / (hi - lo);
    Ok(values
        .iter()
        .map(|&v| {
            if v == hi {
                max_val
            } else {
                min_val + (v - lo) * scale
            }
        })
        .collect())
}

/// Piecewise-constant blocks test signal on `[min_val, max_val]`.
pub fn make_blocks(n: usize, min_val: f64, max_val: f64) -> Result<Signal> {
    sample_and_rescale(n, min_val, max_val, blocks_at)
}

/// Bumps test signal on `[min_val, max_val]`.
pub fn make_bumps(n: usize, min_val: f64, max_val: f64) -> Result<Signal> {
    sample_and_rescale(n, min_val, max_val, bumps_at)
}

/// Draw one noisy observation per point of `truth`.
///
/// Exponential draws use inversion of the uniform stream; Poisson draws use
/// the exact sampler from `rand_distr`.
pub fn sample_noise(truth: &Signal, model: NoiseModel, seed: SeedSpec) -> Result<Signal> {
    if model.requires_positive_truth() {
        if let Some(t) = truth.values().iter().position(|&a| !(a > 0.0)) {
            return Err(FiszError::domain(format!(
                "{model:?} noise needs a positive mean, got {} at index {t}",
                truth.values()[t]
            )));
        }
    }
    let mut rng = seed.rng();
    let values = match model {
        NoiseModel::Poisson => truth
            .values()
            .iter()
            .map(|&a| {
                let pois = Poisson::new(a).map_err(|e| FiszError::domain(e.to_string()))?;
                Ok(pois.sample(&mut rng))
            })
            .collect::<Result<Vec<f64>>>()?,
        NoiseModel::ExponentialMultiplicative => truth
            .values()
            .iter()
            .map(|&a| {
                let u: f64 = rng.random();
                a * -(1.0 - u).ln()
            })
            .collect(),
        NoiseModel::GaussianAdditive { sigma } => {
            if !(sigma >= 0.0) {
                return Err(FiszError::domain(format!("sigma must be >= 0, got {sigma}")));
            }
            if sigma == 0.0 {
                return Ok(truth.clone());
            }
            truth
                .values()
                .iter()
                .map(|&a| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    a + sigma * z
                })
                .collect()
        }
    };
    Signal::new(values)
}

/// The variance function `h` of a noise model.
pub fn true_variance_function(model: NoiseModel, u: f64) -> f64 {
    match model {
        NoiseModel::Poisson => u,
        NoiseModel::ExponentialMultiplicative => u * u,
        NoiseModel::GaussianAdditive { sigma } => sigma * sigma,
    }
}
