//! Estimation of the mean-variance map `h` from a single noisy series.
//!
//! A running mean gives a rough fit, the squared residuals are smoothed
//! against the fitted means with a Nadaraya-Watson estimator, and the result
//! is made nondecreasing by pool-adjacent-violators.

use crate::error::{FiszError, Result};
use crate::signal::Signal;

/// Running-mean fit and its squared residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct PreliminaryFit {
    pub alpha_hat: Vec<f64>,
    pub residuals_sq: Vec<f64>,
    pub half_width: usize,
}

impl PreliminaryFit {
    pub fn new(x: &[f64], half_width: usize) -> Result<Self> {
        let alpha_hat = running_mean(x, half_width)?;
        let residuals_sq = x
            .iter()
            .zip(&alpha_hat)
            .map(|(v, a)| (v - a) * (v - a))
            .collect();
        Ok(Self {
            alpha_hat,
            residuals_sq,
            half_width,
        })
    }
}

/// Periodic moving average over the window `t - m ..= t + m`.
pub fn running_mean(x: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let width = 2 * m + 1;
    if width > n {
        return Err(FiszError::domain(format!(
            "running-mean window {width} exceeds signal length {n}"
        )));
    }
    let inv = 1.0 / width as f64;
    Ok((0..n)
        .map(|t| {
            let sum: f64 = (0..width).map(|i| x[(t + n + i - m) % n]).sum();
            sum * inv
        })
        .collect())
}

/// Smoothing kernel on `[-1/2, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum KernelSpec {
    /// `K(v) = 2 - 4|v|`.
    #[default]
    Triangular,
}

impl KernelSpec {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            KernelSpec::Triangular => {
                let a = v.abs();
                if a <= 0.5 {
                    2.0 - 4.0 * a
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sup(&self) -> f64 {
        2.0
    }

    pub fn lipschitz_const(&self) -> f64 {
        4.0
    }
}

/// Nadaraya-Watson smooth of the squared residuals, evaluated on `grid_u`.
///
/// Grid points that receive no kernel mass take the value of the nearest
/// grid point that does (the left one on ties).
pub fn nw_variance_raw(
    fit: &PreliminaryFit,
    bandwidth: f64,
    kernel: KernelSpec,
    grid_u: &[f64],
) -> Result<Vec<f64>> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(FiszError::domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if fit.alpha_hat.len() != fit.residuals_sq.len() {
        return Err(FiszError::LengthMismatch {
            expected: fit.alpha_hat.len(),
            got: fit.residuals_sq.len(),
        });
    }
    // The common 1/(nb) factor cancels in the ratio.
    let raw: Vec<Option<f64>> = grid_u
        .iter()
        .map(|&u| {
            let (mut num, mut den) = (0.0, 0.0);
            for (&a, &r) in fit.alpha_hat.iter().zip(&fit.residuals_sq) {
                let w = kernel.eval((a - u) / bandwidth);
                if w > 0.0 {
                    num += w * r;
                    den += w;
                }
            }
            (den > 0.0).then(|| num / den)
        })
        .collect();
    fill_from_nearest(&raw)
}

fn fill_from_nearest(raw: &[Option<f64>]) -> Result<Vec<f64>> {
    let populated: Vec<usize> = (0..raw.len()).filter(|&i| raw[i].is_some()).collect();
    if populated.is_empty() {
        return Err(FiszError::domain("no grid point receives kernel mass"));
    }
    Ok((0..raw.len())
        .map(|i| {
            if let Some(v) = raw[i] {
                return v;
            }
            let pos = populated.partition_point(|&p| p < i);
            let chosen = match (pos.checked_sub(1).map(|l| populated[l]), populated.get(pos)) {
                (Some(left), Some(&right)) => {
                    if right - i < i - left {
                        right
                    } else {
                        left
                    }
                }
                (Some(left), None) => left,
                (None, Some(&right)) => right,
                (None, None) => unreachable!("populated is non-empty"),
            };
            raw[chosen].expect("populated")
        })
        .collect())
}

/// Weighted least-squares isotone (nondecreasing) regression.
pub fn pava_isotone(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.len() != weights.len() {
        return Err(FiszError::LengthMismatch {
            expected: values.len(),
            got: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !(*w > 0.0)) {
        return Err(FiszError::domain(format!("weight {i} is not positive")));
    }
    // Blocks as (start, end, weighted mean, total weight).
    let mut blocks: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(values.len());
    for (i, (&v, &w)) in values.iter().zip(weights).enumerate() {
        let mut cur = (i, i + 1, v, w);
        while let Some(&(start, _, mean, weight)) = blocks.last() {
            if mean <= cur.2 {
                break;
            }
            let total = weight + cur.3;
            cur = (start, cur.1, (mean * weight + cur.2 * cur.3) / total, total);
            blocks.pop();
        }
        blocks.push(cur);
    }
    // Output means are recomputed per block; merge again on those so that
    // rounding in the running sums cannot leave a descending pair.
    let mean_of = |start: usize, end: usize| weighted_mean(&values[start..end], &weights[start..end]);
    let mut exact: Vec<(usize, usize, f64)> = Vec::with_capacity(blocks.len());
    for &(start, end, _, _) in &blocks {
        let mut cur = (start, end, mean_of(start, end));
        while let Some(&(prev_start, _, prev_mean)) = exact.last() {
            if prev_mean <= cur.2 {
                break;
            }
            exact.pop();
            cur = (prev_start, cur.1, mean_of(prev_start, cur.1));
        }
        exact.push(cur);
    }
    let mut out = vec![0.0; values.len()];
    for (start, end, mean) in exact {
        out[start..end].fill(mean);
    }
    Ok(out)
}

/// `sum(w x) / sum(w)` in index order.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let (num, den) = values
        .iter()
        .zip(weights)
        .fold((0.0, 0.0), |(n, d), (v, w)| (n + w * v, d + w));
    num / den
}

/// Rule-of-thumb bandwidth `0.2 * range * n^(-1/5)`, at least one grid cell.
pub fn default_bandwidth(alpha_hat: &[f64], grid_size: usize) -> f64 {
    let n = alpha_hat.len().max(1) as f64;
    let lo = alpha_hat.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = alpha_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        let mean = alpha_hat.iter().sum::<f64>() / n;
        return 0.1 * (mean.abs() + 1.0);
    }
    (0.2 * range * n.powf(-0.2)).max(range / grid_size.max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Auto,
    Fixed(f64),
}

/// Settings for [`estimate_variance_function`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarFnConfig {
    /// Running-mean half width `M`.
    pub half_width: usize,
    pub bandwidth: Bandwidth,
    pub grid_size: usize,
    /// `None` means `1e-10` times the largest raw estimate.
    pub floor_eps: Option<f64>,
}

impl VarFnConfig {
    /// Defaults for a standalone estimate of `h` (`M = 3`).
    pub fn standalone() -> Self {
        Self {
            half_width: 3,
            bandwidth: Bandwidth::Auto,
            grid_size: 256,
            floor_eps: None,
        }
    }

    /// Defaults when `h` feeds the wavelet-Fisz thresholds (`M = 1`).
    pub fn in_pipeline() -> Self {
        Self {
            half_width: 1,
            ..Self::standalone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 2 {
            return Err(FiszError::config(format!("grid size must be >= 2, got {}", self.grid_size)));
        }
        if let Bandwidth::Fixed(b) = self.bandwidth {
            if !(b > 0.0) || !b.is_finite() {
                return Err(FiszError::config(format!("bandwidth must be positive, got {b}")));
            }
        }
        if let Some(eps) = self.floor_eps {
            if !(eps > 0.0) {
                return Err(FiszError::config(format!("floor must be positive, got {eps}")));
            }
        }
        Ok(())
    }
}

impl Default for VarFnConfig {
    fn default() -> Self {
        Self::standalone()
    }
}

/// Nondecreasing step-function estimate of `h`.
///
/// `query(u)` returns the value at the largest knot `<= u`, clamped to the
/// end values outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceEstimate {
    grid_u: Vec<f64>,
    values: Vec<f64>,
    floor_eps: f64,
}

impl VarianceEstimate {
    /// Build from knots and values, enforcing the structural invariants.
    pub fn from_parts(grid_u: Vec<f64>, values: Vec<f64>, floor_eps: f64) -> Result<Self> {
        if grid_u.is_empty() || grid_u.len() != values.len() {
            return Err(FiszError::LengthMismatch {
                expected: grid_u.len(),
                got: values.len(),
            });
        }
        if !(floor_eps > 0.0) {
            return Err(FiszError::domain("floor must be positive"));
        }
        if grid_u.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(FiszError::domain("grid must be ascending"));
        }
        if values.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(FiszError::domain("variance values must be nondecreasing"));
        }
        if values.iter().any(|&v| !(v >= floor_eps) || !v.is_finite()) {
            return Err(FiszError::domain("variance values must be finite and >= floor"));
        }
        Ok(Self {
            grid_u,
            values,
            floor_eps,
        })
    }

    /// A flat estimate `h = value` on a single knot.
    pub fn constant(value: f64) -> Result<Self> {
        Self::from_parts(vec![0.0], vec![value], value.clamp(f64::MIN_POSITIVE, 1e-10))
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid_u
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn floor_eps(&self) -> f64 {
        self.floor_eps
    }

    pub fn query(&self, u: f64) -> f64 {
        let idx = self.grid_u.partition_point(|&g| g <= u);
        self.values[idx.saturating_sub(1)]
    }
}

/// Fit `h` from data: running mean, squared residuals, kernel smoothing over
/// an equispaced grid on `[min fit, max fit]`, isotone correction, floor.
pub fn estimate_variance_function(x: &Signal, cfg: &VarFnConfig) -> Result<VarianceEstimate> {
    cfg.validate()?;
    let fit = PreliminaryFit::new(x.values(), cfg.half_width)?;
    let lo = fit.alpha_hat.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fit.alpha_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid: Vec<f64> = if hi > lo {
        let g = cfg.grid_size;
        let step = (hi - lo) / (g - 1) as f64;
        (0..g)
            .map(|i| if i + 1 == g { hi } else { lo + step * i as f64 })
            .collect()
    } else {
        vec![lo]
    };
    let bandwidth = match cfg.bandwidth {
        Bandwidth::Auto => default_bandwidth(&fit.alpha_hat, cfg.grid_size),
        Bandwidth::Fixed(b) => b,
    };
    let raw = nw_variance_raw(&fit, bandwidth, KernelSpec::Triangular, &grid)?;
    let iso = pava_isotone(&raw, &vec![1.0; raw.len()])?;
    let max_raw = raw.iter().copied().fold(0.0, f64::max);
    let floor = cfg
        .floor_eps
        .unwrap_or(1e-10 * max_raw)
        .max(f64::MIN_POSITIVE);
    let values = iso.into_iter().map(|v| v.max(floor)).collect();
    VarianceEstimate::from_parts(grid, values, floor)
}
