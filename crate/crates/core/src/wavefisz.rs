//! Wavelet-Fisz shrinkage: thresholds scaled by the estimated noise level of
//! each coefficient, with optional cycle spinning.
//!
//! For a coefficient `Y[j][k]` at a coarse scale `j < J*`, the threshold is
//! `sqrt(h(m[j][k])) * sqrt(2 ln #I)`, where `m[j][k]` is the local mean of
//! the data over the wavelet's support and `#I = 2^J* - 1` is the number of
//! thresholded coefficients. Coefficients with `j >= J*` are set to zero.

use crate::error::{FiszError, Result};
use crate::signal::{NoiseModel, Signal};
use crate::variance_fn::{estimate_variance_function, VarFnConfig, VarianceEstimate};
use crate::wavelet::{
    forward_slice, inverse_unchecked, CoeffPyramid, CyclicPrefix, LocalMeanPyramid, WaveletBasis,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdRule {
    Soft,
    #[default]
    Hard,
}

impl ThresholdRule {
    pub fn apply(&self, y: f64, threshold: f64) -> f64 {
        match self {
            ThresholdRule::Soft => y.signum() * (y.abs() - threshold).max(0.0),
            ThresholdRule::Hard => {
                if y.abs() >= threshold {
                    y
                } else {
                    0.0
                }
            }
        }
    }
}

/// Anything that maps a local mean to a noise variance.
pub trait VarianceFunction {
    fn variance(&self, u: f64) -> f64;
}

impl VarianceFunction for VarianceEstimate {
    fn variance(&self, u: f64) -> f64 {
        self.query(u)
    }
}

impl<F: Fn(f64) -> f64> VarianceFunction for F {
    fn variance(&self, u: f64) -> f64 {
        self(u)
    }
}

/// Closed-form variance functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    /// `h(u) = u`
    Poisson,
    /// `h(u) = u^2`
    Exponential,
    /// `h(u) = c`
    Constant(f64),
}

impl VarianceFunction for ClosedForm {
    fn variance(&self, u: f64) -> f64 {
        match *self {
            ClosedForm::Poisson => u,
            ClosedForm::Exponential => u * u,
            ClosedForm::Constant(c) => c,
        }
    }
}

impl From<NoiseModel> for ClosedForm {
    fn from(model: NoiseModel) -> Self {
        match model {
            NoiseModel::Poisson => ClosedForm::Poisson,
            NoiseModel::ExponentialMultiplicative => ClosedForm::Exponential,
            NoiseModel::GaussianAdditive { sigma } => ClosedForm::Constant(sigma * sigma),
        }
    }
}

/// Where the thresholds get their variance function from.
#[derive(Debug, Clone, PartialEq)]
pub enum VarianceSource {
    Known(ClosedForm),
    DataDriven(VarFnConfig),
    /// A previously fitted estimate, reused as is.
    Fitted(VarianceEstimate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// `None` selects `J - 2` (at least 1).
    pub j_star: Option<usize>,
    pub rule: ThresholdRule,
    pub translation_invariant: bool,
    /// Use every `shift_stride`-th cyclic shift when cycle spinning.
    pub shift_stride: usize,
    pub basis: WaveletBasis,
    pub variance: VarianceSource,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            j_star: None,
            rule: ThresholdRule::Hard,
            translation_invariant: true,
            shift_stride: 1,
            basis: WaveletBasis::haar(),
            variance: VarianceSource::DataDriven(VarFnConfig::in_pipeline()),
        }
    }
}

impl EstimatorConfig {
    pub fn with_variance(variance: VarianceSource) -> Self {
        Self {
            variance,
            ..Self::default()
        }
    }

    /// Resolve `J*` for a signal with `levels = J` scales.
    pub fn resolve_j_star(&self, levels: usize) -> Result<usize> {
        let j_star = self.j_star.unwrap_or(levels.saturating_sub(2).max(1));
        if j_star < 1 || j_star > levels {
            return Err(FiszError::config(format!(
                "J* = {j_star} outside 1..={levels}"
            )));
        }
        if self.shift_stride == 0 {
            return Err(FiszError::config("shift stride must be >= 1"));
        }
        Ok(j_star)
    }
}

/// `#I = 2^J* - 1`, the number of coefficients at scales `j < J*`.
pub fn count_in(j_star: usize) -> usize {
    (1usize << j_star) - 1
}

fn universal_factor(j_star: usize) -> f64 {
    (2.0 * (count_in(j_star) as f64).ln()).sqrt()
}

/// Per-coefficient thresholds for `j < J*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    levels: Vec<Vec<f64>>,
}

impl Thresholds {
    pub fn new(levels: Vec<Vec<f64>>) -> Result<Self> {
        for (j, level) in levels.iter().enumerate() {
            if level.len() != 1 << j {
                return Err(FiszError::MalformedPyramid(format!(
                    "threshold level {j} holds {} values, expected {}",
                    level.len(),
                    1usize << j
                )));
            }
        }
        Ok(Self { levels })
    }

    /// Same threshold everywhere on `j < j_star`.
    pub fn uniform(j_star: usize, value: f64) -> Self {
        Self {
            levels: (0..j_star).map(|j| vec![value; 1 << j]).collect(),
        }
    }

    pub fn j_star(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, j: usize) -> &[f64] {
        &self.levels[j]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }
}

/// Thresholds from a known variance function.
pub fn thresholds_known_h<H: VarianceFunction + ?Sized>(
    lm: &LocalMeanPyramid,
    h: &H,
    j_star: usize,
) -> Result<Thresholds> {
    if j_star > lm.levels() {
        return Err(FiszError::config(format!(
            "J* = {j_star} exceeds the {} available levels",
            lm.levels()
        )));
    }
    let factor = universal_factor(j_star);
    let levels = (0..j_star)
        .map(|j| {
            lm.level(j)
                .iter()
                .map(|&m| {
                    let v = h.variance(m);
                    if !(v >= 0.0) {
                        return Err(FiszError::domain(format!(
                            "variance function returned {v} at local mean {m}"
                        )));
                    }
                    Ok(v.sqrt() * factor)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Thresholds { levels })
}

/// Thresholds from an estimated variance function.
pub fn thresholds_data_driven(
    lm: &LocalMeanPyramid,
    hhat: &VarianceEstimate,
    j_star: usize,
) -> Result<Thresholds> {
    thresholds_known_h(lm, hhat, j_star)
}

/// Threshold the coarse details, zero the fine ones, keep the smooth.
pub fn apply_threshold(
    p: &CoeffPyramid,
    thr: &Thresholds,
    rule: ThresholdRule,
    j_star: usize,
) -> Result<CoeffPyramid> {
    if thr.j_star() < j_star || j_star > p.levels() {
        return Err(FiszError::config(format!(
            "thresholds cover {} levels, need J* = {j_star} of {}",
            thr.j_star(),
            p.levels()
        )));
    }
    if let Some(t) = thr.levels.iter().flatten().find(|t| !(**t >= 0.0)) {
        return Err(FiszError::domain(format!("negative threshold {t}")));
    }
    let mut out = p.clone();
    shrink_in_place(&mut out, thr, rule, j_star);
    Ok(out)
}

fn shrink_in_place(p: &mut CoeffPyramid, thr: &Thresholds, rule: ThresholdRule, j_star: usize) {
    for j in 0..p.levels() {
        let level = p.detail_mut(j);
        if j < j_star {
            for (y, &t) in level.iter_mut().zip(&thr.levels[j]) {
                *y = rule.apply(*y, t);
            }
        } else {
            level.fill(0.0);
        }
    }
}

/// The variance function that was used for an estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum VarianceUsed {
    Known(ClosedForm),
    Estimated(VarianceEstimate),
}

impl VarianceUsed {
    pub fn variance(&self, u: f64) -> f64 {
        match self {
            VarianceUsed::Known(c) => c.variance(u),
            VarianceUsed::Estimated(h) => h.query(u),
        }
    }

    /// Strictly positive lower bound applied where the variance divides.
    pub(crate) fn floor(&self) -> f64 {
        match self {
            VarianceUsed::Known(_) => f64::MIN_POSITIVE,
            VarianceUsed::Estimated(h) => h.floor_eps(),
        }
    }
}

impl VarianceFunction for VarianceUsed {
    fn variance(&self, u: f64) -> f64 {
        VarianceUsed::variance(self, u)
    }
}

/// Output of [`estimate`]. Thresholds and survivors refer to the unshifted
/// transform.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub alpha_hat: Signal,
    pub thresholds: Thresholds,
    pub survivors: Vec<Vec<bool>>,
    pub h_used: VarianceUsed,
    pub shifts_averaged: usize,
}

pub(crate) fn resolve_variance(x: &Signal, source: &VarianceSource) -> Result<VarianceUsed> {
    Ok(match source {
        VarianceSource::Known(c) => VarianceUsed::Known(*c),
        VarianceSource::DataDriven(cfg) => VarianceUsed::Estimated(estimate_variance_function(x, cfg)?),
        VarianceSource::Fitted(h) => VarianceUsed::Estimated(h.clone()),
    })
}

/// Shift, transform, threshold, invert and unshift for each shift, then
/// average. `thresholds_for(shift, pyramid)` supplies the thresholds.
#[allow(clippy::type_complexity)]
fn cycle_spin<F>(
    x: &Signal,
    cfg: &EstimatorConfig,
    j_star: usize,
    mut thresholds_for: F,
) -> Result<(Vec<f64>, Thresholds, Vec<Vec<bool>>, usize)>
where
    F: FnMut(usize, &CoeffPyramid) -> Result<Thresholds>,
{
    let n = x.len();
    let shifts: Vec<usize> = if cfg.translation_invariant {
        (0..n).step_by(cfg.shift_stride).collect()
    } else {
        vec![0]
    };
    let mut acc = vec![0.0; n];
    let mut first = None;
    let mut shifted = x.values().to_vec();
    for &s in &shifts {
        shifted.copy_from_slice(x.values());
        shifted.rotate_right(s);
        let mut pyr = forward_slice(&shifted, &cfg.basis);
        let thr = thresholds_for(s, &pyr)?;
        if first.is_none() {
            first = Some((thr.clone(), pyr.clone()));
        }
        shrink_in_place(&mut pyr, &thr, cfg.rule, j_star);
        let mut rec = inverse_unchecked(&pyr, &cfg.basis);
        rec.rotate_left(s);
        for (a, r) in acc.iter_mut().zip(&rec) {
            *a += r;
        }
    }
    let count = shifts.len();
    let inv = 1.0 / count as f64;
    for a in &mut acc {
        *a *= inv;
    }
    let (thr, pyr) = first.expect("at least one shift");
    let survivors = (0..j_star)
        .map(|j| {
            pyr.detail(j)
                .iter()
                .zip(thr.level(j))
                .map(|(&y, &t)| match cfg.rule {
                    ThresholdRule::Hard => y.abs() >= t,
                    ThresholdRule::Soft => cfg.rule.apply(y, t) != 0.0,
                })
                .collect()
        })
        .collect();
    Ok((acc, thr, survivors, count))
}

/// Wavelet-Fisz estimate of the mean of `x`.
///
/// A data-driven variance function is fitted once on the unshifted data and
/// reused for every shift; local means are recomputed per shift.
pub fn estimate(x: &Signal, cfg: &EstimatorConfig) -> Result<EstimateResult> {
    let j_star = cfg.resolve_j_star(x.levels())?;
    let h_used = resolve_variance(x, &cfg.variance)?;
    let prefix = CyclicPrefix::new(x.values());
    let (alpha, thresholds, survivors, shifts) = cycle_spin(x, cfg, j_star, |s, _| {
        let lm = prefix.local_means(&cfg.basis, s);
        thresholds_known_h(&lm, &h_used, j_star)
    })?;
    Ok(EstimateResult {
        alpha_hat: Signal::new(alpha)?,
        thresholds,
        survivors,
        h_used,
        shifts_averaged: shifts,
    })
}

/// Robust scale of the MAD baseline: `1 / Phi^{-1}(3/4)`.
pub const MAD_SCALE: f64 = 1.4826;

/// Running-MAD window at scale `j`: `2^max(0, j - 4) + 1`.
pub fn baseline_window(j: usize) -> usize {
    (1usize << j.saturating_sub(4)) + 1
}

/// Cyclic running median absolute deviation over windows of `window`
/// values covering offsets `-(window / 2) ..< window - window / 2`.
pub fn running_mad(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let back = window / 2;
    let mut buf = Vec::with_capacity(window);
    (0..n)
        .map(|k| {
            buf.clear();
            buf.extend((0..window).map(|i| values[(k + n * window + i - back) % n]));
            let med = median_in_place(&mut buf);
            for v in buf.iter_mut() {
                *v = (*v - med).abs();
            }
            median_in_place(&mut buf)
        })
        .collect()
}

fn median_in_place(buf: &mut [f64]) -> f64 {
    let m = buf.len();
    let (left, mid, _) = buf.select_nth_unstable_by(m / 2, |a, b| a.total_cmp(b));
    let upper = *mid;
    if m % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Heteroscedastic baseline that ignores any mean-variance link: each
/// threshold is `1.4826 * runningMAD * sqrt(2 ln #I)` computed from the
/// detail coefficients at the same scale.
pub fn baseline_mad_estimate(x: &Signal, cfg: &EstimatorConfig) -> Result<Signal> {
    let j_star = cfg.resolve_j_star(x.levels())?;
    let factor = universal_factor(j_star);
    let (alpha, ..) = cycle_spin(x, cfg, j_star, |_, pyr| {
        let levels = (0..j_star)
            .map(|j| {
                running_mad(pyr.detail(j), baseline_window(j))
                    .into_iter()
                    .map(|mad| MAD_SCALE * mad * factor)
                    .collect()
            })
            .collect();
        Ok(Thresholds { levels })
    })?;
    Signal::new(alpha)
}
