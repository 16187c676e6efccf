//! Wavelet-domain variance-stabilising transform.
//!
//! Every detail coefficient of the data is divided by the estimated standard
//! deviation at its local mean and the result is inverted back to the time
//! domain. Any smoother for i.i.d. Gaussian noise can then be applied, and
//! [`inverse_vst`] maps the smoothed series back.

use crate::error::{FiszError, Result};
use crate::signal::Signal;
use crate::variance_fn::VarianceEstimate;
use crate::wavefisz::{
    apply_threshold, count_in, resolve_variance, EstimatorConfig, Thresholds, VarianceFunction,
    VarianceUsed,
};
use crate::wavelet::{dwt_forward, dwt_inverse, local_means, CoeffPyramid, WaveletBasis};

/// Divisors for every detail coefficient at every scale.
#[derive(Debug, Clone, PartialEq)]
pub struct VstState {
    divisors: Vec<Vec<f64>>,
    pub basis: WaveletBasis,
    /// The fitted variance function, when the state was built from one.
    pub hhat: Option<VarianceEstimate>,
}

impl VstState {
    pub fn from_divisors(divisors: Vec<Vec<f64>>, basis: WaveletBasis) -> Result<Self> {
        if divisors.is_empty() {
            return Err(FiszError::MalformedPyramid("no divisor levels".into()));
        }
        for (j, level) in divisors.iter().enumerate() {
            if level.len() != 1 << j {
                return Err(FiszError::MalformedPyramid(format!(
                    "divisor level {j} holds {} values, expected {}",
                    level.len(),
                    1usize << j
                )));
            }
            if let Some(d) = level.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
                return Err(FiszError::domain(format!("divisor {d} at level {j} is not positive")));
            }
        }
        Ok(Self {
            divisors,
            basis,
            hhat: None,
        })
    }

    pub fn divisors(&self) -> &[Vec<f64>] {
        &self.divisors
    }

    pub fn levels(&self) -> usize {
        self.divisors.len()
    }
}

fn divisors_for<H: VarianceFunction + ?Sized>(
    x: &Signal,
    h: &H,
    floor: f64,
    basis: &WaveletBasis,
) -> Vec<Vec<f64>> {
    let lm = local_means(x, basis);
    (0..lm.levels())
        .map(|j| lm.level(j).iter().map(|&m| h.variance(m).max(floor).sqrt()).collect())
        .collect()
}

fn scale_details(p: &mut CoeffPyramid, divisors: &[Vec<f64>], divide: bool) {
    for (j, level) in divisors.iter().enumerate() {
        for (y, &d) in p.detail_mut(j).iter_mut().zip(level) {
            if divide {
                *y /= d;
            } else {
                *y *= d;
            }
        }
    }
}

fn forward_with<H: VarianceFunction + ?Sized>(
    x: &Signal,
    h: &H,
    floor: f64,
    basis: &WaveletBasis,
) -> Result<(Signal, Vec<Vec<f64>>)> {
    let divisors = divisors_for(x, h, floor, basis);
    let mut p = dwt_forward(x, basis);
    scale_details(&mut p, &divisors, true);
    Ok((dwt_inverse(&p, basis)?, divisors))
}

/// Stabilise `x` using the estimated variance function `hhat`.
pub fn forward_vst(
    x: &Signal,
    hhat: &VarianceEstimate,
    basis: &WaveletBasis,
) -> Result<(Signal, VstState)> {
    let (xt, divisors) = forward_with(x, hhat, hhat.floor_eps(), basis)?;
    Ok((
        xt,
        VstState {
            divisors,
            basis: basis.clone(),
            hhat: Some(hhat.clone()),
        },
    ))
}

/// Undo [`forward_vst`] on a (possibly smoothed) transformed series.
pub fn inverse_vst(y: &Signal, state: &VstState) -> Result<Signal> {
    let expected = 1usize << state.levels();
    if y.len() != expected {
        return Err(FiszError::LengthMismatch {
            expected,
            got: y.len(),
        });
    }
    let mut p = dwt_forward(y, &state.basis);
    scale_details(&mut p, &state.divisors, false);
    dwt_inverse(&p, &state.basis)
}

/// Denoise by stabilising, applying the plain universal threshold
/// `sqrt(2 ln #I)` on `j < J*` (zero above), and inverting.
///
/// Defined without cycle spinning; a config with `translation_invariant`
/// set is rejected.
pub fn denoise_via_vst(x: &Signal, cfg: &EstimatorConfig) -> Result<Signal> {
    if cfg.translation_invariant {
        return Err(FiszError::config(
            "the transform-domain route is defined without cycle spinning; set translation_invariant = false",
        ));
    }
    let j_star = cfg.resolve_j_star(x.levels())?;
    let h_used = resolve_variance(x, &cfg.variance)?;
    let (xt, divisors) = forward_with(x, &h_used, h_used.floor(), &cfg.basis)?;
    let state = VstState {
        divisors,
        basis: cfg.basis.clone(),
        hhat: match h_used {
            VarianceUsed::Estimated(h) => Some(h),
            VarianceUsed::Known(_) => None,
        },
    };
    let universal = (2.0 * (count_in(j_star) as f64).ln()).sqrt();
    let p = dwt_forward(&xt, &cfg.basis);
    let shrunk = apply_threshold(&p, &Thresholds::uniform(j_star, universal), cfg.rule, j_star)?;
    inverse_vst(&dwt_inverse(&shrunk, &cfg.basis)?, &state)
}
