//! Data-driven wavelet-Fisz denoising.
//!
//! For observations `X_t = alpha(t/n) + eps_t` whose noise variance is an
//! unknown nondecreasing function `h` of the mean, the crate provides
//!
//! * [`variance_fn`]: a kernel estimate of `h` with an isotone correction,
//! * [`wavefisz`]: Haar (or Daubechies) shrinkage with thresholds scaled by
//!   `h` at local means, cycle spinning, and a running-MAD baseline,
//! * [`vst`]: the matching wavelet-domain variance-stabilising transform,
//! * [`signal`], [`bench`]: test signals, noise models and a seeded
//!   Monte-Carlo harness.
//!
//! ```
//! use fiszkit::{estimate, make_blocks, sample_noise, EstimatorConfig, NoiseModel, SeedSpec};
//!
//! let truth = make_blocks(256, 1.0, 22.6).unwrap();
//! let x = sample_noise(&truth, NoiseModel::Poisson, SeedSpec::new(1, 0)).unwrap();
//! let cfg = EstimatorConfig { shift_stride: 8, ..EstimatorConfig::default() };
//! let result = estimate(&x, &cfg).unwrap();
//! assert_eq!(result.alpha_hat.len(), 256);
//! ```

// Negated comparisons such as `!(x > 0.0)` are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod io;
pub mod signal;
pub mod variance_fn;
pub mod vst;
pub mod wavefisz;
pub mod wavelet;

pub use error::{FiszError, Result};
pub use signal::{make_blocks, make_bumps, sample_noise, true_variance_function, NoiseModel, SeedSpec, Signal};
pub use variance_fn::{
    default_bandwidth, estimate_variance_function, nw_variance_raw, pava_isotone, running_mean, Bandwidth,
    KernelSpec, PreliminaryFit, VarFnConfig, VarianceEstimate,
};
pub use vst::{denoise_via_vst, forward_vst, inverse_vst, VstState};
pub use wavefisz::{
    apply_threshold, baseline_mad_estimate, count_in, estimate, thresholds_data_driven, thresholds_known_h,
    ClosedForm, EstimateResult, EstimatorConfig, ThresholdRule, Thresholds, VarianceFunction, VarianceSource,
    VarianceUsed,
};
pub use wavelet::{
    cyclic_shift, dwt_forward, dwt_inverse, local_means, CoeffPyramid, LocalMeanPyramid, WaveletBasis,
    WaveletFamily,
};
