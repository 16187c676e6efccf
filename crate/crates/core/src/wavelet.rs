//! Periodic orthonormal discrete wavelet transform and the local-mean pyramid.
//!
//! Scale `j = 0` is the coarsest level (one coefficient), `j = J - 1` the
//! finest (`n / 2` coefficients). Locations are stored zero-based; the text
//! formats in [`crate::io`] print them one-based.

use crate::error::{FiszError, Result};
use crate::signal::Signal;

/// Wavelet family. `Daubechies(taps)` supports 4, 6 and 8 filter taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveletFamily {
    Haar,
    Daubechies(usize),
}

/// An orthonormal two-channel filter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    family: WaveletFamily,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

const D6: [f64; 6] = [
    0.332_670_552_950_082_6,
    0.806_891_509_311_092_6,
    0.459_877_502_118_491_6,
    -0.135_011_020_010_254_6,
    -0.085_441_273_882_026_66,
    0.035_226_291_885_709_54,
];

const D8: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_85,
    -0.187_034_811_719_093_1,
    0.030_841_381_835_560_76,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_03,
];

impl WaveletBasis {
    pub fn haar() -> Self {
        Self::from_lowpass(WaveletFamily::Haar, vec![std::f64::consts::FRAC_1_SQRT_2; 2])
    }

    pub fn daubechies(taps: usize) -> Result<Self> {
        let lowpass = match taps {
            2 => return Ok(Self::haar()),
            4 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * std::f64::consts::SQRT_2;
                vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
            }
            6 => D6.to_vec(),
            8 => D8.to_vec(),
            _ => {
                return Err(FiszError::config(format!(
                    "Daubechies filters are available with 2, 4, 6 or 8 taps, not {taps}"
                )))
            }
        };
        Ok(Self::from_lowpass(WaveletFamily::Daubechies(taps), lowpass))
    }

    pub fn new(family: WaveletFamily) -> Result<Self> {
        match family {
            WaveletFamily::Haar => Ok(Self::haar()),
            WaveletFamily::Daubechies(taps) => Self::daubechies(taps),
        }
    }

    /// Parse `haar`, `db4`, `d4`, `db6` ...
    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        if lower == "haar" {
            return Ok(Self::haar());
        }
        let taps = lower
            .strip_prefix("db")
            .or_else(|| lower.strip_prefix('d'))
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| FiszError::config(format!("unknown wavelet '{name}'")))?;
        Self::daubechies(taps)
    }

    pub fn name(&self) -> String {
        match self.family {
            WaveletFamily::Haar => "haar".to_string(),
            WaveletFamily::Daubechies(t) => format!("db{t}"),
        }
    }

    fn from_lowpass(family: WaveletFamily, lowpass: Vec<f64>) -> Self {
        let len = lowpass.len();
        // Quadrature mirror: g[m] = (-1)^m h[L-1-m].
        let highpass = (0..len)
            .map(|m| if m % 2 == 0 { lowpass[len - 1 - m] } else { -lowpass[len - 1 - m] })
            .collect();
        Self {
            family,
            lowpass,
            highpass,
        }
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn filter_coeffs(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass_coeffs(&self) -> &[f64] {
        &self.highpass
    }

    pub fn taps(&self) -> usize {
        self.lowpass.len()
    }

    /// Number of samples spanned by a wavelet `depth` levels above the data
    /// (depth 1 is the finest scale), before periodic wrapping.
    pub fn support_len(&self, depth: usize) -> usize {
        ((1usize << depth) - 1) * (self.taps() - 1) + 1
    }
}

impl Default for WaveletBasis {
    fn default() -> Self {
        Self::haar()
    }
}

/// Detail coefficients `detail[j][k]`, `j = 0..J`, `k < 2^j`, plus the single
/// smooth coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffPyramid {
    details: Vec<Vec<f64>>,
    pub smooth: f64,
}

impl CoeffPyramid {
    pub fn new(details: Vec<Vec<f64>>, smooth: f64) -> Result<Self> {
        if details.is_empty() {
            return Err(FiszError::MalformedPyramid("no detail levels".into()));
        }
        for (j, level) in details.iter().enumerate() {
            if level.len() != 1 << j {
                return Err(FiszError::MalformedPyramid(format!(
                    "level {j} holds {} coefficients, expected {}",
                    level.len(),
                    1usize << j
                )));
            }
        }
        Ok(Self { details, smooth })
    }

    /// All-zero pyramid for a signal of `2^levels` samples.
    pub fn zeros(levels: usize) -> Self {
        Self {
            details: (0..levels).map(|j| vec![0.0; 1 << j]).collect(),
            smooth: 0.0,
        }
    }

    /// `J`.
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn signal_len(&self) -> usize {
        1 << self.details.len()
    }

    pub fn detail(&self, j: usize) -> &[f64] {
        &self.details[j]
    }

    pub fn detail_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.details[j]
    }

    pub fn details(&self) -> &[Vec<f64>] {
        &self.details
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.smooth * self.smooth + self.details.iter().flatten().map(|c| c * c).sum::<f64>()
    }
}

/// `mean[j][k]`: the uniform average of the data over the support of the
/// wavelet at `(j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMeanPyramid {
    means: Vec<Vec<f64>>,
}

impl LocalMeanPyramid {
    pub fn levels(&self) -> usize {
        self.means.len()
    }

    pub fn level(&self, j: usize) -> &[f64] {
        &self.means[j]
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.means[j][k]
    }
}

/// Forward periodic DWT down to a single smooth coefficient.
pub fn dwt_forward(x: &Signal, basis: &WaveletBasis) -> CoeffPyramid {
    forward_slice(x.values(), basis)
}

pub(crate) fn forward_slice(x: &[f64], basis: &WaveletBasis) -> CoeffPyramid {
    let levels = x.len().trailing_zeros() as usize;
    let mut details = vec![Vec::new(); levels];
    let mut approx = x.to_vec();
    let (h, g) = (&basis.lowpass, &basis.highpass);
    for j in (0..levels).rev() {
        let len = approx.len();
        let half = len / 2;
        let mut next = vec![0.0; half];
        let mut det = vec![0.0; half];
        for k in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for (m, (&hm, &gm)) in h.iter().zip(g).enumerate() {
                let v = approx[(2 * k + m) % len];
                a += hm * v;
                d += gm * v;
            }
            next[k] = a;
            det[k] = d;
        }
        details[j] = det;
        approx = next;
    }
    CoeffPyramid {
        details,
        smooth: approx[0],
    }
}

/// Inverse of [`dwt_forward`].
pub fn dwt_inverse(p: &CoeffPyramid, basis: &WaveletBasis) -> Result<Signal> {
    for (j, level) in p.details.iter().enumerate() {
        if level.len() != 1 << j {
            return Err(FiszError::MalformedPyramid(format!(
                "level {j} holds {} coefficients, expected {}",
                level.len(),
                1usize << j
            )));
        }
    }
    if p.details.is_empty() {
        return Err(FiszError::MalformedPyramid("no detail levels".into()));
    }
    Signal::new(inverse_unchecked(p, basis))
}

pub(crate) fn inverse_unchecked(p: &CoeffPyramid, basis: &WaveletBasis) -> Vec<f64> {
    let (h, g) = (&basis.lowpass, &basis.highpass);
    let mut approx = vec![p.smooth];
    for det in &p.details {
        let half = approx.len();
        let len = 2 * half;
        let mut up = vec![0.0; len];
        for k in 0..half {
            let (a, d) = (approx[k], det[k]);
            for (m, (&hm, &gm)) in h.iter().zip(g).enumerate() {
                up[(2 * k + m) % len] += hm * a + gm * d;
            }
        }
        approx = up;
    }
    approx
}

/// Uniform-weight local means over each wavelet's support.
pub fn local_means(x: &Signal, basis: &WaveletBasis) -> LocalMeanPyramid {
    CyclicPrefix::new(x.values()).local_means(basis, 0)
}

/// Cyclic prefix sums, so that local means of any rotation of the data can
/// be read off in O(1) per entry.
pub(crate) struct CyclicPrefix {
    prefix: Vec<f64>,
    total: f64,
}

impl CyclicPrefix {
    pub(crate) fn new(x: &[f64]) -> Self {
        let mut prefix = Vec::with_capacity(x.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &v in x {
            acc += v;
            prefix.push(acc);
        }
        Self { prefix, total: acc }
    }

    fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    /// Sum of `x[(start + i) mod n]` for `i < count`, `count <= n`.
    fn window_sum(&self, start: usize, count: usize) -> f64 {
        let n = self.len();
        let start = start % n;
        let end = start + count;
        if end <= n {
            self.prefix[end] - self.prefix[start]
        } else {
            (self.total - self.prefix[start]) + self.prefix[end - n]
        }
    }

    /// Local means of the series `y[t] = x[(t - shift) mod n]`.
    pub(crate) fn local_means(&self, basis: &WaveletBasis, shift: usize) -> LocalMeanPyramid {
        let n = self.len();
        let levels = n.trailing_zeros() as usize;
        let offset = (n - shift % n) % n;
        let means = (0..levels)
            .map(|j| {
                let depth = levels - j;
                let count = basis.support_len(depth).min(n);
                let step = 1usize << depth;
                (0..1usize << j)
                    .map(|k| self.window_sum(step * k + offset, count) / count as f64)
                    .collect()
            })
            .collect();
        LocalMeanPyramid { means }
    }
}

/// Periodic rotation: `y[t] = x[(t - s) mod n]`.
pub fn cyclic_shift(x: &Signal, s: i64) -> Signal {
    let n = x.len();
    let mut out = x.values().to_vec();
    out.rotate_right(s.rem_euclid(n as i64) as usize);
    Signal::new(out).expect("rotation preserves length and finiteness")
}
