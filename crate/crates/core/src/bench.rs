//! Monte-Carlo comparison of the data-driven wavelet-Fisz estimator with the
//! running-MAD baseline on the blocks/bumps Poisson/exponential models.
//!
//! Replication `r` (1-based) of every cell draws its noise from
//! `SeedSpec { master_seed, replication_index: r }`, and both methods see the
//! same sample. Results are gathered in task order and reduced sequentially,
//! so a report does not depend on the number of worker threads.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{FiszError, Result};
use crate::signal::{make_blocks, make_bumps, sample_noise, NoiseModel, SeedSpec, Signal};
use crate::wavefisz::{baseline_mad_estimate, estimate, EstimatorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    Blocks,
    Bumps,
}

impl TestFunction {
    /// Target `[min, max]` range of the benchmark signal.
    pub fn range(&self) -> (f64, f64) {
        match self {
            TestFunction::Blocks => (1.0, 22.6),
            TestFunction::Bumps => (3.0, 23.21),
        }
    }

    pub fn generate(&self, n: usize) -> Result<Signal> {
        let (lo, hi) = self.range();
        match self {
            TestFunction::Blocks => make_blocks(n, lo, hi),
            TestFunction::Bumps => make_bumps(n, lo, hi),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Blocks => "blocks",
            TestFunction::Bumps => "bumps",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    DataDrivenFisz,
    MadBaseline,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::DataDrivenFisz => "DdwF",
            Method::MadBaseline => "MAD",
        }
    }
}

/// The four models in table order.
pub const CELLS: [(TestFunction, NoiseModel); 4] = [
    (TestFunction::Blocks, NoiseModel::ExponentialMultiplicative),
    (TestFunction::Blocks, NoiseModel::Poisson),
    (TestFunction::Bumps, NoiseModel::ExponentialMultiplicative),
    (TestFunction::Bumps, NoiseModel::Poisson),
];

fn noise_name(model: NoiseModel) -> &'static str {
    match model {
        NoiseModel::Poisson => "pois",
        NoiseModel::ExponentialMultiplicative => "exp",
        NoiseModel::GaussianAdditive { .. } => "gauss",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub reps: usize,
    pub n: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    pub estimator: EstimatorConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            reps: 100,
            n: 2048,
            master_seed: 0,
            threads: None,
            estimator: EstimatorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellStats {
    pub function: TestFunction,
    pub noise: NoiseModel,
    pub method: Method,
    pub mse: Vec<f64>,
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub cells: Vec<CellStats>,
}

/// Per-point mean squared error.
pub fn mse(estimate: &[f64], truth: &[f64]) -> f64 {
    let n = truth.len() as f64;
    estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// MSE of both methods on one replication of one model.
pub fn run_replication(
    function: TestFunction,
    noise: NoiseModel,
    n: usize,
    seed: SeedSpec,
    estimator: &EstimatorConfig,
) -> Result<(f64, f64)> {
    let truth = function.generate(n)?;
    let x = sample_noise(&truth, noise, seed)?;
    let fisz = estimate(&x, estimator)?.alpha_hat;
    let base = baseline_mad_estimate(&x, estimator)?;
    Ok((mse(fisz.values(), truth.values()), mse(base.values(), truth.values())))
}

impl BenchReport {
    pub fn cell(&self, function: TestFunction, noise: NoiseModel, method: Method) -> &CellStats {
        self.cells
            .iter()
            .find(|c| c.function == function && c.noise == noise && c.method == method)
            .expect("every cell is present")
    }

    /// Text table: one row per method, one column per model.
    pub fn render(&self) -> String {
        let cfg = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# fiszkit bench reps={} n={} seed={} stride={} ti={}",
            cfg.reps, cfg.n, cfg.master_seed, cfg.estimator.shift_stride, cfg.estimator.translation_invariant
        );
        let _ = writeln!(out, "# per-point MSE: mean (standard error) over replications");
        let _ = write!(out, "{:<8}", "method");
        for (f, m) in CELLS {
            let _ = write!(out, " {:>22}", format!("{}-{}", f.name(), noise_name(m)));
        }
        out.push('\n');
        for method in [Method::MadBaseline, Method::DataDrivenFisz] {
            let _ = write!(out, "{:<8}", method.name());
            for (f, m) in CELLS {
                let c = self.cell(f, m, method);
                let _ = write!(out, " {:>22}", format!("{:.4} ({:.4})", c.mean, c.std_err));
            }
            out.push('\n');
        }
        out
    }
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.reps == 0 {
        return Err(FiszError::config("at least one replication is required"));
    }
    let tasks: Vec<(usize, u64)> = (0..CELLS.len())
        .flat_map(|c| (1..=cfg.reps as u64).map(move |r| (c, r)))
        .collect();
    let work = || {
        tasks
            .par_iter()
            .map(|&(c, r)| {
                let (f, m) = CELLS[c];
                run_replication(f, m, cfg.n, SeedSpec::new(cfg.master_seed, r), &cfg.estimator)
            })
            .collect::<Result<Vec<(f64, f64)>>>()
    };
    let results = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| FiszError::config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let mut cells = Vec::new();
    for (c, &(function, noise)) in CELLS.iter().enumerate() {
        let chunk = &results[c * cfg.reps..(c + 1) * cfg.reps];
        for method in [Method::DataDrivenFisz, Method::MadBaseline] {
            let mse: Vec<f64> = chunk
                .iter()
                .map(|&(a, b)| if method == Method::DataDrivenFisz { a } else { b })
                .collect();
            let (mean, std_err) = mean_and_se(&mse);
            cells.push(CellStats {
                function,
                noise,
                method,
                mse,
                mean,
                std_err,
            });
        }
    }
    Ok(BenchReport {
        config: cfg.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_and_se() {
        assert_eq!(mse(&[1.0, 3.0], &[0.0, 1.0]), 2.5);
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_and_se(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn smoke_run_emits_eight_cells() {
        let cfg = BenchConfig {
            reps: 1,
            n: 256,
            estimator: EstimatorConfig {
                shift_stride: 16,
                ..EstimatorConfig::default()
            },
            ..BenchConfig::default()
        };
        let report = run_bench(&cfg).unwrap();
        assert_eq!(report.cells.len(), 8);
        assert!(report.cells.iter().all(|c| c.mean >= 0.0 && c.mse.len() == 1));
        let text = report.render();
        assert_eq!(text.lines().count(), 5);
        assert!(run_bench(&BenchConfig { reps: 0, ..cfg }).is_err());
    }
}
