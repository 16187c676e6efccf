//! Command-line front end: argument model, run logic and exit codes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fiszkit::bench::{run_bench, BenchConfig};
use fiszkit::io::{
    format_divisors, format_plot, format_series, format_std_curve, format_thresholds,
    format_variance_estimate, parse_divisors, parse_series, read_text, write_text,
};
use fiszkit::{
    baseline_mad_estimate, estimate, estimate_variance_function, forward_vst, inverse_vst,
    make_blocks, make_bumps, sample_noise, Bandwidth, ClosedForm, EstimatorConfig, FiszError,
    NoiseModel, SeedSpec, ThresholdRule, VarFnConfig, VarianceSource, VarianceUsed, WaveletBasis,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// Environment variable capping the number of bench worker threads.
pub const THREADS_ENV: &str = "FISZKIT_THREADS";

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "fiszkit", version, about = "Data-driven wavelet-Fisz denoising")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Generate a test signal and a noisy sample of it.
    Simulate(SimulateArgs),
    /// Denoise a series.
    Estimate(EstimateArgs),
    /// Estimate the mean-variance function of a series.
    Varfn(VarfnArgs),
    /// Forward or inverse variance-stabilising transform.
    Vst(VstArgs),
    /// Monte-Carlo MSE table for the four benchmark models.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignalKind {
    Blocks,
    Bumps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKind {
    Poisson,
    Exponential,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleKind {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "blocks")]
    pub signal: SignalKind,
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub min: f64,
    #[arg(long, default_value_t = 22.6)]
    pub max: f64,
    #[arg(long, value_enum, default_value = "poisson")]
    pub noise: NoiseKind,
    /// Standard deviation for Gaussian noise.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replication index (selects an independent stream under the same seed).
    #[arg(long, default_value_t = 0)]
    pub rep: u64,
    /// Output prefix: writes `<out>.truth.txt` and `<out>.data.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

/// Options shared by every command that fits a variance function.
#[derive(Debug, Clone, PartialEq, Args)]
pub struct VarfnOptions {
    /// Running-mean half width; defaults to 1 inside the estimator, 3 for `varfn`.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Kernel bandwidth, a positive number or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_bandwidth)]
    pub bandwidth: BandwidthArg,
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthArg(pub Bandwidth);

impl std::fmt::Display for BandwidthArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            Bandwidth::Auto => write!(f, "auto"),
            Bandwidth::Fixed(b) => write!(f, "{b}"),
        }
    }
}

fn parse_bandwidth(s: &str) -> Result<BandwidthArg, String> {
    if s == "auto" {
        return Ok(BandwidthArg(Bandwidth::Auto));
    }
    match s.parse::<f64>() {
        Ok(b) if b > 0.0 && b.is_finite() => Ok(BandwidthArg(Bandwidth::Fixed(b))),
        _ => Err(format!("expected a positive number or 'auto', got '{s}'")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownH(pub ClosedForm);

impl std::fmt::Display for KnownH {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 {
            ClosedForm::Poisson => write!(f, "poisson"),
            ClosedForm::Exponential => write!(f, "exponential"),
            ClosedForm::Constant(c) => write!(f, "constant={c}"),
        }
    }
}

fn parse_known_h(s: &str) -> Result<KnownH, String> {
    match s {
        "poisson" => Ok(KnownH(ClosedForm::Poisson)),
        "exponential" => Ok(KnownH(ClosedForm::Exponential)),
        _ => s
            .strip_prefix("constant=")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| *v >= 0.0)
            .map(|v| KnownH(ClosedForm::Constant(v)))
            .ok_or_else(|| format!("expected poisson, exponential or constant=<variance>, got '{s}'")),
    }
}

fn parse_basis(s: &str) -> Result<String, String> {
    WaveletBasis::from_name(s).map(|b| b.name()).map_err(|e| e.to_string())
}

/// Estimator options shared by `estimate` and `bench`.
#[derive(Debug, Clone, PartialEq, Args)]
pub struct EstimatorOptions {
    #[arg(long, value_enum, default_value = "hard")]
    pub rule: RuleKind,
    /// Cycle spinning over all shifts (default).
    #[arg(long, overrides_with = "no_ti")]
    pub ti: bool,
    /// Disable cycle spinning.
    #[arg(long = "no-ti", overrides_with = "ti")]
    pub no_ti: bool,
    /// Use every `stride`-th shift when cycle spinning.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Finest thresholded scale boundary; defaults to J - 2.
    #[arg(long)]
    pub jstar: Option<usize>,
    #[arg(long, default_value = "haar", value_parser = parse_basis)]
    pub basis: String,
    /// Use a closed-form variance function instead of estimating it.
    #[arg(long = "known-h", value_parser = parse_known_h)]
    pub known_h: Option<KnownH>,
    #[command(flatten)]
    pub varfn: VarfnOptions,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct EstimateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorOptions,
    /// Run the running-MAD baseline instead of the wavelet-Fisz estimator.
    #[arg(long)]
    pub baseline: bool,
    /// Also write `<out>.thresholds.txt` and, when estimated, `<out>.hhat.txt`.
    #[arg(long)]
    pub sidecars: bool,
    /// Also write `t/n value` plot files for the input and the estimate.
    #[arg(long = "emit-plots")]
    pub emit_plots: bool,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct VarfnArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub varfn: VarfnOptions,
    /// Also write the square-root curve to `<out>.sd.txt`.
    #[arg(long = "emit-plots")]
    pub emit_plots: bool,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct VstArgs {
    #[command(subcommand)]
    pub mode: VstMode,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum VstMode {
    /// Write the transformed series and its divisors.
    Forward(VstForwardArgs),
    /// Undo a forward transform using a saved divisors file.
    Inverse(VstInverseArgs),
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct VstForwardArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Divisors file; defaults to `<out>.divisors.txt`.
    #[arg(long)]
    pub divisors: Option<PathBuf>,
    #[arg(long, default_value = "haar", value_parser = parse_basis)]
    pub basis: String,
    #[command(flatten)]
    pub varfn: VarfnOptions,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct VstInverseArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub divisors: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 2048)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub estimator: EstimatorOptions,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<FiszError> for CliError {
    fn from(e: FiszError) -> Self {
        let code = match e {
            FiszError::Config(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn read_input(path: &Path) -> Result<fiszkit::Signal, CliError> {
    let text = read_text(path).map_err(|e| CliError {
        code: EXIT_DATA,
        message: format!("{}: {e}", path.display()),
    })?;
    parse_series(&text).map_err(|e| CliError {
        code: EXIT_DATA,
        message: format!("{}: {e}", path.display()),
    })
}

/// `est.txt` + `thresholds` -> `est.thresholds.txt`.
pub fn sidecar(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "txt".into());
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

impl VarfnOptions {
    fn config(&self, default_m: usize) -> VarFnConfig {
        VarFnConfig {
            half_width: self.m.unwrap_or(default_m),
            bandwidth: self.bandwidth.0,
            grid_size: self.grid,
            floor_eps: None,
        }
    }

    fn echo(&self, out: &mut String, default_m: usize) {
        let _ = write!(
            out,
            " --M {} --bandwidth {} --grid {}",
            self.m.unwrap_or(default_m),
            self.bandwidth,
            self.grid
        );
    }
}

impl EstimatorOptions {
    pub fn config(&self) -> Result<EstimatorConfig, CliError> {
        let variance = match self.known_h {
            Some(KnownH(c)) => VarianceSource::Known(c),
            None => VarianceSource::DataDriven(self.varfn.config(1)),
        };
        if self.stride == 0 {
            return Err(usage("--stride must be at least 1"));
        }
        Ok(EstimatorConfig {
            j_star: self.jstar,
            rule: match self.rule {
                RuleKind::Hard => ThresholdRule::Hard,
                RuleKind::Soft => ThresholdRule::Soft,
            },
            translation_invariant: !self.no_ti,
            shift_stride: self.stride,
            basis: WaveletBasis::from_name(&self.basis)?,
            variance,
        })
    }

    fn echo(&self, out: &mut String) {
        let rule = match self.rule {
            RuleKind::Hard => "hard",
            RuleKind::Soft => "soft",
        };
        let _ = write!(
            out,
            " --rule {rule} {} --stride {} --basis {}",
            if self.no_ti { "--no-ti" } else { "--ti" },
            self.stride,
            self.basis
        );
        if let Some(j) = self.jstar {
            let _ = write!(out, " --jstar {j}");
        }
        if let Some(h) = self.known_h {
            let _ = write!(out, " --known-h {h}");
        }
        self.varfn.echo(out, 1);
    }
}

fn noise_model(kind: NoiseKind, sigma: f64) -> NoiseModel {
    match kind {
        NoiseKind::Poisson => NoiseModel::Poisson,
        NoiseKind::Exponential => NoiseModel::ExponentialMultiplicative,
        NoiseKind::Gaussian => NoiseModel::GaussianAdditive { sigma },
    }
}

impl RunConfig {
    /// Canonical command line with every default made explicit.
    pub fn echo(&self) -> String {
        let mut out = String::from("fiszkit");
        match &self.command {
            Command::Simulate(a) => {
                let signal = match a.signal {
                    SignalKind::Blocks => "blocks",
                    SignalKind::Bumps => "bumps",
                };
                let noise = match a.noise {
                    NoiseKind::Poisson => "poisson",
                    NoiseKind::Exponential => "exponential",
                    NoiseKind::Gaussian => "gaussian",
                };
                let _ = write!(
                    out,
                    " simulate --signal {signal} --n {} --min {} --max {} --noise {noise} --sigma {} --seed {} --rep {} --out {}",
                    a.n,
                    a.min,
                    a.max,
                    a.sigma,
                    a.seed,
                    a.rep,
                    a.out.display()
                );
            }
            Command::Estimate(a) => {
                let _ = write!(out, " estimate --in {} --out {}", a.input.display(), a.out.display());
                a.estimator.echo(&mut out);
                for (flag, on) in [("--baseline", a.baseline), ("--sidecars", a.sidecars), ("--emit-plots", a.emit_plots)] {
                    if on {
                        let _ = write!(out, " {flag}");
                    }
                }
            }
            Command::Varfn(a) => {
                let _ = write!(out, " varfn --in {} --out {}", a.input.display(), a.out.display());
                a.varfn.echo(&mut out, 3);
                if a.emit_plots {
                    out.push_str(" --emit-plots");
                }
            }
            Command::Vst(VstArgs { mode: VstMode::Forward(a) }) => {
                let _ = write!(
                    out,
                    " vst forward --in {} --out {} --divisors {} --basis {}",
                    a.input.display(),
                    a.out.display(),
                    a.divisors_path().display(),
                    a.basis
                );
                a.varfn.echo(&mut out, 1);
            }
            Command::Vst(VstArgs { mode: VstMode::Inverse(a) }) => {
                let _ = write!(
                    out,
                    " vst inverse --in {} --divisors {} --out {}",
                    a.input.display(),
                    a.divisors.display(),
                    a.out.display()
                );
            }
            Command::Bench(a) => {
                let _ = write!(out, " bench --reps {} --n {} --seed {}", a.reps, a.n, a.seed);
                a.estimator.echo(&mut out);
                if let Some(o) = &a.out {
                    let _ = write!(out, " --out {}", o.display());
                }
            }
        }
        out
    }
}

impl VstForwardArgs {
    fn divisors_path(&self) -> PathBuf {
        self.divisors.clone().unwrap_or_else(|| sidecar(&self.out, "divisors"))
    }
}

/// Worker threads requested through `FISZKIT_THREADS`.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|t| *t >= 1)
            .map(Some)
            .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Execute a parsed command line.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let header = vec![cfg.echo()];
    match &cfg.command {
        Command::Simulate(a) => {
            if !(a.n >= 2 && a.n.is_power_of_two()) {
                return Err(usage(format!("--n {} is not a power of two (>= 2)", a.n)));
            }
            if a.min >= a.max {
                return Err(usage(format!("--min {} must be below --max {}", a.min, a.max)));
            }
            let truth = match a.signal {
                SignalKind::Blocks => make_blocks(a.n, a.min, a.max)?,
                SignalKind::Bumps => make_bumps(a.n, a.min, a.max)?,
            };
            let x = sample_noise(&truth, noise_model(a.noise, a.sigma), SeedSpec::new(a.seed, a.rep))?;
            write_text(with_suffix(&a.out, ".truth.txt"), &format_series(truth.values(), &header))?;
            write_text(with_suffix(&a.out, ".data.txt"), &format_series(x.values(), &header))?;
        }
        Command::Estimate(a) => {
            let x = read_input(&a.input)?;
            let est_cfg = a.estimator.config()?;
            if a.baseline {
                let out = baseline_mad_estimate(&x, &est_cfg)?;
                write_text(&a.out, &format_series(out.values(), &header))?;
                if a.emit_plots {
                    write_plots(&a.out, x.values(), out.values())?;
                }
                return Ok(());
            }
            let r = estimate(&x, &est_cfg)?;
            write_text(&a.out, &format_series(r.alpha_hat.values(), &header))?;
            if a.sidecars {
                write_text(sidecar(&a.out, "thresholds"), &format_thresholds(&r))?;
                if let VarianceUsed::Estimated(h) = &r.h_used {
                    write_text(sidecar(&a.out, "hhat"), &format_variance_estimate(h))?;
                }
            }
            if a.emit_plots {
                write_plots(&a.out, x.values(), r.alpha_hat.values())?;
            }
        }
        Command::Varfn(a) => {
            let x = read_input(&a.input)?;
            let h = estimate_variance_function(&x, &a.varfn.config(3))?;
            write_text(&a.out, &format_variance_estimate(&h))?;
            if a.emit_plots {
                write_text(sidecar(&a.out, "sd"), &format_std_curve(&h))?;
            }
        }
        Command::Vst(VstArgs { mode: VstMode::Forward(a) }) => {
            let x = read_input(&a.input)?;
            let h = estimate_variance_function(&x, &a.varfn.config(1))?;
            let basis = WaveletBasis::from_name(&a.basis)?;
            let (xt, state) = forward_vst(&x, &h, &basis)?;
            write_text(&a.out, &format_series(xt.values(), &header))?;
            write_text(a.divisors_path(), &format_divisors(&state))?;
        }
        Command::Vst(VstArgs { mode: VstMode::Inverse(a) }) => {
            let y = read_input(&a.input)?;
            let text = read_text(&a.divisors)?;
            let state = parse_divisors(&text).map_err(|e| CliError {
                code: EXIT_DATA,
                message: format!("{}: {e}", a.divisors.display()),
            })?;
            let x = inverse_vst(&y, &state)?;
            write_text(&a.out, &format_series(x.values(), &header))?;
        }
        Command::Bench(a) => {
            if !(a.n >= 2 && a.n.is_power_of_two()) {
                return Err(usage(format!("--n {} is not a power of two (>= 2)", a.n)));
            }
            if a.reps == 0 {
                return Err(usage("--reps must be at least 1"));
            }
            let bench = BenchConfig {
                reps: a.reps,
                n: a.n,
                master_seed: a.seed,
                threads: threads_from_env()?,
                estimator: a.estimator.config()?,
            };
            let report = run_bench(&bench)?;
            let mut text = format!("# {}\n", cfg.echo());
            text.push_str(&report.render());
            match &a.out {
                Some(path) => write_text(path, &text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn write_plots(out: &Path, input: &[f64], estimate: &[f64]) -> Result<(), CliError> {
    write_text(sidecar(out, "plot-input"), &format_plot(input))?;
    write_text(sidecar(out, "plot-estimate"), &format_plot(estimate))?;
    Ok(())
}
