//! Plain-text file formats.
//!
//! All formats are line oriented with `.` as decimal separator and LF line
//! endings. Blank lines and lines starting with `#` are ignored on input.
//! Values are printed in Rust's shortest round-trip form, so a file read
//! back reproduces the in-memory values bit for bit.
//!
//! | content            | columns                      |
//! |--------------------|------------------------------|
//! | series             | `value`                      |
//! | coefficient pyramid| `j k value`, smooth `-1 1 v` |
//! | variance estimate  | `u value`                    |
//! | VST divisors       | `j k divisor`                |
//! | thresholds sidecar | `j k threshold survivor`     |
//! | plot data          | `t/n value`                  |
//!
//! Locations `k` are one-based in every file.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{FiszError, Result};
use crate::signal::Signal;
use crate::variance_fn::VarianceEstimate;
use crate::vst::VstState;
use crate::wavefisz::EstimateResult;
use crate::wavelet::{CoeffPyramid, WaveletBasis};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// `# key value` header entries.
fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().find_map(|l| {
        let rest = l.trim().strip_prefix('#')?.trim();
        let (k, v) = rest.split_once(char::is_whitespace)?;
        (k == key).then(|| v.trim())
    })
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| FiszError::Parse {
        line,
        msg: format!("cannot parse '{field}' as a number"),
    })?;
    if !v.is_finite() {
        return Err(FiszError::Parse {
            line,
            msg: format!("non-finite value '{field}'"),
        });
    }
    Ok(v)
}

fn parse_usize(field: &str, line: usize) -> Result<usize> {
    field.parse().map_err(|_| FiszError::Parse {
        line,
        msg: format!("cannot parse '{field}' as an index"),
    })
}

fn fields<const N: usize>(l: &str, line: usize) -> Result<[&str; N]> {
    let parts: Vec<&str> = l.split_whitespace().collect();
    parts.try_into().map_err(|p: Vec<&str>| FiszError::Parse {
        line,
        msg: format!("expected {N} columns, found {}", p.len()),
    })
}

pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    data_lines(text)
        .map(|(line, l)| {
            let [v] = fields::<1>(l, line)?;
            parse_f64(v, line)
        })
        .collect()
}

/// Parse a one-value-per-line series of dyadic length.
pub fn parse_series(text: &str) -> Result<Signal> {
    Signal::new(parse_values(text)?)
}

pub fn format_series(values: &[f64], header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn format_pyramid(p: &CoeffPyramid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "-1 1 {}", p.smooth);
    for (j, level) in p.details().iter().enumerate() {
        for (k, v) in level.iter().enumerate() {
            let _ = writeln!(out, "{j} {} {v}", k + 1);
        }
    }
    out
}

type Indexed = (Vec<Vec<Option<f64>>>, Option<f64>);

/// Read `j k value` rows into per-level arrays, with the smooth row kept apart.
fn parse_indexed(text: &str, allow_smooth: bool) -> Result<Indexed> {
    let mut levels: Vec<Vec<Option<f64>>> = Vec::new();
    let mut smooth = None;
    for (line, l) in data_lines(text) {
        let [j, k, v] = fields::<3>(l, line)?;
        let value = parse_f64(v, line)?;
        if j == "-1" {
            if !allow_smooth || k != "1" {
                return Err(FiszError::Parse {
                    line,
                    msg: "unexpected smooth-coefficient row".into(),
                });
            }
            smooth = Some(value);
            continue;
        }
        let (j, k) = (parse_usize(j, line)?, parse_usize(k, line)?);
        if j >= 40 || k == 0 || k > 1 << j {
            return Err(FiszError::Parse {
                line,
                msg: format!("index ({j}, {k}) outside 0 <= j, 1 <= k <= 2^j"),
            });
        }
        while levels.len() <= j {
            levels.push(vec![None; 1 << levels.len()]);
        }
        if levels[j][k - 1].replace(value).is_some() {
            return Err(FiszError::Parse {
                line,
                msg: format!("duplicate entry ({j}, {k})"),
            });
        }
    }
    Ok((levels, smooth))
}

fn complete(levels: Vec<Vec<Option<f64>>>) -> Result<Vec<Vec<f64>>> {
    levels
        .into_iter()
        .enumerate()
        .map(|(j, level)| {
            level
                .into_iter()
                .enumerate()
                .map(|(k, v)| {
                    v.ok_or_else(|| FiszError::MalformedPyramid(format!("missing entry ({j}, {})", k + 1)))
                })
                .collect()
        })
        .collect()
}

pub fn parse_pyramid(text: &str) -> Result<CoeffPyramid> {
    let (levels, smooth) = parse_indexed(text, true)?;
    let smooth = smooth.ok_or_else(|| FiszError::MalformedPyramid("missing smooth coefficient".into()))?;
    CoeffPyramid::new(complete(levels)?, smooth)
}

pub fn format_variance_estimate(h: &VarianceEstimate) -> String {
    let mut out = format!("# floor_eps {}\n", h.floor_eps());
    for (u, v) in h.grid().iter().zip(h.values()) {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// Square-root version of a variance estimate, for standard-deviation plots.
pub fn format_std_curve(h: &VarianceEstimate) -> String {
    let mut out = String::new();
    for (u, v) in h.grid().iter().zip(h.values()) {
        let _ = writeln!(out, "{u} {}", v.sqrt());
    }
    out
}

pub fn parse_variance_estimate(text: &str) -> Result<VarianceEstimate> {
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (line, l) in data_lines(text) {
        let [u, v] = fields::<2>(l, line)?;
        grid.push(parse_f64(u, line)?);
        values.push(parse_f64(v, line)?);
    }
    let floor = match header_value(text, "floor_eps") {
        Some(f) => f.parse::<f64>().map_err(|_| FiszError::Parse {
            line: 1,
            msg: format!("bad floor_eps '{f}'"),
        })?,
        None => values.iter().copied().fold(f64::INFINITY, f64::min),
    };
    VarianceEstimate::from_parts(grid, values, floor)
}

pub fn format_divisors(state: &VstState) -> String {
    let mut out = format!("# basis {}\n", state.basis.name());
    for (j, level) in state.divisors().iter().enumerate() {
        for (k, d) in level.iter().enumerate() {
            let _ = writeln!(out, "{j} {} {d}", k + 1);
        }
    }
    out
}

pub fn parse_divisors(text: &str) -> Result<VstState> {
    let basis = match header_value(text, "basis") {
        Some(name) => WaveletBasis::from_name(name)?,
        None => WaveletBasis::haar(),
    };
    let (levels, _) = parse_indexed(text, false)?;
    VstState::from_divisors(complete(levels)?, basis)
}

pub fn format_thresholds(r: &EstimateResult) -> String {
    let mut out = String::new();
    for (j, level) in r.thresholds.levels().iter().enumerate() {
        for (k, t) in level.iter().enumerate() {
            let _ = writeln!(out, "{j} {} {t} {}", k + 1, u8::from(r.survivors[j][k]));
        }
    }
    out
}

/// Two-column `t/n value` rows for `t = 1..=n`.
pub fn format_plot(values: &[f64]) -> String {
    let n = values.len() as f64;
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{} {v}", (i + 1) as f64 / n);
    }
    out
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    Ok(std::fs::write(path, text)?)
}
