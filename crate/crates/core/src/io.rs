//! Output files: CSV tables, run summary and run manifest.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunSettings;
use crate::engine::SimConfig;
use crate::error::{Error, Result};
use crate::injection::InjectionEvent;
use crate::observables::{ConcentrationProfile, LayerReport};

/// Formats `x` with `digits` significant digits, like C's `%g`: plain
/// decimal for moderate exponents, scientific otherwise. Always uses a
/// decimal point and no grouping.
pub fn format_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

const CSV_DIGITS: usize = 6;

pub const PROFILE_HEADER: &str = "bin_center,concentration,std_error";
/// Optional fourth column: standard error of the residual against the
/// interior line fit.
pub const RESIDUAL_COLUMN: &str = "residual_std_error";

pub fn profile_csv(profile: &ConcentrationProfile) -> String {
    let mut out = String::from(PROFILE_HEADER);
    if profile.residual_std_errors.is_some() {
        out.push(',');
        out.push_str(RESIDUAL_COLUMN);
    }
    out.push('\n');
    for i in 0..profile.len() {
        let _ = write!(
            out,
            "{},{},{}",
            format_sig(profile.bin_centers[i], CSV_DIGITS),
            format_sig(profile.values[i], CSV_DIGITS),
            format_sig(profile.std_errors[i], CSV_DIGITS)
        );
        if let Some(r) = &profile.residual_std_errors {
            let _ = write!(out, ",{}", format_sig(r[i], CSV_DIGITS));
        }
        out.push('\n');
    }
    out
}

/// Parses a `profile.csv` written by [`profile_csv`].
pub fn parse_profile_csv(text: &str) -> Result<ConcentrationProfile> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let width = match lines.next() {
        Some((_, header)) if header.trim() == PROFILE_HEADER => 3,
        Some((_, header)) if header.trim() == format!("{PROFILE_HEADER},{RESIDUAL_COLUMN}") => 4,
        Some((i, header)) => {
            return Err(Error::parse(i + 1, format!("expected header {PROFILE_HEADER:?}, got {header:?}")))
        }
        None => return Err(Error::parse(1, "empty profile")),
    };
    let mut profile = ConcentrationProfile {
        bin_centers: Vec::new(),
        values: Vec::new(),
        std_errors: Vec::new(),
        residual_std_errors: (width == 4).then(Vec::new),
    };
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(Error::parse(i + 1, format!("expected {width} fields, got {}", fields.len())));
        }
        let mut nums = [0.0; 4];
        for (slot, f) in nums.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(i + 1, format!("bad number {f:?}")))?;
        }
        if nums[2] < 0.0 || nums[3] < 0.0 {
            return Err(Error::parse(i + 1, "negative standard error"));
        }
        if let Some(&prev) = profile.bin_centers.last() {
            if nums[0] <= prev {
                return Err(Error::parse(i + 1, "bin centers must increase"));
            }
        }
        profile.bin_centers.push(nums[0]);
        profile.values.push(nums[1]);
        profile.std_errors.push(nums[2]);
        if let Some(r) = &mut profile.residual_std_errors {
            r.push(nums[3]);
        }
    }
    if profile.is_empty() {
        return Err(Error::parse(1, "profile has no rows"));
    }
    Ok(profile)
}

pub fn velocities_csv(samples: &[Vec<f64>; 2]) -> String {
    let mut out = String::from("side,v\n");
    for (side, vs) in ["left", "right"].iter().zip(samples) {
        for v in vs {
            let _ = writeln!(out, "{side},{}", format_sig(*v, CSV_DIGITS));
        }
    }
    out
}

pub const SAMPLES_HEADER: &str = "x,v,xi,eta";

/// One row per event; `xi` and `eta` are empty for boundary insertions.
pub fn write_samples_csv<W: std::io::Write>(mut w: W, events: impl Iterator<Item = InjectionEvent>) -> Result<()> {
    writeln!(w, "{SAMPLES_HEADER}")?;
    for ev in events {
        let x = format_sig(ev.state.x, CSV_DIGITS);
        let v = format_sig(ev.state.v, CSV_DIGITS);
        match ev.pre_image {
            Some(p) => writeln!(w, "{x},{v},{},{}", format_sig(p.xi, CSV_DIGITS), format_sig(p.eta, CSV_DIGITS))?,
            None => writeln!(w, "{x},{v},,")?,
        }
    }
    Ok(())
}

/// Headline numbers of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub flux: f64,
    pub flux_std_error: f64,
    pub analytic_flux: f64,
    pub interior_slope: Option<f64>,
    pub interior_intercept: Option<f64>,
    pub layer_deviation: Option<f64>,
    pub systematic_sign: Option<i8>,
    pub layer: Option<LayerReport>,
    pub profile_integral: f64,
    pub strip_gof_p_left: Option<f64>,
    pub strip_gof_p_right: Option<f64>,
    pub injected: [u64; 2],
    pub absorbed: [u64; 2],
    pub in_flight: u64,
    pub capped: u64,
    pub capped_fraction: f64,
    pub mass_balanced: bool,
    pub steps: u64,
    pub mean_pool_size: Option<f64>,
    /// Notes on metrics that could not be computed.
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Everything needed to re-run and identify a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: SimConfig,
    pub threads: usize,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub summary: Summary,
}

impl RunManifest {
    pub fn settings(&self) -> RunSettings {
        RunSettings {
            sim: self.config.clone(),
            threads: self.threads,
        }
    }
}

/// Parses and validates a `manifest.json`.
pub fn parse_manifest(text: &str) -> Result<RunManifest> {
    let m: RunManifest = serde_json::from_str(text)?;
    if m.config.seed != m.seed {
        return Err(Error::Config(format!(
            "manifest seed {} disagrees with config seed {}",
            m.seed, m.config.seed
        )));
    }
    m.config.validate()?;
    Ok(m)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
