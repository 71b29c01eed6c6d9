//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! gamma = 100
//! protocol = residual
//! ```
//!
//! Values are layered: built-in defaults, then the file, then environment
//! variables `LANGEVIN_BATHS_<KEY>`, then command-line `key=value`
//! overrides.

use crate::engine::{RunMode, SimConfig};
use crate::error::{Error, Result};

pub const ENV_PREFIX: &str = "LANGEVIN_BATHS_";

pub const KEYS: &[&str] = &[
    "gamma",
    "epsilon",
    "length",
    "potential",
    "c_left",
    "c_right",
    "flux_mode",
    "dt",
    "protocol",
    "mode",
    "trajectories",
    "total_time",
    "warmup_time",
    "seed",
    "bins",
    "strip_width",
    "max_steps",
    "velocity_sample_prob",
    "blocks",
    "threads",
];

/// A configuration entry with the line it came from (0 for overrides).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Splits a config file into entries. Rejects unknown keys, duplicate
/// keys and lines without `=`.
pub fn parse_config(text: &str) -> Result<Vec<Entry>> {
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let entry = parse_assignment(content, line)?;
        if entries.iter().any(|e| e.key == entry.key) {
            return Err(Error::parse(line, format!("duplicate key {:?}", entry.key)));
        }
        entries.push(entry);
    }
    Ok(entries)
}

fn parse_assignment(content: &str, line: usize) -> Result<Entry> {
    let (key, value) = content
        .split_once('=')
        .ok_or_else(|| Error::parse(line, format!("expected key = value, got {content:?}")))?;
    let key = key.trim().to_ascii_lowercase().replace('-', "_");
    let value = value.trim();
    if !KEYS.contains(&key.as_str()) {
        return Err(Error::parse(line, format!("unknown key {key:?}")));
    }
    if value.is_empty() {
        return Err(Error::parse(line, format!("empty value for {key:?}")));
    }
    Ok(Entry {
        key,
        value: value.to_string(),
        line,
    })
}

/// Parses one `key=value` command-line override.
pub fn parse_override(s: &str) -> Result<Entry> {
    parse_assignment(s.trim(), 0).map_err(|e| Error::Config(format!("override {s:?}: {e}")))
}

/// Entries from environment variables carrying [`ENV_PREFIX`].
pub fn env_entries<I: IntoIterator<Item = (String, String)>>(vars: I) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (name, value) in vars {
        if let Some(key) = name.strip_prefix(ENV_PREFIX) {
            let e = parse_assignment(&format!("{key}={value}"), 0)
                .map_err(|e| Error::Config(format!("environment variable {name}: {e}")))?;
            out.push(e);
        }
    }
    Ok(out)
}

/// A fully resolved run: simulation config plus execution settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub sim: SimConfig,
    /// Worker threads; 1 gives a single-threaded run.
    pub threads: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            threads: 1,
        }
    }
}

fn value<T: std::str::FromStr>(e: &Entry) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    e.value.parse::<T>().map_err(|err| {
        let msg = format!("bad value {:?} for {}: {err}", e.value, e.key);
        if e.line > 0 {
            Error::parse(e.line, msg)
        } else {
            Error::Config(msg)
        }
    })
}

fn finite(e: &Entry) -> Result<f64> {
    let v: f64 = value(e)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{} must be finite, got {}", e.key, e.value)))
    }
}

/// Applies entry layers in order (later wins) on top of the defaults and
/// validates the result.
pub fn resolve(layers: &[&[Entry]]) -> Result<RunSettings> {
    let mut settings = RunSettings::default();
    let sim = &mut settings.sim;
    let mut mode = "sequential".to_string();
    let mut trajectories = match sim.mode {
        RunMode::Sequential { trajectories } => trajectories,
        _ => 25_000,
    };
    let mut total_time = None;
    let mut warmup_time = None;
    let mut strip_width = None;

    for e in layers.iter().flat_map(|l| l.iter()) {
        match e.key.as_str() {
            "gamma" => sim.params.gamma = finite(e)?,
            "epsilon" => sim.params.epsilon = finite(e)?,
            "length" => sim.params.length = finite(e)?,
            "potential" => sim.params.potential = value(e)?,
            "c_left" => sim.bath.c_left = finite(e)?,
            "c_right" => sim.bath.c_right = finite(e)?,
            "flux_mode" => sim.bath.flux_mode = value(e)?,
            "dt" => sim.dt = finite(e)?,
            "protocol" => sim.protocol = value(e)?,
            "mode" => mode = e.value.clone(),
            "trajectories" => trajectories = value(e)?,
            "total_time" => total_time = Some(finite(e)?),
            "warmup_time" => warmup_time = Some(finite(e)?),
            "seed" => sim.seed = value(e)?,
            "bins" => sim.bins = value(e)?,
            "strip_width" => strip_width = Some(finite(e)?),
            "max_steps" => sim.max_steps_per_trajectory = value(e)?,
            "velocity_sample_prob" => sim.velocity_sample_prob = finite(e)?,
            "blocks" => sim.blocks = value(e)?,
            "threads" => settings.threads = value(e)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
    }
    sim.strip_width = strip_width.unwrap_or(sim.params.layer_width() / 2.0);
    sim.mode = match mode.as_str() {
        "sequential" => RunMode::Sequential { trajectories },
        "ensemble" => {
            let warmup_time = warmup_time.unwrap_or_else(|| SimConfig::default_warmup(&sim.params));
            let total_time = total_time
                .ok_or_else(|| Error::Config("ensemble mode needs total_time".into()))?;
            RunMode::Ensemble {
                total_time,
                warmup_time,
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown mode {other:?}; expected sequential or ensemble"
            )))
        }
    };
    if settings.threads == 0 {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    settings.sim.validate()?;
    Ok(settings)
}

/// Renders settings back into the flat format.
pub fn to_config_text(settings: &RunSettings) -> String {
    let s = &settings.sim;
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    put("gamma", format!("{:?}", s.params.gamma));
    put("epsilon", format!("{:?}", s.params.epsilon));
    put("length", format!("{:?}", s.params.length));
    put("potential", s.params.potential.to_string());
    put("c_left", format!("{:?}", s.bath.c_left));
    put("c_right", format!("{:?}", s.bath.c_right));
    put("flux_mode", s.bath.flux_mode.to_string());
    put("dt", format!("{:?}", s.dt));
    put("protocol", s.protocol.to_string());
    match s.mode {
        RunMode::Sequential { trajectories } => {
            put("mode", "sequential".into());
            put("trajectories", trajectories.to_string());
        }
        RunMode::Ensemble { total_time, warmup_time } => {
            put("mode", "ensemble".into());
            put("total_time", format!("{total_time:?}"));
            put("warmup_time", format!("{warmup_time:?}"));
        }
    }
    put("seed", s.seed.to_string());
    put("bins", s.bins.to_string());
    put("strip_width", format!("{:?}", s.strip_width));
    put("max_steps", s.max_steps_per_trajectory.to_string());
    put("velocity_sample_prob", format!("{:?}", s.velocity_sample_prob));
    put("blocks", s.blocks.to_string());
    put("threads", settings.threads.to_string());
    out
}
