//! Physical parameters, bath conditions, and boundary sides.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A scalar potential Φ(x) and its derivative.
pub trait ForceField {
    fn potential(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// Potentials that can be named in a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    #[default]
    Free,
    /// Φ(x) = slope · x
    Linear { slope: f64 },
    /// Φ(x) = stiffness · (x − center)² / 2
    Harmonic { stiffness: f64, center: f64 },
}

impl ForceField for Potential {
    fn potential(&self, x: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Linear { slope } => slope * x,
            Potential::Harmonic { stiffness, center } => 0.5 * stiffness * (x - center).powi(2),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Linear { slope } => slope,
            Potential::Harmonic { stiffness, center } => stiffness * (x - center),
        }
    }
}

impl Potential {
    pub fn is_free(&self) -> bool {
        matches!(self, Potential::Free)
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Potential::Free => write!(f, "free"),
            Potential::Linear { slope } => write!(f, "linear:{slope}"),
            Potential::Harmonic { stiffness, center } => write!(f, "harmonic:{stiffness}:{center}"),
        }
    }
}

impl FromStr for Potential {
    type Err = String;

    /// Parses `free`, `linear:<slope>` or `harmonic:<stiffness>:<center>`.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.trim().split(':');
        let kind = parts.next().unwrap_or_default();
        let nums = parts
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(format!("non-finite potential coefficient in {s:?}"));
        }
        match (kind, nums.as_slice()) {
            ("free", []) => Ok(Potential::Free),
            ("linear", [slope]) => Ok(Potential::Linear { slope: *slope }),
            ("harmonic", [stiffness, center]) => Ok(Potential::Harmonic {
                stiffness: *stiffness,
                center: *center,
            }),
            _ => Err(format!(
                "unknown potential {s:?}; expected free, linear:<slope> or harmonic:<stiffness>:<center>"
            )),
        }
    }
}

/// Friction, thermal factor, domain length and potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    /// Friction per unit mass.
    pub gamma: f64,
    /// Thermal factor kT/m; the Maxwellian velocity variance.
    pub epsilon: f64,
    /// Domain length L; the domain is `[0, L]`.
    pub length: f64,
    #[serde(default)]
    pub potential: Potential,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            gamma: 100.0,
            epsilon: 1.0,
            length: 1.0,
            potential: Potential::Free,
        }
    }
}

impl PhysicsParams {
    pub fn new(gamma: f64, epsilon: f64, length: f64) -> Result<Self> {
        let params = Self {
            gamma,
            epsilon,
            length,
            potential: Potential::Free,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("gamma", self.gamma)?;
        positive("epsilon", self.epsilon)?;
        positive("length", self.length)
    }

    /// Width √ε/γ of the region where boundary layers live.
    pub fn layer_width(&self) -> f64 {
        self.epsilon.sqrt() / self.gamma
    }

    /// Diffusion coefficient ε/γ of the Smoluchowski limit.
    pub fn diffusivity(&self) -> f64 {
        self.epsilon / self.gamma
    }

    /// Checks the explicit-scheme stability condition γ·dt < 1.
    pub fn check_step(&self, dt: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive and finite, got {dt}")));
        }
        if self.gamma * dt >= 1.0 {
            return Err(Error::Config(format!(
                "gamma*dt = {} must be below 1",
                self.gamma * dt
            )));
        }
        Ok(())
    }
}

/// How the net flux J entering the injection rates is determined.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FluxMode {
    ZeroFlux,
    #[default]
    AnalyticFlux,
    FixedFlux(f64),
}

impl fmt::Display for FluxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxMode::ZeroFlux => write!(f, "zero"),
            FluxMode::AnalyticFlux => write!(f, "analytic"),
            FluxMode::FixedFlux(v) => write!(f, "fixed:{v}"),
        }
    }
}

impl FromStr for FluxMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "zero" => Ok(FluxMode::ZeroFlux),
            "analytic" => Ok(FluxMode::AnalyticFlux),
            other => match other.strip_prefix("fixed:") {
                Some(v) => v
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(FluxMode::FixedFlux)
                    .ok_or_else(|| format!("bad fixed flux value {v:?}")),
                None => Err(format!(
                    "unknown flux mode {other:?}; expected zero, analytic or fixed:<value>"
                )),
            },
        }
    }
}

/// Bath concentrations at the two interfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathConditions {
    pub c_left: f64,
    pub c_right: f64,
    #[serde(default)]
    pub flux_mode: FluxMode,
}

impl Default for BathConditions {
    fn default() -> Self {
        Self {
            c_left: 1.0,
            c_right: 0.0,
            flux_mode: FluxMode::AnalyticFlux,
        }
    }
}

impl BathConditions {
    pub fn new(c_left: f64, c_right: f64, flux_mode: FluxMode) -> Result<Self> {
        let bath = Self {
            c_left,
            c_right,
            flux_mode,
        };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("c_left", self.c_left), ("c_right", self.c_right)] {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {c}")));
            }
        }
        if self.c_left + self.c_right <= 0.0 {
            return Err(Error::Config("at least one bath concentration must be positive".into()));
        }
        Ok(())
    }

    pub fn concentration(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.c_left,
            Side::Right => self.c_right,
        }
    }

    /// The same baths with the sides exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            c_left: self.c_right,
            c_right: self.c_left,
            flux_mode: self.flux_mode,
        }
    }
}

/// One of the two bath interfaces. Right-side quantities are the mirror
/// image `x → L − x`, `v → −v` of the left-side ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    /// +1 for the left interface (inward is +x), −1 for the right.
    pub fn inward(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    /// Maps a left-side position (measured inward from x = 0) onto this side.
    pub fn place(self, depth: f64, length: f64) -> f64 {
        match self {
            Side::Left => depth,
            Side::Right => length - depth,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(format!("unknown side {other:?}")),
        }
    }
}
