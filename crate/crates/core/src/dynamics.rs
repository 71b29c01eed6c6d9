//! Explicit Euler–Maruyama discretization of the 1D Langevin equation
//!
//! ```text
//! x ← x + v·dt
//! v ← v(1 − γ dt) − Φ′(x) dt + √(2εγ dt)·Z
//! ```
//!
//! with the force evaluated at the pre-step position and exits detected
//! at step granularity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ForceField, PhysicsParams, Side};
use crate::rng::RandomStream;

/// A phase-space point. Positions outside `[0, L]` are legal until the
/// step that produced them has been classified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub x: f64,
    pub v: f64,
}

impl ParticleState {
    pub fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }
}

/// Where a step left the particle. The carried state is the post-step point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    InDomain(ParticleState),
    ExitLeft(ParticleState),
    ExitRight(ParticleState),
}

impl StepOutcome {
    /// Landing exactly on `0` or `L` counts as inside.
    pub fn classify(state: ParticleState, length: f64) -> Self {
        if state.x < 0.0 {
            StepOutcome::ExitLeft(state)
        } else if state.x > length {
            StepOutcome::ExitRight(state)
        } else {
            StepOutcome::InDomain(state)
        }
    }

    pub fn state(&self) -> ParticleState {
        match *self {
            StepOutcome::InDomain(s) | StepOutcome::ExitLeft(s) | StepOutcome::ExitRight(s) => s,
        }
    }

    pub fn exit_side(&self) -> Option<Side> {
        match self {
            StepOutcome::InDomain(_) => None,
            StepOutcome::ExitLeft(_) => Some(Side::Left),
            StepOutcome::ExitRight(_) => Some(Side::Right),
        }
    }
}

/// Precomputed step coefficients for fixed `(params, dt)`.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    params: PhysicsParams,
    dt: f64,
    damping: f64,
    noise: f64,
}

impl Integrator {
    pub fn new(params: &PhysicsParams, dt: f64) -> Result<Self> {
        params.check_step(dt)?;
        Ok(Self::unchecked(params, dt))
    }

    fn unchecked(params: &PhysicsParams, dt: f64) -> Self {
        Self {
            params: *params,
            dt,
            damping: 1.0 - params.gamma * dt,
            noise: (2.0 * params.epsilon * params.gamma * dt).sqrt(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances with a given standard normal variate `z`.
    #[inline]
    pub fn advance(&self, state: ParticleState, z: f64) -> Result<ParticleState> {
        let force = if self.params.potential.is_free() {
            0.0
        } else {
            let f = self.params.potential.derivative(state.x);
            if !f.is_finite() {
                return Err(Error::Integration(format!("force {f} at x = {}", state.x)));
            }
            f
        };
        Ok(ParticleState {
            x: state.x + state.v * self.dt,
            v: state.v * self.damping - force * self.dt + self.noise * z,
        })
    }

    #[inline]
    pub fn step(&self, state: ParticleState, rng: &mut RandomStream) -> Result<StepOutcome> {
        let next = self.advance(state, rng.normal())?;
        Ok(StepOutcome::classify(next, self.params.length))
    }
}

/// One integrator step from `state`.
pub fn step(state: ParticleState, params: &PhysicsParams, dt: f64, rng: &mut RandomStream) -> Result<StepOutcome> {
    // ε = 0 is accepted here for the noiseless limit; only the step size is checked.
    params.check_step(dt)?;
    Integrator::unchecked(params, dt).step(state, rng)
}
