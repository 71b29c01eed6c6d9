//! Boundary injection: where, with what velocity, and how often new
//! trajectories enter the domain.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{smoluchowski_flux, unidirectional_flux};
use crate::dynamics::ParticleState;
use crate::error::{Error, Result};
use crate::params::{BathConditions, FluxMode, ForceField, PhysicsParams, Side};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionProtocol {
    /// Landing point of a bath trajectory after one step.
    Residual,
    /// Exactly on the interface with a half-Maxwellian inward velocity.
    BoundaryMaxwellian,
}

impl fmt::Display for InjectionProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InjectionProtocol::Residual => "residual",
            InjectionProtocol::BoundaryMaxwellian => "boundary-maxwellian",
        })
    }
}

impl FromStr for InjectionProtocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "residual" => Ok(InjectionProtocol::Residual),
            "boundary-maxwellian" | "maxwellian" => Ok(InjectionProtocol::BoundaryMaxwellian),
            other => Err(format!(
                "unknown protocol {other:?}; expected residual or boundary-maxwellian"
            )),
        }
    }
}

/// The bath phase-space point a residual entry was stepped from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreImage {
    pub xi: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionEvent {
    pub side: Side,
    pub state: ParticleState,
    /// Only set for residual entries.
    pub pre_image: Option<PreImage>,
}

/// Residual entry from fixed variates: `u_speed`, `u_depth` in `(0, 1)`
/// and a standard normal `z`.
///
/// The bath speed is Rayleigh, `η = √(−2ε ln u_speed)`, the depth is
/// uniform on `(0, η dt)`, and the velocity takes one integrator kick
/// from the pre-image `ξ = depth − η dt` outside the domain.
pub fn residual_entry_from_variates(
    side: Side,
    params: &PhysicsParams,
    dt: f64,
    u_speed: f64,
    u_depth: f64,
    z: f64,
) -> InjectionEvent {
    let eps = params.epsilon;
    let speed = (-2.0 * eps * u_speed.ln()).sqrt();
    let depth = u_depth * speed * dt;
    let inward = side.inward();
    let xi = side.place(depth - speed * dt, params.length);
    let eta = inward * speed;
    let force = params.potential.derivative(xi);
    let v = eta * (1.0 - params.gamma * dt) - force * dt + (2.0 * eps * params.gamma * dt).sqrt() * z;
    InjectionEvent {
        side,
        state: ParticleState::new(side.place(depth, params.length), v),
        pre_image: Some(PreImage { xi, eta }),
    }
}

/// Draws a residual entry on `side`.
pub fn sample_residual_entry(side: Side, params: &PhysicsParams, dt: f64, rng: &mut RandomStream) -> InjectionEvent {
    let u_speed = rng.uniform_open();
    let u_depth = rng.uniform_open();
    let z = rng.normal();
    residual_entry_from_variates(side, params, dt, u_speed, u_depth, z)
}

/// Draws a particle exactly on the interface with velocity `|√ε Z|`
/// pointing into the domain.
pub fn sample_boundary_maxwellian(side: Side, params: &PhysicsParams, rng: &mut RandomStream) -> InjectionEvent {
    let speed = loop {
        let s = (params.epsilon.sqrt() * rng.normal()).abs();
        if s > 0.0 {
            break s;
        }
    };
    InjectionEvent {
        side,
        state: ParticleState::new(side.place(0.0, params.length), side.inward() * speed),
        pre_image: None,
    }
}

pub fn sample_entry(
    protocol: InjectionProtocol,
    side: Side,
    params: &PhysicsParams,
    dt: f64,
    rng: &mut RandomStream,
) -> InjectionEvent {
    match protocol {
        InjectionProtocol::Residual => sample_residual_entry(side, params, dt, rng),
        InjectionProtocol::BoundaryMaxwellian => sample_boundary_maxwellian(side, params, rng),
    }
}

/// Net flux used for the source strengths under `bath.flux_mode`.
pub fn resolve_flux(bath: &BathConditions, params: &PhysicsParams) -> Result<f64> {
    match bath.flux_mode {
        FluxMode::ZeroFlux => Ok(0.0),
        FluxMode::AnalyticFlux => smoluchowski_flux(params, bath),
        FluxMode::FixedFlux(j) if j.is_finite() => Ok(j),
        FluxMode::FixedFlux(j) => Err(Error::Config(format!("fixed flux {j} is not finite"))),
    }
}

/// Injection rate (particles per unit time) on `side`.
pub fn injection_rate(side: Side, bath: &BathConditions, params: &PhysicsParams) -> Result<f64> {
    bath.validate()?;
    params.validate()?;
    let j = resolve_flux(bath, params)?;
    unidirectional_flux(side, bath, j, params.epsilon)
}

/// Number of injections on one side during one step.
pub fn schedule_injections(rate: f64, dt: f64, rng: &mut RandomStream) -> u64 {
    rng.poisson(rate * dt)
}

/// Time from an injection instant to the end of its step, uniform in `(0, dt)`.
pub fn residual_subtime(dt: f64, rng: &mut RandomStream) -> f64 {
    rng.uniform_open() * dt
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fixed_draws_give_hand_values() {
        let p = PhysicsParams::default();
        let ev = residual_entry_from_variates(Side::Left, &p, 1e-4, 0.5, 0.5, 0.0);
        let pre = ev.pre_image.unwrap();
        assert_relative_eq!(pre.eta, 1.177_410_022_515_474_7, max_relative = 1e-14);
        assert_relative_eq!(ev.state.x, 5.887_050_112_577_373e-5, max_relative = 1e-14);
        assert_relative_eq!(ev.state.v, 1.165_635_922_290_32, max_relative = 1e-14);
        assert_relative_eq!(pre.xi, -5.887_050_112_577_373e-5, max_relative = 1e-12);
    }

    #[test]
    fn right_entry_mirrors_left() {
        let p = PhysicsParams::default();
        let l = residual_entry_from_variates(Side::Left, &p, 1e-4, 0.3, 0.7, 0.0);
        let r = residual_entry_from_variates(Side::Right, &p, 1e-4, 0.3, 0.7, 0.0);
        assert_relative_eq!(r.state.x, 1.0 - l.state.x, epsilon = 1e-15);
        assert_eq!(r.state.v, -l.state.v);
        assert_eq!(r.pre_image.unwrap().eta, -l.pre_image.unwrap().eta);
        assert!(r.pre_image.unwrap().xi > 1.0);
    }

    #[test]
    fn maxwellian_entries_sit_on_the_boundary() {
        let p = PhysicsParams::default();
        let mut rng = RandomStream::new(4);
        for _ in 0..1000 {
            let l = sample_boundary_maxwellian(Side::Left, &p, &mut rng);
            assert_eq!(l.state.x, 0.0);
            assert!(l.state.v > 0.0);
            let r = sample_boundary_maxwellian(Side::Right, &p, &mut rng);
            assert_eq!(r.state.x, 1.0);
            assert!(r.state.v < 0.0);
        }
    }

    #[test]
    fn rates_follow_the_flux_mode() {
        let p = PhysicsParams::default();
        let zero = BathConditions::new(1.0, 0.0, FluxMode::ZeroFlux).unwrap();
        let analytic = BathConditions::new(1.0, 0.0, FluxMode::AnalyticFlux).unwrap();
        assert_relative_eq!(injection_rate(Side::Left, &zero, &p).unwrap(), 0.398_942_280_401_432_7, max_relative = 1e-14);
        assert_relative_eq!(injection_rate(Side::Left, &analytic, &p).unwrap(), 0.393_942_280_401_432_7, max_relative = 1e-14);
        assert_eq!(injection_rate(Side::Right, &zero, &p).unwrap(), 0.0);
        let sink = BathConditions::new(1.0, 0.0, FluxMode::FixedFlux(-0.5)).unwrap();
        assert!(matches!(injection_rate(Side::Right, &sink, &p), Err(Error::Config(_))));
    }

    #[test]
    fn zero_rate_never_injects() {
        let mut rng = RandomStream::new(2);
        assert!((0..10_000).all(|_| schedule_injections(0.0, 1e-4, &mut rng) == 0));
    }

    #[test]
    fn protocol_names() {
        assert_eq!("residual".parse::<InjectionProtocol>().unwrap(), InjectionProtocol::Residual);
        assert_eq!(
            InjectionProtocol::BoundaryMaxwellian.to_string().parse::<InjectionProtocol>().unwrap(),
            InjectionProtocol::BoundaryMaxwellian
        );
        assert!("naive".parse::<InjectionProtocol>().is_err());
    }
}
