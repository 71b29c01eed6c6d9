//! Closed-form oracles: the stationary Smoluchowski profile and flux, the
//! residual entry density of injected trajectories, its small-step limit,
//! the interface velocity laws and the unidirectional fluxes.
//!
//! Everything here is a pure function of its arguments.

use std::f64::consts::PI;

use statrs::function::erf::{erf, erfc};

use crate::dynamics::ParticleState;
use crate::error::{Error, Result};
use crate::params::{BathConditions, ForceField, PhysicsParams, Side};
use crate::quadrature;

const QUAD_REL_TOL: f64 = 1e-9;

fn boltzmann_integral(params: &PhysicsParams, upper: f64) -> Result<f64> {
    let eps = params.epsilon;
    let pot = params.potential;
    let v = quadrature::integrate(|s| (pot.potential(s) / eps).exp(), 0.0, upper, QUAD_REL_TOL, 0.0)
        .map_err(|e| Error::Domain(format!("potential integral failed: {e}")))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Domain(format!("potential integral is {v}")))
    }
}

/// Net stationary flux J through the domain in the Smoluchowski limit.
///
/// `J = ε (C_L e^{Φ(0)/ε} − C_R e^{Φ(L)/ε}) / (γ ∫₀ᴸ e^{Φ(s)/ε} ds)`,
/// which is exactly `ε (C_L − C_R) / (γ L)` for a free particle.
pub fn smoluchowski_flux(params: &PhysicsParams, bath: &BathConditions) -> Result<f64> {
    params.validate()?;
    bath.validate()?;
    let (eps, gamma, len) = (params.epsilon, params.gamma, params.length);
    if params.potential.is_free() {
        return Ok(eps * (bath.c_left - bath.c_right) / (gamma * len));
    }
    let pot = params.potential;
    let left = bath.c_left * (pot.potential(0.0) / eps).exp();
    let right = bath.c_right * (pot.potential(len) / eps).exp();
    let j = eps * (left - right) / (gamma * boltzmann_integral(params, len)?);
    if j.is_finite() {
        Ok(j)
    } else {
        Err(Error::Domain("flux is not finite for this potential".into()))
    }
}

/// Stationary Smoluchowski concentration at `x ∈ [0, L]`.
pub fn smoluchowski_profile(x: f64, params: &PhysicsParams, bath: &BathConditions) -> Result<f64> {
    if !(0.0..=params.length).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, {}]", params.length)));
    }
    let j = smoluchowski_flux(params, bath)?;
    if x == 0.0 {
        return Ok(bath.c_left);
    }
    if x == params.length {
        return Ok(bath.c_right);
    }
    let (eps, gamma) = (params.epsilon, params.gamma);
    if params.potential.is_free() {
        return Ok(bath.c_left - gamma * j / eps * x);
    }
    let pot = params.potential;
    let inner = bath.c_left * (pot.potential(0.0) / eps).exp() - gamma * j / eps * boltzmann_integral(params, x)?;
    Ok((-pot.potential(x) / eps).exp() * inner)
}

/// The one-step entry law of trajectories arriving from a bath of constant
/// density, for a free particle, in coordinates measured inward from the
/// interface (depth `x ≥ 0`, inward velocity `v`).
#[derive(Debug, Clone, Copy)]
pub struct ResidualLaw {
    epsilon: f64,
    dt: f64,
    /// γ·dt
    g: f64,
    /// 1 + (γ dt)²
    spread: f64,
    /// √((1 + (γ dt)²) / (4 ε γ dt))
    sqrt_a: f64,
    /// (1 − γ dt) / (1 + (γ dt)²)
    drift: f64,
}

impl ResidualLaw {
    pub fn new(params: &PhysicsParams, dt: f64) -> Result<Self> {
        params.validate()?;
        params.check_step(dt)?;
        let g = params.gamma * dt;
        let spread = 1.0 + g * g;
        Ok(Self {
            epsilon: params.epsilon,
            dt,
            g,
            spread,
            sqrt_a: (spread / (4.0 * params.epsilon * g)).sqrt(),
            drift: (1.0 - g) / spread,
        })
    }

    fn gaussian_factor(&self, v: f64) -> f64 {
        (-v * v / (2.0 * self.epsilon * self.spread)).exp()
    }

    /// Joint density of the landing point; zero for `x < 0`.
    pub fn density(&self, x: f64, v: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let gauss = self.gaussian_factor(v);
        if gauss == 0.0 {
            return 0.0;
        }
        let arg = self.sqrt_a * (x / self.dt - v * self.drift);
        let tail = erfc(arg);
        if tail == 0.0 {
            return 0.0;
        }
        gauss * tail / (2.0 * self.epsilon * self.dt * self.spread.sqrt())
    }

    /// ∫ over `x ∈ [x0, x1]` of the joint density at fixed `v`, in closed form.
    pub fn density_x_integral(&self, x0: f64, x1: f64, v: f64) -> f64 {
        let (x0, x1) = (x0.max(0.0), x1.max(0.0));
        if x1 <= x0 {
            return 0.0;
        }
        // Antiderivative of erfc: u erfc(u) − e^{−u²}/√π.
        let anti = |u: f64| u * erfc(u) - (-u * u).exp() / PI.sqrt();
        let u = |x: f64| self.sqrt_a * (x / self.dt - v * self.drift);
        let jac = self.dt / self.sqrt_a;
        let gauss = self.gaussian_factor(v);
        gauss * jac * (anti(u(x1)) - anti(u(x0))) / (2.0 * self.epsilon * self.dt * self.spread.sqrt())
    }

    /// Velocity marginal: the joint density integrated over all depths.
    ///
    /// Equals `e^{−v²/2ε(1+g²)} F(c) / (2ε √(1+g²) √A)` with
    /// `F(c) = c (1 + erf c) + e^{−c²}/√π` and `c = √A · v (1−g)/(1+g²)`;
    /// this tends to the flux-weighted (Rayleigh) law as `dt → 0`.
    pub fn velocity_marginal(&self, v: f64) -> f64 {
        let c = self.sqrt_a * v * self.drift;
        let f = c * (1.0 + erf(c)) + (-c * c).exp() / PI.sqrt();
        self.gaussian_factor(v) * f / (2.0 * self.epsilon * self.spread.sqrt() * self.sqrt_a)
    }

    /// Conditional velocity law at the interface itself (`x → 0⁺`),
    /// normalized over all velocities.
    ///
    /// This is a skew-normal law `e^{−v²/2s²}(1 + erf(kv)) / (√(2π) s)`
    /// with `s² = ε(1 + g²)`; as `dt → 0` it converges to the half-Maxwellian.
    pub fn entry_velocity_density(&self, v: f64) -> f64 {
        let s = (self.epsilon * self.spread).sqrt();
        self.gaussian_factor(v) * (1.0 + erf(self.sqrt_a * self.drift * v)) / ((2.0 * PI).sqrt() * s)
    }

    /// Mean of the velocity marginal, `(1 − g) √(π ε / 2)`.
    pub fn velocity_mean(&self) -> f64 {
        (1.0 - self.g) * (PI * self.epsilon / 2.0).sqrt()
    }

    /// Second moment of the velocity marginal, `2ε(1 − g)² + 2εg`.
    pub fn velocity_second_moment(&self) -> f64 {
        2.0 * self.epsilon * ((1.0 - self.g).powi(2) + self.g)
    }

    /// Largest depth with non-negligible density for inward speeds up to
    /// `v_max`.
    pub fn depth_scale(&self, v_max: f64) -> f64 {
        v_max * self.dt
    }
}

/// Residual landing density at depth `x ≥ 0` from the interface with
/// inward velocity `v`, for a free particle stepped with `dt`.
pub fn residual_density(x: f64, v: f64, params: &PhysicsParams, dt: f64) -> Result<f64> {
    Ok(ResidualLaw::new(params, dt)?.density(x, v))
}

/// Velocity law of residual entries at the interface, normalized on ℝ.
pub fn entry_velocity_density(v: f64, params: &PhysicsParams, dt: f64) -> Result<f64> {
    Ok(ResidualLaw::new(params, dt)?.entry_velocity_density(v))
}

/// Half-Maxwellian `2 e^{−v²/2ε} / √(2πε)` on `v > 0`.
pub fn limiting_velocity_density(v: f64, epsilon: f64) -> f64 {
    if v < 0.0 {
        return 0.0;
    }
    2.0 * (-v * v / (2.0 * epsilon)).exp() / (2.0 * PI * epsilon).sqrt()
}

/// CDF of [`limiting_velocity_density`].
pub fn limiting_velocity_cdf(v: f64, epsilon: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        erf(v / (2.0 * epsilon).sqrt())
    }
}

/// Flux-corrected velocity law of particles at an interface moving into
/// the domain.
#[derive(Debug, Clone, Copy)]
pub struct InterfaceVelocityLaw {
    side: Side,
    epsilon: f64,
    /// J / C, the flux tilt relative to the bath concentration.
    tilt: f64,
    norm: f64,
}

impl InterfaceVelocityLaw {
    pub fn new(side: Side, bath: &BathConditions, flux: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        let c = bath.concentration(side);
        if !(c > 0.0) {
            return Err(Error::Domain(format!(
                "interface velocity law undefined for an empty {side} bath"
            )));
        }
        let tilt = flux / c;
        let norm = 0.5 + tilt / (2.0 * PI * epsilon).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain(format!(
                "flux {flux} too large relative to concentration {c}: normalization {norm} <= 0"
            )));
        }
        Ok(Self {
            side,
            epsilon,
            tilt,
            norm,
        })
    }

    /// Density in the inward speed `u = |v| > 0`.
    fn speed_density(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        let maxwell = (-u * u / (2.0 * self.epsilon)).exp() / (2.0 * PI * self.epsilon).sqrt();
        // The tilt can only go negative far in the tail for J/C < 0.
        (maxwell * (1.0 + self.tilt * u / self.epsilon)).max(0.0) / self.norm
    }

    fn speed_cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let phi0 = 1.0 / (2.0 * PI * self.epsilon).sqrt();
        let phi = phi0 * (-u * u / (2.0 * self.epsilon)).exp();
        let half_gauss = 0.5 * erf(u / (2.0 * self.epsilon).sqrt());
        ((half_gauss + self.tilt * (phi0 - phi)) / self.norm).clamp(0.0, 1.0)
    }

    /// Density in the velocity `v`; zero on the outward half-line.
    pub fn density(&self, v: f64) -> f64 {
        self.speed_density(v * self.side.inward())
    }

    /// Probability of an inward speed at most `u`.
    pub fn inward_speed_cdf(&self, u: f64) -> f64 {
        self.speed_cdf(u)
    }
}

/// Density `p_L(v)` (left, `v > 0`) or `p_R(v)` (right, `v < 0`) of
/// velocities of particles crossing the interface into the domain.
pub fn interface_velocity_density(
    v: f64,
    side: Side,
    bath: &BathConditions,
    flux: f64,
    epsilon: f64,
) -> Result<f64> {
    Ok(InterfaceVelocityLaw::new(side, bath, flux, epsilon)?.density(v))
}

/// Source strength of an interface: `√(ε/2π) C_L − J/2` on the left,
/// `√(ε/2π) C_R + J/2` on the right.
///
/// A zero rate (empty bath, no flux correction) is allowed; a negative
/// one means the interface would have to absorb and is rejected.
pub fn unidirectional_flux(side: Side, bath: &BathConditions, flux: f64, epsilon: f64) -> Result<f64> {
    let base = (epsilon / (2.0 * PI)).sqrt() * bath.concentration(side);
    let rate = match side {
        Side::Left => base - 0.5 * flux,
        Side::Right => base + 0.5 * flux,
    };
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::Config(format!(
            "{side} unidirectional flux {rate} is negative: the interface would be a pure sink"
        )));
    }
    Ok(rate)
}

/// Moments of the one-step transition law from `state`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelStats {
    pub next_x: f64,
    pub mean_v: f64,
    pub var_v: f64,
}

pub fn one_step_kernel_stats(state: ParticleState, params: &PhysicsParams, dt: f64) -> KernelStats {
    KernelStats {
        next_x: state.x + state.v * dt,
        mean_v: state.v * (1.0 - params.gamma * dt) - params.potential.derivative(state.x) * dt,
        var_v: 2.0 * params.epsilon * params.gamma * dt,
    }
}
