use approx::assert_relative_eq;
use langevin_baths::analytic::{
    entry_velocity_density, interface_velocity_density, limiting_velocity_density, one_step_kernel_stats,
    residual_density, smoluchowski_flux, smoluchowski_profile, unidirectional_flux, InterfaceVelocityLaw,
    ResidualLaw,
};
use langevin_baths::dynamics::ParticleState;
use langevin_baths::quadrature::{integrate, integrate_pieces};
use langevin_baths::{BathConditions, FluxMode, PhysicsParams, Potential, Side};
use proptest::prelude::*;

fn paper() -> PhysicsParams {
    PhysicsParams::default()
}

fn bath(c_left: f64, c_right: f64) -> BathConditions {
    BathConditions::new(c_left, c_right, FluxMode::AnalyticFlux).unwrap()
}

const SQRT_1_2PI: f64 = 0.398_942_280_401_432_7;

#[test]
fn flux_closed_form_and_linear_potential() {
    assert_relative_eq!(smoluchowski_flux(&paper(), &bath(1.0, 0.0)).unwrap(), 0.01, max_relative = 1e-14);
    assert_eq!(smoluchowski_flux(&paper(), &bath(0.7, 0.7)).unwrap(), 0.0);
    let tilted = paper().with_potential(Potential::Linear { slope: 1.0 });
    let expected = 1.0 / (100.0 * (std::f64::consts::E - 1.0));
    assert_relative_eq!(smoluchowski_flux(&tilted, &bath(1.0, 0.0)).unwrap(), expected, max_relative = 1e-9);
}

#[test]
fn profile_examples() {
    assert_relative_eq!(smoluchowski_profile(0.5, &paper(), &bath(1.0, 0.0)).unwrap(), 0.5, epsilon = 1e-14);
    assert_relative_eq!(smoluchowski_profile(0.25, &paper(), &bath(2.0, 1.0)).unwrap(), 1.75, epsilon = 1e-14);
    let harmonic = paper().with_potential(Potential::Harmonic {
        stiffness: 3.0,
        center: 0.4,
    });
    assert_eq!(smoluchowski_profile(0.0, &harmonic, &bath(2.5, 0.5)).unwrap(), 2.5);
    assert_eq!(smoluchowski_profile(1.0, &harmonic, &bath(2.5, 0.5)).unwrap(), 0.5);
    assert!(smoluchowski_profile(1.5, &paper(), &bath(1.0, 0.0)).is_err());
}

#[test]
fn non_free_profile_solves_the_flux_equation() {
    // J = −(ε c' + c Φ') / γ must be constant along the channel.
    let p = paper().with_potential(Potential::Harmonic {
        stiffness: 2.0,
        center: 0.3,
    });
    let b = bath(1.0, 0.2);
    let j = smoluchowski_flux(&p, &b).unwrap();
    let h = 1e-5;
    for &x in &[0.1, 0.35, 0.6, 0.9] {
        let c = smoluchowski_profile(x, &p, &b).unwrap();
        let dc = (smoluchowski_profile(x + h, &p, &b).unwrap() - smoluchowski_profile(x - h, &p, &b).unwrap()) / (2.0 * h);
        let local = -(p.epsilon * dc + c * 2.0 * (x - 0.3)) / p.gamma;
        assert_relative_eq!(local, j, max_relative = 1e-6);
    }
}

#[test]
fn residual_density_high_precision_values() {
    let p = paper();
    assert_relative_eq!(residual_density(0.0, 1.0, &p, 1e-4).unwrap(), 6065.306_581_957_327, max_relative = 1e-12);
    assert_relative_eq!(residual_density(5e-5, 0.5, &p, 1e-4).unwrap(), 4286.638_131_621_965, max_relative = 1e-10);
    let far = residual_density(10.0, 0.0, &p, 1e-4).unwrap();
    assert_eq!(far, 0.0);
    assert_eq!(residual_density(-1e-6, 1.0, &p, 1e-4).unwrap(), 0.0);
}

/// Nested adaptive quadrature of the joint density over x ≥ 0 and all v.
fn joint_mass(dt: f64) -> f64 {
    let law = ResidualLaw::new(&paper(), dt).unwrap();
    let inner = |v: f64| {
        let x_max = dt * (v.max(0.0) + 2.0) * 3.0;
        let breaks: Vec<f64> = (0..=16).map(|k| x_max * k as f64 / 16.0).collect();
        integrate_pieces(|x| law.density(x, v), &breaks, 1e-11, 0.0).unwrap()
    };
    let breaks: Vec<f64> = (0..=24).map(|k| -4.0 + 0.5 * k as f64).collect();
    integrate_pieces(inner, &breaks, 1e-10, 0.0).unwrap()
}

#[test]
fn residual_density_is_normalized() {
    for dt in [1e-3, 1e-4, 1e-5] {
        let m = joint_mass(dt);
        assert!((m - 1.0).abs() < 1e-6, "dt={dt}: mass {m}");
    }
}

#[test]
fn velocity_marginal_matches_depth_quadrature() {
    for dt in [1e-3, 1e-4] {
        let law = ResidualLaw::new(&paper(), dt).unwrap();
        for v in [-0.3f64, 0.0, 0.4, 1.0, 2.2, 3.5] {
            let x_max = dt * (v.max(0.0) + 2.0) * 3.0;
            let breaks: Vec<f64> = (0..=16).map(|k| x_max * k as f64 / 16.0).collect();
            let q = integrate_pieces(|x| law.density(x, v), &breaks, 1e-12, 0.0).unwrap();
            assert_relative_eq!(law.velocity_marginal(v), q, max_relative = 1e-6);
        }
        let mean = integrate(|v| v * law.velocity_marginal(v), -4.0, 8.0, 1e-11, 0.0).unwrap();
        let second = integrate(|v| v * v * law.velocity_marginal(v), -4.0, 8.0, 1e-11, 0.0).unwrap();
        assert_relative_eq!(mean, law.velocity_mean(), max_relative = 1e-8);
        assert_relative_eq!(second, law.velocity_second_moment(), max_relative = 1e-8);
    }
}

#[test]
fn velocity_marginal_is_not_gaussian() {
    // Flux weighting: the landing velocity law is skewed towards the
    // interior and concentrates near the Rayleigh law, not a centered Gaussian.
    let dt = 1e-4;
    let law = ResidualLaw::new(&paper(), dt).unwrap();
    let s2 = 1.0 + (100.0 * dt) * (100.0f64 * dt);
    let gauss = |v: f64| (-v * v / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
    assert!((law.velocity_marginal(0.0) - gauss(0.0)).abs() > 0.1);
    assert!(law.velocity_mean() > 1.2);
}

/// Total variation distance on v > 0 after renormalizing `p` there.
fn tv_half_line(p: impl Fn(f64) -> f64) -> f64 {
    let breaks: Vec<f64> = (0..=40).map(|k| 0.25 * k as f64).collect();
    let mass = integrate_pieces(&p, &breaks, 1e-12, 0.0).unwrap();
    0.5 * integrate_pieces(|v| (p(v) / mass - limiting_velocity_density(v, 1.0)).abs(), &breaks, 1e-10, 1e-14).unwrap()
}

#[test]
fn entry_law_converges_to_half_maxwellian() {
    let tv: Vec<f64> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&dt| tv_half_line(|v| entry_velocity_density(v, &paper(), dt).unwrap()))
        .collect();
    let expected = [0.0788, 0.0361, 0.0131];
    for (t, e) in tv.iter().zip(expected) {
        assert!((t - e).abs() < 5e-4, "tv {t} vs {e}");
    }
    assert!(tv[0] > tv[1] && tv[1] > tv[2]);
}

#[test]
fn depth_integrated_marginal_tends_to_flux_weighted_law() {
    let tv: Vec<f64> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&dt| {
            let law = ResidualLaw::new(&paper(), dt).unwrap();
            tv_half_line(|v| law.velocity_marginal(v))
        })
        .collect();
    for (t, e) in tv.iter().zip([0.266, 0.299, 0.302]) {
        assert!((t - e).abs() < 2e-3, "tv {t} vs {e}");
    }
    // Rayleigh limit: v e^{−v²/2} on v > 0.
    let law = ResidualLaw::new(&paper(), 1e-6).unwrap();
    for &v in &[0.3, 1.0, 2.0] {
        assert_relative_eq!(law.velocity_marginal(v), v * (-v * v / 2.0).exp(), max_relative = 2e-2);
    }
}

#[test]
fn limiting_density_examples() {
    assert_eq!(limiting_velocity_density(-1.0, 1.0), 0.0);
    assert_relative_eq!(limiting_velocity_density(1e-300, 1.0), 2.0 * SQRT_1_2PI, max_relative = 1e-12);
    let mass = integrate(|v| limiting_velocity_density(v, 2.0), 0.0, 40.0, 1e-12, 0.0).unwrap();
    assert_relative_eq!(mass, 1.0, epsilon = 1e-10);
}

#[test]
fn interface_law_examples() {
    let b = bath(1.0, 0.0);
    for &v in &[0.1, 0.9, 2.5] {
        assert_relative_eq!(
            interface_velocity_density(v, Side::Left, &b, 0.0, 1.0).unwrap(),
            limiting_velocity_density(v, 1.0),
            max_relative = 1e-14
        );
    }
    let at_zero = interface_velocity_density(0.0, Side::Left, &b, 0.01, 1.0).unwrap();
    assert_relative_eq!(at_zero, SQRT_1_2PI / (0.5 + 0.01 * SQRT_1_2PI), max_relative = 1e-14);
    let mass = integrate(|v| interface_velocity_density(v, Side::Left, &b, 0.01, 1.0).unwrap(), 0.0, 40.0, 1e-12, 0.0).unwrap();
    assert_relative_eq!(mass, 1.0, epsilon = 1e-6);
    assert_eq!(interface_velocity_density(-0.5, Side::Left, &b, 0.01, 1.0).unwrap(), 0.0);
    assert!(InterfaceVelocityLaw::new(Side::Right, &b, 0.01, 1.0).is_err());
    let law = InterfaceVelocityLaw::new(Side::Left, &b, 0.01, 1.0).unwrap();
    assert_eq!(law.inward_speed_cdf(0.0), 0.0);
    assert_relative_eq!(law.inward_speed_cdf(40.0), 1.0, epsilon = 1e-12);
}

#[test]
fn unidirectional_examples() {
    let b = bath(1.0, 0.0);
    assert_relative_eq!(unidirectional_flux(Side::Left, &b, 0.0, 1.0).unwrap(), 0.39894, epsilon = 5e-6);
    assert_relative_eq!(unidirectional_flux(Side::Left, &b, 0.01, 1.0).unwrap(), 0.39394, epsilon = 5e-6);
    assert_relative_eq!(unidirectional_flux(Side::Right, &b, 0.01, 1.0).unwrap(), 0.005, epsilon = 1e-15);
    assert_eq!(unidirectional_flux(Side::Right, &b, 0.0, 1.0).unwrap(), 0.0);
    assert!(unidirectional_flux(Side::Right, &b, -0.01, 1.0).is_err());
}

#[test]
fn kernel_stats_examples() {
    let k = one_step_kernel_stats(ParticleState::new(0.5, 1.0), &paper(), 1e-4);
    assert_relative_eq!(k.next_x, 0.5001, epsilon = 1e-15);
    assert_relative_eq!(k.mean_v, 0.99, epsilon = 1e-15);
    assert_relative_eq!(k.var_v, 0.02, epsilon = 1e-15);
    assert_eq!(one_step_kernel_stats(ParticleState::new(0.5, 0.0), &paper(), 1e-4).mean_v, 0.0);
    let cold = PhysicsParams {
        epsilon: 1e-12,
        ..paper()
    };
    assert!(one_step_kernel_stats(ParticleState::new(0.5, 1.0), &cold, 1e-4).var_v < 1e-12);
}

proptest! {
    #[test]
    fn free_profile_is_affine(c_left in 0.0f64..5.0, c_right in 0.0f64..5.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        prop_assume!(c_left + c_right > 0.0);
        let b = bath(c_left, c_right);
        let p = paper();
        let mid = smoluchowski_profile(0.5 * (x + y), &p, &b).unwrap();
        let avg = 0.5 * (smoluchowski_profile(x, &p, &b).unwrap() + smoluchowski_profile(y, &p, &b).unwrap());
        prop_assert!((mid - avg).abs() <= 1e-12 * (1.0 + c_left + c_right));
    }

    #[test]
    fn flux_is_antisymmetric(c_left in 0.0f64..5.0, c_right in 0.0f64..5.0, stiffness in 0.0f64..4.0) {
        prop_assume!(c_left + c_right > 0.0);
        // Any potential with Φ(0) = Φ(L) keeps the swap antisymmetric.
        let p = paper().with_potential(if stiffness == 0.0 {
            Potential::Free
        } else {
            Potential::Harmonic { stiffness, center: 0.5 }
        });
        let j = smoluchowski_flux(&p, &bath(c_left, c_right)).unwrap();
        let k = smoluchowski_flux(&p, &bath(c_right, c_left)).unwrap();
        prop_assert!((j + k).abs() <= 1e-9 * (j.abs() + 1e-12));
    }

    #[test]
    fn unidirectional_corrections_cancel(c_left in 0.5f64..5.0, c_right in 0.5f64..5.0, j in -0.1f64..0.1, eps in 0.2f64..3.0) {
        let b = bath(c_left, c_right);
        let base = (eps / (2.0 * std::f64::consts::PI)).sqrt();
        let jl = unidirectional_flux(Side::Left, &b, j, eps).unwrap();
        let jr = unidirectional_flux(Side::Right, &b, j, eps).unwrap();
        let scale = base * (c_left + c_right) + j.abs();
        prop_assert!(((jl - base * c_left) + (jr - base * c_right)).abs() <= 4.0 * f64::EPSILON * scale);
        prop_assert!(((jl + jr) - base * (c_left + c_right)).abs() < 1e-14);
    }

    #[test]
    fn densities_are_nonnegative(x in -1e-3f64..2e-3, v in -10.0f64..10.0, j in -0.05f64..0.05) {
        let p = paper();
        prop_assert!(residual_density(x, v, &p, 1e-4).unwrap() >= 0.0);
        prop_assert!(limiting_velocity_density(v, 1.0) >= 0.0);
        prop_assert!(interface_velocity_density(v, Side::Left, &bath(1.0, 0.0), j, 1.0).unwrap() >= 0.0);
    }
}
