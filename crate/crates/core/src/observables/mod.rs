//! Concentration profiles, boundary-layer diagnostics and velocity
//! goodness-of-fit derived from [`RawStats`].

pub mod gof;

use serde::{Deserialize, Serialize};

use crate::analytic::InterfaceVelocityLaw;
use crate::engine::{InteriorFit, RawStats, SimConfig};
use crate::error::{Error, Result};
use crate::injection::resolve_flux;
use crate::params::{BathConditions, FluxMode, PhysicsParams, Side};

pub use gof::{chi_square_1d, chi_square_2d, ks_test, ks_two_sample, GofResult, Grid2D, TestKind};

/// Binned concentration on a uniform partition of `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationProfile {
    pub bin_centers: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Standard error of each bin's residual against the interior
    /// least-squares line, including the uncertainty of the line itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_std_errors: Option<Vec<f64>>,
}

impl ConcentrationProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bin_width(&self) -> f64 {
        match self.bin_centers.as_slice() {
            [a, b, ..] => b - a,
            [a] => 2.0 * a,
            [] => 0.0,
        }
    }

    /// `∫ c dx` by the midpoint rule, with its standard error assuming
    /// independent bins.
    pub fn integral(&self) -> (f64, f64) {
        let w = self.bin_width();
        let total = w * self.values.iter().sum::<f64>();
        let se = w * self.std_errors.iter().map(|s| s * s).sum::<f64>().sqrt();
        (total, se)
    }

    /// Same profile with values and errors multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            bin_centers: self.bin_centers.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            std_errors: self.std_errors.iter().map(|v| v * factor).collect(),
            residual_std_errors: self
                .residual_std_errors
                .as_ref()
                .map(|r| r.iter().map(|v| v * factor).collect()),
        }
    }
}

/// Turns residence times into concentrations `c = occupancy / (w T)`.
///
/// Standard errors come from the between-trajectory variance of the
/// occupancy (sequential runs) or from batch means over the measurement
/// blocks (ensemble runs).
pub fn normalize_profile(stats: &RawStats, config: &SimConfig) -> Result<ConcentrationProfile> {
    let t = stats.total_injection_time;
    if !(t > 0.0) {
        return Err(Error::Statistics("empty stats: no time base".into()));
    }
    if stats.bins != config.bins {
        return Err(Error::Statistics(format!(
            "stats have {} bins but the config has {}",
            stats.bins, config.bins
        )));
    }
    let w = config.bin_width();
    let bin_centers: Vec<f64> = (0..stats.bins).map(|i| (i as f64 + 0.5) * w).collect();
    let values: Vec<f64> = stats.occupancy.iter().map(|o| o / (w * t)).collect();
    let fit = InteriorFit::new(&bin_centers, config.params.length);
    if fit.indices.len() < 2 || !(fit.sxx > 0.0) {
        return Err(Error::Statistics("interior window holds fewer than two bins".into()));
    }
    let m = fit.indices.len() as f64;
    let offset = |i: usize| bin_centers[i] - fit.mean_x;
    let (std_errors, residual_std_errors) = if stats.is_ensemble() {
        let b = stats.block_occupancy.len() as f64;
        let block_t = t / b;
        let block_values: Vec<Vec<f64>> = stats
            .block_occupancy
            .iter()
            .map(|blk| blk.iter().map(|o| o / (w * block_t)).collect())
            .collect();
        let block_residuals: Vec<Vec<f64>> = block_values
            .iter()
            .map(|c| {
                let s0: f64 = fit.indices.iter().map(|&j| c[j]).sum();
                let s1: f64 = fit.indices.iter().map(|&j| offset(j) * c[j]).sum();
                (0..stats.bins).map(|i| c[i] - s0 / m - offset(i) * s1 / fit.sxx).collect()
            })
            .collect();
        let batch_se = |series: &dyn Fn(usize) -> f64| {
            let xs: Vec<f64> = (0..block_values.len()).map(series).collect();
            let mean = xs.iter().sum::<f64>() / b;
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1.0) / b).sqrt()
        };
        let se = (0..stats.bins).map(|i| batch_se(&|k| block_values[k][i])).collect();
        let rse = (0..stats.bins).map(|i| batch_se(&|k| block_residuals[k][i])).collect();
        (se, rse)
    } else {
        let n = stats.trajectories as f64;
        if n < 2.0 {
            return Err(Error::Statistics("need at least two completed trajectories".into()));
        }
        let scale = n.sqrt() / (w * t);
        let se_of = |sum: f64, sum_sq: f64| (((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)).sqrt() * scale;
        let se = (0..stats.bins)
            .map(|i| se_of(stats.occupancy[i], stats.occupancy_sq[i]))
            .collect();
        let f = &stats.fit;
        let rse = (0..stats.bins)
            .map(|i| {
                let (a, d) = (1.0 / m, offset(i) / fit.sxx);
                let sum = stats.occupancy[i] - a * f.s0 - d * f.s1;
                let sum_sq = stats.occupancy_sq[i] + a * a * f.s00 + d * d * f.s11 + 2.0 * a * d * f.s01
                    - 2.0 * a * f.occ_s0[i]
                    - 2.0 * d * f.occ_s1[i];
                se_of(sum, sum_sq)
            })
            .collect();
        (se, rse)
    };
    Ok(ConcentrationProfile {
        bin_centers,
        values,
        std_errors,
        residual_std_errors: Some(residual_std_errors),
    })
}

/// Interior window of the layer diagnostic, as fractions of L.
pub const INTERIOR_WINDOW: (f64, f64) = (0.1, 0.9);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    /// √ε/γ
    pub layer_width: f64,
    /// `(slope, intercept)` of the least-squares line on the interior window.
    pub interior_fit: (f64, f64),
    /// Largest `|measured − extrapolated fit| / σ` over bins centered in
    /// `x < layer_width`, where σ is the standard error of that difference
    /// (the per-bin error when the profile carries no residual errors).
    pub layer_deviation: f64,
    /// The same maximum normalized by the per-bin standard error alone.
    pub bin_se_deviation: f64,
    /// Sign of the mean residual in the layer.
    pub systematic_sign: i8,
    pub layer_bins: usize,
}

/// Unweighted least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return Err(Error::Statistics("need at least two points to fit a line".into()));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Statistics("degenerate fit: zero variance in x".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Compares the bins inside the left boundary layer with the straight
/// line fitted to the interior of the profile.
pub fn boundary_layer_metric(profile: &ConcentrationProfile, params: &PhysicsParams) -> Result<LayerReport> {
    let layer_width = params.layer_width();
    let (lo, hi) = (INTERIOR_WINDOW.0 * params.length, INTERIOR_WINDOW.1 * params.length);
    let (xs, ys): (Vec<f64>, Vec<f64>) = profile
        .bin_centers
        .iter()
        .zip(&profile.values)
        .filter(|(x, _)| (lo..=hi).contains(*x))
        .map(|(x, y)| (*x, *y))
        .unzip();
    let (slope, intercept) = linear_fit(&xs, &ys)?;

    let layer: Vec<usize> = (0..profile.len())
        .filter(|&i| profile.bin_centers[i] < layer_width)
        .collect();
    if layer.len() < 3 {
        return Err(Error::Statistics(format!(
            "only {} bins inside the layer x < {layer_width}; refine the grid",
            layer.len()
        )));
    }
    let z = |r: f64, se: f64| {
        if se > 0.0 {
            r.abs() / se
        } else if r == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let (mut deviation, mut bin_se_deviation) = (0.0f64, 0.0f64);
    let mut residual_sum = 0.0;
    for &i in &layer {
        let r = profile.values[i] - (intercept + slope * profile.bin_centers[i]);
        residual_sum += r;
        let se = profile.residual_std_errors.as_ref().map_or(profile.std_errors[i], |v| v[i]);
        deviation = deviation.max(z(r, se));
        bin_se_deviation = bin_se_deviation.max(z(r, profile.std_errors[i]));
    }
    let systematic_sign = if residual_sum > 0.0 {
        1
    } else if residual_sum < 0.0 {
        -1
    } else {
        0
    };
    Ok(LayerReport {
        layer_width,
        interior_fit: (slope, intercept),
        layer_deviation: deviation,
        bin_se_deviation,
        systematic_sign,
        layer_bins: layer.len(),
    })
}

/// Minimum strip sample count for [`strip_velocity_gof`].
pub const MIN_STRIP_SAMPLES: usize = 10_000;

/// KS test of the inward velocities sampled in an interface strip
/// against the flux-corrected interface law, with the net flux taken
/// from the Smoluchowski solution.
pub fn strip_velocity_gof(stats: &RawStats, side: Side, bath: &BathConditions, params: &PhysicsParams) -> Result<GofResult> {
    let analytic = BathConditions {
        flux_mode: FluxMode::AnalyticFlux,
        ..*bath
    };
    let flux = resolve_flux(&analytic, params)?;
    strip_velocity_gof_with_flux(&stats.velocity_samples[side.index()], side, bath, flux, params.epsilon)
}

/// [`strip_velocity_gof`] on explicit samples and flux.
pub fn strip_velocity_gof_with_flux(
    samples: &[f64],
    side: Side,
    bath: &BathConditions,
    flux: f64,
    epsilon: f64,
) -> Result<GofResult> {
    if samples.len() < MIN_STRIP_SAMPLES {
        return Err(Error::Statistics(format!(
            "{} strip samples, need at least {MIN_STRIP_SAMPLES}",
            samples.len()
        )));
    }
    let law = InterfaceVelocityLaw::new(side, bath, flux, epsilon)?;
    let speeds: Vec<f64> = samples.iter().map(|v| v * side.inward()).collect();
    ks_test(&speeds, |u| law.inward_speed_cdf(u))
}
