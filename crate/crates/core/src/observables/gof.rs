//! Goodness-of-fit tests: one- and two-sample Kolmogorov–Smirnov and a
//! Pearson chi-square on a 2D grid against an integrated density.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    KS,
    ChiSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_samples: usize,
    pub test_kind: TestKind,
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form converges quickly for small λ.
        let c = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let q = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let sum = q + q.powi(9) + q.powi(25) + q.powi(49);
        return (1.0 - c * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sqrt_n = n_eff.sqrt();
    kolmogorov_sf((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)
}

fn sorted_finite(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Statistics("no samples".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Statistics("NaN sample".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// One-sample KS test of `samples` against the continuous CDF `cdf`.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<GofResult> {
    let sorted = sorted_finite(samples)?;
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    Ok(GofResult {
        statistic: d,
        p_value: ks_p_value(d, n),
        n_samples: sorted.len(),
        test_kind: TestKind::KS,
    })
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<GofResult> {
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(GofResult {
        statistic: d,
        p_value: ks_p_value(d, na * nb / (na + nb)),
        n_samples: a.len() + b.len(),
        test_kind: TestKind::KS,
    })
}

/// Uniform rectangular grid `[x_min, x_max] × [v_min, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x_range: (f64, f64),
    pub v_range: (f64, f64),
    pub nx: usize,
    pub nv: usize,
}

impl Grid2D {
    fn cell(&self, x: f64, v: f64) -> Option<usize> {
        let (x0, x1) = self.x_range;
        let (v0, v1) = self.v_range;
        if !(x >= x0 && x < x1 && v >= v0 && v < v1) {
            return None;
        }
        let i = (((x - x0) / (x1 - x0)) * self.nx as f64) as usize;
        let j = (((v - v0) / (v1 - v0)) * self.nv as f64) as usize;
        Some(i.min(self.nx - 1) * self.nv + j.min(self.nv - 1))
    }

    fn edges(range: (f64, f64), n: usize, k: usize) -> (f64, f64) {
        let w = (range.1 - range.0) / n as f64;
        (range.0 + k as f64 * w, range.0 + (k + 1) as f64 * w)
    }
}

/// Minimum expected count for a cell to stand on its own.
const MIN_EXPECTED: f64 = 5.0;

/// Probability mass of each grid cell by tensor Gauss–Legendre quadrature.
pub fn cell_masses<F: Fn(f64, f64) -> f64>(density: &F, grid: &Grid2D, order: usize) -> Vec<f64> {
    let (nodes, weights) = gauss_legendre(order);
    let mut masses = Vec::with_capacity(grid.nx * grid.nv);
    for i in 0..grid.nx {
        let (xa, xb) = Grid2D::edges(grid.x_range, grid.nx, i);
        let (xm, xh) = (0.5 * (xa + xb), 0.5 * (xb - xa));
        for j in 0..grid.nv {
            let (va, vb) = Grid2D::edges(grid.v_range, grid.nv, j);
            let (vm, vh) = (0.5 * (va + vb), 0.5 * (vb - va));
            let mut m = 0.0;
            for (xn, xw) in nodes.iter().zip(&weights) {
                for (vn, vw) in nodes.iter().zip(&weights) {
                    m += xw * vw * density(xm + xh * xn, vm + vh * vn);
                }
            }
            masses.push(m * xh * vh);
        }
    }
    masses
}

/// Pearson chi-square of 2D samples against a normalized density.
///
/// Cells with fewer than five expected counts are pooled together with
/// everything outside the grid into a single remainder cell.
pub fn chi_square_2d<F: Fn(f64, f64) -> f64>(samples: &[(f64, f64)], density: F, grid: &Grid2D) -> Result<GofResult> {
    if samples.is_empty() {
        return Err(Error::Statistics("no samples".into()));
    }
    if grid.nx == 0 || grid.nv == 0 || !(grid.x_range.1 > grid.x_range.0) || !(grid.v_range.1 > grid.v_range.0) {
        return Err(Error::Statistics("degenerate grid".into()));
    }
    let n = samples.len() as f64;
    let masses = cell_masses(&density, grid, 8);
    let mut observed = vec![0u64; masses.len()];
    let mut outside = 0u64;
    for &(x, v) in samples {
        match grid.cell(x, v) {
            Some(c) => observed[c] += 1,
            None => outside += 1,
        }
    }
    let cells = masses
        .iter()
        .zip(&observed)
        .map(|(&m, &o)| (o as f64, n * m))
        .chain(std::iter::once((outside as f64, n * (1.0 - masses.iter().sum::<f64>()).max(0.0))));
    pearson(cells, samples.len())
}

/// Pearson statistic over `(observed, expected)` cells. Cells expecting
/// fewer than five counts are pooled; a pool that is still too small is
/// merged into the smallest retained cell.
fn pearson(cells: impl Iterator<Item = (f64, f64)>, n_samples: usize) -> Result<GofResult> {
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (o, e) in cells {
        if e >= MIN_EXPECTED {
            kept.push((o, e));
        } else {
            pool_o += o;
            pool_e += e;
        }
    }
    if pool_e >= MIN_EXPECTED {
        kept.push((pool_o, pool_e));
    } else if pool_o > 0.0 || pool_e > 0.0 {
        if let Some(smallest) = kept.iter_mut().min_by(|a, b| a.1.total_cmp(&b.1)) {
            smallest.0 += pool_o;
            smallest.1 += pool_e;
        }
    }
    if kept.len() < 2 {
        return Err(Error::Statistics(format!("only {} usable cells", kept.len())));
    }
    let chi2: f64 = kept.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = (kept.len() - 1) as f64;
    let p = ChiSquared::new(df).map(|d| d.sf(chi2)).unwrap_or(0.0);
    Ok(GofResult {
        statistic: chi2,
        p_value: p.clamp(0.0, 1.0),
        n_samples,
        test_kind: TestKind::ChiSquare,
    })
}

/// Pearson chi-square of 1D samples on fixed bin edges against a CDF; the
/// two tails outside the edges are extra cells.
pub fn chi_square_1d<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, edges: &[f64]) -> Result<GofResult> {
    if samples.is_empty() || edges.len() < 2 {
        return Err(Error::Statistics("need samples and at least one bin".into()));
    }
    let n = samples.len() as f64;
    let mut observed = vec![0u64; edges.len() + 1];
    for &x in samples {
        let k = edges.partition_point(|&e| e <= x);
        observed[k] += 1;
    }
    let mut probs = Vec::with_capacity(edges.len() + 1);
    probs.push(cdf(edges[0]));
    for w in edges.windows(2) {
        probs.push(cdf(w[1]) - cdf(w[0]));
    }
    probs.push(1.0 - cdf(edges[edges.len() - 1]));
    let cells = probs.iter().zip(&observed).map(|(&p, &o)| (o as f64, n * p));
    pearson(cells, samples.len())
}
