//! Trajectory orchestration: injection, stepping until exit, and raw
//! occupancy/velocity/crossing statistics.
//!
//! Two realizations of the same stationary process are provided. In
//! sequential mode independent trajectories are run one after another and
//! the stationary density is rebuilt from their occupancy times at the
//! correct arrival rate. In ensemble mode a particle pool evolves in time
//! with Poisson arrivals on both sides.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Integrator, ParticleState, StepOutcome};
use crate::error::{Error, Result};
use crate::injection::{injection_rate, residual_subtime, sample_entry, schedule_injections, InjectionProtocol};
use crate::params::{BathConditions, PhysicsParams, Side};
use crate::rng::RandomStream;

/// Trajectories per work unit in sequential mode. Fixed so that the merge
/// order, and therefore every floating-point sum, is independent of the
/// number of worker threads.
const CHUNK: u64 = 64;

/// Fraction of capped trajectories above which a run is invalid.
pub const MAX_CAPPED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunMode {
    Sequential { trajectories: u64 },
    Ensemble { total_time: f64, warmup_time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: PhysicsParams,
    pub bath: BathConditions,
    pub dt: f64,
    pub protocol: InjectionProtocol,
    pub mode: RunMode,
    pub seed: u64,
    pub bins: usize,
    /// Width of the interface strips in which velocities are sampled.
    pub strip_width: f64,
    pub max_steps_per_trajectory: u64,
    /// Probability that an in-strip occupancy sample is kept as a velocity
    /// sample; thins out the strong step-to-step correlation.
    pub velocity_sample_prob: f64,
    /// Batches used for ensemble-mode error bars.
    pub blocks: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        let params = PhysicsParams::default();
        Self {
            params,
            bath: BathConditions::default(),
            dt: 1e-4,
            protocol: InjectionProtocol::Residual,
            mode: RunMode::Sequential { trajectories: 25_000 },
            seed: 1,
            bins: 100,
            strip_width: params.layer_width() / 2.0,
            max_steps_per_trajectory: 100_000_000,
            velocity_sample_prob: 0.01,
            blocks: 20,
        }
    }
}

impl SimConfig {
    /// Warmup of several diffusion times, `10 L² γ / ε`.
    pub fn default_warmup(params: &PhysicsParams) -> f64 {
        10.0 * params.length * params.length * params.gamma / params.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.bath.validate()?;
        self.params.check_step(self.dt)?;
        if self.bins < 10 {
            return Err(Error::Config(format!("bins must be at least 10, got {}", self.bins)));
        }
        if !(self.strip_width > 0.0 && self.strip_width <= self.params.length / 2.0) {
            return Err(Error::Config(format!(
                "strip_width must be in (0, L/2], got {}",
                self.strip_width
            )));
        }
        if self.max_steps_per_trajectory == 0 {
            return Err(Error::Config("max_steps_per_trajectory must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.velocity_sample_prob) {
            return Err(Error::Config(format!(
                "velocity_sample_prob must be in [0, 1], got {}",
                self.velocity_sample_prob
            )));
        }
        if self.blocks < 2 {
            return Err(Error::Config("blocks must be at least 2".into()));
        }
        if let RunMode::Ensemble { total_time, warmup_time } = self.mode {
            if !(warmup_time >= 0.0 && total_time > warmup_time && total_time.is_finite()) {
                return Err(Error::Config(format!(
                    "ensemble needs 0 <= warmup_time < total_time, got {warmup_time} and {total_time}"
                )));
            }
            if ((total_time - warmup_time) / self.dt).round() < self.blocks as f64 {
                return Err(Error::Config("measurement window shorter than one step per block".into()));
            }
        }
        for side in Side::BOTH {
            injection_rate(side, &self.bath, &self.params)?;
        }
        Ok(())
    }

    /// Injection rates `[J_L, J_R]`.
    pub fn rates(&self) -> Result<[f64; 2]> {
        let rates = [
            injection_rate(Side::Left, &self.bath, &self.params)?,
            injection_rate(Side::Right, &self.bath, &self.params)?,
        ];
        if rates[0] + rates[1] <= 0.0 {
            return Err(Error::Config("both injection rates are zero".into()));
        }
        Ok(rates)
    }

    pub fn bin_width(&self) -> f64 {
        self.params.length / self.bins as f64
    }
}

/// Raw accumulators of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RawStats {
    pub bins: usize,
    pub length: f64,
    /// Residence time per bin.
    pub occupancy: Vec<f64>,
    /// Sequential mode: sum over trajectories of squared per-trajectory residence time.
    pub occupancy_sq: Vec<f64>,
    /// Ensemble mode: residence time per bin in each measurement block.
    pub block_occupancy: Vec<Vec<f64>>,
    /// Ensemble mode: net midplane crossings in each measurement block.
    pub block_crossings: Vec<i64>,
    /// Inward velocities sampled in the left and right interface strips.
    pub velocity_samples: [Vec<f64>; 2],
    pub injected: [u64; 2],
    pub absorbed: [u64; 2],
    pub in_flight: u64,
    pub capped: u64,
    /// Completed, uncapped trajectories contributing to the occupancy (sequential).
    pub trajectories: u64,
    /// Rightward and leftward crossings of `x = L/2`.
    pub crossings: [u64; 2],
    /// Sum over trajectories of squared net midplane crossings (sequential).
    pub crossing_sq: f64,
    /// Physical time base T of the occupancy normalization.
    pub total_injection_time: f64,
    /// Time integral of the particle count over the measurement window (ensemble).
    pub pool_time_integral: f64,
    pub steps: u64,
    /// Sequential mode: moments of the interior line-fit functionals.
    pub fit: FitMoments,
}

/// Per-trajectory moments needed for the standard error of a bin's
/// residual against the interior least-squares line.
///
/// For one trajectory, `S0` is its residence time in the interior window
/// and `S1 = Σ (x_j − x̄) occ_j` over interior bins. The fitted line is
/// linear in these, so the residual of every bin is a per-trajectory sum
/// whose variance follows from the cross moments below.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitMoments {
    pub s0: f64,
    pub s1: f64,
    pub s00: f64,
    pub s01: f64,
    pub s11: f64,
    /// `Σ occ_i S0` per bin.
    pub occ_s0: Vec<f64>,
    /// `Σ occ_i S1` per bin.
    pub occ_s1: Vec<f64>,
}

impl FitMoments {
    fn empty(bins: usize) -> Self {
        Self {
            occ_s0: vec![0.0; bins],
            occ_s1: vec![0.0; bins],
            ..Self::default()
        }
    }

    fn merge(&mut self, other: &FitMoments) {
        self.s0 += other.s0;
        self.s1 += other.s1;
        self.s00 += other.s00;
        self.s01 += other.s01;
        self.s11 += other.s11;
        for (a, b) in self.occ_s0.iter_mut().zip(&other.occ_s0) {
            *a += b;
        }
        for (a, b) in self.occ_s1.iter_mut().zip(&other.occ_s1) {
            *a += b;
        }
    }
}

/// Interior fit geometry for `bins` uniform bins on `[0, length]`: the
/// indices inside the window, the mean interior center and `Σ (x − x̄)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorFit {
    pub indices: Vec<usize>,
    pub mean_x: f64,
    pub sxx: f64,
}

impl InteriorFit {
    pub fn new(bin_centers: &[f64], length: f64) -> Self {
        let (lo, hi) = (
            crate::observables::INTERIOR_WINDOW.0 * length,
            crate::observables::INTERIOR_WINDOW.1 * length,
        );
        let indices: Vec<usize> = (0..bin_centers.len())
            .filter(|&i| (lo..=hi).contains(&bin_centers[i]))
            .collect();
        let m = indices.len().max(1) as f64;
        let mean_x = indices.iter().map(|&i| bin_centers[i]).sum::<f64>() / m;
        let sxx = indices.iter().map(|&i| (bin_centers[i] - mean_x).powi(2)).sum();
        Self { indices, mean_x, sxx }
    }

    pub fn uniform(bins: usize, length: f64) -> Self {
        let w = length / bins as f64;
        let centers: Vec<f64> = (0..bins).map(|i| (i as f64 + 0.5) * w).collect();
        Self::new(&centers, length)
    }
}

impl RawStats {
    pub fn empty(bins: usize, length: f64) -> Self {
        Self {
            bins,
            length,
            occupancy: vec![0.0; bins],
            occupancy_sq: vec![0.0; bins],
            block_occupancy: Vec::new(),
            block_crossings: Vec::new(),
            velocity_samples: [Vec::new(), Vec::new()],
            injected: [0; 2],
            absorbed: [0; 2],
            in_flight: 0,
            capped: 0,
            trajectories: 0,
            crossings: [0; 2],
            crossing_sq: 0.0,
            total_injection_time: 0.0,
            pool_time_integral: 0.0,
            steps: 0,
            fit: FitMoments::empty(bins),
        }
    }

    /// Component-wise sum; `other`'s samples are appended after `self`'s.
    pub fn merge(&mut self, other: &RawStats) {
        assert_eq!(self.bins, other.bins, "cannot merge stats with different binning");
        for (a, b) in self.occupancy.iter_mut().zip(&other.occupancy) {
            *a += b;
        }
        for (a, b) in self.occupancy_sq.iter_mut().zip(&other.occupancy_sq) {
            *a += b;
        }
        for side in 0..2 {
            self.velocity_samples[side].extend_from_slice(&other.velocity_samples[side]);
            self.injected[side] += other.injected[side];
            self.absorbed[side] += other.absorbed[side];
            self.crossings[side] += other.crossings[side];
        }
        self.in_flight += other.in_flight;
        self.capped += other.capped;
        self.trajectories += other.trajectories;
        self.crossing_sq += other.crossing_sq;
        self.total_injection_time += other.total_injection_time;
        self.pool_time_integral += other.pool_time_integral;
        self.steps += other.steps;
        self.fit.merge(&other.fit);
    }

    pub fn injected_total(&self) -> u64 {
        self.injected[0] + self.injected[1]
    }

    pub fn absorbed_total(&self) -> u64 {
        self.absorbed[0] + self.absorbed[1]
    }

    /// `injected = absorbed + in_flight + capped`.
    pub fn mass_balanced(&self) -> bool {
        self.injected_total() == self.absorbed_total() + self.in_flight + self.capped
    }

    pub fn capped_fraction(&self) -> f64 {
        let n = self.injected_total();
        if n == 0 {
            0.0
        } else {
            self.capped as f64 / n as f64
        }
    }

    pub fn net_crossings(&self) -> i64 {
        self.crossings[0] as i64 - self.crossings[1] as i64
    }

    pub fn is_ensemble(&self) -> bool {
        !self.block_occupancy.is_empty()
    }

    pub fn check_valid(&self) -> Result<()> {
        if !self.mass_balanced() {
            return Err(Error::RunInvalid(format!(
                "mass balance violated: injected {} != absorbed {} + in flight {} + capped {}",
                self.injected_total(),
                self.absorbed_total(),
                self.in_flight,
                self.capped
            )));
        }
        if self.capped_fraction() >= MAX_CAPPED_FRACTION {
            return Err(Error::RunInvalid(format!(
                "{:.3}% of trajectories hit the step cap",
                100.0 * self.capped_fraction()
            )));
        }
        Ok(())
    }
}

/// Per-run constants shared by all trajectories.
struct Recorder {
    bins: usize,
    length: f64,
    inv_width: f64,
    strip: f64,
    sample_prob: f64,
    dt: f64,
    midplane: f64,
    /// `x_j − x̄` for interior bins, `None` elsewhere.
    interior_offset: Vec<Option<f64>>,
}

impl Recorder {
    fn new(config: &SimConfig) -> Self {
        Self {
            bins: config.bins,
            length: config.params.length,
            inv_width: config.bins as f64 / config.params.length,
            strip: config.strip_width,
            sample_prob: config.velocity_sample_prob,
            dt: config.dt,
            midplane: 0.5 * config.params.length,
            interior_offset: {
                let w = config.bin_width();
                let fit = InteriorFit::uniform(config.bins, config.params.length);
                let mut off = vec![None; config.bins];
                for &i in &fit.indices {
                    off[i] = Some((i as f64 + 0.5) * w - fit.mean_x);
                }
                off
            },
        }
    }

    #[inline]
    fn bin(&self, x: f64) -> usize {
        ((x * self.inv_width) as usize).min(self.bins - 1)
    }

    /// In-strip inward velocity, if the point is in one of the strips.
    #[inline]
    fn strip_side(&self, s: ParticleState) -> Option<Side> {
        if s.x <= self.strip && s.v > 0.0 {
            Some(Side::Left)
        } else if s.x >= self.length - self.strip && s.v < 0.0 {
            Some(Side::Right)
        } else {
            None
        }
    }

    #[inline]
    fn sample_velocity(&self, s: ParticleState, weight: f64, aux: &mut RandomStream, out: &mut [Vec<f64>; 2]) {
        if let Some(side) = self.strip_side(s) {
            if aux.bernoulli(self.sample_prob * weight / self.dt) {
                out[side.index()].push(s.v);
            }
        }
    }

    /// +1 for a rightward midplane crossing, −1 for leftward, else 0.
    #[inline]
    fn crossing(&self, from: f64, to: f64) -> i64 {
        match (from < self.midplane, to < self.midplane) {
            (true, false) => 1,
            (false, true) => -1,
            _ => 0,
        }
    }
}

/// Occupancy of a single trajectory, reset between trajectories.
struct TrajectoryScratch {
    occupancy: Vec<f64>,
    touched: Vec<usize>,
    velocities: [Vec<f64>; 2],
}

impl TrajectoryScratch {
    fn new(bins: usize) -> Self {
        Self {
            occupancy: vec![0.0; bins],
            touched: Vec::new(),
            velocities: [Vec::new(), Vec::new()],
        }
    }

    #[inline]
    fn add(&mut self, bin: usize, weight: f64) {
        if self.occupancy[bin] == 0.0 {
            self.touched.push(bin);
        }
        self.occupancy[bin] += weight;
    }

    fn flush_into(&mut self, stats: &mut RawStats, recorder: &Recorder, keep: bool) {
        self.touched.sort_unstable();
        if keep {
            let (mut s0, mut s1) = (0.0, 0.0);
            for &b in &self.touched {
                if let Some(d) = recorder.interior_offset[b] {
                    s0 += self.occupancy[b];
                    s1 += d * self.occupancy[b];
                }
            }
            let fit = &mut stats.fit;
            fit.s0 += s0;
            fit.s1 += s1;
            fit.s00 += s0 * s0;
            fit.s01 += s0 * s1;
            fit.s11 += s1 * s1;
            for &b in &self.touched {
                let o = self.occupancy[b];
                stats.occupancy[b] += o;
                stats.occupancy_sq[b] += o * o;
                fit.occ_s0[b] += o * s0;
                fit.occ_s1[b] += o * s1;
            }
        }
        for &b in &self.touched {
            self.occupancy[b] = 0.0;
        }
        self.touched.clear();
        for side in 0..2 {
            if keep {
                stats.velocity_samples[side].extend_from_slice(&self.velocities[side]);
            }
            self.velocities[side].clear();
        }
    }
}

/// Occupancy weight of an injected particle's first recorded point:
/// a residual entry lands at a lattice time and holds for a full step; a
/// boundary insertion happens at a uniform instant inside the step.
fn first_weight(protocol: InjectionProtocol, dt: f64, rng: &mut RandomStream) -> f64 {
    let sub = residual_subtime(dt, rng);
    match protocol {
        InjectionProtocol::Residual => dt,
        InjectionProtocol::BoundaryMaxwellian => sub,
    }
}

fn run_trajectory(
    index: u64,
    config: &SimConfig,
    integrator: &Integrator,
    recorder: &Recorder,
    left_prob: f64,
    scratch: &mut TrajectoryScratch,
    stats: &mut RawStats,
) -> Result<()> {
    let mut rng = RandomStream::substream(config.seed, index);
    let mut aux = RandomStream::aux_substream(config.seed, index);
    let side = if rng.uniform() < left_prob { Side::Left } else { Side::Right };
    stats.injected[side.index()] += 1;
    let event = sample_entry(config.protocol, side, &config.params, config.dt, &mut rng);
    let weight = first_weight(config.protocol, config.dt, &mut rng);

    let mut state = event.state;
    scratch.add(recorder.bin(state.x), weight);
    recorder.sample_velocity(state, weight, &mut aux, &mut scratch.velocities);

    let mut net = 0i64;
    let mut steps = 0u64;
    let exit = loop {
        if steps >= config.max_steps_per_trajectory {
            break None;
        }
        let outcome = integrator.step(state, &mut rng)?;
        steps += 1;
        let next = outcome.state();
        net += recorder.crossing(state.x, next.x);
        match outcome {
            StepOutcome::InDomain(s) => {
                scratch.add(recorder.bin(s.x), recorder.dt);
                recorder.sample_velocity(s, recorder.dt, &mut aux, &mut scratch.velocities);
                state = s;
            }
            StepOutcome::ExitLeft(_) => break Some(Side::Left),
            StepOutcome::ExitRight(_) => break Some(Side::Right),
        }
    };
    stats.steps += steps;
    match exit {
        Some(side) => {
            stats.absorbed[side.index()] += 1;
            stats.trajectories += 1;
            if net > 0 {
                stats.crossings[0] += net as u64;
            } else {
                stats.crossings[1] += (-net) as u64;
            }
            stats.crossing_sq += (net * net) as f64;
            scratch.flush_into(stats, recorder, true);
        }
        None => {
            stats.capped += 1;
            scratch.flush_into(stats, recorder, false);
        }
    }
    Ok(())
}

/// Runs `n` independent trajectories, each injected on a side chosen with
/// probability proportional to its injection rate.
///
/// The time base is `T = n / (J_L + J_R)`. Trajectory `k` draws from
/// stream `k` of the run seed, so the result is bit-identical for any
/// thread count.
pub fn run_sequential(config: &SimConfig) -> Result<RawStats> {
    config.validate()?;
    let RunMode::Sequential { trajectories } = config.mode else {
        return Err(Error::Config("run_sequential needs sequential mode".into()));
    };
    let rates = config.rates()?;
    let total_rate = rates[0] + rates[1];
    let left_prob = rates[0] / total_rate;
    let integrator = Integrator::new(&config.params, config.dt)?;
    let recorder = Recorder::new(config);

    let chunks = trajectories.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut stats = RawStats::empty(config.bins, config.params.length);
            let mut scratch = TrajectoryScratch::new(config.bins);
            let end = ((c + 1) * CHUNK).min(trajectories);
            for k in c * CHUNK..end {
                run_trajectory(k, config, &integrator, &recorder, left_prob, &mut scratch, &mut stats)?;
            }
            Ok(stats)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut stats = RawStats::empty(config.bins, config.params.length);
    for part in &parts {
        stats.merge(part);
    }
    stats.total_injection_time = trajectories as f64 / total_rate;
    Ok(stats)
}

struct PoolParticle {
    state: ParticleState,
    age: u64,
}

/// Evolves a particle pool with Poisson arrivals on both interfaces and
/// accumulates occupancy after the warmup.
pub fn run_ensemble(config: &SimConfig) -> Result<RawStats> {
    config.validate()?;
    let RunMode::Ensemble { total_time, warmup_time } = config.mode else {
        return Err(Error::Config("run_ensemble needs ensemble mode".into()));
    };
    let rates = [
        injection_rate(Side::Left, &config.bath, &config.params)?,
        injection_rate(Side::Right, &config.bath, &config.params)?,
    ];
    let integrator = Integrator::new(&config.params, config.dt)?;
    let recorder = Recorder::new(config);
    let dt = config.dt;
    let total_steps = (total_time / dt).round() as u64;
    let warmup_steps = (warmup_time / dt).round() as u64;
    let measured_steps = total_steps - warmup_steps;
    let blocks = config.blocks;

    let mut rng = RandomStream::substream(config.seed, 0);
    let mut aux = RandomStream::aux_substream(config.seed, 0);
    let mut stats = RawStats::empty(config.bins, config.params.length);
    stats.block_occupancy = vec![vec![0.0; config.bins]; blocks];
    stats.block_crossings = vec![0; blocks];

    let mut pool: Vec<PoolParticle> = Vec::new();
    let mut fresh: Vec<(ParticleState, f64)> = Vec::new();
    for step_index in 0..total_steps {
        let measuring = step_index >= warmup_steps;
        let block = if measuring {
            (((step_index - warmup_steps) as u128 * blocks as u128) / measured_steps as u128) as usize
        } else {
            0
        };

        let mut i = 0;
        while i < pool.len() {
            let p = &mut pool[i];
            if p.age >= config.max_steps_per_trajectory {
                stats.capped += 1;
                pool.swap_remove(i);
                continue;
            }
            let outcome = integrator.step(p.state, &mut rng)?;
            p.age += 1;
            stats.steps += 1;
            if measuring {
                let c = recorder.crossing(p.state.x, outcome.state().x);
                if c != 0 {
                    stats.crossings[if c > 0 { 0 } else { 1 }] += 1;
                    stats.block_crossings[block] += c;
                }
            }
            match outcome {
                StepOutcome::InDomain(s) => {
                    p.state = s;
                    i += 1;
                }
                StepOutcome::ExitLeft(_) | StepOutcome::ExitRight(_) => {
                    let side = outcome.exit_side().unwrap();
                    stats.absorbed[side.index()] += 1;
                    pool.swap_remove(i);
                }
            }
        }

        fresh.clear();
        for side in Side::BOTH {
            for _ in 0..schedule_injections(rates[side.index()], dt, &mut rng) {
                stats.injected[side.index()] += 1;
                let event = sample_entry(config.protocol, side, &config.params, dt, &mut rng);
                let weight = first_weight(config.protocol, dt, &mut rng);
                fresh.push((event.state, weight));
            }
        }

        if measuring {
            let occ = &mut stats.block_occupancy[block];
            for p in &pool {
                occ[recorder.bin(p.state.x)] += dt;
                recorder.sample_velocity(p.state, dt, &mut aux, &mut stats.velocity_samples);
            }
            for &(s, w) in &fresh {
                occ[recorder.bin(s.x)] += w;
                recorder.sample_velocity(s, w, &mut aux, &mut stats.velocity_samples);
            }
            stats.pool_time_integral += pool.len() as f64 * dt + fresh.iter().map(|f| f.1).sum::<f64>();
        }
        pool.extend(fresh.iter().map(|&(state, _)| PoolParticle { state, age: 0 }));
    }

    stats.in_flight = pool.len() as u64;
    for block in &stats.block_occupancy {
        for (a, b) in stats.occupancy.iter_mut().zip(block) {
            *a += b;
        }
    }
    stats.total_injection_time = measured_steps as f64 * dt;
    Ok(stats)
}

pub fn run(config: &SimConfig) -> Result<RawStats> {
    match config.mode {
        RunMode::Sequential { .. } => run_sequential(config),
        RunMode::Ensemble { .. } => run_ensemble(config),
    }
}

/// Net midplane flux and its standard error.
pub fn measured_flux(stats: &RawStats) -> Result<(f64, f64)> {
    let t = stats.total_injection_time;
    if !(t > 0.0) {
        return Err(Error::Statistics("no time base: empty run".into()));
    }
    let net = stats.net_crossings() as f64;
    let flux = net / t;
    let se = if stats.is_ensemble() {
        let b = stats.block_crossings.len() as f64;
        let per_block: Vec<f64> = stats.block_crossings.iter().map(|&c| c as f64 * b / t).collect();
        let mean = per_block.iter().sum::<f64>() / b;
        let var = per_block.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1.0);
        (var / b).sqrt()
    } else {
        let n = stats.trajectories as f64;
        if n < 2.0 {
            return Err(Error::Statistics("need at least two trajectories".into()));
        }
        let var = (stats.crossing_sq - net * net / n) / (n - 1.0);
        (n * var.max(0.0)).sqrt() / t
    };
    Ok((flux, se))
}

/// Repeats a run with the flux fixed to the previous run's measured
/// midplane flux. Returns the last run and the flux sequence used.
pub fn run_self_consistent(config: &SimConfig, iterations: usize) -> Result<(RawStats, Vec<f64>)> {
    let mut cfg = config.clone();
    let mut used = vec![crate::injection::resolve_flux(&cfg.bath, &cfg.params)?];
    let mut stats = run(&cfg)?;
    for _ in 0..iterations {
        let (j, _) = measured_flux(&stats)?;
        cfg.bath.flux_mode = crate::params::FluxMode::FixedFlux(j);
        used.push(j);
        stats = run(&cfg)?;
    }
    Ok((stats, used))
}
