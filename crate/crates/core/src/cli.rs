//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 configuration, 3 invalid run,
//! 4 comparison where run A does not show the larger boundary layer.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::analytic::{self, ResidualLaw};
use crate::config::{self, Entry, RunSettings};
use crate::dynamics::ParticleState;
use crate::engine::{self, measured_flux, RawStats};
use crate::error::{Error, Result};
use crate::injection::{self, InjectionProtocol};
use crate::io::{self, format_sig, RunManifest, Summary};
use crate::observables::{self, boundary_layer_metric, normalize_profile, strip_velocity_gof, ConcentrationProfile};
use crate::params::{BathConditions, FluxMode, PhysicsParams, Potential, Side};
use crate::rng::RandomStream;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_NOT_EXCEEDED: i32 = 4;

/// Configurations shipped with the binary, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("figure1_residual", include_str!("../configs/figure1_residual.conf")),
    ("figure1_maxwellian", include_str!("../configs/figure1_maxwellian.conf")),
    ("equilibrium", include_str!("../configs/equilibrium.conf")),
];

#[derive(Debug, Parser)]
#[command(name = "langevin-baths", version, about = "Langevin trajectories between fixed-concentration baths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation from a config file, a bundled config name, or a manifest.json.
    Run {
        config: String,
        /// Override a config key, e.g. --set seed=7 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; 1 guarantees a bit-exact single-threaded run.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Evaluate an analytic formula at a point or on a grid (key=value arguments).
    Oracle {
        formula: String,
        args: Vec<String>,
    },
    /// Write raw injection samples (x, v, xi, eta) to CSV.
    SampleInjection {
        #[arg(long, default_value = "residual")]
        protocol: String,
        #[arg(short, long)]
        n: u64,
        #[arg(long, default_value = "left")]
        side: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        dt: f64,
        /// Physics overrides, e.g. --set gamma=50.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value = "samples.csv")]
        out: PathBuf,
    },
    /// Compare two run directories bin by bin and by boundary-layer metric.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        #[arg(long, default_value = "compare")]
        out: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Exit(i32, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::RunInvalid(_) | Error::Integration(_) | Error::Statistics(_) => EXIT_INVALID,
            _ => EXIT_CONFIG,
        };
        Failure::Exit(code, e.to_string())
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            overrides,
            out,
            threads,
        } => cmd_run(&config, &overrides, &out, threads),
        Command::Oracle { formula, args } => cmd_oracle(&formula, &args),
        Command::SampleInjection {
            protocol,
            n,
            side,
            seed,
            dt,
            overrides,
            out,
        } => cmd_sample_injection(&protocol, n, &side, seed, dt, &overrides, &out),
        Command::Compare { run_a, run_b, out } => cmd_compare(&run_a, &run_b, &out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Exit(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

/// Loads base entries from a path or a bundled config name.
fn base_entries(config: &str) -> Result<Vec<Entry>> {
    let path = Path::new(config);
    let text = if path.is_file() {
        std::fs::read_to_string(path)?
    } else if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| *name == config) {
        text.to_string()
    } else {
        return Err(Error::Config(format!(
            "config {config:?} is neither a readable file nor a bundled config ({})",
            BUNDLED.iter().map(|b| b.0).collect::<Vec<_>>().join(", ")
        )));
    };
    if text.trim_start().starts_with('{') {
        let manifest = io::parse_manifest(&text)?;
        config::parse_config(&config::to_config_text(&manifest.settings()))
    } else {
        config::parse_config(&text)
    }
}

/// Resolves the full settings for `run`: file, then environment, then overrides.
pub fn resolve_run_settings(config: &str, overrides: &[String], threads: Option<usize>) -> Result<RunSettings> {
    let base = base_entries(config)?;
    let env = config::env_entries(std::env::vars())?;
    let cli = overrides
        .iter()
        .map(|s| config::parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    let mut settings = config::resolve(&[&base, &env, &cli])?;
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        settings.threads = t;
    }
    Ok(settings)
}

/// Computes the summary metrics of a finished run.
pub fn summarize(stats: &RawStats, settings: &RunSettings) -> Result<(ConcentrationProfile, Summary)> {
    let sim = &settings.sim;
    let profile = normalize_profile(stats, sim)?;
    let (flux, flux_std_error) = measured_flux(stats)?;
    let analytic_bath = BathConditions {
        flux_mode: FluxMode::AnalyticFlux,
        ..sim.bath
    };
    let analytic_flux = injection::resolve_flux(&analytic_bath, &sim.params)?;
    let mut notes = Vec::new();
    let layer = match boundary_layer_metric(&profile, &sim.params) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("layer metric: {e}"));
            None
        }
    };
    let mut gof = [None, None];
    for side in Side::BOTH {
        match strip_velocity_gof(stats, side, &sim.bath, &sim.params) {
            Ok(g) => gof[side.index()] = Some(g.p_value),
            Err(e) => notes.push(format!("{side} strip velocity test: {e}")),
        }
    }
    let mean_pool_size = stats
        .is_ensemble()
        .then(|| stats.pool_time_integral / stats.total_injection_time);
    let summary = Summary {
        flux,
        flux_std_error,
        analytic_flux,
        interior_slope: layer.map(|l| l.interior_fit.0),
        interior_intercept: layer.map(|l| l.interior_fit.1),
        layer_deviation: layer.map(|l| l.layer_deviation),
        systematic_sign: layer.map(|l| l.systematic_sign),
        layer,
        profile_integral: profile.integral().0,
        strip_gof_p_left: gof[0],
        strip_gof_p_right: gof[1],
        injected: stats.injected,
        absorbed: stats.absorbed,
        in_flight: stats.in_flight,
        capped: stats.capped,
        capped_fraction: stats.capped_fraction(),
        mass_balanced: stats.mass_balanced(),
        steps: stats.steps,
        mean_pool_size,
        notes,
    };
    Ok((profile, summary))
}

/// Runs the engine with the configured number of worker threads.
pub fn execute(settings: &RunSettings) -> Result<RawStats> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| engine::run(&settings.sim))
}

fn cmd_run(config: &str, overrides: &[String], out: &Path, threads: Option<usize>) -> Result<i32, Failure> {
    let settings = resolve_run_settings(config, overrides, threads)?;
    let started = Instant::now();
    let stats = execute(&settings)?;
    let elapsed = started.elapsed().as_secs_f64();
    let (profile, summary) = summarize(&stats, &settings)?;

    std::fs::create_dir_all(out).map_err(Error::from)?;
    let names = ["profile.csv", "velocities.csv", "summary.json", "manifest.json"];
    std::fs::write(out.join(names[0]), io::profile_csv(&profile)).map_err(Error::from)?;
    std::fs::write(out.join(names[1]), io::velocities_csv(&stats.velocity_samples)).map_err(Error::from)?;
    io::write_json(&out.join(names[2]), &summary)?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: settings.sim.clone(),
        threads: settings.threads,
        seed: settings.sim.seed,
        wall_clock_seconds: elapsed,
        outputs: names.iter().map(|n| out.join(n).display().to_string()).collect(),
        summary: summary.clone(),
    };
    io::write_json(&out.join(names[3]), &manifest)?;

    println!(
        "flux {} ± {} (analytic {}), layer deviation {}",
        format_sig(summary.flux, 6),
        format_sig(summary.flux_std_error, 6),
        format_sig(summary.analytic_flux, 6),
        summary.layer_deviation.map_or("n/a".into(), |d| format_sig(d, 4)),
    );
    stats.check_valid()?;
    Ok(EXIT_OK)
}

/// A scalar or a `start:stop:count` grid.
fn values(spec: &str) -> Result<Vec<f64>> {
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Config(format!("bad number {s:?}")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [one] => Ok(vec![parse(one)?]),
        [a, b, n] => {
            let (a, b) = (parse(a)?, parse(b)?);
            let n: usize = n
                .trim()
                .parse()
                .ok()
                .filter(|&n| (1..=1_000_000).contains(&n))
                .ok_or_else(|| Error::Config(format!("bad grid count {n:?}")))?;
            if n == 1 {
                return Ok(vec![a]);
            }
            Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
        }
        _ => Err(Error::Config(format!("expected a number or start:stop:count, got {spec:?}"))),
    }
}

struct OracleArgs(BTreeMap<String, String>);

impl OracleArgs {
    fn parse(args: &[String]) -> Result<Self, Failure> {
        let mut map = BTreeMap::new();
        for a in args {
            if a == "left" || a == "right" {
                map.insert("side".to_string(), a.clone());
                continue;
            }
            let (k, v) = a
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("expected key=value, got {a:?}")))?;
            map.insert(k.trim().to_ascii_lowercase().replace('-', "_"), v.trim().to_string());
        }
        Ok(Self(map))
    }

    fn num(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => match values(v)?.as_slice() {
                [x] => Ok(*x),
                _ => Err(Error::Config(format!("{key} must be a single number"))),
            },
        }
    }

    fn grid(&self, key: &str) -> Result<Vec<f64>> {
        let v = self
            .0
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing argument {key}=<value or start:stop:count>")))?;
        values(v)
    }

    fn params(&self) -> Result<PhysicsParams> {
        let defaults = PhysicsParams::default();
        let potential: Potential = match self.0.get("potential") {
            Some(p) => p.parse().map_err(Error::Config)?,
            None => Potential::Free,
        };
        let p = PhysicsParams {
            gamma: self.num("gamma", defaults.gamma)?,
            epsilon: self.num("epsilon", defaults.epsilon)?,
            length: self.num("length", defaults.length)?,
            potential,
        };
        p.validate()?;
        Ok(p)
    }

    fn bath(&self) -> Result<BathConditions> {
        BathConditions::new(self.num("c_left", 1.0)?, self.num("c_right", 0.0)?, FluxMode::AnalyticFlux)
    }

    fn side(&self) -> Result<Side> {
        match self.0.get("side") {
            Some(s) => s.parse().map_err(Error::Config),
            None => Ok(Side::Left),
        }
    }
}

const ORACLES: &[&str] = &[
    "flux",
    "profile",
    "residual-density",
    "velocity-marginal",
    "entry-velocity",
    "limiting-velocity",
    "interface-velocity",
    "unidirectional",
    "kernel-stats",
];

fn print_table(header: &str, rows: impl Iterator<Item = Vec<f64>>) {
    println!("{header}");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        println!("{}", cells.join(","));
    }
}

/// Prints one value for scalar arguments, a CSV table for grids.
fn print_1d(name: &str, xs: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<()> {
    if let [x] = xs {
        println!("{}", f(*x)?);
        return Ok(());
    }
    let rows = xs.iter().map(|&x| f(x).map(|y| vec![x, y])).collect::<Result<Vec<_>>>()?;
    print_table(&format!("{name},value"), rows.into_iter());
    Ok(())
}

fn cmd_oracle(formula: &str, raw: &[String]) -> Result<i32, Failure> {
    if !ORACLES.contains(&formula) {
        return Err(Failure::Usage(format!(
            "unknown formula {formula:?}; expected one of {}",
            ORACLES.join(", ")
        )));
    }
    let args = OracleArgs::parse(raw)?;
    let params = args.params()?;
    match formula {
        "flux" => println!("{}", analytic::smoluchowski_flux(&params, &args.bath()?)?),
        "profile" => {
            let bath = args.bath()?;
            print_1d("x", &args.grid("x")?, |x| analytic::smoluchowski_profile(x, &params, &bath))?;
        }
        "residual-density" => {
            let law = ResidualLaw::new(&params, args.num("dt", 1e-4)?)?;
            let (xs, vs) = (args.grid("x")?, args.grid("v")?);
            if xs.len() == 1 && vs.len() == 1 {
                println!("{}", law.density(xs[0], vs[0]));
            } else {
                let rows = xs.iter().flat_map(|&x| vs.iter().map(move |&v| vec![x, v, law.density(x, v)]));
                print_table("x,v,density", rows);
            }
        }
        "velocity-marginal" => {
            let law = ResidualLaw::new(&params, args.num("dt", 1e-4)?)?;
            print_1d("v", &args.grid("v")?, |v| Ok(law.velocity_marginal(v)))?;
        }
        "entry-velocity" => {
            let law = ResidualLaw::new(&params, args.num("dt", 1e-4)?)?;
            print_1d("v", &args.grid("v")?, |v| Ok(law.entry_velocity_density(v)))?;
        }
        "limiting-velocity" => {
            print_1d("v", &args.grid("v")?, |v| Ok(analytic::limiting_velocity_density(v, params.epsilon)))?;
        }
        "interface-velocity" => {
            let bath = args.bath()?;
            let (side, j) = (args.side()?, args.num("flux", 0.0)?);
            print_1d("v", &args.grid("v")?, |v| {
                analytic::interface_velocity_density(v, side, &bath, j, params.epsilon)
            })?;
        }
        "unidirectional" => {
            let bath = args.bath()?;
            let rate = analytic::unidirectional_flux(args.side()?, &bath, args.num("flux", 0.0)?, params.epsilon)?;
            println!("{rate}");
        }
        "kernel-stats" => {
            let state = ParticleState::new(args.num("x", 0.5)?, args.num("v", 0.0)?);
            let k = analytic::one_step_kernel_stats(state, &params, args.num("dt", 1e-4)?);
            println!("next_x,mean_v,var_v");
            println!("{},{},{}", k.next_x, k.mean_v, k.var_v);
        }
        _ => unreachable!("formula list checked above"),
    }
    Ok(EXIT_OK)
}

fn cmd_sample_injection(
    protocol: &str,
    n: u64,
    side: &str,
    seed: u64,
    dt: f64,
    overrides: &[String],
    out: &Path,
) -> Result<i32, Failure> {
    let protocol: InjectionProtocol = protocol.parse().map_err(Failure::Usage)?;
    let side: Side = side.parse().map_err(Failure::Usage)?;
    if n == 0 {
        return Err(Failure::Usage("n must be positive".into()));
    }
    let entries = overrides
        .iter()
        .map(|s| config::parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    let params = config::resolve(&[&entries])?.sim.params;
    params.validate()?;
    params.check_step(dt)?;

    let file = std::fs::File::create(out).map_err(Error::from)?;
    let mut rng = RandomStream::new(seed);
    let events = (0..n).map(|_| injection::sample_entry(protocol, side, &params, dt, &mut rng));
    io::write_samples_csv(std::io::BufWriter::new(file), events)?;
    Ok(EXIT_OK)
}

fn load_run(dir: &Path) -> Result<(ConcentrationProfile, RunManifest)> {
    let profile = io::parse_profile_csv(&std::fs::read_to_string(dir.join("profile.csv"))?)?;
    let manifest = io::parse_manifest(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    Ok((profile, manifest))
}

fn same_physics(a: &RunManifest, b: &RunManifest) -> Result<()> {
    let (ca, cb) = (&a.config, &b.config);
    let mut diffs = Vec::new();
    if ca.params != cb.params {
        diffs.push("physics parameters");
    }
    if ca.dt != cb.dt {
        diffs.push("dt");
    }
    if ca.bath.c_left != cb.bath.c_left || ca.bath.c_right != cb.bath.c_right {
        diffs.push("bath concentrations");
    }
    if ca.bins != cb.bins {
        diffs.push("bins");
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("runs differ in {}", diffs.join(", "))))
    }
}

/// Result of comparing two runs.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Comparison {
    pub layer_a: observables::LayerReport,
    pub layer_b: observables::LayerReport,
    pub a_exceeds_b: bool,
    /// Largest |z| over bins centered beyond 5 layer widths from either end.
    pub interior_max_abs_z: f64,
    pub interior_fraction_within_3sigma: f64,
    /// Largest |z| over bins inside the left layer.
    pub layer_max_abs_z: f64,
}

fn cmd_compare(run_a: &Path, run_b: &Path, out: &Path) -> Result<i32, Failure> {
    let (pa, ma) = load_run(run_a)?;
    let (pb, mb) = load_run(run_b)?;
    same_physics(&ma, &mb)?;
    if pa.len() != pb.len() {
        return Err(Error::Config("profiles have different lengths".into()).into());
    }
    let params = ma.config.params;
    let layer_a = boundary_layer_metric(&pa, &params)?;
    let layer_b = boundary_layer_metric(&pb, &params)?;

    let lw = params.layer_width();
    let mut table = String::from("bin_center,a,b,difference,pooled_std_error,z\n");
    let (mut interior_max, mut interior_n, mut interior_ok, mut layer_max) = (0.0f64, 0usize, 0usize, 0.0f64);
    for i in 0..pa.len() {
        let x = pa.bin_centers[i];
        let diff = pa.values[i] - pb.values[i];
        let se = pa.std_errors[i].hypot(pb.std_errors[i]);
        let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_sig(x, 6),
            format_sig(pa.values[i], 6),
            format_sig(pb.values[i], 6),
            format_sig(diff, 6),
            format_sig(se, 6),
            format_sig(z, 6)
        ));
        if x < lw {
            layer_max = layer_max.max(z.abs());
        } else if x > 5.0 * lw && x < params.length - 5.0 * lw {
            interior_max = interior_max.max(z.abs());
            interior_n += 1;
            interior_ok += usize::from(z.abs() <= 3.0);
        }
    }
    let cmp = Comparison {
        layer_a,
        layer_b,
        a_exceeds_b: layer_a.layer_deviation > layer_b.layer_deviation,
        interior_max_abs_z: interior_max,
        interior_fraction_within_3sigma: if interior_n > 0 { interior_ok as f64 / interior_n as f64 } else { 1.0 },
        layer_max_abs_z: layer_max,
    };
    std::fs::create_dir_all(out).map_err(Error::from)?;
    std::fs::write(out.join("comparison.csv"), table).map_err(Error::from)?;
    io::write_json(&out.join("comparison.json"), &cmp)?;
    println!(
        "layer deviation a = {}, b = {}; interior bins within 3 sigma: {:.1}%",
        format_sig(layer_a.layer_deviation, 4),
        format_sig(layer_b.layer_deviation, 4),
        100.0 * cmp.interior_fraction_within_3sigma
    );
    Ok(if cmp.a_exceeds_b { EXIT_OK } else { EXIT_NOT_EXCEEDED })
}
