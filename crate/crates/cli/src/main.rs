use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gdnls::linearized::{assemble, lowest_spectrum};
use gdnls::moments::{degeneracy_report, hessian_report};
use gdnls::params::{f_sigma, find_z0};
use gdnls::profile::{default_grid, sample_profile};
use gdnls::simulator::run_experiment;
use gdnls::stability::stability_maps;
use gdnls::{Error, Grid, Omega, QuadratureSpec, Sigma};

mod config;
mod output;

use output::{RunManifest, Sink};

const EXIT_DOMAIN: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_NUMERIC: u8 = 70;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_)
            | Error::NoRoot(_)
            | Error::MultipleRoots { .. }
            | Error::GridTooSmall { .. }
            | Error::NotDegenerate { .. } => Failure::Domain(e.to_string()),
            Error::Config(_) | Error::InvalidGrid(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("output: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "gdnls", version, about = "Solitary waves of the generalized derivative NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Write here (plus a `.manifest.json` sidecar) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    omega0: f64,
    /// Defaults to the degenerate value 2z₀(σ)√ω₀.
    #[arg(long, allow_hyphen_values = true)]
    omega1: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Root z₀(σ) of F_σ.
    Z0 {
        #[arg(long)]
        sigma: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Stable / unstable classification over ω₁ ∈ (−2√ω₀, 2√ω₀).
    StabilityMap {
        /// A single σ or `start:end:count`.
        #[arg(long)]
        sigma_range: String,
        #[arg(long, default_value_t = 1.0)]
        omega0: f64,
        #[arg(long, default_value_t = 50)]
        omega1_steps: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// d″(ω) in closed form with its finite-difference check.
    Hessian {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Full report at the degenerate point ω₁ = 2z₀√ω₀.
    ThirdDerivative {
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        omega0: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Lowest eigenvalues of the linearized operator.
    Spectrum {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 6)]
        count: usize,
        #[arg(long, default_value_t = 1024)]
        points: usize,
        #[arg(long)]
        length: Option<f64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Sampled profile φ_ω on its default grid.
    Profile {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        length: Option<f64>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Time integration with orbital-distance tracking.
    Simulate(Box<SimulateArgs>),
}

#[derive(Args)]
struct SimulateArgs {
    /// Flat `key = value` file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "trace.csv")]
    trace: PathBuf,
    #[arg(long, default_value = "summary.json")]
    summary: PathBuf,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    omega0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    omega1: Option<String>,
    #[arg(long)]
    length: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    dealias: Option<String>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    amplitude: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    direction: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    tube_epsilon: Option<String>,
    #[arg(long)]
    sample_every: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    frame_velocity: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
}

impl SimulateArgs {
    fn overrides(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("sigma", &self.sigma),
            ("omega0", &self.omega0),
            ("omega1", &self.omega1),
            ("length", &self.length),
            ("points", &self.points),
            ("dt", &self.dt),
            ("t_end", &self.t_end),
            ("dealias", &self.dealias),
            ("kind", &self.kind),
            ("amplitude", &self.amplitude),
            ("sign", &self.sign),
            ("direction", &self.direction),
            ("seed", &self.seed),
            ("tube_epsilon", &self.tube_epsilon),
            ("sample_every", &self.sample_every),
            ("frame_velocity", &self.frame_velocity),
            ("cfl", &self.cfl),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

fn params(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn usage_sigma(sigma: f64) -> Result<Sigma, Failure> {
    if !(1.0..2.0).contains(&sigma) {
        return Err(Failure::Usage(format!("--sigma must lie in [1, 2), got {sigma}")));
    }
    Sigma::new(sigma).map_err(|e| Failure::Usage(e.to_string()))
}

fn any_sigma(sigma: f64) -> Result<Sigma, Failure> {
    Sigma::new(sigma).map_err(|e| Failure::Usage(e.to_string()))
}

fn resolve_omega(sigma: Sigma, p: &PointArgs, spec: &QuadratureSpec) -> Result<Omega, Failure> {
    Ok(match p.omega1 {
        Some(w1) => Omega::new(p.omega0, w1)?,
        None => Omega::from_z(p.omega0, find_z0(sigma, spec)?)?,
    })
}

fn parse_sigma_range(text: &str) -> Result<Vec<Sigma>, Failure> {
    let bad = || Failure::Usage(format!("--sigma-range: expected S or START:END:COUNT, got '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [s] => vec![s.parse::<f64>().map_err(|_| bad())?],
        [a, b, n] => {
            let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            let n: usize = n.parse().map_err(|_| bad())?;
            match n {
                0 => return Err(bad()),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        }
        _ => return Err(bad()),
    };
    values.into_iter().map(any_sigma).collect()
}

#[derive(Serialize)]
struct Z0Output {
    sigma: f64,
    z0: f64,
    f_residual: f64,
}

#[derive(Serialize)]
struct MapRow {
    sigma: f64,
    omega0: f64,
    omega1: f64,
    z: f64,
    f_sigma: f64,
    det_hessian: f64,
    classification: &'static str,
}

#[derive(Serialize)]
struct EigenRow {
    index: usize,
    eigenvalue: f64,
}

#[derive(Serialize)]
struct ProfileRow {
    x: f64,
    re: f64,
    im: f64,
    amplitude: f64,
    phase: f64,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let spec = QuadratureSpec::default();
    match cli.command {
        Command::Z0 { sigma, out } => {
            let s = usage_sigma(sigma)?;
            if sigma == 1.0 {
                return Err(Failure::Domain("no root: F_1 ≡ −1".into()));
            }
            let z0 = find_z0(s, &spec)?;
            let manifest = RunManifest::new("z0", params(&[("sigma", sigma.to_string())]));
            let result = Z0Output { sigma, z0, f_residual: f_sigma(s, z0, &spec)? };
            Sink { path: out.out.as_deref(), manifest: &manifest }.json(&result)?;
        }
        Command::StabilityMap { sigma_range, omega0, omega1_steps, out } => {
            let sigmas = parse_sigma_range(&sigma_range)?;
            if omega1_steps == 0 {
                return Err(Failure::Usage("--omega1-steps must be positive".into()));
            }
            let rows = stability_maps(&sigmas, omega0, omega1_steps, &spec)?;
            let manifest = RunManifest::new(
                "stability-map",
                params(&[
                    ("sigma_range", sigma_range.clone()),
                    ("omega0", omega0.to_string()),
                    ("omega1_steps", omega1_steps.to_string()),
                ]),
            );
            let rows = rows.into_iter().map(|r| MapRow {
                sigma: r.sigma,
                omega0: r.omega0,
                omega1: r.omega1,
                z: r.z,
                f_sigma: r.f_sigma,
                det_hessian: r.det_hessian,
                classification: r.classification.as_str(),
            });
            Sink { path: out.out.as_deref(), manifest: &manifest }.csv(rows)?;
        }
        Command::Hessian { point, out } => {
            let s = any_sigma(point.sigma)?;
            let w = resolve_omega(s, &point, &spec)?;
            let report = hessian_report(s, w, &spec, None)?;
            let manifest = RunManifest::new(
                "hessian",
                params(&[
                    ("sigma", point.sigma.to_string()),
                    ("omega0", w.omega0.to_string()),
                    ("omega1", w.omega1.to_string()),
                ]),
            );
            Sink { path: out.out.as_deref(), manifest: &manifest }.json(&report)?;
        }
        Command::ThirdDerivative { sigma, omega0, out } => {
            let s = usage_sigma(sigma)?;
            let report = degeneracy_report(s, omega0, &spec, None)?;
            if !report.within_theorem_hypotheses {
                eprintln!("note: sigma = {sigma} lies below 3/2, outside the instability theorem's hypotheses");
            }
            let manifest =
                RunManifest::new("third-derivative", params(&[("sigma", sigma.to_string()), ("omega0", omega0.to_string())]));
            Sink { path: out.out.as_deref(), manifest: &manifest }.json(&report)?;
        }
        Command::Spectrum { point, count, points, length, out } => {
            let s = any_sigma(point.sigma)?;
            let w = resolve_omega(s, &point, &spec)?;
            let grid = Grid::new(length.unwrap_or_else(|| default_grid(s, w).length), points)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let spectrum = lowest_spectrum(&assemble(&sample_profile(s, w, grid)?), count)?;
            eprintln!("operator asymmetry before symmetrization: {:e}", spectrum.asymmetry);
            let manifest = RunManifest::new(
                "spectrum",
                params(&[
                    ("sigma", point.sigma.to_string()),
                    ("omega0", w.omega0.to_string()),
                    ("omega1", w.omega1.to_string()),
                    ("count", count.to_string()),
                    ("points", points.to_string()),
                    ("length", grid.length.to_string()),
                ]),
            );
            let rows = spectrum.eigenvalues.iter().enumerate().map(|(index, &eigenvalue)| EigenRow { index, eigenvalue });
            Sink { path: out.out.as_deref(), manifest: &manifest }.csv(rows)?;
        }
        Command::Profile { point, points, length, out } => {
            let s = any_sigma(point.sigma)?;
            let w = resolve_omega(s, &point, &spec)?;
            let base = default_grid(s, w);
            let grid = Grid::new(length.unwrap_or(base.length), points.unwrap_or(base.points))
                .map_err(|e| Failure::Usage(e.to_string()))?;
            let p = sample_profile(s, w, grid)?;
            let manifest = RunManifest::new(
                "profile",
                params(&[
                    ("sigma", point.sigma.to_string()),
                    ("omega0", w.omega0.to_string()),
                    ("omega1", w.omega1.to_string()),
                    ("points", grid.points.to_string()),
                    ("length", grid.length.to_string()),
                ]),
            );
            let rows = (0..grid.points).map(|j| ProfileRow {
                x: grid.x(j),
                re: p.field[j].re,
                im: p.field[j].im,
                amplitude: p.amplitude[j],
                phase: p.phase[j],
            });
            Sink { path: out.out.as_deref(), manifest: &manifest }.csv(rows)?;
        }
        Command::Simulate(args) => {
            let mut map = match &args.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                    config::parse(&text)?
                }
                None => BTreeMap::new(),
            };
            map.extend(args.overrides());
            let cfg = config::build(&map)?;
            let experiment = run_experiment(&cfg)?;
            let manifest = RunManifest::new("simulate", map);
            Sink { path: Some(&args.trace), manifest: &manifest }.csv(&experiment.trace.rows)?;
            Sink { path: Some(&args.summary), manifest: &manifest }.json(&experiment.summary)?;
            match experiment.summary.exit_time {
                Some(t) => eprintln!("left the tube at t = {t}"),
                None => eprintln!("stayed inside the tube to t = {}", experiment.summary.final_time),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Domain(m)) => {
            eprintln!("{m}");
            ExitCode::from(EXIT_DOMAIN)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}
