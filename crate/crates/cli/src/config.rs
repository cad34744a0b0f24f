//! Flat `key = value` run configuration for `simulate`.

use std::collections::BTreeMap;

use gdnls::moments::zero_eigenvector;
use gdnls::params::find_z0;
use gdnls::profile::default_grid;
use gdnls::simulator::{Perturbation, PerturbationKind, RayDirection, SimConfig};
use gdnls::{Grid, Omega, QuadratureSpec, Sigma};

use crate::Failure;

pub const KEYS: &[&str] = &[
    "sigma",
    "omega0",
    "omega1",
    "length",
    "points",
    "dt",
    "t_end",
    "dealias",
    "kind",
    "amplitude",
    "sign",
    "direction",
    "seed",
    "tube_epsilon",
    "sample_every",
    "frame_velocity",
    "cfl",
];

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse(text: &str) -> Result<BTreeMap<String, String>, Failure> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Failure::Usage(format!("config line {}: unknown key '{key}'", n + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn number(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, Failure> {
    map.get(key)
        .map(|v| v.parse::<f64>().map_err(|_| Failure::Usage(format!("{key}: '{v}' is not a number"))))
        .transpose()
}

fn integer<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, Failure> {
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|_| Failure::Usage(format!("{key}: '{v}' is not an integer"))))
        .transpose()
}

pub fn build(map: &BTreeMap<String, String>) -> Result<SimConfig, Failure> {
    let spec = QuadratureSpec::default();
    let sigma = number(map, "sigma")?.ok_or_else(|| Failure::Usage("sigma is required".into()))?;
    let sigma = Sigma::new(sigma).map_err(|e| Failure::Usage(e.to_string()))?;
    let omega0 = number(map, "omega0")?.unwrap_or(1.0);
    let omega = match map.get("omega1").map(String::as_str) {
        None | Some("degenerate") => Omega::from_z(omega0, find_z0(sigma, &spec)?)?,
        Some(_) => Omega::new(omega0, number(map, "omega1")?.unwrap_or_default())?,
    };
    let base = default_grid(sigma, omega);
    let length = number(map, "length")?.unwrap_or(base.length);
    let points = integer(map, "points")?.unwrap_or(base.points);
    let grid = Grid::new(length, points).map_err(|e| Failure::Usage(e.to_string()))?;

    let kind = match map.get("kind").map(String::as_str) {
        None | Some("psi_hat_ray") => PerturbationKind::PsiHatRay,
        Some("random_h1") => PerturbationKind::RandomH1,
        Some(other) => return Err(Failure::Usage(format!("kind: unknown perturbation '{other}'"))),
    };
    let direction = match map.get("direction").map(String::as_str) {
        None | Some("zero_eigenvector") => RayDirection::ZeroEigenvector,
        Some("softest_mode") => RayDirection::SoftestMode,
        Some(pair) => {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [a, b] => match (a.parse(), b.parse()) {
                    (Ok(a), Ok(b)) => RayDirection::Fixed(a, b),
                    _ => return Err(Failure::Usage(format!("direction: cannot parse '{pair}'"))),
                },
                _ => return Err(Failure::Usage(format!("direction: expected a,b or a keyword, got '{pair}'"))),
            }
        }
    };
    let sign = number(map, "sign")?.unwrap_or(1.0);
    let frame_velocity = match map.get("frame_velocity").map(String::as_str) {
        None | Some("omega1") => omega.omega1,
        Some(_) => number(map, "frame_velocity")?.unwrap_or_default(),
    };

    let mut cfg = SimConfig::new(sigma, omega, grid);
    cfg.dt = number(map, "dt")?.unwrap_or(1e-3);
    cfg.t_end = number(map, "t_end")?.unwrap_or(100.0);
    cfg.dealias = number(map, "dealias")?.unwrap_or(2.0 / 3.0);
    cfg.tube_epsilon = number(map, "tube_epsilon")?.unwrap_or(0.05);
    cfg.sample_every = integer(map, "sample_every")?.unwrap_or(1000);
    cfg.cfl = number(map, "cfl")?.unwrap_or(0.1);
    cfg.frame_velocity = frame_velocity;
    cfg.perturbation = Perturbation {
        kind,
        amplitude: number(map, "amplitude")?.unwrap_or(1e-3),
        sign,
        direction,
        seed: integer(map, "seed")?.unwrap_or(0),
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if kind == PerturbationKind::PsiHatRay && direction == RayDirection::ZeroEigenvector {
        // fail early, before any integration, when ω is not degenerate
        zero_eigenvector(sigma, omega, &spec)?;
    }
    Ok(cfg)
}
