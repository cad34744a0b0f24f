//! Classification of (σ, ω) into stable / unstable / degenerate-unstable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::hessian_closed;
use crate::params::{f_sigma, find_z0, Omega, QuadratureSpec, Sigma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Stable,
    Unstable,
    DegenerateUnstable,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Stable => "stable",
            Classification::Unstable => "unstable",
            Classification::DegenerateUnstable => "degenerate-unstable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub sigma: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub z: f64,
    pub f_sigma: f64,
    pub det_hessian: f64,
    pub classification: Classification,
}

/// Rule by (σ, z): σ = 1 is stable throughout, σ ≥ 2 unstable throughout,
/// and for 1 < σ < 2 the threshold z₀(σ) separates the two regimes.
pub fn classify(sigma: Sigma, z: f64, z0: Option<f64>) -> Classification {
    let s = sigma.value();
    if s == 1.0 {
        return Classification::Stable;
    }
    if s >= 2.0 {
        return Classification::Unstable;
    }
    match z0 {
        Some(z0) if z < z0 => Classification::Stable,
        Some(z0) if z > z0 => Classification::Unstable,
        Some(_) => Classification::DegenerateUnstable,
        None => Classification::Unstable,
    }
}

fn row(sigma: Sigma, omega: Omega, class: Classification, spec: &QuadratureSpec) -> Result<StabilityRow> {
    let z = omega.z();
    Ok(StabilityRow {
        sigma: sigma.value(),
        omega0: omega.omega0,
        omega1: omega.omega1,
        z,
        f_sigma: f_sigma(sigma, z, spec)?,
        det_hessian: hessian_closed(sigma, omega, spec)?.det(),
        classification: class,
    })
}

/// Rows at the midpoints of `steps` equal cells of (−2√ω₀, 2√ω₀), with the
/// degenerate line ω₁ = 2z₀√ω₀ inserted in order when 1 < σ < 2.
pub fn stability_map(sigma: Sigma, omega0: f64, steps: usize, spec: &QuadratureSpec) -> Result<Vec<StabilityRow>> {
    if steps == 0 {
        return Err(Error::Config("steps must be positive".into()));
    }
    Omega::new(omega0, 0.0)?;
    let s = sigma.value();
    let z0 = if s > 1.0 && s < 2.0 { Some(find_z0(sigma, spec)?) } else { None };
    let mut points: Vec<(f64, Classification)> = (0..steps)
        .map(|j| {
            let z = -1.0 + (2 * j + 1) as f64 / steps as f64;
            (z, classify(sigma, z, z0))
        })
        .collect();
    if let Some(z0) = z0 {
        let at = points.partition_point(|&(z, _)| z < z0);
        if points.get(at).is_none_or(|&(z, _)| z != z0) {
            points.insert(at, (z0, Classification::DegenerateUnstable));
        }
    }
    points
        .par_iter()
        .map(|&(z, class)| row(sigma, Omega::from_z(omega0, z)?, class, spec))
        .collect()
}

/// One map per σ, concatenated in the order given.
pub fn stability_maps(sigmas: &[Sigma], omega0: f64, steps: usize, spec: &QuadratureSpec) -> Result<Vec<StabilityRow>> {
    let maps: Result<Vec<Vec<StabilityRow>>> =
        sigmas.par_iter().map(|&s| stability_map(s, omega0, steps, spec)).collect();
    Ok(maps?.into_iter().flatten().collect())
}
