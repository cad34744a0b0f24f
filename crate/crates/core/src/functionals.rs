//! Conserved quantities, the action, the symmetry generators and the H¹
//! geometry, evaluated spectrally on the periodic grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Omega, Sigma};
use crate::profile::{sample_profile, SolitonProfile};
use crate::spectral::{self, Grid};

/// Complex samples on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.points
            )));
        }
        Ok(ComplexField { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        ComplexField { grid, values: vec![Complex64::new(0.0, 0.0); grid.points] }
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Grid, f: F) -> Self {
        ComplexField { grid, values: grid.nodes().into_iter().map(f).collect() }
    }

    pub fn from_profile(p: &SolitonProfile) -> Self {
        ComplexField { grid: p.grid, values: p.field.clone() }
    }

    pub fn derivative(&self) -> ComplexField {
        ComplexField { grid: self.grid, values: spectral::derivative(&self.grid, &self.values) }
    }

    /// e^{is₀}u(· − s₁), spectrally.
    pub fn transformed(&self, s0: f64, s1: f64) -> ComplexField {
        let rot = Complex64::from_polar(1.0, s0);
        let values = spectral::translate(&self.grid, &self.values, s1)
            .into_iter()
            .map(|c| rot * c)
            .collect();
        ComplexField { grid: self.grid, values }
    }

    pub fn scaled(&self, a: f64) -> ComplexField {
        ComplexField { grid: self.grid, values: self.values.iter().map(|c| a * c).collect() }
    }

    /// self + a·other
    pub fn axpy(&self, a: f64, other: &ComplexField) -> ComplexField {
        let values = self.values.iter().zip(&other.values).map(|(u, v)| u + a * v).collect();
        ComplexField { grid: self.grid, values }
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// (v, w)_{L²} = Re ∫ v w̄ dx with the rectangle rule.
pub fn l2_inner(v: &ComplexField, w: &ComplexField) -> f64 {
    let sum: f64 = v.values.iter().zip(&w.values).map(|(a, b)| (a * b.conj()).re).sum();
    sum * v.grid.spacing()
}

pub fn l2_norm(v: &ComplexField) -> f64 {
    l2_inner(v, v).sqrt()
}

pub fn h1_inner(v: &ComplexField, w: &ComplexField) -> f64 {
    l2_inner(v, w) + l2_inner(&v.derivative(), &w.derivative())
}

pub fn h1_norm(v: &ComplexField) -> f64 {
    h1_inner(v, v).max(0.0).sqrt()
}

fn energy_with(u: &ComplexField, ux: &ComplexField, sigma: Sigma) -> f64 {
    let s = sigma.value();
    let i = Complex64::i();
    let kinetic = 0.5 * l2_inner(ux, ux);
    // (i u', |u|^{2σ} u)
    let coupling: f64 = u
        .values
        .iter()
        .zip(&ux.values)
        .map(|(&u, &ux)| {
            let w = u.norm_sqr().powf(s) * u;
            (i * ux * w.conj()).re
        })
        .sum::<f64>()
        * u.grid.spacing();
    kinetic - coupling / (2.0 * (s + 1.0))
}

/// E(u) = ½‖∂ₓu‖² − 1/(2(σ+1))·(i∂ₓu, |u|^{2σ}u).
pub fn energy(u: &ComplexField, sigma: Sigma) -> f64 {
    energy_with(u, &u.derivative(), sigma)
}

/// Q₀(u) = ½‖u‖².
pub fn mass(u: &ComplexField) -> f64 {
    0.5 * l2_inner(u, u)
}

/// Q₁(u) = ½(i∂ₓu, u).
pub fn momentum(u: &ComplexField) -> f64 {
    momentum_with(u, &u.derivative())
}

fn momentum_with(u: &ComplexField, ux: &ComplexField) -> f64 {
    0.5 * l2_inner(&ux.scaled_complex(Complex64::i()), u)
}

impl ComplexField {
    fn scaled_complex(&self, a: Complex64) -> ComplexField {
        ComplexField { grid: self.grid, values: self.values.iter().map(|c| a * c).collect() }
    }
}

/// S_ω(u) = E(u) + ω₀Q₀(u) + ω₁Q₁(u).
pub fn action(u: &ComplexField, sigma: Sigma, omega: Omega) -> f64 {
    let ux = u.derivative();
    energy_with(u, &ux, sigma) + omega.omega0 * mass(u) + omega.omega1 * momentum_with(u, &ux)
}

/// Symmetry generators: B₀u = u (gauge), B₁u = i∂ₓu (translation).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Gauge,
    Translation,
}

pub fn apply_b(j: Generator, u: &ComplexField) -> ComplexField {
    match j {
        Generator::Gauge => u.clone(),
        Generator::Translation => u.derivative().scaled_complex(Complex64::i()),
    }
}

/// B_ξu = ξ₀B₀u + ξ₁B₁u.
pub fn apply_b_xi(xi: (f64, f64), u: &ComplexField) -> ComplexField {
    apply_b(Generator::Gauge, u)
        .scaled(xi.0)
        .axpy(xi.1, &apply_b(Generator::Translation, u))
}

/// Snapshot of E, Q₀, Q₁ at time t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedLedger {
    pub energy: f64,
    pub mass: f64,
    pub momentum: f64,
    pub t: f64,
}

impl ConservedLedger {
    pub fn of(u: &ComplexField, sigma: Sigma, t: f64) -> Self {
        let ux = u.derivative();
        ConservedLedger {
            energy: energy_with(u, &ux, sigma),
            mass: mass(u),
            momentum: momentum_with(u, &ux),
            t,
        }
    }

    /// Relative drifts (E, Q₀, Q₁) with respect to a reference ledger.
    pub fn drift_from(&self, reference: &ConservedLedger) -> (f64, f64, f64) {
        let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
        (
            rel(self.energy, reference.energy),
            rel(self.mass, reference.mass),
            rel(self.momentum, reference.momentum),
        )
    }
}

/// d(ω) = S_ω(φ_ω) for the profile sampled on `grid`.
pub fn d_value(sigma: Sigma, omega: Omega, grid: Grid) -> Result<f64> {
    let p = sample_profile(sigma, omega, grid)?;
    Ok(action(&ComplexField::from_profile(&p), sigma, omega))
}
