//! Periodic grid and FFT-based differentiation, translation and filtering.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on [−L/2, L/2) with N nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub length: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points must be a power of two >= 16, got {points}"
            )));
        }
        Ok(Grid { length, points })
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumbers in FFT order; the Nyquist mode carries −N/2.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let scale = 2.0 * PI / self.length;
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n })
            .map(|j| j as f64 * scale)
            .collect()
    }

    /// Wavenumbers used for differentiation: Nyquist mode zeroed so that the
    /// first-derivative operator stays skew-symmetric.
    pub fn derivative_wavenumbers(&self) -> Vec<f64> {
        let mut k = self.wavenumbers();
        k[self.points / 2] = 0.0;
        k
    }

    pub fn k_nyquist(&self) -> f64 {
        PI * self.points as f64 / self.length
    }

    /// Largest |k| retained by a dealiasing filter keeping `fraction` of the band.
    pub fn k_retained(&self, fraction: f64) -> f64 {
        fraction * self.k_nyquist()
    }
}

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, Plans>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plans(n: usize) -> Plans {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry(n)
            .or_insert_with(|| (planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
            .clone()
    })
}

/// Unnormalized forward transform.
pub fn forward(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    forward_in_place(&mut buf);
    buf
}

pub fn forward_in_place(buf: &mut [Complex64]) {
    plans(buf.len()).0.process(buf);
}

/// Inverse transform including the 1/N normalization.
pub fn inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    inverse_in_place(&mut buf);
    buf
}

pub fn inverse_in_place(buf: &mut [Complex64]) {
    plans(buf.len()).1.process(buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
}

/// ∂ₓ by the Fourier multiplier ik.
pub fn derivative(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let k = grid.derivative_wavenumbers();
    let mut c = forward(values);
    for (c, &k) in c.iter_mut().zip(&k) {
        *c *= Complex64::new(0.0, k);
    }
    inverse_in_place(&mut c);
    c
}

/// ∂ₓ² by the Fourier multiplier −k² (Nyquist included).
pub fn second_derivative(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let k = grid.wavenumbers();
    let mut c = forward(values);
    for (c, &k) in c.iter_mut().zip(&k) {
        *c *= -k * k;
    }
    inverse_in_place(&mut c);
    c
}

/// Samples of x ↦ f(x − s) for the trigonometric interpolant f.
pub fn translate(grid: &Grid, values: &[Complex64], s: f64) -> Vec<Complex64> {
    let k = grid.wavenumbers();
    let mut c = forward(values);
    for (c, &k) in c.iter_mut().zip(&k) {
        *c *= Complex64::from_polar(1.0, -k * s);
    }
    inverse_in_place(&mut c);
    c
}

/// Keep only modes with |k| ≤ fraction·k_Nyquist.
pub fn dealias_mask(grid: &Grid, fraction: f64) -> Vec<bool> {
    let cut = grid.k_retained(fraction) * (1.0 + 1e-12);
    grid.wavenumbers().iter().map(|k| k.abs() <= cut).collect()
}

/// First column of the circulant spectral first-derivative matrix,
/// antisymmetrized exactly: c[m] = −c[N−m].
pub fn derivative_stencil(grid: &Grid) -> Vec<f64> {
    let n = grid.points;
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    e[0] = Complex64::new(1.0, 0.0);
    let col: Vec<f64> = derivative(grid, &e).iter().map(|c| c.re).collect();
    let mut out = vec![0.0; n];
    for m in 1..n {
        out[m] = 0.5 * (col[m] - col[n - m]);
    }
    out
}

/// First column of the circulant spectral second-derivative matrix,
/// symmetrized exactly: c[m] = c[N−m].
pub fn second_derivative_stencil(grid: &Grid) -> Vec<f64> {
    let n = grid.points;
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    e[0] = Complex64::new(1.0, 0.0);
    let col: Vec<f64> = second_derivative(grid, &e).iter().map(|c| c.re).collect();
    (0..n).map(|m| 0.5 * (col[m] + col[(n - m) % n])).collect()
}
