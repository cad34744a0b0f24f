//! The linearized operator S″_ω(φ_ω) as a real 2N×2N matrix acting on
//! interleaved (Re v_j, Im v_j) nodal values.
//!
//! The operator
//!
//! ```text
//! S″v = (−∂ₓ² − iσ|φ|^{2σ−2}φ̄φ′ − i|φ|^{2σ}∂ₓ + ω₀ + ω₁i∂ₓ)v − iσ|φ|^{2σ−2}φφ′ v̄
//! ```
//!
//! is assembled in the equivalent split form
//!
//! ```text
//! S″v = −∂ₓ²v + (ω₀ + m)v + i(ω₁∂ₓ − ½(a∂ₓ + ∂ₓa))v + c v̄,
//! a = |φ|^{2σ},  m = σ|φ|^{2σ−2} Im(φ̄φ′),  c = −iσ|φ|^{2σ−2}φφ′,
//! ```
//!
//! whose discrete blocks are symmetric (−∂ₓ², m, c) or skew (∂ₓ, a∂ₓ + ∂ₓa),
//! so the realified matrix is symmetric up to round-off.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::ComplexField;
use crate::params::{Omega, Sigma};
use crate::profile::SolitonProfile;
use crate::spectral::{self, Grid};

#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub grid: Grid,
    pub sigma: Sigma,
    pub omega: Omega,
    pub matrix: DMatrix<f64>,
    /// ‖A − Aᵀ‖_∞ / ‖A‖_∞
    pub asymmetry: f64,
}

/// Pointwise coefficients (a, m, c) of the split form.
fn coefficients(sigma: Sigma, phi: &[Complex64], dphi: &[Complex64]) -> (Vec<f64>, Vec<f64>, Vec<Complex64>) {
    let s = sigma.value();
    let mut a = Vec::with_capacity(phi.len());
    let mut m = Vec::with_capacity(phi.len());
    let mut c = Vec::with_capacity(phi.len());
    for (&u, &du) in phi.iter().zip(dphi) {
        let r2 = u.norm_sqr();
        let low = if r2 == 0.0 { 0.0 } else { r2.powf(s - 1.0) };
        a.push(low * r2);
        m.push(s * low * (u.conj() * du).im);
        c.push(Complex64::new(0.0, -s * low) * u * du);
    }
    (a, m, c)
}

fn infinity_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Realify the complex field: (Re, Im) interleaved by node.
pub fn realify(v: &[Complex64]) -> DVector<f64> {
    DVector::from_iterator(2 * v.len(), v.iter().flat_map(|c| [c.re, c.im]))
}

pub fn complexify(v: &DVector<f64>) -> Vec<Complex64> {
    v.as_slice().chunks(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

pub fn assemble(p: &SolitonProfile) -> LinearizedOperator {
    let grid = p.grid;
    let n = grid.points;
    let dphi = spectral::derivative(&grid, &p.field);
    let (a, m, c) = coefficients(p.sigma, &p.field, &dphi);
    let d1 = spectral::derivative_stencil(&grid);
    let d2 = spectral::second_derivative_stencil(&grid);
    let (w0, w1) = (p.omega.omega0, p.omega.omega1);

    let mut matrix = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for l in 0..n {
            let off = (j + n - l) % n;
            let mut re = -d2[off];
            if j == l {
                re += w0 + m[j];
            }
            let im = w1 * d1[off] - 0.5 * (a[j] + a[l]) * d1[off];
            matrix[(2 * j, 2 * l)] = re;
            matrix[(2 * j, 2 * l + 1)] = -im;
            matrix[(2 * j + 1, 2 * l)] = im;
            matrix[(2 * j + 1, 2 * l + 1)] = re;
        }
        matrix[(2 * j, 2 * j)] += c[j].re;
        matrix[(2 * j, 2 * j + 1)] += c[j].im;
        matrix[(2 * j + 1, 2 * j)] += c[j].im;
        matrix[(2 * j + 1, 2 * j + 1)] -= c[j].re;
    }
    let asymmetry = infinity_norm(&(&matrix - matrix.transpose())) / infinity_norm(&matrix);
    LinearizedOperator { grid, sigma: p.sigma, omega: p.omega, matrix, asymmetry }
}

impl LinearizedOperator {
    pub fn apply(&self, v: &ComplexField) -> Result<ComplexField> {
        if v.grid != self.grid {
            return Err(Error::InvalidGrid("field and operator live on different grids".into()));
        }
        let out = &self.matrix * realify(&v.values);
        ComplexField::new(self.grid, complexify(&out))
    }

    pub fn symmetrized(&self) -> DMatrix<f64> {
        (&self.matrix + self.matrix.transpose()) * 0.5
    }
}

/// Matrix-free evaluation of S″_ω(φ_ω)v in its original (unsplit) form,
/// with FFT derivatives.
pub fn apply_direct(p: &SolitonProfile, v: &ComplexField) -> ComplexField {
    let s = p.sigma.value();
    let i = Complex64::i();
    let dphi = spectral::derivative(&p.grid, &p.field);
    let dv = spectral::derivative(&p.grid, &v.values);
    let d2v = spectral::second_derivative(&p.grid, &v.values);
    let values = (0..p.grid.points)
        .map(|j| {
            let (u, du) = (p.field[j], dphi[j]);
            let r2 = u.norm_sqr();
            let low = if r2 == 0.0 { 0.0 } else { r2.powf(s - 1.0) };
            let a = low * r2;
            -d2v[j] - i * s * low * u.conj() * du * v.values[j] - i * a * dv[j]
                + p.omega.omega0 * v.values[j]
                + p.omega.omega1 * i * dv[j]
                - i * s * low * u * du * v.values[j].conj()
        })
        .collect();
    ComplexField { grid: p.grid, values }
}

/// Lowest eigenvalues of the symmetrized operator.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub asymmetry: f64,
}

impl Spectrum {
    pub fn count_below(&self, threshold: f64) -> usize {
        self.eigenvalues.iter().filter(|&&e| e < threshold).count()
    }

    pub fn count_near_zero(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&e| e.abs() <= tol).count()
    }
}

/// The `count` smallest eigenvalues of (A + Aᵀ)/2 by a dense symmetric solver.
pub fn lowest_spectrum(op: &LinearizedOperator, count: usize) -> Result<Spectrum> {
    let sym = op.symmetrized();
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Convergence("symmetric eigensolver did not converge".into()))?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence("non-finite eigenvalue".into()));
    }
    values.sort_by(f64::total_cmp);
    values.truncate(count);
    Ok(Spectrum { eigenvalues: values, asymmetry: op.asymmetry })
}
