//! The solitary-wave profile φ_ω = ϕ_ω e^{iΘ} sampled on a periodic grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{kappa, Omega, Sigma};
use crate::spectral::{self, Grid};

/// Amplitude threshold that the profile must fall below at ±L/2.
pub const BOUNDARY_AMPLITUDE: f64 = 1e-12;

/// ln(cosh y − z) for y ≥ 0, accurate for large y and for z near 1.
fn ln_cosh_minus(y: f64, z: f64) -> f64 {
    let y = y.abs();
    if y <= 1.0 {
        let s = (0.5 * y).sinh();
        (2.0 * s * s + (1.0 - z)).ln()
    } else {
        let e = (-y).exp();
        y + (0.5 * (1.0 + e * e) - z * e).ln()
    }
}

/// ϕ_ω(x) = {(σ+1)κ² / (2√ω₀ cosh(σκx) − ω₁)}^{1/2σ}.
pub fn amplitude_at(sigma: Sigma, omega: Omega, x: f64) -> f64 {
    let s = sigma.value();
    let k = kappa(omega);
    let log_num = ((s + 1.0) * k * k).ln();
    let log_den = (2.0 * omega.omega0.sqrt()).ln() + ln_cosh_minus(s * k * x, omega.z());
    ((log_num - log_den) / (2.0 * s)).exp()
}

/// Θ(x) = ω₁x/2 − 1/(2σ+2)·∫_{−∞}^x ϕ^{2σ}, with the integral in closed form:
/// ∫_{−∞}^x ϕ^{2σ} = (2(σ+1)/σ)·[atan(r·tanh(σκx/2)) + atan r], r = √((1+z)/(1−z)).
pub fn phase_at(sigma: Sigma, omega: Omega, x: f64) -> f64 {
    let s = sigma.value();
    let k = kappa(omega);
    let z = omega.z();
    let r = ((1.0 + z) / (1.0 - z)).sqrt();
    0.5 * omega.omega1 * x - ((r * (0.5 * s * k * x).tanh()).atan() + r.atan()) / s
}

/// Total phase drop Θ(+∞) − Θ(−∞) − ω₁·(+∞ − −∞)/2 = −(2/σ)·atan r.
pub fn phase_jump(sigma: Sigma, omega: Omega) -> f64 {
    let z = omega.z();
    -2.0 * ((1.0 + z) / (1.0 - z)).sqrt().atan() / sigma.value()
}

/// Smallest period L with ϕ_ω(±L/2) ≤ `threshold`.
pub fn min_length(sigma: Sigma, omega: Omega, threshold: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while amplitude_at(sigma, omega, hi) > threshold {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if amplitude_at(sigma, omega, mid) > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    2.0 * hi
}

/// Half-width of the strip of analyticity of the profile around the real
/// axis: poles of 1/(cosh(σκx) − z) sit at Im x = ±acos(z)/(σκ).
pub fn analytic_strip(sigma: Sigma, omega: Omega) -> f64 {
    omega.z().acos() / (sigma.value() * kappa(omega))
}

/// Default grid: period 25% beyond the decay requirement (at least 40),
/// spacing fine enough that trapezoid sums are accurate to round-off, N ≥ 1024.
pub fn default_grid(sigma: Sigma, omega: Omega) -> Grid {
    let length = (1.25 * min_length(sigma, omega, BOUNDARY_AMPLITUDE)).ceil().max(40.0);
    let h_target = 2.0 * PI * analytic_strip(sigma, omega) / 36.0;
    let points = ((length / h_target).ceil() as usize).next_power_of_two().max(1024);
    Grid { length, points }
}

/// Sampled profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolitonProfile {
    pub sigma: Sigma,
    pub omega: Omega,
    pub grid: Grid,
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub field: Vec<Complex64>,
}

pub fn sample_profile(sigma: Sigma, omega: Omega, grid: Grid) -> Result<SolitonProfile> {
    let omega = Omega::new(omega.omega0, omega.omega1)?;
    let grid = Grid::new(grid.length, grid.points)?;
    let min_length = min_length(sigma, omega, BOUNDARY_AMPLITUDE);
    if grid.length < min_length {
        return Err(Error::GridTooSmall { length: grid.length, min_length });
    }
    let nodes = grid.nodes();
    let amplitude: Vec<f64> = nodes.iter().map(|&x| amplitude_at(sigma, omega, x)).collect();
    let phase: Vec<f64> = nodes.iter().map(|&x| phase_at(sigma, omega, x)).collect();
    let field = amplitude
        .iter()
        .zip(&phase)
        .map(|(&a, &t)| Complex64::from_polar(a, t))
        .collect();
    Ok(SolitonProfile { sigma, omega, grid, amplitude, phase, field })
}

/// Max-norm of −φ'' + ω₀φ + ω₁iφ' − i|φ|^{2σ}φ' with spectral derivatives.
pub fn stationary_residual(p: &SolitonProfile) -> f64 {
    let s = p.sigma.value();
    let d1 = spectral::derivative(&p.grid, &p.field);
    let d2 = spectral::second_derivative(&p.grid, &p.field);
    let i = Complex64::i();
    p.field
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(&u, (&ux, &uxx))| {
            let nonlinear = u.norm_sqr().powf(s);
            (-uxx + p.omega.omega0 * u + p.omega.omega1 * i * ux - i * nonlinear * ux).norm()
        })
        .fold(0.0, f64::max)
}

/// Step h = 10⁻⁴·(1 + |ω|) used for profile derivatives in ω.
pub fn default_derivative_step(omega: Omega) -> f64 {
    1e-4 * (1.0 + omega.norm())
}

/// ψ̂ = ξ₀∂_{ω₀}φ_ω + ξ₁∂_{ω₁}φ_ω by central differences along ω ± hξ,
/// with one level of Richardson extrapolation (h and h/2).
pub fn parameter_derivative(
    sigma: Sigma,
    omega: Omega,
    direction: (f64, f64),
    step: f64,
    grid: Grid,
) -> Result<Vec<Complex64>> {
    if direction == (0.0, 0.0) {
        Omega::new(omega.omega0, omega.omega1)?;
        return Ok(vec![Complex64::new(0.0, 0.0); grid.points]);
    }
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    let central = |h: f64| -> Result<Vec<Complex64>> {
        let plus = sample_profile(sigma, omega.displaced(h, direction)?, grid)?;
        let minus = sample_profile(sigma, omega.displaced(-h, direction)?, grid)?;
        Ok(plus
            .field
            .iter()
            .zip(&minus.field)
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect())
    };
    let coarse = central(step)?;
    let fine = central(0.5 * step)?;
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;

    fn sig(s: f64) -> Sigma {
        Sigma::new(s).unwrap()
    }

    #[test]
    fn amplitude_values() {
        let w = Omega::new(1.0, 0.0).unwrap();
        assert!((amplitude_at(sig(1.0), w, 0.0) - 2.0).abs() < 1e-14);
        // ϕ² = 4 sech(2x) ~ 8 e^{−2x}
        let x = 15.0;
        let a = amplitude_at(sig(1.0), w, x);
        assert!((a * a / (8.0 * (-2.0 * x).exp()) - 1.0).abs() < 1e-10);
        let w = Omega::new(1.3, -0.7).unwrap();
        for &x in &[0.3, 2.0, 11.0] {
            assert_eq!(amplitude_at(sig(1.7), w, x), amplitude_at(sig(1.7), w, -x));
        }
    }

    #[test]
    fn phase_limits_and_symmetry() {
        let w = Omega::new(1.0, 0.0).unwrap();
        assert!(phase_at(sig(1.0), w, -60.0).abs() < 1e-14);
        for &x in &[0.1, 1.0, 3.7] {
            let lhs = phase_at(sig(1.0), w, x) + phase_at(sig(1.0), w, -x);
            assert!((lhs - 2.0 * phase_at(sig(1.0), w, 0.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn phase_closed_form_matches_quadrature() {
        for &(s, w0, w1) in &[(1.0, 1.0, 0.0), (1.6, 1.0, -0.3), (1.3, 2.0, 1.1)] {
            let (s, w) = (sig(s), Omega::new(w0, w1).unwrap());
            let dens = |y: f64| amplitude_at(s, w, y).powf(2.0 * s.value());
            let lower = -0.5 * min_length(s, w, 1e-40);
            for &x in &[-3.0, -0.4, 0.0, 0.9, 5.0] {
                let int = quadrature::integrate(dens, lower, x, &[0.0], 1e-14, 1e-16, 2000).unwrap();
                let theta = 0.5 * w1 * x - int.value / (2.0 * s.value() + 2.0);
                assert!((phase_at(s, w, x) - theta).abs() < 1e-10);
            }
        }
        // Total jump for σ = 1, ω = (1, 0): −¼∫ϕ² = −π/2.
        let jump = phase_jump(sig(1.0), Omega::new(1.0, 0.0).unwrap());
        assert!((jump + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_profile_invariants() {
        let w = Omega::new(1.0, 0.0).unwrap();
        let p = sample_profile(sig(1.0), w, Grid::new(64.0, 1024).unwrap()).unwrap();
        assert!(p.amplitude[0] < 1e-12);
        assert!((p.field[512].norm() - 2.0).abs() < 1e-14);
        for (f, a) in p.field.iter().zip(&p.amplitude) {
            assert!((f.norm() - a).abs() <= 1e-15 * a.max(1e-300) + 1e-300);
            assert!(*a > 0.0);
        }
        let max = p.amplitude.iter().cloned().fold(0.0, f64::max);
        assert_eq!(max, p.amplitude[512]);
    }

    #[test]
    fn small_grid_is_rejected_with_minimum() {
        let w = Omega::new(1.0, 0.0).unwrap();
        match sample_profile(sig(1.0), w, Grid::new(10.0, 256).unwrap()) {
            Err(Error::GridTooSmall { min_length, .. }) => {
                assert!(min_length > 10.0);
                assert!(sample_profile(sig(1.0), w, Grid::new(min_length * 1.01, 256).unwrap()).is_ok());
            }
            other => panic!("expected GridTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn residual_is_small_and_refines() {
        let (s, w) = (sig(1.5), Omega::new(1.0, 0.4).unwrap());
        let len = default_grid(s, w).length;
        let res: Vec<f64> = [128, 256, 512, 1024]
            .iter()
            .map(|&n| stationary_residual(&sample_profile(s, w, Grid::new(len, n).unwrap()).unwrap()))
            .collect();
        assert!(res[3] <= 1e-6, "{res:?}");
        assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let w = Omega::new(1.0, 0.0).unwrap();
        let mut p = sample_profile(sig(1.0), w, Grid::new(64.0, 64).unwrap()).unwrap();
        p.field.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        assert_eq!(stationary_residual(&p), 0.0);
    }

    #[test]
    fn parameter_derivative_is_linear() {
        let (s, w) = (sig(1.5), Omega::new(1.0, 0.4).unwrap());
        let g = default_grid(s, w);
        let h = default_derivative_step(w);
        let zero = parameter_derivative(s, w, (0.0, 0.0), h, g).unwrap();
        assert!(zero.iter().all(|c| c.norm() == 0.0));
        let a = parameter_derivative(s, w, (0.3, -0.2), h, g).unwrap();
        let b = parameter_derivative(s, w, (0.6, -0.4), h, g).unwrap();
        let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (a, b) in a.iter().zip(&b) {
            assert!((2.0 * a - b).norm() < 1e-7 * scale);
        }
    }

    #[test]
    fn parameter_derivative_rejects_stencil_outside_domain() {
        let (s, w) = (sig(1.5), Omega::new(1.0, 1.99999).unwrap());
        let g = Grid::new(4000.0, 1024).unwrap();
        assert!(matches!(parameter_derivative(s, w, (0.0, 1.0), 1e-3, g), Err(Error::Domain(_))));
    }
}
