//! Special-function layer: κ_ω, κ̃_ω, the moment integrals α_{n,ω}, the
//! stability function F_σ and its root z₀(σ).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Nonlinearity exponent σ ≥ 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sigma(f64);

impl Sigma {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 1.0 {
            return Err(Error::Domain(format!("sigma must be finite and >= 1, got {value}")));
        }
        Ok(Sigma(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Requires the borderline regime 1 < σ < 2 where the root z₀ exists.
    pub fn require_borderline(self) -> Result<Self> {
        if self.0 > 1.0 && self.0 < 2.0 {
            Ok(self)
        } else {
            Err(Error::Domain(format!("sigma must lie in (1, 2), got {}", self.0)))
        }
    }

    /// 3/2 ≤ σ < 2: the range where the energy is C³ and the instability
    /// theorem applies.
    pub fn within_theorem_range(self) -> bool {
        (1.5..2.0).contains(&self.0)
    }
}

/// Frequency pair (ω₀, ω₁) with ω₁² < 4ω₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Omega {
    pub omega0: f64,
    pub omega1: f64,
}

impl Omega {
    pub fn new(omega0: f64, omega1: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega1.is_finite()) || omega1 * omega1 >= 4.0 * omega0 {
            return Err(Error::Domain(format!(
                "(omega0, omega1) = ({omega0}, {omega1}) violates omega1^2 < 4 omega0"
            )));
        }
        Ok(Omega { omega0, omega1 })
    }

    /// The point of the degenerate line ω₁ = 2z√ω₀.
    pub fn from_z(omega0: f64, z: f64) -> Result<Self> {
        if !(omega0 > 0.0) {
            return Err(Error::Domain(format!("omega0 must be positive, got {omega0}")));
        }
        Omega::new(omega0, 2.0 * z * omega0.sqrt())
    }

    /// z = ω₁ / (2√ω₀) ∈ (−1, 1).
    pub fn z(self) -> f64 {
        self.omega1 / (2.0 * self.omega0.sqrt())
    }

    /// ω + λξ, checked for membership in Ω.
    pub fn displaced(self, lambda: f64, xi: (f64, f64)) -> Result<Self> {
        Omega::new(self.omega0 + lambda * xi.0, self.omega1 + lambda * xi.1)
    }

    pub fn norm(self) -> f64 {
        self.omega0.hypot(self.omega1)
    }
}

/// κ_ω, κ̃_ω and z bundled for one (σ, ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub kappa: f64,
    pub kappa_tilde: f64,
    pub z: f64,
}

impl DerivedParams {
    pub fn new(sigma: Sigma, omega: Omega) -> Self {
        DerivedParams {
            kappa: kappa(omega),
            kappa_tilde: kappa_tilde(sigma, omega),
            z: omega.z(),
        }
    }
}

/// Controls for the truncated improper integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Fixed truncation point; `None` picks one from the analytic tail bound.
    pub y_max: Option<f64>,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-13, abs_tol: 1e-15, y_max: None, max_subdivisions: 4000 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Domain("max_subdivisions must be positive".into()));
        }
        Ok(())
    }

    /// Truncation point for an integrand bounded by `weight · (cosh y − z)^{−p}`.
    ///
    /// For y ≥ ln 4, cosh y − z ≥ e^y/4, so the tail beyond Y is at most
    /// `weight · 4^p e^{−pY} / p`. Returns (Y, tail bound).
    fn truncation(&self, sigma: f64, p: f64, weight: f64) -> (f64, f64) {
        let tail = |y: f64| weight * 4f64.powf(p) * (-p * y).exp() / p;
        let y = match self.y_max {
            Some(y) => y.max(4f64.ln()),
            None => {
                let certified = ((weight * 4f64.powf(p) / (p * 0.5 * self.abs_tol)).ln() / p).max(4f64.ln());
                let heuristic = 60f64.max(2.0 * sigma * (1.0 / self.abs_tol).ln());
                certified.max(heuristic).min(700.0)
            }
        };
        (y, tail(y))
    }
}

/// The moments α₀,ω and α₁,ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaMoments {
    pub alpha0: f64,
    pub alpha1: f64,
}

/// Partial derivatives of α₀ and α₁ with respect to ω₀ and ω₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaDerivatives {
    pub d_alpha0_d_omega0: f64,
    pub d_alpha0_d_omega1: f64,
    pub d_alpha1_d_omega0: f64,
    pub d_alpha1_d_omega1: f64,
}

/// κ_ω = √(4ω₀ − ω₁²).
pub fn kappa(omega: Omega) -> f64 {
    (4.0 * omega.omega0 - omega.omega1 * omega.omega1).sqrt()
}

/// Fallible κ_ω for raw coordinates.
pub fn kappa_checked(omega0: f64, omega1: f64) -> Result<f64> {
    Omega::new(omega0, omega1).map(kappa)
}

/// κ̃_ω = 2^{1/σ−2} σ^{−1} (1+σ)^{1/σ} κ_ω^{2/σ−2} ω₀^{−1/(2σ)−1/2}.
pub fn kappa_tilde(sigma: Sigma, omega: Omega) -> f64 {
    let s = sigma.value();
    let k = kappa(omega);
    2f64.powf(1.0 / s - 2.0) / s
        * (1.0 + s).powf(1.0 / s)
        * k.powf(2.0 / s - 2.0)
        * omega.omega0.powf(-0.5 / s - 0.5)
}

/// Prefactor multiplying the α moments in the second and third ω-derivatives
/// of d(ω) = S_ω(φ_ω): 2^{−2/σ}·κ̃_ω.
///
/// With this normalization the closed forms reproduce finite differences of
/// the action evaluated on the sampled profile.
pub fn moment_prefactor(sigma: Sigma, omega: Omega) -> f64 {
    kappa_tilde(sigma, omega) * 2f64.powf(-2.0 / sigma.value())
}

/// (cosh y − z) evaluated without cancellation for z close to 1.
#[inline]
fn cosh_minus(y: f64, z: f64) -> f64 {
    let s = (0.5 * y).sinh();
    2.0 * s * s + (1.0 - z)
}

fn check_z(z: f64) -> Result<()> {
    if !z.is_finite() || z.abs() > 1.0 - 1e-6 {
        return Err(Error::Domain(format!("|z| must not exceed 1 - 1e-6, got {z}")));
    }
    Ok(())
}

fn breakpoints(z: f64) -> Vec<f64> {
    let w = (2.0 * (1.0 - z)).sqrt();
    vec![w, 4.0 * w, 1.0, 4.0, 16.0]
}

/// ∫₀^∞ (cosh y − z)^{−p} · g(y) dy where, on the tail, the whole integrand
/// is bounded by `weight · (cosh y − z)^{−decay}`.
#[allow(clippy::too_many_arguments)]
fn improper<G: Fn(f64) -> f64>(
    sigma: f64,
    z: f64,
    p: f64,
    decay: f64,
    weight: f64,
    g: G,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let (y_max, tail) = spec.truncation(sigma, decay, weight);
    let integrand = |y: f64| (-p * cosh_minus(y, z).ln()).exp() * g(y);
    let r = quadrature::integrate(
        integrand,
        0.0,
        y_max,
        &breakpoints(z),
        spec.rel_tol,
        spec.abs_tol,
        spec.max_subdivisions,
    )?;
    let total_err = r.error + tail;
    if total_err > spec.abs_tol.max(spec.rel_tol * r.value.abs()) * 2.0 {
        return Err(Error::Convergence(format!(
            "error {total_err:e} exceeds tolerance for value {:e}",
            r.value
        )));
    }
    Ok(r.value)
}

/// α_{n,ω} = ∫₀^∞ (cosh(σκ_ω x) − ω₁/2√ω₀)^{−1/σ−n} dx.
pub fn alpha_n(sigma: Sigma, omega: Omega, n: u32, spec: &QuadratureSpec) -> Result<f64> {
    let omega = Omega::new(omega.omega0, omega.omega1)?;
    let s = sigma.value();
    let z = omega.z();
    check_z(z)?;
    let p = 1.0 / s + n as f64;
    let j = improper(s, z, p, p, 1.0, |_| 1.0, spec)?;
    Ok(j / (s * kappa(omega)))
}

pub fn alpha_moments(sigma: Sigma, omega: Omega, spec: &QuadratureSpec) -> Result<AlphaMoments> {
    Ok(AlphaMoments {
        alpha0: alpha_n(sigma, omega, 0, spec)?,
        alpha1: alpha_n(sigma, omega, 1, spec)?,
    })
}

/// Closed-form ω-derivatives of α₀ and α₁ in terms of α₀, α₁ and κ.
pub fn alpha_derivatives_from(sigma: Sigma, omega: Omega, m: AlphaMoments) -> AlphaDerivatives {
    let s = sigma.value();
    let (w0, w1) = (omega.omega0, omega.omega1);
    let k2 = kappa(omega).powi(2);
    let sw0 = w0.sqrt();
    let (a0, a1) = (m.alpha0, m.alpha1);
    AlphaDerivatives {
        d_alpha0_d_omega0: -2.0 / k2 * a0 - w1 / (4.0 * s * w0 * sw0) * a1,
        d_alpha0_d_omega1: w1 / k2 * a0 + 1.0 / (2.0 * s * sw0) * a1,
        d_alpha1_d_omega0: -w1 / (s * sw0 * k2) * a0
            - (w1 * w1 * (2.0 + s) + 4.0 * s * w0) / (2.0 * s * w0 * k2) * a1,
        d_alpha1_d_omega1: 2.0 * sw0 / (s * k2) * a0 + 2.0 * w1 * (s + 1.0) / (s * k2) * a1,
    }
}

pub fn alpha_derivatives(sigma: Sigma, omega: Omega, spec: &QuadratureSpec) -> Result<AlphaDerivatives> {
    let m = alpha_moments(sigma, omega, spec)?;
    Ok(alpha_derivatives_from(sigma, omega, m))
}

/// The two integrals entering F_σ(z):
/// ∫₀^∞ (cosh y − z)^{−1/σ} dy and ∫₀^∞ (cosh y − z)^{−1/σ−1}(z cosh y − 1) dy.
pub fn f_sigma_integrals(sigma: Sigma, z: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    check_z(z)?;
    let s = sigma.value();
    let first = improper(s, z, 1.0 / s, 1.0 / s, 1.0, |_| 1.0, spec)?;
    // |z cosh y − 1| / (cosh y − z) ≤ 3 once y ≥ ln 4.
    let second = improper(
        s,
        z,
        1.0 / s + 1.0,
        1.0 / s,
        3.0,
        |y| {
            let c = (0.5 * y).sinh();
            z * 2.0 * c * c + (z - 1.0)
        },
        spec,
    )?;
    Ok((first, second))
}

/// F_σ(z) = (σ−1)²[∫(cosh y − z)^{−1/σ}]² − [∫(cosh y − z)^{−1/σ−1}(z cosh y − 1)]².
pub fn f_sigma(sigma: Sigma, z: f64, spec: &QuadratureSpec) -> Result<f64> {
    let (first, second) = f_sigma_integrals(sigma, z, spec)?;
    let sm1 = sigma.value() - 1.0;
    Ok(sm1 * sm1 * first * first - second * second)
}

/// Distance from ±1 at which the root bracket is cut off.
pub const Z_EDGE: f64 = 1e-6;
pub const Z0_SCAN_POINTS: usize = 100;
pub const Z0_RESIDUAL_TOL: f64 = 1e-10;
pub const Z0_WIDTH_TOL: f64 = 1e-12;

/// Outcome of the sign scan over (−1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SignScan {
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    /// Indices i with a sign change between i and i+1.
    pub changes: Vec<usize>,
}

pub fn scan_f_sigma(sigma: Sigma, points: usize, spec: &QuadratureSpec) -> Result<SignScan> {
    let lo = -1.0 + Z_EDGE;
    let hi = 1.0 - Z_EDGE;
    let z: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let f = z.iter().map(|&z| f_sigma(sigma, z, spec)).collect::<Result<Vec<_>>>()?;
    let changes = f
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] > 0.0) != (w[1] > 0.0))
        .map(|(i, _)| i)
        .collect();
    Ok(SignScan { z, f, changes })
}

/// The unique root z₀(σ) of F_σ on (−1, 1), for 1 ≤ σ < 2.
///
/// σ = 1 is accepted and reports [`Error::NoRoot`], since F₁ ≡ −1.
pub fn find_z0(sigma: Sigma, spec: &QuadratureSpec) -> Result<f64> {
    let s = sigma.value();
    if !(1.0..2.0).contains(&s) {
        return Err(Error::Domain(format!("z0 requires 1 < sigma < 2, got {s}")));
    }
    let scan = scan_f_sigma(sigma, Z0_SCAN_POINTS, spec)?;
    match scan.changes.len() {
        0 => {
            return Err(Error::NoRoot(if s == 1.0 {
                "F_1 ≡ −1".to_string()
            } else {
                format!("F_sigma keeps one sign on (-1, 1) for sigma = {s}")
            }))
        }
        1 => {}
        count => return Err(Error::MultipleRoots { count }),
    }
    let i = scan.changes[0];
    let (mut a, mut b) = (scan.z[i], scan.z[i + 1]);
    let mut fa = scan.f[i];
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f_sigma(sigma, m, spec)?;
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a <= Z0_WIDTH_TOL {
            break;
        }
    }
    let z0 = 0.5 * (a + b);
    let residual = f_sigma(sigma, z0, spec)?;
    if residual.abs() > Z0_RESIDUAL_TOL {
        return Err(Error::Convergence(format!(
            "bisection stalled: |F(z0)| = {:e} at z0 = {z0}",
            residual.abs()
        )));
    }
    Ok(z0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sig(s: f64) -> Sigma {
        Sigma::new(s).unwrap()
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(Omega::new(1.0, 0.0).unwrap()), 2.0);
        assert!((kappa(Omega::new(4.0, 2.0).unwrap()) - 12f64.sqrt()).abs() < 1e-15);
        assert!(matches!(kappa_checked(1.0, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn kappa_tilde_values() {
        let t = |s, w0, w1| kappa_tilde(sig(s), Omega::new(w0, w1).unwrap());
        assert!((t(1.0, 1.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((t(1.0, 4.0, 0.0) - 0.25).abs() < 1e-15);
        assert!((t(2.0, 1.0, 0.0) - 3f64.sqrt() * 2f64.powf(-3.5)).abs() < 1e-15);
    }

    #[test]
    fn alpha_special_values() {
        let spec = QuadratureSpec::default();
        let w = Omega::new(1.0, 0.0).unwrap();
        // ∫ sech(2x) dx = π/4 and ∫ sech²(2x) dx = 1/2 on (0, ∞).
        assert!((alpha_n(sig(1.0), w, 0, &spec).unwrap() - PI / 4.0).abs() < 1e-12);
        assert!((alpha_n(sig(1.0), w, 1, &spec).unwrap() - 0.5).abs() < 1e-12);
        let bad = Omega { omega0: 1.0, omega1: 2.0 };
        assert!(matches!(alpha_n(sig(1.0), bad, 0, &spec), Err(Error::Domain(_))));
    }

    #[test]
    fn alpha_derivatives_at_symmetric_point() {
        let d = alpha_derivatives(sig(1.0), Omega::new(1.0, 0.0).unwrap(), &QuadratureSpec::default()).unwrap();
        assert!((d.d_alpha0_d_omega1 - 0.25).abs() < 1e-12);
        assert!((d.d_alpha1_d_omega1 - PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn f_one_is_minus_one() {
        let spec = QuadratureSpec::default();
        for i in 0..11 {
            let z = -0.99 + 1.98 * i as f64 / 10.0;
            assert!((f_sigma(sig(1.0), z, &spec).unwrap() + 1.0).abs() < 1e-10, "z = {z}");
        }
        assert!(matches!(f_sigma(sig(1.5), 1.0, &spec), Err(Error::Domain(_))));
    }

    #[test]
    fn z0_errors() {
        let spec = QuadratureSpec::default();
        assert!(matches!(find_z0(sig(1.0), &spec), Err(Error::NoRoot(_))));
        assert!(matches!(find_z0(sig(2.0), &spec), Err(Error::Domain(_))));
    }

    #[test]
    fn sigma_and_omega_validation() {
        assert!(Sigma::new(0.9).is_err());
        assert!(Sigma::new(f64::NAN).is_err());
        assert!(sig(1.0).require_borderline().is_err());
        assert!(sig(1.5).within_theorem_range());
        assert!(!sig(1.4).within_theorem_range());
        assert!(Omega::new(-1.0, 0.0).is_err());
        assert!(Omega::new(1.0, -1.99).is_ok());
    }
}
