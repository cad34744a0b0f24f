//! Derivatives of d(ω) = S_ω(φ_ω) in closed form through the α moments, the
//! zero eigenvector of d″(ω) on the degenerate line and the third directional
//! derivative ν, each paired with a finite-difference oracle on the sampled
//! action.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{d_value, mass, momentum, ComplexField};
use crate::params::{
    alpha_moments, f_sigma, find_z0, kappa, moment_prefactor, AlphaMoments, Omega, QuadratureSpec, Sigma,
};
use crate::profile::{default_grid, sample_profile};
use crate::spectral::Grid;

/// |det d″| ≤ DEGENERACY_TOL·‖d″‖²_F counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-6;
/// Relative tolerance for the branch sign relations and the squared identity.
pub const BRANCH_TOL: f64 = 1e-5;
/// Base step for second differences of d in ω; see [`hessian_fd_step`].
pub const HESSIAN_FD_STEP: f64 = 1e-3;
/// Base step (in ω-space) for third differences of d.
pub const THIRD_FD_STEP: f64 = 1e-2;

/// Symmetric 2×2 matrix [[d00, d01], [d01, d11]], index 0 ↔ ω₀, 1 ↔ ω₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hessian {
    pub d00: f64,
    pub d01: f64,
    pub d11: f64,
}

/// Eigenpairs of a symmetric 2×2 matrix, ascending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigen2 {
    pub values: [f64; 2],
    pub vectors: [[f64; 2]; 2],
}

impl Hessian {
    pub fn det(&self) -> f64 {
        self.d00 * self.d11 - self.d01 * self.d01
    }

    pub fn frobenius(&self) -> f64 {
        (self.d00 * self.d00 + 2.0 * self.d01 * self.d01 + self.d11 * self.d11).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.d00.abs().max(self.d01.abs()).max(self.d11.abs())
    }

    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (self.d00 * v.0 + self.d01 * v.1, self.d01 * v.0 + self.d11 * v.1)
    }

    /// max |self − other| / max |self|
    pub fn rel_diff(&self, other: &Hessian) -> f64 {
        let d = (self.d00 - other.d00)
            .abs()
            .max((self.d01 - other.d01).abs())
            .max((self.d11 - other.d11).abs());
        d / self.max_abs()
    }

    /// Closed-form eigen-decomposition.
    pub fn eigen(&self) -> Eigen2 {
        let (a, b, c) = (self.d00, self.d01, self.d11);
        let mean = 0.5 * (a + c);
        let radius = (0.5 * (a - c)).hypot(b);
        let values = [mean - radius, mean + radius];
        let vector = |lambda: f64| -> [f64; 2] {
            // Two candidate kernel vectors of (H − λI); take the better conditioned.
            let v1 = [b, lambda - a];
            let v2 = [lambda - c, b];
            let n1 = v1[0].hypot(v1[1]);
            let n2 = v2[0].hypot(v2[1]);
            if n1.max(n2) == 0.0 {
                return if lambda == values[0] { [1.0, 0.0] } else { [0.0, 1.0] };
            }
            if n1 >= n2 {
                [v1[0] / n1, v1[1] / n1]
            } else {
                [v2[0] / n2, v2[1] / n2]
            }
        };
        let v0 = vector(values[0]);
        // Orthogonal complement keeps the pair exactly orthonormal.
        let v1 = [-v0[1], v0[0]];
        Eigen2 { values, vectors: [v0, v1] }
    }
}

impl Eigen2 {
    pub fn reconstruct(&self) -> Hessian {
        let [l0, l1] = self.values;
        let [u, v] = self.vectors;
        Hessian {
            d00: l0 * u[0] * u[0] + l1 * v[0] * v[0],
            d01: l0 * u[0] * u[1] + l1 * v[0] * v[1],
            d11: l0 * u[1] * u[1] + l1 * v[1] * v[1],
        }
    }
}

/// The four third partial derivatives of d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThirdPartials {
    pub d000: f64,
    pub d001: f64,
    pub d011: f64,
    pub d111: f64,
}

impl ThirdPartials {
    fn as_array(&self) -> [f64; 4] {
        [self.d000, self.d001, self.d011, self.d111]
    }

    /// Largest entrywise relative disagreement.
    pub fn rel_diff(&self, other: &ThirdPartials) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs() / a.abs())
            .fold(0.0, f64::max)
    }

    /// d³/dλ³ d(ω + λξ) = Σ binomial weights × partials.
    pub fn directional(&self, xi: (f64, f64)) -> f64 {
        let (a, b) = xi;
        a * a * a * self.d000 + 3.0 * a * a * b * self.d001 + 3.0 * a * b * b * self.d011 + b * b * b * self.d111
    }
}

/// (∂_{ω₀}d, ∂_{ω₁}d) = (Q₀(φ_ω), Q₁(φ_ω)) in terms of α₀, α₁.
pub fn gradient_closed_from(sigma: Sigma, omega: Omega, m: AlphaMoments) -> (f64, f64) {
    let s = sigma.value();
    let k = kappa(omega);
    let a = ((s + 1.0) * k * k / (2.0 * omega.omega0.sqrt())).powf(1.0 / s);
    let q0 = a * m.alpha0;
    let q1 = -0.5 * omega.omega1 * a * m.alpha0 + a.powf(s + 1.0) * m.alpha1 / (2.0 * (s + 1.0));
    (q0, q1)
}

pub fn hessian_closed_from(sigma: Sigma, omega: Omega, m: AlphaMoments) -> Hessian {
    let s = sigma.value();
    let (w0, w1) = (omega.omega0, omega.omega1);
    let k2 = kappa(omega).powi(2);
    let pre = moment_prefactor(sigma, omega);
    let (a0, a1) = (m.alpha0, m.alpha1);
    let d00 = pre / w0.sqrt() * (2.0 * w1 * w1 - 8.0 * (s - 1.0) * w0) * a0 - pre / w0 * k2 * w1 * a1;
    let d01 = 4.0 * pre * w1 * (s - 2.0) * w0.sqrt() * a0 + 2.0 * pre * k2 * a1;
    Hessian { d00, d01, d11: w0 * d00 }
}

/// d″(ω) from the α moments; ∂²_{ω₁}d = ω₀∂²_{ω₀}d by construction.
pub fn hessian_closed(sigma: Sigma, omega: Omega, spec: &QuadratureSpec) -> Result<Hessian> {
    let m = alpha_moments(sigma, omega, spec)?;
    Ok(hessian_closed_from(sigma, omega, m))
}

pub fn third_partials_from(sigma: Sigma, omega: Omega, m: AlphaMoments) -> ThirdPartials {
    let s = sigma.value();
    let (w0, w1) = (omega.omega0, omega.omega1);
    let k2 = kappa(omega).powi(2);
    let sw0 = w0.sqrt();
    let pre = moment_prefactor(sigma, omega);
    let (a0, a1) = (m.alpha0, m.alpha1);
    let d001 = 2.0 * w1 * pre * a0 / (s * k2 * sw0)
        * (4.0 * (2.0 - 3.0 * s) * (s - 2.0) * w0 - (s - 1.0) * k2)
        + pre * a1 / (s * w0) * (4.0 * (2.0 - s) * w0 - 2.0 * s * w1 * w1 - (1.0 + s) * k2);
    let d011 = 4.0 * sw0 * pre * a0 / (s * k2)
        * ((3.0 * s - 2.0) * (s - 2.0) * w1 * w1 + (s - 1.0).powi(2) * k2)
        + 2.0 * (3.0 * s - 2.0) * w1 * pre * a1 / s;
    let d00 = hessian_closed_from(sigma, omega, m).d00;
    ThirdPartials { d000: (d011 - d00) / w0, d001, d011, d111: w0 * d001 }
}

/// ∂²_{ω₀}∂_{ω₁}d and ∂_{ω₀}∂²_{ω₁}d explicitly; the other two through
/// ω₀∂³_{ω₀}d = ∂_{ω₀}∂²_{ω₁}d − ∂²_{ω₀}d and ∂³_{ω₁}d = ω₀∂²_{ω₀}∂_{ω₁}d.
pub fn third_partials(sigma: Sigma, omega: Omega, spec: &QuadratureSpec) -> Result<ThirdPartials> {
    let m = alpha_moments(sigma, omega, spec)?;
    Ok(third_partials_from(sigma, omega, m))
}

fn d_at(sigma: Sigma, omega: Omega, grid: Grid, i: f64, j: f64, h: f64) -> Result<f64> {
    d_value(sigma, Omega::new(omega.omega0 + i * h, omega.omega1 + j * h)?, grid)
}

/// h = HESSIAN_FD_STEP·(1 + |ω|), since round-off in d grows with |ω|.
pub fn hessian_fd_step(omega: Omega) -> f64 {
    HESSIAN_FD_STEP * (1.0 + omega.norm())
}

/// Plain 9-point second differences of d with step h (no extrapolation).
pub fn second_differences(sigma: Sigma, omega: Omega, grid: Grid, h: f64) -> Result<Hessian> {
    let d = |i: f64, j: f64| d_at(sigma, omega, grid, i, j, h);
    let center = d(0.0, 0.0)?;
    let h2 = h * h;
    let d00 = (d(1.0, 0.0)? - 2.0 * center + d(-1.0, 0.0)?) / h2;
    let d11 = (d(0.0, 1.0)? - 2.0 * center + d(0.0, -1.0)?) / h2;
    let d01 = (d(1.0, 1.0)? - d(1.0, -1.0)? - d(-1.0, 1.0)? + d(-1.0, -1.0)?) / (4.0 * h2);
    Ok(Hessian { d00, d01, d11 })
}

/// Finite-difference Hessian of d_value: 9-point stencil, Richardson over h, h/2.
pub fn hessian_fd(sigma: Sigma, omega: Omega, grid: Grid, h: f64) -> Result<Hessian> {
    let coarse = second_differences(sigma, omega, grid, h)?;
    let fine = second_differences(sigma, omega, grid, 0.5 * h)?;
    let r = |f: f64, c: f64| (4.0 * f - c) / 3.0;
    Ok(Hessian { d00: r(fine.d00, coarse.d00), d01: r(fine.d01, coarse.d01), d11: r(fine.d11, coarse.d11) })
}

/// Jacobian of ω ↦ (Q₀(φ_ω), Q₁(φ_ω)) by Richardson-extrapolated central
/// differences, as a full (unsymmetrized) matrix `[[∂₀Q₀, ∂₁Q₀], [∂₀Q₁, ∂₁Q₁]]`.
pub fn charge_jacobian_fd(sigma: Sigma, omega: Omega, grid: Grid, h: f64) -> Result<[[f64; 2]; 2]> {
    let charges = |w: Omega| -> Result<(f64, f64)> {
        let u = ComplexField::from_profile(&sample_profile(sigma, w, grid)?);
        Ok((mass(&u), momentum(&u)))
    };
    let column = |dir: (f64, f64)| -> Result<(f64, f64)> {
        let central = |h: f64| -> Result<(f64, f64)> {
            let p = charges(omega.displaced(h, dir)?)?;
            let m = charges(omega.displaced(-h, dir)?)?;
            Ok(((p.0 - m.0) / (2.0 * h), (p.1 - m.1) / (2.0 * h)))
        };
        let c = central(h)?;
        let f = central(0.5 * h)?;
        Ok(((4.0 * f.0 - c.0) / 3.0, (4.0 * f.1 - c.1) / 3.0))
    };
    let c0 = column((1.0, 0.0))?;
    let c1 = column((0.0, 1.0))?;
    Ok([[c0.0, c1.0], [c0.1, c1.1]])
}

fn third_differences(sigma: Sigma, omega: Omega, grid: Grid, h: f64) -> Result<ThirdPartials> {
    let d = |i: f64, j: f64| d_at(sigma, omega, grid, i, j, h);
    let h3 = h * h * h;
    let d000 = (d(2.0, 0.0)? - 2.0 * d(1.0, 0.0)? + 2.0 * d(-1.0, 0.0)? - d(-2.0, 0.0)?) / (2.0 * h3);
    let d111 = (d(0.0, 2.0)? - 2.0 * d(0.0, 1.0)? + 2.0 * d(0.0, -1.0)? - d(0.0, -2.0)?) / (2.0 * h3);
    let second0 = |j: f64| -> Result<f64> { Ok(d(1.0, j)? - 2.0 * d(0.0, j)? + d(-1.0, j)?) };
    let second1 = |i: f64| -> Result<f64> { Ok(d(i, 1.0)? - 2.0 * d(i, 0.0)? + d(i, -1.0)?) };
    let d001 = (second0(1.0)? - second0(-1.0)?) / (2.0 * h3);
    let d011 = (second1(1.0)? - second1(-1.0)?) / (2.0 * h3);
    Ok(ThirdPartials { d000, d001, d011, d111 })
}

/// Third partials of d_value by central differences, Richardson over h, h/2.
pub fn third_partials_fd(sigma: Sigma, omega: Omega, grid: Grid, h: f64) -> Result<ThirdPartials> {
    let c = third_differences(sigma, omega, grid, h)?;
    let f = third_differences(sigma, omega, grid, 0.5 * h)?;
    let r = |f: f64, c: f64| (4.0 * f - c) / 3.0;
    Ok(ThirdPartials {
        d000: r(f.d000, c.d000),
        d001: r(f.d001, c.d001),
        d011: r(f.d011, c.d011),
        d111: r(f.d111, c.d111),
    })
}

/// ξ = (−ω₀∂²_{ω₀}d, ∂_{ω₀}∂_{ω₁}d) for a Hessian known to be degenerate.
pub fn zero_eigenvector_of(omega: Omega, h: &Hessian) -> Result<(f64, f64)> {
    let threshold = DEGENERACY_TOL * h.frobenius().powi(2);
    if !(h.det().abs() <= threshold) {
        return Err(Error::NotDegenerate { det: h.det(), threshold });
    }
    let xi = (-omega.omega0 * h.d00, h.d01);
    if xi.0 == 0.0 && xi.1 == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(xi)
}

pub fn zero_eigenvector(sigma: Sigma, omega: Omega, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    sigma.require_borderline()?;
    zero_eigenvector_of(omega, &hessian_closed(sigma, omega, spec)?)
}

/// ‖d″ξ‖ / (‖d″‖_F ‖ξ‖).
pub fn kernel_residual(h: &Hessian, xi: (f64, f64)) -> f64 {
    let r = h.apply(xi);
    r.0.hypot(r.1) / (h.frobenius() * xi.0.hypot(xi.1))
}

/// Which of ∂_{ω₀}∂_{ω₁}d = ∓√ω₀·∂²_{ω₀}d holds at a degenerate point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// ∂_{ω₀}∂_{ω₁}d = −√ω₀·∂²_{ω₀}d
    Minus,
    /// ∂_{ω₀}∂_{ω₁}d = +√ω₀·∂²_{ω₀}d
    Plus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }
}

/// Relative residual of (∂₀∂₁d)² = ω₀(∂²₀d)².
pub fn squared_identity_residual(omega: Omega, h: &Hessian) -> f64 {
    let lhs = h.d01 * h.d01;
    let rhs = omega.omega0 * h.d00 * h.d00;
    (lhs - rhs).abs() / lhs.max(rhs)
}

pub fn branch_of(omega: Omega, h: &Hessian) -> Result<Branch> {
    zero_eigenvector_of(omega, h)?;
    let sq = squared_identity_residual(omega, h);
    if sq > BRANCH_TOL {
        return Err(Error::InconsistentBranch(format!(
            "squared identity residual {sq:e} exceeds {BRANCH_TOL:e}"
        )));
    }
    let a = omega.omega0.sqrt() * h.d00;
    let scale = h.d01.abs().max(a.abs());
    let minus = (h.d01 + a).abs() / scale;
    let plus = (h.d01 - a).abs() / scale;
    if minus <= BRANCH_TOL {
        Ok(Branch::Minus)
    } else if plus <= BRANCH_TOL {
        Ok(Branch::Plus)
    } else {
        Err(Error::InconsistentBranch(format!(
            "neither sign relation holds (residuals {minus:e}, {plus:e})"
        )))
    }
}

pub fn branch_detect(sigma: Sigma, omega: Omega, spec: &QuadratureSpec) -> Result<Branch> {
    sigma.require_borderline()?;
    branch_of(omega, &hessian_closed(sigma, omega, spec)?)
}

/// ν = ω₀²(∂²₀d)³[−4∂₀∂²₁d ∓ 4√ω₀∂²₀∂₁d + ∂²₀d], sign by branch.
pub fn third_directional_from(omega: Omega, h: &Hessian, t: &ThirdPartials, branch: Branch) -> f64 {
    let w0 = omega.omega0;
    let bracket = -4.0 * t.d011 + branch.sign() * 4.0 * w0.sqrt() * t.d001 + h.d00;
    w0 * w0 * h.d00.powi(3) * bracket
}

pub fn third_directional(sigma: Sigma, omega: Omega, spec: &QuadratureSpec) -> Result<f64> {
    sigma.require_borderline()?;
    let m = alpha_moments(sigma, omega, spec)?;
    let h = hessian_closed_from(sigma, omega, m);
    let branch = branch_of(omega, &h)?;
    Ok(third_directional_from(omega, &h, &third_partials_from(sigma, omega, m), branch))
}

/// The bracket of ν reduced on the degenerate line:
/// (8√ω₀·P·α₀ / (σ(1−z²)))·σ(σ−1)(z−1)²(z+1) on the minus branch,
/// with (z+1)²(z−1) on the plus branch; P is the moment prefactor.
pub fn reduced_bracket(sigma: Sigma, omega: Omega, alpha0: f64, branch: Branch) -> f64 {
    let s = sigma.value();
    let z = omega.z();
    let pre = 8.0 * omega.omega0.sqrt() * moment_prefactor(sigma, omega) * alpha0 / (s * (1.0 - z * z));
    let shape = match branch {
        Branch::Minus => (z - 1.0).powi(2) * (z + 1.0),
        Branch::Plus => (z + 1.0).powi(2) * (z - 1.0),
    };
    pre * s * (s - 1.0) * shape
}

/// λ ↦ d(ω + λξ) third derivative at 0: 5-point stencil, Richardson over h, h/2.
pub fn third_directional_fd(sigma: Sigma, omega: Omega, xi: (f64, f64), grid: Grid, h: f64) -> Result<f64> {
    let g = |l: f64| -> Result<f64> { d_value(sigma, omega.displaced(l, xi)?, grid) };
    let stencil = |h: f64| -> Result<f64> {
        Ok((g(2.0 * h)? - 2.0 * g(h)? + 2.0 * g(-h)? - g(-2.0 * h)?) / (2.0 * h * h * h))
    };
    let c = stencil(h)?;
    let f = stencil(0.5 * h)?;
    Ok((4.0 * f - c) / 3.0)
}

/// Everything about d at one ω, with the FD residual of the Hessian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HessianReport {
    pub sigma: Sigma,
    pub omega: Omega,
    pub d_grad: (f64, f64),
    pub hessian: Hessian,
    pub det: f64,
    pub eigenvalues: [f64; 2],
    pub eigenvectors: [[f64; 2]; 2],
    pub f_value: f64,
    pub fd_residual: f64,
}

pub fn hessian_report(
    sigma: Sigma,
    omega: Omega,
    spec: &QuadratureSpec,
    grid: Option<Grid>,
) -> Result<HessianReport> {
    let m = alpha_moments(sigma, omega, spec)?;
    let hessian = hessian_closed_from(sigma, omega, m);
    let eig = hessian.eigen();
    let grid = grid.unwrap_or_else(|| default_grid(sigma, omega));
    let fd = hessian_fd(sigma, omega, grid, hessian_fd_step(omega))?;
    Ok(HessianReport {
        sigma,
        omega,
        d_grad: gradient_closed_from(sigma, omega, m),
        hessian,
        det: hessian.det(),
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        f_value: f_sigma(sigma, omega.z(), spec)?,
        fd_residual: hessian.rel_diff(&fd),
    })
}

/// Full analysis of the degenerate point ω₁ = 2z₀√ω₀.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub sigma: Sigma,
    pub z0: f64,
    pub omega_star: Omega,
    pub hessian: Hessian,
    pub hessian_eigenvalues: [f64; 2],
    pub det_ratio: f64,
    pub xi: (f64, f64),
    pub branch: Branch,
    pub nu: f64,
    pub nu_fd: f64,
    pub nu_reduced: f64,
    pub nu_from_partials: f64,
    pub kernel_residual: f64,
    pub squared_identity_residual: f64,
    pub third_partials: ThirdPartials,
    pub hessian_fd_residual: f64,
    pub third_partials_fd_residual: f64,
    pub nu_fd_residual: f64,
    pub nu_reduced_residual: f64,
    /// False for 1 < σ < 3/2, where ν is computed but the instability
    /// theorem does not apply.
    pub within_theorem_hypotheses: bool,
}

pub fn degeneracy_report(
    sigma: Sigma,
    omega0: f64,
    spec: &QuadratureSpec,
    grid: Option<Grid>,
) -> Result<DegeneracyReport> {
    if sigma.value() >= 2.0 {
        return Err(Error::Domain(format!("sigma must lie in (1, 2), got {}", sigma.value())));
    }
    let z0 = find_z0(sigma, spec)?;
    let omega = Omega::from_z(omega0, z0)?;
    let m = alpha_moments(sigma, omega, spec)?;
    let hessian = hessian_closed_from(sigma, omega, m);
    let xi = zero_eigenvector_of(omega, &hessian)?;
    let branch = branch_of(omega, &hessian)?;
    let partials = third_partials_from(sigma, omega, m);
    let nu = third_directional_from(omega, &hessian, &partials, branch);
    let nu_reduced =
        omega.omega0.powi(2) * hessian.d00.powi(3) * reduced_bracket(sigma, omega, m.alpha0, branch);

    let grid = grid.unwrap_or_else(|| default_grid(sigma, omega));
    let hessian_fd = hessian_fd(sigma, omega, grid, hessian_fd_step(omega))?;
    let partials_fd = third_partials_fd(sigma, omega, grid, THIRD_FD_STEP)?;
    let xi_norm = xi.0.hypot(xi.1);
    let nu_fd = third_directional_fd(sigma, omega, xi, grid, THIRD_FD_STEP / xi_norm)?;

    Ok(DegeneracyReport {
        sigma,
        z0,
        omega_star: omega,
        hessian,
        hessian_eigenvalues: hessian.eigen().values,
        det_ratio: hessian.det() / hessian.frobenius().powi(2),
        xi,
        branch,
        nu,
        nu_fd,
        nu_reduced,
        nu_from_partials: partials.directional(xi),
        kernel_residual: kernel_residual(&hessian, xi),
        squared_identity_residual: squared_identity_residual(omega, &hessian),
        third_partials: partials,
        hessian_fd_residual: hessian.rel_diff(&hessian_fd),
        third_partials_fd_residual: partials.rel_diff(&partials_fd),
        nu_fd_residual: ((nu - nu_fd) / nu).abs(),
        nu_reduced_residual: ((nu - nu_reduced) / nu).abs(),
        within_theorem_hypotheses: sigma.within_theorem_range(),
    })
}
