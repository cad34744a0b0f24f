//! Pseudospectral integration of i∂ₜu + ∂ₓ²u + i|u|^{2σ}∂ₓu = 0 by the
//! integrating-factor RK4 scheme, with conserved-quantity monitoring and the
//! H¹ orbital distance to the solitary-wave orbit.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{h1_norm, ComplexField, ConservedLedger};
use crate::moments::{hessian_closed, zero_eigenvector};
use crate::params::{Omega, QuadratureSpec, Sigma};
use crate::profile::{default_derivative_step, parameter_derivative, sample_profile, SolitonProfile};
use crate::spectral::{self, Grid};

/// Fraction of the grid width at each edge watched for contamination.
pub const BOUNDARY_BAND: f64 = 0.05;
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;
/// Increase in relative mass drift over one sample block that triggers a
/// retry with finer substeps.
pub const LEDGER_SPIKE: f64 = 1e-6;
const MAX_REFINEMENTS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// φ_ω + λψ̂ with ψ̂ = ∂_λφ_{ω+λξ}|₀.
    PsiHatRay,
    /// φ_ω + λw for a seeded random smooth w with ‖w‖_{H¹} = 1.
    RandomH1,
}

/// How ξ is chosen for a ψ̂ ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayDirection {
    /// Kernel vector of d″(ω); requires a degenerate ω.
    ZeroEigenvector,
    /// Unit eigenvector of d″(ω) whose eigenvalue is smallest in magnitude.
    SoftestMode,
    Fixed(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub amplitude: f64,
    /// ±1
    pub sign: f64,
    pub direction: RayDirection,
    pub seed: u64,
}

impl Perturbation {
    pub fn none() -> Self {
        Perturbation {
            kind: PerturbationKind::PsiHatRay,
            amplitude: 0.0,
            sign: 1.0,
            direction: RayDirection::SoftestMode,
            seed: 0,
        }
    }

    /// Signed size λ.
    pub fn lambda(&self) -> f64 {
        self.sign * self.amplitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sigma: Sigma,
    pub omega: Omega,
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    /// Retained fraction of the Fourier band for the nonlinear term.
    pub dealias: f64,
    pub perturbation: Perturbation,
    pub tube_epsilon: f64,
    pub sample_every: usize,
    /// Speed of the computational frame; ω₁ keeps the soliton at rest.
    pub frame_velocity: f64,
    /// Nonlinear step limit: dt·max|u|^{2σ}·k_retained ≤ cfl.
    pub cfl: f64,
    pub quadrature: QuadratureSpec,
}

impl SimConfig {
    pub fn new(sigma: Sigma, omega: Omega, grid: Grid) -> Self {
        SimConfig {
            sigma,
            omega,
            grid,
            dt: 1e-3,
            t_end: 1.0,
            dealias: 2.0 / 3.0,
            perturbation: Perturbation::none(),
            tube_epsilon: 0.05,
            sample_every: 1000,
            frame_velocity: 0.0,
            cfl: 0.1,
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be non-negative");
        }
        if !(self.dealias > 0.0 && self.dealias <= 1.0) {
            return bad("dealias must lie in (0, 1]");
        }
        if !(self.tube_epsilon > 0.0) {
            return bad("tube_epsilon must be positive");
        }
        if !(self.perturbation.amplitude >= 0.0) {
            return bad("perturbation amplitude must be non-negative");
        }
        if self.perturbation.sign.abs() != 1.0 {
            return bad("perturbation sign must be +1 or -1");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be positive");
        }
        if !(self.cfl > 0.0) {
            return bad("cfl must be positive");
        }
        Grid::new(self.grid.length, self.grid.points)?;
        Omega::new(self.omega.omega0, self.omega.omega1)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub field: ComplexField,
    pub ledger: ConservedLedger,
    /// Set when measured against a profile.
    pub orbital_distance: Option<f64>,
}

impl SimState {
    pub fn new(field: ComplexField, sigma: Sigma) -> Self {
        let ledger = ConservedLedger::of(&field, sigma, 0.0);
        SimState { t: 0.0, field, ledger, orbital_distance: None }
    }
}

/// Precomputed multipliers for one (grid, dt, frame) combination.
pub struct Integrator {
    grid: Grid,
    sigma: f64,
    dt: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    ik: Vec<Complex64>,
    mask: Vec<bool>,
    scratch_u: Vec<Complex64>,
    scratch_ux: Vec<Complex64>,
}

impl Integrator {
    pub fn new(grid: Grid, sigma: Sigma, dt: f64, dealias: f64, frame_velocity: f64) -> Self {
        let k = grid.wavenumbers();
        let symbol = |k: f64| Complex64::new(0.0, -k * k + frame_velocity * k);
        let half = k.iter().map(|&k| (symbol(k) * (0.5 * dt)).exp()).collect();
        let full = k.iter().map(|&k| (symbol(k) * dt).exp()).collect();
        let ik = grid.derivative_wavenumbers().iter().map(|&k| Complex64::new(0.0, k)).collect();
        Integrator {
            grid,
            sigma: sigma.value(),
            dt,
            half,
            full,
            ik,
            mask: spectral::dealias_mask(&grid, dealias),
            scratch_u: vec![Complex64::new(0.0, 0.0); grid.points],
            scratch_ux: vec![Complex64::new(0.0, 0.0); grid.points],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Fourier coefficients of −|u|^{2σ}∂ₓu, dealiased.
    fn nonlinear(&mut self, spec: &[Complex64], out: &mut [Complex64]) {
        self.scratch_u.copy_from_slice(spec);
        for ((ux, &c), &ik) in self.scratch_ux.iter_mut().zip(spec).zip(&self.ik) {
            *ux = ik * c;
        }
        spectral::inverse_in_place(&mut self.scratch_u);
        spectral::inverse_in_place(&mut self.scratch_ux);
        let s = self.sigma;
        for ((o, u), ux) in out.iter_mut().zip(&self.scratch_u).zip(&self.scratch_ux) {
            *o = -u.norm_sqr().powf(s) * ux;
        }
        spectral::forward_in_place(out);
        for (o, &keep) in out.iter_mut().zip(&self.mask) {
            if !keep {
                *o = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// One integrating-factor RK4 step on the Fourier coefficients.
    pub fn advance(&mut self, v: &mut [Complex64]) {
        let n = v.len();
        let dt = self.dt;
        let zero = Complex64::new(0.0, 0.0);
        let mut k1 = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        let mut tmp = vec![zero; n];

        self.nonlinear(v, &mut k1);
        for j in 0..n {
            tmp[j] = self.half[j] * (v[j] + 0.5 * dt * k1[j]);
        }
        self.nonlinear(&tmp, &mut k2);
        for j in 0..n {
            tmp[j] = self.half[j] * v[j] + 0.5 * dt * k2[j];
        }
        self.nonlinear(&tmp, &mut k3);
        for j in 0..n {
            tmp[j] = self.full[j] * v[j] + dt * self.half[j] * k3[j];
        }
        self.nonlinear(&tmp, &mut k4);
        for j in 0..n {
            v[j] = self.full[j] * v[j]
                + dt / 6.0 * (self.full[j] * k1[j] + 2.0 * self.half[j] * (k2[j] + k3[j]) + k4[j]);
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }
}

/// One IF-RK4 step of size `config.dt`.
pub fn step(state: &SimState, config: &SimConfig) -> Result<SimState> {
    let mut integrator = Integrator::new(state.field.grid, config.sigma, config.dt, config.dealias, config.frame_velocity);
    let mut v = spectral::forward(&state.field.values);
    integrator.advance(&mut v);
    let t = state.t + config.dt;
    let field = ComplexField { grid: state.field.grid, values: spectral::inverse(&v) };
    if !field.is_finite() {
        return Err(Error::Blowup { t });
    }
    let ledger = ConservedLedger::of(&field, config.sigma, t);
    Ok(SimState { t, field, ledger, orbital_distance: None })
}

/// Minimizer of ‖u − e^{is₀}φ(· − s₁)‖_{H¹} over (s₀, s₁).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalFit {
    pub distance: f64,
    pub s0: f64,
    pub s1: f64,
}

fn wrap(x: f64, period: f64) -> f64 {
    x - period * (x / period).round()
}

/// H¹ distance from `u` to the orbit {e^{is₀}φ(· − s₁)}.
///
/// The complex H¹ pairing C(s₁) = ⟨u, φ(· − s₁)⟩ is evaluated at all grid
/// shifts by one inverse FFT; the best shift is refined by parabolic
/// interpolation and Newton steps on the trigonometric interpolant of |C|²,
/// and the optimal gauge is s₀ = arg C(s₁).
pub fn orbital_distance(u: &ComplexField, p: &SolitonProfile) -> Result<OrbitalFit> {
    if u.grid != p.grid {
        return Err(Error::InvalidGrid("field and profile live on different grids".into()));
    }
    let grid = u.grid;
    let n = grid.points;
    let dx = grid.spacing();
    let k = grid.wavenumbers();
    let kd = grid.derivative_wavenumbers();
    let uh = spectral::forward(&u.values);
    let ph = spectral::forward(&p.field);
    let weights: Vec<Complex64> = (0..n).map(|j| (1.0 + kd[j] * kd[j]) * uh[j] * ph[j].conj()).collect();

    let on_grid = spectral::inverse(&weights);
    let best = (0..n)
        .max_by(|&a, &b| on_grid[a].norm().total_cmp(&on_grid[b].norm()))
        .expect("grid is non-empty");
    let at = |m: isize| on_grid[m.rem_euclid(n as isize) as usize].norm();
    let (fm, f0, fp) = (at(best as isize - 1), at(best as isize), at(best as isize + 1));
    let curvature = fm - 2.0 * f0 + fp;
    let mut s = best as f64 * dx;
    if curvature < 0.0 {
        s += 0.5 * dx * (fm - fp) / curvature;
    }

    let pairing = |s: f64| -> (Complex64, Complex64, Complex64) {
        let mut c = Complex64::new(0.0, 0.0);
        let mut c1 = c;
        let mut c2 = c;
        for j in 0..n {
            let term = weights[j] * Complex64::from_polar(1.0, k[j] * s);
            c += term;
            c1 += Complex64::new(0.0, k[j]) * term;
            c2 -= k[j] * k[j] * term;
        }
        (c, c1, c2)
    };
    for _ in 0..20 {
        let (c, c1, c2) = pairing(s);
        let g1 = 2.0 * (c.conj() * c1).re;
        let g2 = 2.0 * (c1.norm_sqr() + (c.conj() * c2).re);
        if g2 >= 0.0 {
            break;
        }
        let delta = (-g1 / g2).clamp(-dx, dx);
        s += delta;
        if delta.abs() <= 1e-15 * grid.length {
            break;
        }
    }
    let (c, _, _) = pairing(s);
    let s0 = c.arg();
    let s1 = wrap(s, grid.length);

    let rot = Complex64::from_polar(1.0, s0);
    let sum: f64 = (0..n)
        .map(|j| {
            let shifted = rot * ph[j] * Complex64::from_polar(1.0, -k[j] * s1);
            (1.0 + kd[j] * kd[j]) * (uh[j] - shifted).norm_sqr()
        })
        .sum();
    let distance = (sum * grid.length / (n * n) as f64).sqrt();
    Ok(OrbitalFit { distance, s0, s1 })
}

/// One sampled row of the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub distance: f64,
    pub s0: f64,
    pub s1: f64,
    pub energy_drift: f64,
    pub mass_drift: f64,
    pub momentum_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitalTrace {
    pub rows: Vec<TraceRow>,
    pub exit_time: Option<f64>,
}

impl OrbitalTrace {
    pub fn max_drifts(&self) -> (f64, f64, f64) {
        self.rows.iter().fold((0.0, 0.0, 0.0), |acc, r| {
            (acc.0.max(r.energy_drift), acc.1.max(r.mass_drift), acc.2.max(r.momentum_drift))
        })
    }

    pub fn max_distance(&self) -> f64 {
        self.rows.iter().map(|r| r.distance).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: SimConfig,
    pub xi: Option<(f64, f64)>,
    pub initial_distance: f64,
    pub exit_time: Option<f64>,
    pub final_time: f64,
    pub max_energy_drift: f64,
    pub max_mass_drift: f64,
    pub max_momentum_drift: f64,
    pub max_distance: f64,
    pub steps: usize,
    pub rejected_blocks: usize,
    pub max_substeps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub trace: OrbitalTrace,
    pub summary: RunSummary,
    pub final_state: SimState,
}

fn ray_direction(config: &SimConfig) -> Result<(f64, f64)> {
    match config.perturbation.direction {
        RayDirection::Fixed(a, b) => Ok((a, b)),
        RayDirection::ZeroEigenvector => zero_eigenvector(config.sigma, config.omega, &config.quadrature),
        RayDirection::SoftestMode => {
            let eig = hessian_closed(config.sigma, config.omega, &config.quadrature)?.eigen();
            let pick = if eig.values[0].abs() <= eig.values[1].abs() { 0 } else { 1 };
            Ok((eig.vectors[pick][0], eig.vectors[pick][1]))
        }
    }
}

/// Seeded smooth perturbation with unit H¹ norm, localized under the profile
/// envelope so the domain edges stay quiet.
pub fn random_h1_direction(p: &SolitonProfile, seed: u64) -> ComplexField {
    let grid = p.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = grid.wavenumbers();
    let mut coeffs: Vec<Complex64> = k
        .iter()
        .map(|&k| {
            let envelope = (-0.5 * k * k).exp();
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * envelope
        })
        .collect();
    spectral::inverse_in_place(&mut coeffs);
    let peak = p.amplitude.iter().cloned().fold(0.0, f64::max);
    let values = coeffs
        .iter()
        .zip(&p.amplitude)
        .map(|(c, a)| c * (a / peak))
        .collect();
    let w = ComplexField { grid, values };
    let norm = h1_norm(&w);
    w.scaled(1.0 / norm)
}

fn boundary_mass(u: &ComplexField) -> f64 {
    let grid = u.grid;
    let band = BOUNDARY_BAND * grid.length;
    let half = 0.5 * grid.length;
    let sum: f64 = grid
        .nodes()
        .iter()
        .zip(&u.values)
        .filter(|(x, _)| x.abs() >= half - band)
        .map(|(_, v)| v.norm_sqr())
        .sum();
    0.5 * sum * grid.spacing()
}

fn max_density(v: &[Complex64], sigma: f64) -> f64 {
    v.iter().map(|c| c.norm_sqr().powf(sigma)).fold(0.0, f64::max)
}

/// Initial field φ_ω + λ·(perturbation) and the ξ used, if any.
pub fn initial_field(config: &SimConfig, profile: &SolitonProfile) -> Result<(ComplexField, Option<(f64, f64)>)> {
    let base = ComplexField::from_profile(profile);
    let lambda = config.perturbation.lambda();
    match config.perturbation.kind {
        PerturbationKind::PsiHatRay => {
            let xi = ray_direction(config)?;
            if lambda == 0.0 {
                return Ok((base, Some(xi)));
            }
            let psi = parameter_derivative(
                config.sigma,
                config.omega,
                xi,
                default_derivative_step(config.omega),
                config.grid,
            )?;
            let psi = ComplexField::new(config.grid, psi)?;
            Ok((base.axpy(lambda, &psi), Some(xi)))
        }
        PerturbationKind::RandomH1 => {
            if lambda == 0.0 {
                return Ok((base, None));
            }
            let w = random_h1_direction(profile, config.perturbation.seed);
            Ok((base.axpy(lambda, &w), None))
        }
    }
}

/// Integrate to `t_end` or until the orbital distance leaves the tube.
pub fn run_experiment(config: &SimConfig) -> Result<Experiment> {
    config.validate()?;
    let profile = sample_profile(config.sigma, config.omega, config.grid)?;
    let (u0, xi) = initial_field(config, &profile)?;
    run_from(config, &profile, u0, xi)
}

/// Same as [`run_experiment`] with an explicit initial field.
pub fn run_from(
    config: &SimConfig,
    profile: &SolitonProfile,
    u0: ComplexField,
    xi: Option<(f64, f64)>,
) -> Result<Experiment> {
    config.validate()?;
    let sigma = config.sigma;
    let grid = config.grid;
    let k_retained = grid.k_retained(config.dealias);
    let total_steps = (config.t_end / config.dt).round() as usize;

    let mut state = SimState::new(u0, sigma);
    let reference = state.ledger;
    let fit0 = orbital_distance(&state.field, profile)?;
    state.orbital_distance = Some(fit0.distance);
    let mut rows = vec![TraceRow {
        t: 0.0,
        distance: fit0.distance,
        s0: fit0.s0,
        s1: fit0.s1,
        energy_drift: 0.0,
        mass_drift: 0.0,
        momentum_drift: 0.0,
    }];
    let mut exit_time = (fit0.distance > config.tube_epsilon).then_some(0.0);

    let mut spectrum = spectral::forward(&state.field.values);
    let mut integrators: Vec<(usize, Integrator)> = Vec::new();
    let mut steps_done = 0usize;
    let mut rejected = 0usize;
    let mut max_substeps = 1usize;
    let mut last_mass_drift = 0.0;

    while exit_time.is_none() && steps_done < total_steps {
        let block = config.sample_every.min(total_steps - steps_done);
        let density = max_density(&state.field.values, sigma.value());
        let limit = config.cfl / (density * k_retained).max(f64::MIN_POSITIVE);
        let mut substeps = ((config.dt / limit).ceil() as usize).max(1);

        let (candidate, ledger, mass_drift) = loop {
            let mut trial = spectrum.clone();
            let integrator = match integrators.iter_mut().find(|(m, _)| *m == substeps) {
                Some((_, it)) => it,
                None => {
                    integrators.push((
                        substeps,
                        Integrator::new(grid, sigma, config.dt / substeps as f64, config.dealias, config.frame_velocity),
                    ));
                    &mut integrators.last_mut().expect("just pushed").1
                }
            };
            for _ in 0..block * substeps {
                integrator.advance(&mut trial);
            }
            let t = (steps_done + block) as f64 * config.dt;
            let field = ComplexField { grid, values: spectral::inverse(&trial) };
            if !field.is_finite() {
                if substeps < (1 << MAX_REFINEMENTS) {
                    rejected += 1;
                    substeps *= 2;
                    continue;
                }
                return Err(Error::Blowup { t });
            }
            let ledger = ConservedLedger::of(&field, sigma, t);
            let (_, mass_drift, _) = ledger.drift_from(&reference);
            if mass_drift - last_mass_drift > LEDGER_SPIKE && substeps < (1 << MAX_REFINEMENTS) {
                rejected += 1;
                substeps *= 2;
                continue;
            }
            break ((trial, field), ledger, mass_drift);
        };
        max_substeps = max_substeps.max(substeps);
        let ((trial, field), ledger) = (candidate, ledger);
        spectrum = trial;
        steps_done += block;
        last_mass_drift = mass_drift;

        let t = ledger.t;
        let edge = boundary_mass(&field);
        if edge > BOUNDARY_MASS_LIMIT {
            return Err(Error::BoundaryContamination { t, mass: edge });
        }
        let fit = orbital_distance(&field, profile)?;
        let (e, q0, q1) = ledger.drift_from(&reference);
        rows.push(TraceRow {
            t,
            distance: fit.distance,
            s0: fit.s0,
            s1: fit.s1,
            energy_drift: e,
            mass_drift: q0,
            momentum_drift: q1,
        });
        state = SimState { t, field, ledger, orbital_distance: Some(fit.distance) };
        if fit.distance > config.tube_epsilon {
            exit_time = Some(t);
        }
    }

    let trace = OrbitalTrace { rows, exit_time };
    let (max_e, max_q0, max_q1) = trace.max_drifts();
    let summary = RunSummary {
        config: *config,
        xi,
        initial_distance: fit0.distance,
        exit_time,
        final_time: state.t,
        max_energy_drift: max_e,
        max_mass_drift: max_q0,
        max_momentum_drift: max_q1,
        max_distance: trace.max_distance(),
        steps: steps_done,
        rejected_blocks: rejected,
        max_substeps,
        seed: config.perturbation.seed,
    };
    Ok(Experiment { trace, summary, final_state: state })
}
