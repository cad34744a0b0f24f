//! End-to-end acceptance checks. Each test prints one PASS/FAIL line with the
//! measured quantities and its wall time, then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use gdnls::functionals::{apply_b_xi, h1_norm, l2_norm};
use gdnls::linearized::{assemble, lowest_spectrum};
use gdnls::moments::*;
use gdnls::params::*;
use gdnls::profile::*;
use gdnls::simulator::*;
use gdnls::spectral;
use gdnls::{ComplexField, Error, Grid, Omega, QuadratureSpec, Sigma};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn sig(s: f64) -> Sigma {
    Sigma::new(s).unwrap()
}

fn report(n: u32, ok: bool, elapsed: Duration, limit: Duration, details: &str) {
    let within = elapsed < limit;
    let verdict = if ok && within { "PASS" } else { "FAIL" };
    // Written to the raw handle so the line survives the harness's output capture.
    let _ = writeln!(
        std::io::stderr(),
        "criterion {n}: {verdict} [{:.2} s, limit {} s] {details}",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {n} failed: {details}");
    assert!(within, "criterion {n} exceeded its time limit");
}

#[test]
fn criterion_1_special_values() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let w = Omega::new(1.0, 0.0).unwrap();
    let m = alpha_moments(sig(1.0), w, &spec).unwrap();
    let e0 = (m.alpha0 - PI / 4.0).abs();
    let e1 = (m.alpha1 - 0.5).abs();
    let ef = (0..50)
        .map(|i| {
            let z = -0.99 + 1.98 * i as f64 / 49.0;
            (f_sigma(sig(1.0), z, &spec).unwrap() + 1.0).abs()
        })
        .fold(0.0, f64::max);
    let ok = e0 <= 1e-10 && e1 <= 1e-10 && ef <= 1e-8;
    report(
        1,
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("|alpha0 - pi/4| = {e0:.1e}, |alpha1 - 1/2| = {e1:.1e}, max |F_1 + 1| = {ef:.1e}"),
    );
}

#[test]
fn criterion_2_root_structure() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let mut ok = true;
    let mut details = Vec::new();
    for s in [1.2, 1.5, 1.8] {
        let z0 = find_z0(sig(s), &spec).unwrap();
        let f = f_sigma(sig(s), z0, &spec).unwrap();
        let changes = scan_f_sigma(sig(s), 100, &spec).unwrap().changes.len();
        ok &= f.abs() <= 1e-10 && changes == 1 && z0.abs() < 1.0;
        details.push(format!("sigma {s}: z0 = {z0:.12}, |F| = {:.1e}, sign changes = {changes}", f.abs()));
    }
    let none = matches!(find_z0(sig(1.0), &spec), Err(Error::NoRoot(_)));
    ok &= none;
    details.push(format!("sigma 1 gives no root: {none}"));
    report(2, ok, start.elapsed(), Duration::from_secs(10), &details.join("; "));
}

#[test]
fn criterion_3_hessian_oracle() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let points: Vec<(Sigma, Omega)> = (0..10)
        .map(|_| {
            let s = sig(rng.gen_range(1.1..1.9));
            let w = Omega::from_z(rng.gen_range(0.3..3.0), rng.gen_range(-0.9..0.9)).unwrap();
            (s, w)
        })
        .collect();
    let results: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|&(s, w)| {
            let closed = hessian_closed(s, w, &spec).unwrap();
            let g = default_grid(s, w);
            let fd = hessian_fd(s, w, g, hessian_fd_step(w)).unwrap();
            let jac = charge_jacobian_fd(s, w, g, hessian_fd_step(w)).unwrap();
            let scale = jac.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
            let identity = (fd.d11 - w.omega0 * fd.d00).abs() / fd.max_abs();
            (closed.rel_diff(&fd), identity, (jac[0][1] - jac[1][0]).abs() / scale)
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let identity = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let asym = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let closed_identity = points
        .iter()
        .map(|&(s, w)| {
            let h = hessian_closed(s, w, &spec).unwrap();
            (h.d11 - w.omega0 * h.d00).abs() / h.max_abs()
        })
        .fold(0.0, f64::max);

    let mut agree = 0;
    let mut disagree = 0;
    'scan: for s in [1.15, 1.35, 1.55, 1.75, 1.85] {
        for i in 0..8 {
            let z = -0.9 + 1.8 * i as f64 / 7.0;
            let f = f_sigma(sig(s), z, &spec).unwrap();
            if f.abs() <= 1e-4 {
                continue;
            }
            let det = hessian_closed(sig(s), Omega::from_z(1.0, z).unwrap(), &spec).unwrap().det();
            if det.signum() == f.signum() {
                agree += 1;
            } else {
                disagree += 1;
            }
            if agree + disagree == 20 {
                break 'scan;
            }
        }
    }
    let ok = worst <= 1e-6 && identity <= 1e-6 && closed_identity <= 1e-14 && asym <= 1e-8 && agree == 20 && disagree == 0;
    report(
        3,
        ok,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "max rel diff closed vs FD = {worst:.1e}; identity residual FD {identity:.1e}, closed {closed_identity:.1e}; \
             FD Jacobian asymmetry {asym:.1e}; sign(det) = sign(F) at {agree}/{} points",
            agree + disagree
        ),
    );
}

#[test]
fn criterion_4_third_derivative_oracle() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let (s, w) = (sig(1.5), Omega::new(1.0, 0.4).unwrap());
    let h = hessian_closed(s, w, &spec).unwrap();
    let closed = third_partials(s, w, &spec).unwrap();
    let fd = third_partials_fd(s, w, default_grid(s, w), THIRD_FD_STEP).unwrap();
    let each = [
        (closed.d000, fd.d000),
        (closed.d001, fd.d001),
        (closed.d011, fd.d011),
        (closed.d111, fd.d111),
    ]
    .iter()
    .map(|(a, b)| ((a - b) / a).abs())
    .fold(0.0, f64::max);
    let rel_a = ((w.omega0 * closed.d000 - (closed.d011 - h.d00)) / closed.d011).abs();
    let rel_b = ((closed.d111 - w.omega0 * closed.d001) / closed.d111).abs();
    let rel_a_fd = ((w.omega0 * fd.d000 - (fd.d011 - h.d00)) / fd.d011).abs();
    let rel_b_fd = ((fd.d111 - w.omega0 * fd.d001) / fd.d111).abs();
    let ok = each <= 1e-4 && rel_a <= 1e-12 && rel_b <= 1e-12 && rel_a_fd <= 1e-4 && rel_b_fd <= 1e-4;
    report(
        4,
        ok,
        start.elapsed(),
        Duration::from_secs(60),
        &format!(
            "max rel diff of four partials = {each:.1e}; relations closed ({rel_a:.1e}, {rel_b:.1e}), FD ({rel_a_fd:.1e}, {rel_b_fd:.1e})"
        ),
    );
}

#[test]
fn criterion_5_degenerate_line() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let points: Vec<(f64, f64)> =
        [1.55, 1.6, 1.7, 1.8, 1.9].iter().flat_map(|&s| [0.5, 1.0, 2.0].map(|w0| (s, w0))).collect();
    let reports: Vec<DegeneracyReport> = points
        .par_iter()
        .map(|&(s, w0)| degeneracy_report(sig(s), w0, &spec, None).unwrap())
        .collect();
    let max = |f: &dyn Fn(&DegeneracyReport) -> f64| reports.iter().map(f).fold(0.0, f64::max);
    let kernel = max(&|r| r.kernel_residual);
    let squared = max(&|r| r.squared_identity_residual);
    let fd = max(&|r| r.nu_fd_residual);
    let reduced = max(&|r| r.nu_reduced_residual);
    let smallest = reports.iter().map(|r| r.nu.abs()).fold(f64::INFINITY, f64::min);
    let ok = kernel <= 1e-6 && squared <= 1e-5 && fd <= 1e-4 && reduced <= 1e-6 && smallest > 0.0;
    for r in &reports {
        println!(
            "  sigma {:.2} omega0 {:.1}: z0 = {:.10}, xi = ({:.6e}, {:.6e}), branch {:?}, nu = {:.10e}",
            r.sigma.value(),
            r.omega_star.omega0,
            r.z0,
            r.xi.0,
            r.xi.1,
            r.branch,
            r.nu
        );
    }
    report(
        5,
        ok,
        start.elapsed(),
        Duration::from_secs(300),
        &format!(
            "{} points: kernel {kernel:.1e}, squared identity {squared:.1e}, nu vs ray FD {fd:.1e}, \
             nu vs reduced form {reduced:.1e}, min |nu| = {smallest:.3e}",
            reports.len()
        ),
    );
}

#[test]
fn criterion_6_profile_and_linearization() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let s = sig(1.6);
    let w = Omega::from_z(1.0, find_z0(s, &spec).unwrap()).unwrap();
    let g = Grid::new(default_grid(s, w).length, 1024).unwrap();
    let p = sample_profile(s, w, g).unwrap();
    let residual = stationary_residual(&p);

    let op = assemble(&p);
    let phi = ComplexField::from_profile(&p);
    let iphi = ComplexField::new(g, phi.values.iter().map(|c| c * Complex64::i()).collect()).unwrap();
    let k0 = op.apply(&iphi).unwrap().max_norm();
    let k1 = op.apply(&phi.derivative().scaled(-1.0)).unwrap().max_norm();

    let xi = zero_eigenvector(s, w, &spec).unwrap();
    let psi = ComplexField::new(g, parameter_derivative(s, w, xi, default_derivative_step(w), g).unwrap()).unwrap();
    let bphi = apply_b_xi(xi, &phi);
    let psi_rel = l2_norm(&op.apply(&psi).unwrap().axpy(1.0, &bphi)) / l2_norm(&bphi);

    let sp = lowest_spectrum(&op, 8).unwrap();
    let negative = sp.count_below(-1e-3);
    let near_zero = sp.count_near_zero(1e-4);
    let gap = sp.eigenvalues.iter().copied().filter(|&e| e > 1e-4).fold(f64::INFINITY, f64::min);
    let ok = residual <= 1e-6 && k0 <= 1e-5 && k1 <= 1e-5 && psi_rel <= 1e-4 && negative == 1 && near_zero >= 2;
    report(
        6,
        ok,
        start.elapsed(),
        Duration::from_secs(300),
        &format!(
            "stationary residual {residual:.1e}; kernel residuals {k0:.1e}, {k1:.1e}; psi-hat residual {psi_rel:.1e}; \
             {negative} eigenvalue below -1e-3 ({:.6}), {near_zero} within 1e-4 of zero, next eigenvalue {gap:.6}; asymmetry {:.1e}",
            sp.eigenvalues[0], sp.asymmetry
        ),
    );
}

#[test]
fn criterion_7_simulator_fidelity() {
    let start = Instant::now();
    // plane wave
    let g = Grid::new(2.0 * PI * 4.0, 64).unwrap();
    let s = sig(1.5);
    let (amp, k) = (0.6, 5.0 * 2.0 * PI / g.length);
    let mut cfg = SimConfig::new(s, Omega::new(1.0, 0.0).unwrap(), g);
    cfg.dt = 1e-3;
    let mut state = SimState::new(ComplexField::from_fn(g, |x| Complex64::from_polar(amp, k * x)), s);
    for _ in 0..1000 {
        state = step(&state, &cfg).unwrap();
    }
    let freq = k * k + amp.powf(3.0) * k;
    let phase_error = g
        .nodes()
        .iter()
        .zip(&state.field.values)
        .map(|(&x, u)| (u / Complex64::from_polar(amp, k * x - freq * state.t)).arg().abs())
        .fold(0.0, f64::max);

    // soliton over t = 5 at dt = 1e-3, N = 1024
    let (s, w) = (sig(1.0), Omega::new(1.0, 0.4).unwrap());
    let g = default_grid(s, w);
    let p = sample_profile(s, w, g).unwrap();
    let mut cfg = SimConfig::new(s, w, g);
    cfg.t_end = 5.0;
    cfg.sample_every = 500;
    let ex = run_experiment(&cfg).unwrap();
    let t = ex.final_state.t;
    let exact = ComplexField::new(g, spectral::translate(&g, &p.field, w.omega1 * t)).unwrap().transformed(w.omega0 * t, 0.0);
    let soliton_error = h1_norm(&ex.final_state.field.axpy(-1.0, &exact));
    let (e, q0, q1) = ex.trace.max_drifts();
    let drift = e.max(q0).max(q1);

    // order by dt-halving against a fine reference
    let coarse = Grid::new(g.length, 512).unwrap();
    let pc = sample_profile(s, w, coarse).unwrap();
    let evolve = |dt: f64| {
        let mut it = Integrator::new(coarse, s, dt, 2.0 / 3.0, 0.0);
        let mut v = spectral::forward(&pc.field);
        for _ in 0..(1.0 / dt).round() as usize {
            it.advance(&mut v);
        }
        ComplexField::new(coarse, spectral::inverse(&v)).unwrap()
    };
    let reference = evolve(1e-4);
    let errs: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&dt| h1_norm(&evolve(dt).axpy(-1.0, &reference))).collect();
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);

    let ok = phase_error <= 1e-8 && soliton_error <= 1e-5 && drift <= 1e-8 && order >= 3.5;
    report(
        7,
        ok,
        start.elapsed(),
        Duration::from_secs(600),
        &format!(
            "plane-wave phase error {phase_error:.1e}; soliton H1 error {soliton_error:.1e}; \
             max drift (E {e:.1e}, Q0 {q0:.1e}, Q1 {q1:.1e}); observed order {order:.2}"
        ),
    );
}

fn ray_config(s: Sigma, w: Omega, sign: f64, direction: RayDirection, t_end: f64) -> SimConfig {
    let mut cfg = SimConfig::new(s, w, default_grid(s, w));
    cfg.t_end = t_end;
    cfg.sample_every = 1000;
    cfg.frame_velocity = w.omega1;
    cfg.perturbation = Perturbation { kind: PerturbationKind::PsiHatRay, amplitude: 1e-3, sign, direction, seed: 0 };
    cfg
}

#[test]
fn criterion_8_instability_demonstration() {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let s = sig(1.8);
    let w = Omega::from_z(1.0, find_z0(s, &spec).unwrap()).unwrap();
    let configs = [
        ray_config(s, w, 1.0, RayDirection::ZeroEigenvector, 600.0),
        ray_config(s, w, -1.0, RayDirection::ZeroEigenvector, 600.0),
        ray_config(sig(1.0), Omega::new(1.0, 0.4).unwrap(), 1.0, RayDirection::SoftestMode, 50.0),
    ];
    let outcomes: Vec<Experiment> = configs.par_iter().map(|c| run_experiment(c).unwrap()).collect();
    for (c, o) in configs.iter().zip(&outcomes) {
        println!(
            "  sigma {:.1} omega ({:.6}, {:.6}) lambda {:+.0e}: grid {} x {}, exit {:?}, final t {}, max distance {:.4e}, \
             drifts ({:.1e}, {:.1e}, {:.1e})",
            c.sigma.value(),
            c.omega.omega0,
            c.omega.omega1,
            c.perturbation.lambda(),
            c.grid.length,
            c.grid.points,
            o.trace.exit_time,
            o.summary.final_time,
            o.summary.max_distance,
            o.summary.max_energy_drift,
            o.summary.max_mass_drift,
            o.summary.max_momentum_drift
        );
    }
    let degenerate_exit = outcomes[..2].iter().any(|o| o.trace.exit_time.is_some());
    let control_inside = outcomes[2].trace.exit_time.is_none() && outcomes[2].summary.final_time >= 50.0 - 1e-9;
    report(
        8,
        degenerate_exit && control_inside,
        start.elapsed(),
        Duration::from_secs(1800),
        &format!(
            "degenerate line exits: {:?} / {:?}; control stays inside to t = 50: {control_inside}",
            outcomes[0].trace.exit_time, outcomes[1].trace.exit_time
        ),
    );
}
