use gdnls::functionals::{apply_b, l2_inner, l2_norm, Generator};
use gdnls::moments::zero_eigenvector;
use gdnls::params::find_z0;
use gdnls::profile::*;
use gdnls::quadrature::integrate;
use gdnls::spectral;
use gdnls::{ComplexField, Error, Grid, Omega, QuadratureSpec, Sigma};
use num_complex::Complex64;
use proptest::prelude::*;

fn sig(s: f64) -> Sigma {
    Sigma::new(s).unwrap()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn amplitude_decays_like_exponential() {
    let (s, w) = (sig(1.0), Omega::new(1.0, 0.0).unwrap());
    // ϕ² = 4 sech(2x) ~ 8e^{−2x}
    for x in [10.0, 15.0, 20.0] {
        let a = amplitude_at(s, w, x);
        assert!((a * a / (8.0 * (-2.0 * x).exp()) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn short_period_is_rejected_for_decay() {
    let (s, w) = (sig(1.0), Omega::new(1.0, 0.0).unwrap());
    let err = sample_profile(s, w, Grid::new(40.0, 1024).unwrap()).unwrap_err();
    let Error::GridTooSmall { min_length, .. } = err else { panic!("{err:?}") };
    let ok = sample_profile(s, w, Grid::new(min_length.ceil(), 1024).unwrap()).unwrap();
    assert!(ok.amplitude[0] < BOUNDARY_AMPLITUDE);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn phase_matches_quadrature(x in -15.0f64..15.0, s in 1.0f64..1.95, z in -0.9f64..0.9) {
        let (s, w) = (sig(s), Omega::from_z(1.2, z).unwrap());
        let sv = s.value();
        let k = (4.0 * w.omega0 - w.omega1.powi(2)).sqrt();
        let lower = -60.0 / (sv * k);
        let integral = integrate(
            |y| amplitude_at(s, w, y).powf(2.0 * sv),
            lower.min(x),
            x,
            &[0.0],
            1e-13,
            1e-15,
            4000,
        )
        .unwrap()
        .value;
        let quad = 0.5 * w.omega1 * x - integral / (2.0 * sv + 2.0);
        prop_assert!((phase_at(s, w, x) - quad).abs() <= 1e-10);
    }

    #[test]
    fn amplitude_is_even(x in 0.0f64..30.0, s in 1.0f64..2.5, z in -0.99f64..0.99) {
        let w = Omega::from_z(0.7, z).unwrap();
        prop_assert_eq!(amplitude_at(sig(s), w, x), amplitude_at(sig(s), w, -x));
    }
}

#[test]
fn sampled_field_modulus_is_amplitude() {
    let (s, w) = (sig(1.4), Omega::new(2.0, 1.0).unwrap());
    let p = sample_profile(s, w, default_grid(s, w)).unwrap();
    for (f, a) in p.field.iter().zip(&p.amplitude) {
        assert!((f.norm() - a).abs() <= 4.0 * f64::EPSILON * a);
    }
}

#[test]
fn sampling_commutes_with_translation() {
    let (s, w) = (sig(1.5), Omega::new(1.0, 0.4).unwrap());
    let shift = 1.37;
    let error = |g: Grid| {
        let p = sample_profile(s, w, g).unwrap();
        let moved = spectral::translate(&g, &p.field, shift);
        let direct: Vec<Complex64> = g
            .nodes()
            .iter()
            .map(|&x| Complex64::from_polar(amplitude_at(s, w, x - shift), phase_at(s, w, x - shift)))
            .collect();
        max_diff(&moved, &direct)
    };
    // off-grid interpolation converges like e^{−π·strip/dx}, half the
    // trapezoid exponent the default spacing is tuned for
    let g = default_grid(s, w);
    let coarse = error(g);
    let fine = error(Grid::new(g.length, 2 * g.points).unwrap());
    assert!(coarse < 1e-8, "{coarse}");
    assert!(fine < 1e-12, "{fine}");
}

#[test]
fn residual_defaults_meet_tolerance() {
    for (s, w) in [(1.0, (1.0, 0.4)), (1.6, (1.0, -0.2)), (1.9, (0.5, 1.0))] {
        let (s, w) = (sig(s), Omega::new(w.0, w.1).unwrap());
        let r = stationary_residual(&sample_profile(s, w, default_grid(s, w)).unwrap());
        assert!(r <= 1e-6, "{s:?} {w:?} {r}");
    }
}

#[test]
fn derivative_step_halving_is_consistent() {
    let (s, w) = (sig(1.7), Omega::new(1.0, 0.3).unwrap());
    let g = default_grid(s, w);
    let h = default_derivative_step(w);
    let a = parameter_derivative(s, w, (0.6, -0.8), h, g).unwrap();
    let b = parameter_derivative(s, w, (0.6, -0.8), 0.5 * h, g).unwrap();
    let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
    assert!(max_diff(&a, &b) <= 1e-7 * scale);
}

#[test]
fn degenerate_ray_derivative_is_orthogonal_to_generators() {
    let spec = QuadratureSpec::default();
    let s = sig(1.6);
    let w = Omega::from_z(1.0, find_z0(s, &spec).unwrap()).unwrap();
    let g = default_grid(s, w);
    let xi = zero_eigenvector(s, w, &spec).unwrap();
    let psi = ComplexField::new(g, parameter_derivative(s, w, xi, default_derivative_step(w), g).unwrap()).unwrap();
    let phi = ComplexField::from_profile(&sample_profile(s, w, g).unwrap());
    for j in [Generator::Gauge, Generator::Translation] {
        let b = apply_b(j, &phi);
        let pairing = l2_inner(&b, &psi);
        assert!(pairing.abs() <= 1e-6 * l2_norm(&b) * l2_norm(&psi), "{j:?}: {pairing}");
    }
}
