use std::f64::consts::PI;

use proptest::prelude::*;
use psdoflow::field::{random_field, sobolev_embedding_constant};
use psdoflow::{Complex64, Grid, RealField, SpectralField};

fn g1(n: usize) -> Grid {
    Grid::torus(1, n).unwrap()
}

#[test]
fn constant_has_only_the_mean_mode() {
    let u = RealField::from_fn(g1(16), 1, |_, _| 1.0).unwrap().to_spectral();
    assert!((u.coeff(0, &[0]) - Complex64::new(2.0 * PI, 0.0)).norm() < 1e-12);
    assert!(u.coeffs()[1..].iter().all(|c| c.norm() < 1e-12));
}

#[test]
fn sine_coefficients() {
    let u = RealField::from_fn(g1(16), 1, |_, x| x[0].sin()).unwrap().to_spectral();
    assert!((u.coeff(0, &[1]) - Complex64::new(0.0, -PI)).norm() < 1e-12);
    assert!((u.coeff(0, &[-1]) - Complex64::new(0.0, PI)).norm() < 1e-12);
}

#[test]
fn inverse_of_sine_coefficients() {
    let g = g1(16);
    let mut u = SpectralField::zeros(g, 1);
    u.set_coeff(0, &[1], Complex64::new(0.0, -PI));
    u.set_coeff(0, &[-1], Complex64::new(0.0, PI));
    let r = u.to_real().unwrap();
    for idx in 0..g.len() {
        assert!((r.values()[idx] - g.point(idx)[0].sin()).abs() < 1e-12);
    }
    let mut c = SpectralField::zeros(g, 1);
    c.set_coeff(0, &[0], Complex64::new(2.0 * PI, 0.0));
    assert!(c.to_real().unwrap().values().iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn broken_symmetry_is_an_error() {
    let mut u = SpectralField::zeros(g1(16), 1);
    u.set_coeff(0, &[2], Complex64::new(1.0, 0.0));
    assert!(u.to_real().is_err());
}

#[test]
fn non_finite_values_are_rejected() {
    assert!(RealField::new(g1(8), 1, vec![f64::NAN; 8]).is_err());
}

#[test]
fn sobolev_inner_of_sine() {
    let u = SpectralField::from_fn(g1(32), 1, |_, x| x[0].sin()).unwrap();
    assert!((u.sobolev_inner(&u, 0.0).unwrap() - PI).abs() < 1e-12);
    assert!((u.sobolev_inner(&u, 1.0).unwrap() - 2.0 * PI).abs() < 1e-12);
    let v = SpectralField::from_fn(g1(32), 1, |_, x| (3.0 * x[0]).cos()).unwrap();
    assert!(u.sobolev_inner(&v, 2.0).unwrap().abs() < 1e-12);
    assert!(u.sobolev_inner(&SpectralField::zeros(g1(16), 1), 0.0).is_err());
}

#[test]
fn wk_inf_of_sine_and_zero() {
    let u = SpectralField::from_fn(g1(32), 1, |_, x| x[0].sin()).unwrap();
    // the grid contains x = π/2
    assert!((u.wk_inf_norm(0).unwrap() - 1.0).abs() < 1e-8);
    assert!((u.wk_inf_norm(1).unwrap() - 2.0).abs() < 1e-8);
    assert_eq!(SpectralField::zeros(g1(32), 1).wk_inf_norm(2).unwrap(), 0.0);
}

#[test]
fn period_scales_wavenumbers() {
    let g = Grid::new(1, 32, 4.0 * PI).unwrap();
    let u = SpectralField::from_fn(g, 1, |_, x| (0.5 * x[0]).sin()).unwrap();
    assert!((u.derivative(0).wk_inf_norm(0).unwrap() - 0.5).abs() < 1e-8);
}

#[test]
fn grid_contract() {
    assert!(Grid::torus(1, 2).is_err());
    assert!(Grid::torus(1, 7).is_err());
    assert!(Grid::torus(0, 8).is_err());
    let g = Grid::torus(1, 8).unwrap();
    let freqs: Vec<i64> = (0..8).map(|i| g.frequency(i)[0]).collect();
    let mut sorted = freqs.clone();
    sorted.sort();
    assert_eq!(sorted, (-3..=4).collect::<Vec<_>>());
}

fn band_limited(d: usize, n: usize, seed: u64) -> SpectralField {
    let g = Grid::torus(d, n).unwrap();
    random_field(g, 2, (n / 2 - 1) as i64, 0.5, false, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn round_trip(seed in any::<u64>(), d in 1usize..=2) {
        let u = band_limited(d, 16, seed);
        let back = u.to_real().unwrap().to_spectral();
        prop_assert!((&back - &u).max_abs_coeff() <= 1e-12 * u.max_abs_coeff().max(1.0));
        let r = u.to_real().unwrap();
        let again = r.to_spectral().to_real().unwrap();
        let err = r.values().iter().zip(again.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12 * r.max_abs().max(1.0));
    }

    #[test]
    fn parseval(seed in any::<u64>(), d in 1usize..=2) {
        let u = band_limited(d, 16, seed);
        let r = u.to_real().unwrap();
        let quad = r.inner_l2(&r);
        let spec = u.sobolev_inner(&u, 0.0).unwrap();
        prop_assert!((quad - spec).abs() <= 1e-10 * spec.max(1.0));
    }

    #[test]
    fn sobolev_norm_monotone_in_s(seed in any::<u64>(), s1 in -2.0f64..3.0, ds in 0.0f64..2.0) {
        let u = band_limited(1, 32, seed);
        prop_assert!(u.sobolev_inner(&u, s1).unwrap() <= u.sobolev_inner(&u, s1 + ds).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn sup_norm_embedding(seed in any::<u64>(), sigma in 0.6f64..3.0) {
        let g = g1(32);
        let u = random_field(g, 1, 15, 0.0, false, seed);
        let c = sobolev_embedding_constant(&g, sigma);
        prop_assert!(u.wk_inf_norm(0).unwrap() <= c * u.sobolev_norm(sigma) * (1.0 + 1e-12));
    }
}
