use proptest::prelude::*;
use psdoflow::field::random_field;
use psdoflow::integrator::{RunSettings, Scheme, System};
use psdoflow::lab::{self, assemble_gn, burgers_gauge_test, cauchy_gap, check_lak, check_r4, GaugeSetup};
use psdoflow::models::{Model, ModelKind, ModelParams};
use psdoflow::noise::NoiseFamily;
use psdoflow::psdo;
use psdoflow::{Grid, SpectralField};

fn g1(n: usize) -> Grid {
    Grid::torus(1, n).unwrap()
}

fn burgers(g: Grid) -> Model {
    Model::new(ModelKind::Burgers, g, ModelParams::default()).unwrap()
}

fn heat(g: Grid, mu: f64) -> Model {
    Model::new(ModelKind::Linear, g, ModelParams { mu, ..Default::default() }).unwrap()
}

#[test]
fn identity_level_reproduces_the_full_drift() {
    let g = g1(32);
    let m = burgers(g);
    let fam = NoiseFamily::single(&g, 0.4, psdo::derivative(&g, 0).unwrap());
    let x = random_field(g, 1, 8, 1.0, false, 9);
    let full = System::assemble(&m, &fam, None).unwrap().ito_drift(&x).unwrap();
    let reg = assemble_gn(&m, &fam, g.identity_mollifier_level()).unwrap();
    assert_eq!(full, reg.g(&x).unwrap());
}

#[test]
fn heat_gn_damps_by_the_mollifier_squared() {
    let g = g1(32);
    let x = SpectralField::from_fn(g, 1, |_, x| (3.0 * x[0]).sin()).unwrap();
    let r = assemble_gn(&heat(g, 1.0), &NoiseFamily::none(&g), 2).unwrap();
    let phi = psdo::mollifier_profile(1.5);
    assert!((phi - 0.5).abs() < 1e-15);
    let expect = x.scaled(-9.0 * phi * phi);
    assert!((&r.g(&x).unwrap() - &expect).max_abs_coeff() < 1e-13);
}

#[test]
fn modes_above_the_band_are_invisible() {
    // J_n X = 0 kills every mollified term of g_n; only the regular drift b̃ remains
    let g = g1(128);
    let m = Model::new(ModelKind::Ch, g, ModelParams { mu: 0.1, a2: 1.5, a: 0.5, ..Default::default() }).unwrap();
    let fam = NoiseFamily::single(&g, 0.3, psdo::derivative(&g, 0).unwrap());
    let x = SpectralField::from_fn(g, 1, |_, x| (40.0 * x[0]).sin() + (37.0 * x[0]).cos()).unwrap();
    let r = assemble_gn(&m, &fam, 8).unwrap();
    let rest = &r.g(&x).unwrap() - &m.regular_drift(&x).unwrap();
    assert!(rest.max_abs_coeff() < 1e-12 * m.regular_drift(&x).unwrap().max_abs_coeff());
    let b = burgers(g);
    assert!(assemble_gn(&b, &fam, 8).unwrap().g(&x).unwrap().max_abs_coeff() < 1e-12);
    assert!(r.h(0.0, &x).unwrap().iter().all(|h| h.max_abs_coeff() < 1e-12));
}

#[test]
fn skew_transport_does_not_feed_q1() {
    let g = g1(32);
    let fam = NoiseFamily::single(&g, 0.5, psdo::derivative(&g, 0).unwrap());
    let xs: Vec<_> = (0..3).map(|i| random_field(g, 1, 8, 1.0, false, 20 + i)).collect();
    let rep = check_r4(&burgers(g), &fam, &[2, 4, 8], &xs, 1.0).unwrap();
    assert!(rep.x_independent);
    assert!(rep.samples.iter().all(|s| s.transport_q1 <= lab::ZERO_TOLERANCE), "{rep:?}");
}

#[test]
fn heat_has_nonpositive_q2() {
    let g = g1(32);
    let xs: Vec<_> = (0..3).map(|i| random_field(g, 1, 10, 0.5, false, 30 + i)).collect();
    let rep = check_r4(&heat(g, 0.7), &NoiseFamily::none(&g), &[1, 2, 4, 8], &xs, 1.0).unwrap();
    assert!(rep.samples.iter().flat_map(|s| &s.q2).all(|&q| q <= 0.0));
}

#[test]
fn burgers_r4_constants_are_level_stable() {
    // smooth samples; measured Q2 constants 0.0133, 0.0142, 0.0125, 0.0125
    let g = g1(64);
    let xs: Vec<_> = (0..3).map(|i| random_field(g, 1, 10, 3.0, false, 40 + i)).collect();
    let rep = check_r4(&burgers(g), &NoiseFamily::none(&g), &[2, 4, 8, 16], &xs, 1.0).unwrap();
    assert!(rep.pass, "{:?}", rep.messages);
    assert!(rep.spreads[1] < 1.2, "{:?}", rep.spreads);
    assert!(rep.constants[1].iter().all(|&c| (0.012..0.015).contains(&c)), "{:?}", rep.constants);
    // no noise, so Q1 vanishes
    assert!(rep.constants[0].iter().all(|&c| c == 0.0));
}

fn lak_samples(g: Grid) -> Vec<SpectralField> {
    (0..3).map(|i| random_field(g, 1, 6, 2.0, false, 100 + i)).collect()
}

#[test]
fn derivative_family_has_vanishing_lo1() {
    let g = g1(64);
    let fam = NoiseFamily::single(&g, 1.0, psdo::derivative(&g, 0).unwrap());
    let rep = check_lak(&fam, &g, 1.0, &lak_samples(g), &[4, 8, 16]).unwrap();
    assert!(rep.pass, "{:?}", rep.messages);
    assert!(rep.lo1_max <= lab::ZERO_TOLERANCE);
}

#[test]
fn variable_transport_is_level_stable_but_single_terms_grow() {
    let g = g1(64);
    let k = psdo::quantize(&psdoflow::noise::transport_symbol(0, |x| 1.0 + 0.5 * x[0].cos()), &g).unwrap();
    let fam = NoiseFamily::single_x(&g, 1.0, k);
    let rep = check_lak(&fam, &g, 1.0, &lak_samples(g), &[4, 8, 16]).unwrap();
    assert!(rep.pass, "{:?}", rep.messages);
    assert!(rep.spreads.iter().all(|&v| v < lab::SPREAD_LIMIT));
    assert!(rep.probe_growth.iter().all(|&v| v < lab::PROBE_GROWTH_LIMIT));
    assert!(rep.naive_growth > lab::PROBE_GROWTH_LIMIT, "uncancelled growth {}", rep.naive_growth);
}

#[test]
fn silent_family_gives_zero_lak_quantities() {
    let g = g1(32);
    let mut fam = NoiseFamily::single(&g, 0.0, psdo::derivative(&g, 0).unwrap());
    fam.q = vec![0.0];
    let rep = check_lak(&fam, &g, 1.0, &lak_samples(g), &[4, 8]).unwrap();
    assert!(rep.constants.iter().flatten().all(|&c| c == 0.0));
    assert!(rep.spreads.iter().all(|&s| s == 1.0));
}

#[test]
fn self_adjoint_control_fails_lak() {
    let g = g1(64);
    let fam = NoiseFamily::single(&g, 1.0, psdo::fractional_laplacian(&g, 1.0));
    let rep = check_lak(&fam, &g, 1.0, &lak_samples(g), &[4, 8, 16]).unwrap();
    assert!(!rep.pass);
    assert!(!rep.messages.is_empty());
}

#[test]
fn probe_field_is_the_stated_pair() {
    let g = g1(32);
    let p = lab::probe_field(&g, 1, 4).unwrap();
    let q = SpectralField::from_fn(g, 1, |_, x| (4.0 * x[0]).cos() + (5.0 * x[0]).sin()).unwrap();
    assert!((&p - &q).max_abs_coeff() < 1e-12);
}

#[test]
fn deterministic_burgers_gap_shrinks_with_level() {
    let g = g1(64);
    let x0 = SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap();
    let mut s = RunSettings::new(1e-3, 0.3, Scheme::SemiImplicitIto);
    s.theta = 2.0;
    let gaps: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&n| cauchy_gap(&burgers(g), &NoiseFamily::none(&g), &x0, n, 32, &s, 1, None).unwrap().mean)
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert_eq!(cauchy_gap(&burgers(g), &NoiseFamily::none(&g), &x0, 32, 32, &s, 1, None).unwrap().mean, 0.0);
}

#[test]
fn gap_levels_must_be_ordered() {
    let g = g1(16);
    let x0 = SpectralField::zeros(g, 1);
    let s = RunSettings::new(1e-3, 0.01, Scheme::SemiImplicitIto);
    assert!(cauchy_gap(&burgers(g), &NoiseFamily::none(&g), &x0, 8, 4, &s, 1, None).is_err());
}

#[test]
fn exit_radius_stops_paths() {
    let g = g1(16);
    let x0 = SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap();
    let s = RunSettings::new(1e-3, 0.01, Scheme::SemiImplicitIto);
    let r = cauchy_gap(&heat(g, 0.1), &NoiseFamily::none(&g), &x0, 2, 4, &s, 3, Some(1e-3)).unwrap();
    assert_eq!(r.stopped, 3);
    assert_eq!(r.per_path.len(), 3);
}

#[test]
fn gauge_agrees_as_noise_vanishes() {
    let g = g1(64);
    let x0 = SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap();
    let setup = GaugeSetup { n_grid: 64, dt: 1e-4, t_end: 0.1 };
    let out = burgers_gauge_test(1e-14, 0.5, 3, &x0, setup).unwrap();
    assert!(out.discrepancy.unwrap() < 1e-6, "{out:?}");
}

#[test]
fn gauge_rejects_bad_parameters() {
    let g = g1(32);
    let x0 = SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap();
    let setup = GaugeSetup { n_grid: 32, dt: 1e-3, t_end: 0.01 };
    assert!(burgers_gauge_test(0.05, 0.0, 1, &x0, setup).is_err());
    assert!(burgers_gauge_test(0.05, 0.6, 1, &x0, setup).is_err());
    assert!(burgers_gauge_test(-0.1, 0.5, 1, &x0, setup).is_err());
    assert!(burgers_gauge_test(0.05, 0.5, 1, &x0, GaugeSetup { n_grid: 64, ..setup }).is_err());
}

#[test]
fn gauge_overflow_guard_aborts() {
    let g = g1(64);
    let x0 = SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap();
    let setup = GaugeSetup { n_grid: 64, dt: 1e-2, t_end: 1.0 };
    let out = burgers_gauge_test(5000.0, 0.5, 7, &x0, setup).unwrap();
    assert!(out.aborted && out.discrepancy.is_none());
    assert!(out.max_exponent > lab::GAUGE_EXPONENT_CAP);
    // a blow-up of either route counts as an abort, not an error
    let out = burgers_gauge_test(50.0, 0.5, 7, &x0, setup).unwrap();
    assert!(out.aborted && out.discrepancy.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn skew_transport_vanishes_from_q1(sigma in 0.0f64..2.0, n in 1usize..12, seed in any::<u64>()) {
        let g = g1(32);
        let fam = NoiseFamily::single(&g, sigma, psdo::derivative(&g, 0).unwrap());
        let x = random_field(g, 1, 10, 1.0, false, seed);
        let rep = check_r4(&burgers(g), &fam, &[n], &[x], 1.0).unwrap();
        prop_assert!(rep.samples[0].transport_q1 <= lab::ZERO_TOLERANCE);
    }

    #[test]
    fn spread_is_at_least_one(v in prop::collection::vec(-10.0f64..10.0, 1..8)) {
        prop_assert!(lab::spread(&v) >= 1.0);
    }
}
