use proptest::prelude::*;
use psdoflow::field::random_field;
use psdoflow::noise::{self, BrownianPath, NoiseFamily};
use psdoflow::psdo;
use psdoflow::{Grid, SpectralField};

fn g1(n: usize) -> Grid {
    Grid::torus(1, n).unwrap()
}

#[test]
fn derivative_noise_validates_with_zero_defect() {
    let g = g1(32);
    let fam = NoiseFamily::single(&g, 1.0, psdo::derivative(&g, 0).unwrap());
    let rep = noise::validate_noise(&fam, &g, 1);
    assert!(rep.pass(), "{rep:?}");
    assert_eq!(rep.skew_defects.len(), 1);
    assert_eq!(rep.skew_defects[0].order_estimate, f64::NEG_INFINITY);
}

#[test]
fn transport_noise_defect_is_minus_g_prime() {
    let g = g1(32);
    let gx = |x: &[f64]| 1.0 + 0.5 * x[0].cos();
    let k = psdo::transport(&g, 0, "g∂", gx).unwrap();
    let defect = k.adjoint().combine(1.0, &k, 1.0);
    // −g′ = ½ sin x
    let oracle = psdo::multiplication(&g, "−g′", |x| 0.5 * x[0].sin()).unwrap();
    let mut u = random_field(g, 1, 12, 0.0, false, 2);
    u.drop_nyquist();
    let diff = &defect.apply(&u).unwrap() - &oracle.apply(&u).unwrap();
    assert!(diff.max_abs_coeff() < 1e-9 * u.max_abs_coeff());
    let fam = NoiseFamily::single_x(&g, 0.3, k);
    let rep = noise::validate_noise(&fam, &g, 1);
    assert!(rep.pass(), "{rep:?}");
    assert!(rep.skew_defects[0].order_estimate <= 0.25);
}

#[test]
fn overlapping_amplitudes_fail_orthogonality() {
    let g = g1(16);
    let mut fam = NoiseFamily::single(&g, 1.0, psdo::derivative(&g, 0).unwrap());
    fam.q = vec![1.0];
    fam.k_ops = vec![psdo::transport(&g, 0, "g∂", |_| 1.0).unwrap()];
    let rep = noise::validate_noise(&fam, &g, 1);
    assert!(!rep.orthogonality && !rep.pass());
    assert!(noise::ito_correction(&fam, &g).is_err());
}

#[test]
fn self_adjoint_noise_fails_skew_check() {
    let g = g1(32);
    let fam = NoiseFamily::single(&g, 1.0, psdo::fractional_laplacian(&g, 1.0));
    assert!(!noise::validate_noise(&fam, &g, 1).pass());
}

#[test]
fn ito_correction_of_derivative_noise_is_viscosity() {
    let g = g1(32);
    let mu: f64 = 0.35;
    let fam = NoiseFamily::single(&g, (2.0 * mu).sqrt(), psdo::derivative(&g, 0).unwrap());
    let corr = noise::ito_correction(&fam, &g).unwrap();
    let m = corr.as_multiplier().expect("multiplier noise gives a multiplier correction");
    for idx in 0..g.len() {
        if g.touches_nyquist(idx) {
            continue;
        }
        let k = g.wavevector(idx)[0];
        assert!((m.entries_at(idx)[0].re + mu * k * k).abs() < 1e-12);
        assert!(m.entries_at(idx)[0].im.abs() < 1e-12);
    }
}

#[test]
fn ito_correction_of_silent_family_is_zero() {
    let g = g1(16);
    let mut fam = NoiseFamily::single(&g, 0.0, psdo::derivative(&g, 0).unwrap());
    let u = random_field(g, 1, 7, 0.0, false, 3);
    assert_eq!(noise::ito_correction(&fam, &g).unwrap().apply(&u).unwrap().max_abs_coeff(), 0.0);
    fam = NoiseFamily::none(&g);
    assert_eq!(noise::ito_correction(&fam, &g).unwrap().apply(&u).unwrap().max_abs_coeff(), 0.0);
}

#[test]
fn ito_correction_of_fractional_noise_matches_composition() {
    let g = g1(32);
    let (mu, alpha): (f64, f64) = (0.2, 0.4);
    let l = psdo::fractional_laplacian(&g, 2.0 * alpha);
    let fam = NoiseFamily::single(&g, (2.0 * mu).sqrt(), l.clone());
    let corr = noise::ito_correction(&fam, &g).unwrap();
    let oracle = l.compose(&l).scaled(mu);
    let u = random_field(g, 1, 15, 0.0, false, 4);
    let diff = &corr.apply(&u).unwrap() - &oracle.apply(&u).unwrap();
    assert!(diff.max_abs_coeff() < 1e-12 * u.max_abs_coeff() * 16.0);
}

#[test]
fn increment_statistics() {
    let dt = 0.01;
    let p = BrownianPath::new(99, dt);
    let n = 10_000u64;
    let xs: Vec<f64> = (0..n).map(|s| p.increment(0, s)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(mean.abs() < 4.0 * (dt / n as f64).sqrt());
    assert!((var - dt).abs() < 0.1 * dt);
}

#[test]
fn channels_are_uncorrelated() {
    let p = BrownianPath::new(5, 1.0);
    let n = 10_000u64;
    let a: Vec<f64> = (0..n).map(|s| p.increment(noise::transport_channel(0), s)).collect();
    let b: Vec<f64> = (0..n).map(|s| p.increment(noise::transport_channel(1), s)).collect();
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    assert!((cov / (va * vb).sqrt()).abs() < 0.05);
}

#[test]
fn zero_step_has_zero_increments() {
    let p = BrownianPath::new(1, 0.0);
    assert!(noise::sample_increments(&p, 17, 0..8).iter().all(|&w| w == 0.0));
}

#[test]
fn transport_and_regular_channels_interleave() {
    assert_eq!(noise::transport_channel(3), 6);
    assert_eq!(noise::regular_channel(3), 7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn increments_are_pure_functions(seed in any::<u64>(), ch in 0u64..64, step in 0u64..1_000_000) {
        let p = BrownianPath::new(seed, 1e-3);
        let q = BrownianPath::new(seed, 1e-3);
        prop_assert_eq!(p.increment(ch, step).to_bits(), q.increment(ch, step).to_bits());
    }

    #[test]
    fn shared_path_invariance(seed in any::<u64>(), step in 0u64..10_000, k1 in 1u64..8, k2 in 8u64..32) {
        // the draws of the first k1 channels do not depend on how many follow
        let p = BrownianPath::new(seed, 0.01);
        let small = noise::sample_increments(&p, step, 0..k1);
        let large = noise::sample_increments(&p, step, 0..k2);
        prop_assert_eq!(&small[..], &large[..k1 as usize]);
    }

    #[test]
    fn derived_seeds_differ(base in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assume!(i != j);
        prop_assert_ne!(noise::derive_seed(base, i), noise::derive_seed(base, j));
    }

    #[test]
    fn skew_noise_correction_is_dissipative(seed in any::<u64>(), a in 0.0f64..2.0, b in 0.0f64..2.0, amp in 0.0f64..0.9) {
        let g = g1(16);
        let mut fam = NoiseFamily::single(&g, a, psdo::derivative(&g, 0).unwrap());
        fam.a.push(0.0);
        fam.j_ops.push(psdo::zero(&g));
        fam.q.push(b);
        fam.k_ops.push(psdo::transport(&g, 0, "g∂", move |_| 1.0 + amp).unwrap());
        let corr = noise::ito_correction(&fam, &g).unwrap();
        let mut u = random_field(g, 1, 7, 0.0, false, seed);
        u.drop_nyquist();
        let e = corr.apply(&u).unwrap().inner_l2(&u).unwrap();
        prop_assert!(e <= 1e-10 * u.l2_norm().powi(2).max(1.0));
        let v: SpectralField = random_field(g, 1, 7, 0.0, false, seed ^ 1);
        let lhs = corr.apply(&u).unwrap().inner_l2(&v).unwrap();
        let rhs = u.inner_l2(&corr.apply(&v).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }
}
