use std::f64::consts::E;

use proptest::prelude::*;
use psdoflow::field::random_field;
use psdoflow::integrator::{
    self, chi_r, integrate_system, log_lyapunov, lyapunov_trace, observed_order, psi_functional, Cutoff, Functional,
    Monitor, RunSettings, Scheme, SimConfig, Status, Stepper, System,
};
use psdoflow::models::{self, Model, ModelKind, ModelParams};
use psdoflow::noise::{NoiseFamily, RegularNoise};
use psdoflow::psdo;
use psdoflow::{Grid, SpectralField};

fn g1(n: usize) -> Grid {
    Grid::torus(1, n).unwrap()
}

fn sine(g: Grid) -> SpectralField {
    SpectralField::from_fn(g, 1, |_, x| x[0].sin()).unwrap()
}

fn linear(g: Grid, mu: f64) -> Model {
    Model::new(ModelKind::Linear, g, ModelParams { mu, ..ModelParams::default() }).unwrap()
}

fn quiet(mut s: RunSettings) -> RunSettings {
    s.monitors = Some(vec![]);
    s
}

#[test]
fn zero_system_leaves_the_state_alone() {
    let g = g1(16);
    let sys = System::assemble(&linear(g, 0.0), &NoiseFamily::none(&g), None).unwrap();
    let x = random_field(g, 1, 7, 0.0, false, 1);
    for scheme in [Scheme::ItoEuler, Scheme::StratHeun, Scheme::SemiImplicitIto] {
        let s = RunSettings::new(0.1, 1.0, scheme);
        let mut st = Stepper::new(&sys, &s, &x).unwrap();
        let (next, chi) = st.advance(&x, 0).unwrap();
        assert_eq!(chi, 1.0);
        assert!((&next - &x).max_abs_coeff() < 1e-15);
    }
}

#[test]
fn euler_heat_step_on_one_mode() {
    let g = g1(16);
    let sys = System::assemble(&linear(g, 1.0), &NoiseFamily::none(&g), None).unwrap();
    let dt = 0.01;
    let x = sine(g);
    let mut st = Stepper::new(&sys, &RunSettings::new(dt, 1.0, Scheme::ItoEuler), &x).unwrap();
    let (next, _) = st.advance(&x, 0).unwrap();
    assert!((&next - &x.scaled(1.0 - dt)).max_abs_coeff() < 1e-14);
}

#[test]
fn heun_is_second_order_without_noise() {
    let g = g1(16);
    let sys = System::assemble(&linear(g, 1.0), &NoiseFamily::none(&g), None).unwrap();
    let x = sine(g);
    let dt = 0.01;
    let mut st = Stepper::new(&sys, &RunSettings::new(dt, 1.0, Scheme::StratHeun), &x).unwrap();
    let (next, _) = st.advance(&x, 0).unwrap();
    assert!((&next - &x.scaled(1.0 - dt + 0.5 * dt * dt)).max_abs_coeff() < 1e-14);
    let dts = [0.02, 0.01, 0.005];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let rec = integrate_system(&sys, &x, &quiet(RunSettings::new(dt, 1.0, Scheme::StratHeun))).unwrap();
            (&rec.final_state.unwrap() - &x.scaled((-1.0f64).exp())).l2_norm()
        })
        .collect();
    let order = observed_order(&dts, &errs);
    assert!((order - 2.0).abs() < 0.1, "{order}");
}

#[test]
fn stability_cap_rejects_stiff_explicit_runs() {
    let g = g1(64);
    let sys = System::assemble(&linear(g, 1.0), &NoiseFamily::none(&g), None).unwrap();
    let x = sine(g);
    assert!(Stepper::new(&sys, &RunSettings::new(0.01, 1.0, Scheme::ItoEuler), &x).is_err());
    assert!(Stepper::new(&sys, &RunSettings::new(0.01, 1.0, Scheme::SemiImplicitIto), &x).is_ok());
}

/// One Euler step on mode 1 with noise `a∂`: `E|X'|² = |X|²(1 + a⁴dt²/4)`.
#[test]
fn euler_energy_drift_matches_ito_correction() {
    let g = g1(16);
    let a = 0.8;
    let dt = 0.01;
    let fam = NoiseFamily::single(&g, a, psdo::derivative(&g, 0).unwrap());
    let sys = System::assemble(&linear(g, 0.0), &fam, None).unwrap();
    let x = sine(g);
    let mut st = Stepper::new(&sys, &RunSettings::new(dt, 1.0, Scheme::ItoEuler), &x).unwrap();
    let e0 = x.l2_norm().powi(2);
    let n = 10_000u64;
    let d: Vec<f64> = (0..n).map(|step| st.advance(&x, step).unwrap().0.l2_norm().powi(2) - e0).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let want = e0 * 0.25 * a.powi(4) * dt * dt;
    assert!((mean - want).abs() <= 3.0 * sd / (n as f64).sqrt(), "mean {mean}, want {want}, sd {sd}");
}

/// Mean `|X̂_k(T)|²` under Euler–Maruyama against its per-mode closed form.
#[test]
fn ito_second_moment_matches_closed_form() {
    let g = g1(16);
    let a = 0.5;
    let dt = 0.01;
    let fam = NoiseFamily::single(&g, a, psdo::derivative(&g, 0).unwrap());
    let model = linear(g, 0.0);
    let x0 = SpectralField::from_fn(g, 1, |_, x| x[0].sin() + 0.5 * (2.0 * x[0]).cos()).unwrap();
    let mut run = quiet(RunSettings::new(dt, 1.0, Scheme::ItoEuler));
    run.seed = 3;
    run.record_every = usize::MAX;
    let steps = run.steps() as i32;
    let cfg = SimConfig { model, noise: fam, initial: x0.clone(), run };
    let paths = 256;
    let recs = integrator::run_ensemble(&cfg, paths).unwrap();
    for k in [1i64, 2] {
        let c0 = x0.coeff(0, &[k]).norm_sqr();
        let v: Vec<f64> = recs.iter().map(|r| r.final_state.as_ref().unwrap().coeff(0, &[k]).norm_sqr() / c0).collect();
        let mean = v.iter().sum::<f64>() / paths as f64;
        let se = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (paths - 1) as f64 / paths as f64).sqrt();
        let a2 = (a * k as f64).powi(2);
        let want = (1.0 + 0.25 * a2 * a2 * dt * dt).powi(steps);
        assert!((mean - want).abs() <= 3.0 * se, "k = {k}: {mean} vs {want} (se {se})");
    }
}

#[test]
fn heun_and_euler_agree_on_a_shared_path() {
    let g = g1(16);
    let fam = NoiseFamily::single(&g, 0.5, psdo::derivative(&g, 0).unwrap());
    let sys = System::assemble(&linear(g, 0.0), &fam, None).unwrap();
    let x0 = SpectralField::from_fn(g, 1, |_, x| x[0].sin() + 0.5 * (2.0 * x[0]).cos()).unwrap();
    let dts = [4e-3, 2e-3, 1e-3];
    let gaps: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            (0..40u64)
                .map(|p| {
                    let mut s = quiet(RunSettings::new(dt, 0.5, Scheme::ItoEuler));
                    s.seed = 100 + p;
                    s.record_every = usize::MAX;
                    let ito = integrate_system(&sys, &x0, &s).unwrap().final_state.unwrap();
                    s.scheme = Scheme::StratHeun;
                    let strat = integrate_system(&sys, &x0, &s).unwrap().final_state.unwrap();
                    (&ito - &strat).l2_norm()
                })
                .sum::<f64>()
                / 40.0
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    let order = observed_order(&dts, &gaps);
    assert!(order >= 0.35, "{gaps:?}: {order}");
}

#[test]
fn heat_decay_rate() {
    let g = g1(32);
    let sys = System::assemble(&linear(g, 1.0), &NoiseFamily::none(&g), None).unwrap();
    let x0 = sine(g);
    let mut s = RunSettings::new(1e-3, 1.0, Scheme::ItoEuler);
    s.theta = 0.0;
    let rec = integrate_system(&sys, &x0, &s).unwrap();
    assert_eq!(rec.status, Status::Completed);
    let want = (-1.0f64).exp() * x0.l2_norm();
    assert!((rec.h_theta.last().unwrap() - want).abs() < 1e-3);
    let v = lyapunov_trace(&rec, log_lyapunov);
    assert!(v.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn inviscid_burgers_blows_up_near_one() {
    let g = g1(1024);
    let model = Model::new(ModelKind::Burgers, g, ModelParams::default()).unwrap();
    let sys = System::assemble(&model, &NoiseFamily::none(&g), None).unwrap();
    let x0 = sine(g).scaled(-1.0);
    let mut s = RunSettings::new(1e-3, 1.5, Scheme::SemiImplicitIto);
    s.theta = 2.0;
    s.monitors = Some(vec![Monitor::new(Functional::gradient(), 50.0)]);
    let rec = integrate_system(&sys, &x0, &s).unwrap();
    let t = rec.status.t_star().expect("blow-up detected");
    assert!((0.95..=1.05).contains(&t), "{t}");
    let v = lyapunov_trace(&rec, log_lyapunov);
    assert!(v.last().unwrap() > &(3.0 * v[0]), "{} vs {}", v.last().unwrap(), v[0]);
    // the warning (threshold/10) precedes the fire
    assert!(rec.monitors[0].warning_time.unwrap() < t);
}

#[test]
fn zero_trajectory_has_unit_lyapunov_trace() {
    let g = g1(16);
    let sys = System::assemble(&linear(g, 1.0), &NoiseFamily::none(&g), None).unwrap();
    let rec =
        integrate_system(&sys, &SpectralField::zeros(g, 1), &RunSettings::new(0.01, 0.2, Scheme::ItoEuler)).unwrap();
    assert!(lyapunov_trace(&rec, log_lyapunov).iter().all(|&v| v == 1.0));
}

#[test]
fn chi_examples() {
    let r = 2.0;
    assert_eq!(chi_r(0.5 * r, r).unwrap(), 1.0);
    assert_eq!(chi_r(3.0 * r, r).unwrap(), 0.0);
    assert!((chi_r(1.5 * r, r).unwrap() - 0.5).abs() < 1e-15);
    assert!(chi_r(1.0, 0.0).is_err());
    assert!(chi_r(1.0, -1.0).is_err());
}

#[test]
fn psi_examples() {
    let g = g1(32);
    let x = SpectralField::from_fn(g, 1, |_, x| 2.0 * x[0].sin()).unwrap();
    assert_eq!(psi_functional(&x, 1.0, &NoiseFamily::none(&g), 1.0, 8).unwrap(), 0.0);
    let fam = NoiseFamily::none(&g).with_regular(RegularNoise::linear(vec![1.0]));
    let n2 = x.sobolev_norm(1.0).powi(2);
    let want = n2 - 2.0 * n2 * n2 / (E + n2);
    let got = psi_functional(&x, 1.0, &fam, 1.0, 8).unwrap();
    assert!((got - want).abs() < 1e-10);
    assert!(n2 > E && got < 0.0);
    assert_eq!(psi_functional(&x, 1.0, &fam, 5.0, 1).unwrap(), got);
    assert!(psi_functional(&x, 0.0, &fam, 1.0, 8).is_err());
}

#[test]
fn wide_cutoff_does_not_change_the_trajectory() {
    let g = g1(32);
    let fam = NoiseFamily::single(&g, 0.3, psdo::derivative(&g, 0).unwrap());
    let model = Model::new(ModelKind::Burgers, g, ModelParams { mu: 0.2, ..ModelParams::default() }).unwrap();
    let sys = System::assemble(&model, &fam, None).unwrap();
    let x0 = sine(g).scaled(0.5);
    for scheme in [Scheme::ItoEuler, Scheme::SemiImplicitIto] {
        let mut s = RunSettings::new(1e-3, 0.3, scheme);
        s.seed = 8;
        let free = integrate_system(&sys, &x0, &s).unwrap();
        s.cutoff = Some(Cutoff { radius: 1e3, theta: 1.0 });
        let cut = integrate_system(&sys, &x0, &s).unwrap();
        assert_eq!(cut.chi_min, 1.0);
        assert_eq!(free.final_state.unwrap().coeffs(), cut.final_state.unwrap().coeffs());
    }
}

#[test]
fn cutoff_is_rejected_for_heun() {
    let mut s = RunSettings::new(1e-3, 0.3, Scheme::StratHeun);
    s.cutoff = Some(Cutoff { radius: 1.0, theta: 1.0 });
    assert!(s.validate().is_err());
}

#[test]
fn mhd_states_stay_divergence_free() {
    let g = Grid::torus(2, 16).unwrap();
    let model = Model::new(ModelKind::Mhd, g, ModelParams { mu: 0.05, mu2: 0.05, ..ModelParams::default() }).unwrap();
    let mut fam = NoiseFamily::single(&g, 0.1, psdo::derivative(&g, 0).unwrap());
    fam.a.push(0.1);
    fam.j_ops.push(psdo::derivative(&g, 1).unwrap());
    fam.q.push(0.0);
    fam.k_ops.push(psdo::zero(&g));
    let x0 = models::InitialData::TaylorGreen { amplitude: 1.0, magnetic: 0.3 }.build(&g, 4).unwrap();
    let mut run = RunSettings::new(1e-3, 0.2, Scheme::SemiImplicitIto);
    run.seed = 4;
    run.snapshot_every = Some(10);
    let cfg = SimConfig { model, noise: fam, initial: x0, run };
    let rec = integrator::integrate(&cfg).unwrap();
    assert_eq!(rec.status, Status::Completed);
    assert!(rec.snapshots.len() > 10);
    for (_, x) in &rec.snapshots {
        assert!(models::divergence_residue(x) < 1e-8);
    }
}

fn noisy_system(g: Grid) -> System {
    let fam =
        NoiseFamily::single(&g, 0.4, psdo::derivative(&g, 0).unwrap()).with_regular(RegularNoise::linear(vec![0.3]));
    let model = Model::new(ModelKind::Burgers, g, ModelParams { mu: 0.1, ..ModelParams::default() }).unwrap();
    System::assemble(&model, &fam, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chi_is_monotone_and_bounded(r in 0.01f64..10.0, a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (chi_r(lo, r).unwrap(), chi_r(hi, r).unwrap());
        prop_assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
        prop_assert!(y <= x);
    }

    #[test]
    fn seed_determinism(seed in any::<u64>(), scheme in 0u8..3) {
        let g = g1(32);
        let sys = noisy_system(g);
        let scheme = [Scheme::ItoEuler, Scheme::StratHeun, Scheme::SemiImplicitIto][scheme as usize];
        let mut s = RunSettings::new(1e-3, 0.05, scheme);
        s.seed = seed;
        let x0 = sine(g);
        let a = integrate_system(&sys, &x0, &s).unwrap();
        let b = integrate_system(&sys, &x0, &s).unwrap();
        let (fa, fb) = (a.final_state.clone().unwrap(), b.final_state.clone().unwrap());
        prop_assert_eq!(fa.coeffs(), fb.coeffs());
        prop_assert_eq!(&a.h_theta, &b.h_theta);
        prop_assert_eq!(&a.flags, &b.flags);
    }

    #[test]
    fn cutoff_monotonicity(seed in any::<u64>(), r1 in 0.05f64..0.3, extra in 0.01f64..1.0) {
        let g = g1(32);
        let sys = noisy_system(g);
        let x0 = sine(g);
        let mut s = RunSettings::new(1e-3, 0.2, Scheme::ItoEuler);
        s.seed = seed;
        s.snapshot_every = Some(1);
        s.cutoff = Some(Cutoff { radius: r1, theta: 1.0 });
        let small = integrate_system(&sys, &x0, &s).unwrap();
        s.cutoff = Some(Cutoff { radius: r1 + extra, theta: 1.0 });
        let large = integrate_system(&sys, &x0, &s).unwrap();
        for ((_, a), (_, b)) in small.snapshots.iter().zip(&large.snapshots) {
            prop_assert_eq!(a.coeffs(), b.coeffs());
            if (a - &x0).sobolev_norm(1.0) >= r1 {
                break;
            }
        }
    }
}
