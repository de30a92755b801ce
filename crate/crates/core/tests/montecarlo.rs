use std::f64::consts::PI;

use ddlv::experiment::{derive_seed, estimate_kappa, run_experiment, simulate_point, LineSync, RunConfig};
use ddlv::halfint::HalfInt;
use ddlv::noise::{sample_ou_trace, NoiseModel, TimeGrid};
use ddlv::sequence::{PulseMode, SequenceConfig};
use ddlv::sidereal::{fit_harmonics, sidereal_omega, KappaSample, SIDEREAL_DAY_S};
use ddlv::spin::SpinSystem;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn config(m_twice: i32, n_spins: u32, n_trials: u32, points: usize, seed: u64) -> RunConfig {
    let sys = SpinSystem::from_twice_j(7).unwrap();
    let seq = SequenceConfig::new(sys, 1e-3, 5, 0.0, PI, PulseMode::Instantaneous, HalfInt::from_twice(m_twice)).unwrap();
    let mut cfg = RunConfig::ideal(seq, n_spins, n_trials, (0..points).map(|k| 600.0 * k as f64).collect(), seed);
    cfg.tune_to_working_point().unwrap();
    cfg
}

#[test]
fn half_probability_binomial_moment() {
    // κ chosen so P = 1/2 exactly on the branch.
    let mut cfg = config(1, 1, 1_000_000, 1, 3);
    let cal = cfg.calibration().unwrap();
    let (mut a, mut b) = cal.branch;
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if (cal.model(mid) - 0.5) * (cal.model(cal.branch.1) - cal.model(cal.branch.0)) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    cfg.budget.quadrupole = 0.5 * (a + b) / cfg.ramsey_time();
    let out = simulate_point(&cfg, 0.0, 99).unwrap();
    assert!((out.p_expected - 0.5).abs() < 1e-9);
    let frac = out.successes as f64 / out.trials as f64;
    assert!((frac - 0.5).abs() < 3.0 * (0.25f64 / 1e6).sqrt(), "{frac}");
}

#[test]
fn exact_inversion_of_noiseless_population() {
    let cfg = config(3, 1, 100, 1, 0);
    let cal = cfg.calibration().unwrap();
    let trials = 1u64 << 50;
    for dchi in [-0.02, 0.0, 0.017] {
        let chi = cal.chi_center + dchi;
        let successes = (cal.model(chi) * trials as f64).round() as u64;
        let e = estimate_kappa(successes, trials, &cal).unwrap();
        assert!((e.kappa - chi / cfg.ramsey_time()).abs() * cfg.ramsey_time() < 1e-10);
    }
}

#[test]
fn no_wraps_inside_half_branch() {
    let mut cfg = config(1, 10, 1000, 300, 5);
    let cal = cfg.calibration().unwrap();
    let half_width = 0.5 * cal.branch_width().min(2.0 * (cal.branch.1 - cal.chi_center)).min(2.0 * (cal.chi_center - cal.branch.0));
    // A static offset of 0.4 half-widths stays well inside the branch.
    cfg.injected.kappa_static = 0.0;
    cfg.budget.lv_term = 0.4 * half_width / cfg.ramsey_time();
    let rec = run_experiment(&cfg).unwrap();
    assert_eq!(rec.wrap_count(), 0);
}

#[test]
fn records_are_identical_across_thread_counts() {
    let mut cfg = config(1, 2, 20, 40, 7);
    cfg.noise = NoiseModel::line_only(2.0 * PI * 300.0);
    cfg.line_sync = LineSync::FreeRunning;
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_experiment(&cfg).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a, b);
    assert!(a.points.iter().all(|p| p.successes <= p.trials && p.trials == 40));
    assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
}

#[test]
fn sigma_shrinks_with_spin_count() {
    let s: Vec<f64> = [1u32, 4, 16]
        .iter()
        .map(|&n| {
            let cfg = config(1, n, 100, 1, 1);
            let cal = cfg.calibration().unwrap();
            let trials = (n * 100) as u64;
            let successes = (cal.model(cal.chi_center) * trials as f64).round() as u64;
            estimate_kappa(successes, trials, &cal).unwrap().sigma
        })
        .collect();
    assert!((s[0] / s[1] / 2.0 - 1.0).abs() < 0.05);
    assert!((s[0] / s[2] / 4.0 - 1.0).abs() < 0.05);
}

#[test]
fn ou_stationary_moments() {
    let model = NoiseModel { ou_sigma: 3.0, ou_tau_c: 0.01, ..NoiseModel::quiet() };
    let dt = 1e-3;
    let grid = TimeGrid::new(0.0, dt, 400_000).unwrap();
    let tr = sample_ou_trace(&model, grid, 17).unwrap();
    let x = tr.samples();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let lag = 10;
    let cov = x.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum::<f64>() / (n - lag as f64);
    assert!(mean.abs() < 0.1, "{mean}");
    assert!((var / 9.0 - 1.0).abs() < 0.05, "{var}");
    assert!((cov / var - (-(lag as f64) * dt / 0.01f64).exp()).abs() < 0.03);
}

#[test]
fn fit_coverage_at_three_standard_errors() {
    let w = sidereal_omega();
    let n = 200;
    let sigma = 0.5;
    let se = sigma * (2.0f64 / n as f64).sqrt();
    let amp = 3.0 * se;
    let mut ok = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let rec: Vec<KappaSample> = (0..n)
            .map(|k| {
                let t = 10.0 * SIDEREAL_DAY_S * k as f64 / n as f64;
                KappaSample { t, kappa: 1.0 + amp * (w * t).cos() + noise.sample(&mut rng), sigma }
            })
            .collect();
        let h = fit_harmonics(&rec, &[w], 0.0).unwrap().harmonics[0];
        if (h.cos_amp - amp).abs() < 3.0 * h.cos_err {
            ok += 1;
        }
    }
    assert!(ok >= 990, "{ok}");
}
