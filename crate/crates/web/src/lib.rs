//! Browser bindings: fringe surface, working point and a Monte Carlo fringe
//! under line noise. Spin quantum numbers are passed doubled (2J, 2m).

use ddlv::experiment::{simulate_point, RunConfig};
use ddlv::sequence::{fringe_probability, linspace, Fringe};
use ddlv::{fringe_grid, optimal_working_point, HalfInt, NoiseModel, PulseMode, SequenceConfig, SpinSystem};
use wasm_bindgen::prelude::*;

const T_W: f64 = 150e-6;

fn half(doubled: i32) -> ddlv::Result<HalfInt> {
    HalfInt::from_f64(doubled as f64 / 2.0)
}

/// Row-major `P(κT_i, φ_j)` over κT ∈ [0, π] and φ ∈ [0, 2π).
pub fn surface(two_j: i32, two_m: i32, kt_points: usize, phi_points: usize) -> ddlv::Result<Vec<f64>> {
    let sys = SpinSystem::new(half(two_j)?)?;
    let kt = linspace(0.0, std::f64::consts::PI, kt_points, true);
    let phi = linspace(0.0, std::f64::consts::TAU, phi_points, false);
    Ok(fringe_grid(&sys, half(two_m)?, &kt, &phi)?.values)
}

/// `[χ_m, F(χ_m), |dF/dχ|, Δκ coefficient]`.
pub fn steepest(two_j: i32, two_m: i32, phi: f64) -> ddlv::Result<Vec<f64>> {
    let sys = SpinSystem::new(half(two_j)?)?;
    let r = optimal_working_point(&sys, half(two_m)?, phi)?;
    Ok(vec![r.chi_m, r.f_value, r.dfdchi_max, r.delta_kappa_coeff])
}

/// Interleaved `[κT, ideal P, measured fraction]` over one fringe period,
/// with n_blocks DD blocks of 150 µs windows and a 50 Hz line of the given
/// amplitude.
#[allow(clippy::too_many_arguments)]
pub fn noisy_scan(
    two_j: i32,
    two_m: i32,
    phi: f64,
    n_blocks: u32,
    line_amp_hz: f64,
    n_spins: u32,
    n_trials: u32,
    points: usize,
    seed: u64,
) -> ddlv::Result<Vec<f64>> {
    let sys = SpinSystem::new(half(two_j)?)?;
    let m = half(two_m)?;
    let period = Fringe::new(&sys, m, phi)?.period();
    let seq = SequenceConfig::new(sys, T_W, n_blocks, 0.0, phi, PulseMode::Instantaneous, m)?;
    let t = seq.total_time();
    let mut cfg = RunConfig::ideal(seq, n_spins, n_trials, vec![0.0], seed);
    cfg.noise = NoiseModel::line_only(std::f64::consts::TAU * line_amp_hz);
    cfg.validate()?;
    let mut out = Vec::with_capacity(3 * points);
    for (k, chi) in linspace(0.0, period, points, false).into_iter().enumerate() {
        cfg.budget.quadrupole = chi / t;
        let o = simulate_point(&cfg, 0.0, ddlv::experiment::derive_seed(seed, k as u64))?;
        out.push(chi);
        out.push(fringe_probability(&sys, m, chi, phi)?);
        out.push(o.successes as f64 / o.trials as f64);
    }
    Ok(out)
}

fn js(e: ddlv::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn fringe_surface(two_j: i32, two_m: i32, kt_points: usize, phi_points: usize) -> Result<Vec<f64>, JsError> {
    surface(two_j, two_m, kt_points, phi_points).map_err(js)
}

#[wasm_bindgen]
pub fn working_point(two_j: i32, two_m: i32, phi: f64) -> Result<Vec<f64>, JsError> {
    steepest(two_j, two_m, phi).map_err(js)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn noisy_fringe(
    two_j: i32,
    two_m: i32,
    phi: f64,
    n_blocks: u32,
    line_amp_hz: f64,
    n_spins: u32,
    n_trials: u32,
    points: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    noisy_scan(two_j, two_m, phi, n_blocks, line_amp_hz, n_spins, n_trials, points, seed).map_err(js)
}
