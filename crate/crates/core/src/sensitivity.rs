//! Projection-noise-limited precision of the κ measurement.
//!
//! For a fringe `F(χ)` read out on N independent spins, n repetitions of
//! Ramsey time T and total time τ = nT,
//! `Δκ = √(F(1−F)) / (√(NτT) |dF/dχ|)`. The quantity reported as the
//! "coefficient" is Δκ at N = τ = T = 1.

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::sequence::{Fringe, DERIVATIVE_STEP};
use crate::spin::{kappa_lv, SpinSystem};
use crate::species::IonSpecies;

/// Which readout the report describes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe {
    /// N independent spins prepared in `|J, m⟩`.
    Separable { j: HalfInt, m: HalfInt },
    /// The entangled two-level superposition over N ions.
    Entangled { n_ions: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub probe: Probe,
    pub phi: f64,
    /// Working point κT, rad.
    pub chi_m: f64,
    pub f_value: f64,
    /// `|dF/dχ|` at the working point.
    pub dfdchi_max: f64,
    /// `C` in `Δκ = C / √(NτT)` (or `C / √(τT)` for the entangled probe).
    pub delta_kappa_coeff: f64,
    /// Fringe contrast assumed (1 = perfect).
    pub contrast: f64,
    pub assumes_no_drift: bool,
}

impl SensitivityReport {
    /// Δκ for N spins, total time τ and Ramsey time T.
    pub fn delta_kappa(&self, n_spins: f64, tau: f64, t: f64) -> f64 {
        match self.probe {
            Probe::Separable { .. } => self.delta_kappa_coeff / (n_spins * tau * t).sqrt(),
            Probe::Entangled { .. } => self.delta_kappa_coeff / (tau * t).sqrt(),
        }
    }
}

fn central_difference<F: Fn(f64) -> f64>(f: &F, x: f64) -> f64 {
    let h = DERIVATIVE_STEP;
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Δκ at working point `chi` for a fringe `f`; the derivative is a central
/// difference and only its magnitude matters.
pub fn delta_kappa<F: Fn(f64) -> f64>(f: F, chi: f64, n_spins: f64, tau: f64, t: f64) -> Result<f64> {
    if !(n_spins > 0.0 && tau > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter("N, tau and T must be positive".into()));
    }
    let value = f(chi);
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::NoProjectionNoise(value));
    }
    let slope = central_difference(&f, chi).abs();
    if !(slope > 1e-12) {
        return Err(Error::InsensitiveWorkingPoint(slope));
    }
    Ok((value * (1.0 - value)).sqrt() / ((n_spins * tau * t).sqrt() * slope))
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

const SCAN_POINTS: usize = 2001;

/// Location of the steepest point of `fringe` within one period: dense scan
/// followed by golden-section refinement. Of symmetric maxima the smallest
/// χ is returned.
pub fn steepest_point(fringe: &Fringe) -> f64 {
    let period = fringe.period();
    let step = period / SCAN_POINTS as f64;
    let slopes: Vec<f64> = (0..SCAN_POINTS).map(|k| fringe.slope(k as f64 * step).abs()).collect();
    let best = slopes.iter().cloned().fold(0.0, f64::max);
    let mut refined: Vec<(f64, f64)> = Vec::new();
    for k in 0..SCAN_POINTS {
        let prev = slopes[(k + SCAN_POINTS - 1) % SCAN_POINTS];
        let next = slopes[(k + 1) % SCAN_POINTS];
        if slopes[k] >= 0.99 * best && slopes[k] >= prev && slopes[k] >= next {
            let x0 = k as f64 * step;
            let x = golden_max(|x| fringe.slope(x).abs(), x0 - step, x0 + step, 1e-10);
            let x = x.rem_euclid(period);
            refined.push((x, fringe.slope(x).abs()));
        }
    }
    let top = refined.iter().map(|r| r.1).fold(0.0, f64::max);
    refined
        .iter()
        .filter(|r| r.1 >= top * (1.0 - 1e-9))
        .map(|r| r.0)
        .fold(f64::INFINITY, f64::min)
}

/// Working point of `P_{J,m}(χ, φ)` with the largest slope, and its Δκ
/// coefficient.
pub fn optimal_working_point(sys: &SpinSystem, m: HalfInt, phi: f64) -> Result<SensitivityReport> {
    let fringe = Fringe::new(sys, m, phi)?;
    let chi_m = steepest_point(&fringe);
    report_at(&fringe, chi_m, 1.0)
}

fn baseline(sys: &SpinSystem) -> f64 {
    1.0 / sys.dim() as f64
}

fn report_at(fringe: &Fringe, chi: f64, contrast: f64) -> Result<SensitivityReport> {
    let b = baseline(fringe.sys());
    let f = |x: f64| contrast * fringe.probability(x) + (1.0 - contrast) * b;
    let coeff = delta_kappa(f, chi, 1.0, 1.0, 1.0)?;
    Ok(SensitivityReport {
        probe: Probe::Separable { j: fringe.sys().j(), m: fringe.m() },
        phi: fringe.phi(),
        chi_m: chi,
        f_value: f(chi),
        dfdchi_max: central_difference(&f, chi).abs(),
        delta_kappa_coeff: coeff,
        contrast,
        assumes_no_drift: true,
    })
}

/// Δκ coefficient at the ideal working point when the fringe contrast is
/// reduced toward the `1/(2J+1)` baseline.
pub fn contrast_sweep(sys: &SpinSystem, m: HalfInt, phi: f64, contrasts: &[f64]) -> Result<Vec<SensitivityReport>> {
    let fringe = Fringe::new(sys, m, phi)?;
    let chi_m = steepest_point(&fringe);
    contrasts
        .iter()
        .map(|&c| {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::InvalidParameter(format!("contrast must be in (0, 1], got {c}")));
            }
            report_at(&fringe, chi_m, c)
        })
        .collect()
}

/// `F(χ) = ½(1 + sin(N·12·χ))` for the entangled `m = 7/2, 1/2` superposition.
pub fn entangled_fringe(n_ions: u32) -> impl Fn(f64) -> f64 {
    let w = n_ions as f64 * (3.5f64 * 3.5 - 0.5 * 0.5);
    move |chi| 0.5 * (1.0 + (w * chi).sin())
}

/// Closed-form benchmark for the entangled scheme: the mid-fringe point
/// χ = 0 has slope 6N and `√(F(1−F)) = 1/2`, so the coefficient is `1/(12N)`.
pub fn entangled_benchmark(n_ions: u32) -> Result<SensitivityReport> {
    if n_ions < 2 || !n_ions.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("entangled benchmark needs an even ion count >= 2, got {n_ions}")));
    }
    let slope = 6.0 * n_ions as f64;
    Ok(SensitivityReport {
        probe: Probe::Entangled { n_ions },
        phi: 0.0,
        chi_m: 0.0,
        f_value: 0.5,
        dfdchi_max: slope,
        delta_kappa_coeff: 0.5 / slope,
        contrast: 1.0,
        assumes_no_drift: true,
    })
}

/// Bound on C₀⁽²⁾ implied by a κ resolution (rad/s).
pub fn lv_bound_from_kappa(delta_kappa: f64, species: &IonSpecies) -> Result<f64> {
    let per_unit = kappa_lv(species, 1.0)?;
    if per_unit == 0.0 {
        return Err(Error::InvalidParameter(format!("{} has zero reduced matrix element", species.label)));
    }
    Ok(delta_kappa.abs() / per_unit)
}

/// The Gaussian projection-noise model needs `N n F(1−F) ≫ 1`; false when
/// it is below 10.
pub fn gaussian_approximation_ok(n_spins: u64, n_trials: u64, f: f64) -> bool {
    (n_spins * n_trials) as f64 * f * (1.0 - f) >= 10.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn delta_kappa_formula_and_scaling() {
        let f = |x: f64| 0.5 * (1.0 + (3.0 * x).sin());
        let base = delta_kappa(f, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert!((base - 1.0 / 3.0).abs() < 1e-9);
        let n2 = delta_kappa(f, 0.0, 2.0, 1.0, 1.0).unwrap();
        assert!((n2 - base / 2f64.sqrt()).abs() < 1e-12);
        let tau2 = delta_kappa(f, 0.0, 1.0, 2.0, 1.0).unwrap();
        assert!((tau2 - base / 2f64.sqrt()).abs() < 1e-12);
        // F -> 1 - F leaves it unchanged
        let g = |x: f64| 1.0 - f(x);
        assert!((delta_kappa(g, 0.2, 1.0, 1.0, 1.0).unwrap() - delta_kappa(f, 0.2, 1.0, 1.0, 1.0).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn delta_kappa_errors() {
        let flat = |_x: f64| 0.3;
        assert!(matches!(delta_kappa(flat, 0.0, 1.0, 1.0, 1.0), Err(Error::InsensitiveWorkingPoint(_))));
        let f = |x: f64| 0.5 * (1.0 + x.sin());
        assert!(matches!(delta_kappa(f, PI / 2.0, 1.0, 1.0, 1.0), Err(Error::NoProjectionNoise(_))));
        assert!(delta_kappa(f, 0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn entangled_rejects_odd() {
        assert!(entangled_benchmark(3).is_err());
        assert!(entangled_benchmark(0).is_err());
        assert!((entangled_benchmark(2).unwrap().delta_kappa_coeff - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_guard() {
        assert!(!gaussian_approximation_ok(1, 10, 0.5));
        assert!(gaussian_approximation_ok(1, 100, 0.5));
    }
}
