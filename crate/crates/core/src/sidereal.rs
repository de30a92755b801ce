//! Sidereal modulation of κ and weighted least-squares harmonic fits.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::spin::kappa_lv;
use crate::species::IonSpecies;

pub const SIDEREAL_DAY_S: f64 = 86164.0905;
pub const SIDEREAL_YEAR_S: f64 = 365.25636 * 86400.0;
pub const SOLAR_DAY_S: f64 = 86400.0;

/// Earth's rotation rate relative to the fixed stars, rad/s.
pub fn sidereal_omega() -> f64 {
    TAU / SIDEREAL_DAY_S
}

/// `ω⊕`, `2ω⊕` and the annual frequency.
pub fn default_frequencies() -> Vec<f64> {
    vec![sidereal_omega(), 2.0 * sidereal_omega(), TAU / SIDEREAL_YEAR_S]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    /// rad/s
    pub omega: f64,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

/// `κ(t) = κ_static + Σ_k [A_k cos ω_k(t − t0) + B_k sin ω_k(t − t0)]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SiderealModel {
    pub kappa_static: f64,
    pub harmonics: Vec<Harmonic>,
    /// Epoch t0, UTC seconds.
    pub epoch: f64,
}

impl SiderealModel {
    pub fn at(&self, t: f64) -> f64 {
        let dt = t - self.epoch;
        self.kappa_static
            + self.harmonics.iter().map(|h| h.cos_amp * (h.omega * dt).cos() + h.sin_amp * (h.omega * dt).sin()).sum::<f64>()
    }
}

pub fn kappa_timeseries(model: &SiderealModel, timestamps: &[f64]) -> Vec<f64> {
    timestamps.iter().map(|&t| model.at(t)).collect()
}

/// One κ estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSample {
    pub t: f64,
    pub kappa: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedHarmonic {
    pub omega: f64,
    pub cos_amp: f64,
    pub sin_amp: f64,
    pub cos_err: f64,
    pub sin_err: f64,
}

impl FittedHarmonic {
    pub fn quadrature(&self) -> f64 {
        self.cos_amp.hypot(self.sin_amp)
    }

    /// RMS of the two component standard errors.
    pub fn quadrature_err(&self) -> f64 {
        ((self.cos_err * self.cos_err + self.sin_err * self.sin_err) / 2.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicFit {
    pub epoch: f64,
    pub offset: f64,
    pub offset_err: f64,
    pub harmonics: Vec<FittedHarmonic>,
    /// Parameter order: offset, then (cos, sin) per frequency.
    pub covariance: DMatrix<f64>,
    pub chi_squared: f64,
    pub dof: usize,
    pub condition_number: f64,
}

impl HarmonicFit {
    pub fn reduced_chi_squared(&self) -> f64 {
        self.chi_squared / self.dof as f64
    }
}

/// Singular-value ratio beyond which the design is treated as singular.
pub const MAX_CONDITION: f64 = 1e10;

/// Weighted linear least squares on `[1, cos ω_k(t − t0), sin ω_k(t − t0)]`.
pub fn fit_harmonics(record: &[KappaSample], frequencies: &[f64], epoch: f64) -> Result<HarmonicFit> {
    let p = 1 + 2 * frequencies.len();
    let n = record.len();
    if n < p + 1 {
        return Err(Error::TooFewSamples { needed: p + 1, got: n });
    }
    if let Some(s) = record.iter().find(|s| !(s.sigma > 0.0) || !s.kappa.is_finite() || !s.t.is_finite()) {
        return Err(Error::InvalidParameter(format!("sample at t = {} has sigma {} / kappa {}", s.t, s.sigma, s.kappa)));
    }
    let mut x = DMatrix::<f64>::zeros(n, p);
    let mut y = DVector::<f64>::zeros(n);
    for (i, s) in record.iter().enumerate() {
        let w = 1.0 / s.sigma;
        let dt = s.t - epoch;
        x[(i, 0)] = w;
        for (k, &omega) in frequencies.iter().enumerate() {
            x[(i, 1 + 2 * k)] = w * (omega * dt).cos();
            x[(i, 2 + 2 * k)] = w * (omega * dt).sin();
        }
        y[i] = w * s.kappa;
    }
    let svd = x.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::RankDeficient { condition });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let v = v_t.transpose();
    let uty = u.transpose() * &y;
    let inv_s = DVector::from_iterator(p, sv.iter().map(|s| 1.0 / s));
    let params = &v * uty.component_mul(&inv_s);
    let inv_s2 = DMatrix::from_diagonal(&inv_s.map(|s| s * s));
    let cov = &v * inv_s2 * v.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    let resid = &y - &x * &params;
    let chi_squared = resid.norm_squared();

    let harmonics = frequencies
        .iter()
        .enumerate()
        .map(|(k, &omega)| FittedHarmonic {
            omega,
            cos_amp: params[1 + 2 * k],
            sin_amp: params[2 + 2 * k],
            cos_err: cov[(1 + 2 * k, 1 + 2 * k)].sqrt(),
            sin_err: cov[(2 + 2 * k, 2 + 2 * k)].sqrt(),
        })
        .collect();
    Ok(HarmonicFit {
        epoch,
        offset: params[0],
        offset_err: cov[(0, 0)].sqrt(),
        harmonics,
        covariance: cov,
        chi_squared,
        dof: n - p,
        condition_number: condition,
    })
}

/// Width of the reported interval, in standard errors or as a two-sided
/// Gaussian confidence level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Confidence {
    Sigma(f64),
    Level(f64),
}

impl Confidence {
    pub fn z(&self) -> Result<f64> {
        match *self {
            Confidence::Sigma(z) if z >= 0.0 => Ok(z),
            Confidence::Level(p) if (0.0..1.0).contains(&p) => {
                if p == 0.0 {
                    return Ok(0.0);
                }
                let normal = Normal::standard();
                Ok(normal.inverse_cdf(0.5 * (1.0 + p)))
            }
            other => Err(Error::InvalidParameter(format!("bad confidence {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBound {
    pub omega: f64,
    /// Fitted quadrature amplitude in units of C₀⁽²⁾.
    pub amplitude_c02: f64,
    /// `z · σ_amplitude / κ_LV(C₀⁽²⁾ = 1)`.
    pub bound_c02: f64,
}

pub fn bound_c02(fit: &HarmonicFit, species: &IonSpecies, confidence: Confidence) -> Result<Vec<FrequencyBound>> {
    let per_unit = kappa_lv(species, 1.0)?;
    if per_unit == 0.0 {
        return Err(Error::InvalidParameter(format!("{} has zero reduced matrix element", species.label)));
    }
    let z = confidence.z()?;
    Ok(fit
        .harmonics
        .iter()
        .map(|h| FrequencyBound {
            omega: h.omega,
            amplitude_c02: h.quadrature() / per_unit,
            bound_c02: z * h.quadrature_err() / per_unit,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_model_and_quarter_period() {
        let m = SiderealModel { kappa_static: 2.5, harmonics: vec![], epoch: 0.0 };
        assert!(kappa_timeseries(&m, &[0.0, 1e5, -3.0]).iter().all(|&k| k == 2.5));
        let w = sidereal_omega();
        let m = SiderealModel { kappa_static: 1.0, harmonics: vec![Harmonic { omega: w, cos_amp: 4.0, sin_amp: 0.0 }], epoch: 10.0 };
        assert!((m.at(10.0 + SIDEREAL_DAY_S / 4.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sidereal_not_solar_period() {
        let w = sidereal_omega();
        let a = 3.0;
        let m = SiderealModel { kappa_static: 0.0, harmonics: vec![Harmonic { omega: w, cos_amp: 0.0, sin_amp: a }], epoch: 0.0 };
        assert!((m.at(SIDEREAL_DAY_S) - m.at(0.0)).abs() < 1e-9);
        let solar = m.at(SOLAR_DAY_S) - m.at(0.0);
        let expected = a * (TAU * (SOLAR_DAY_S - SIDEREAL_DAY_S) / SIDEREAL_DAY_S).sin();
        assert!((solar - expected).abs() < 1e-9);
        assert!(solar.abs() > 0.05);
    }

    #[test]
    fn rejects_degenerate_designs() {
        let rec: Vec<KappaSample> = (0..10).map(|_| KappaSample { t: 5.0, kappa: 1.0, sigma: 1.0 }).collect();
        assert!(matches!(fit_harmonics(&rec, &[sidereal_omega()], 0.0), Err(Error::RankDeficient { .. })));
        assert!(matches!(fit_harmonics(&rec[..3], &[sidereal_omega()], 0.0), Err(Error::TooFewSamples { .. })));
        let bad = vec![KappaSample { t: 0.0, kappa: 0.0, sigma: 0.0 }; 5];
        assert!(fit_harmonics(&bad, &[], 0.0).is_err());
    }

    #[test]
    fn confidence_levels() {
        assert_eq!(Confidence::Level(0.0).z().unwrap(), 0.0);
        assert!((Confidence::Level(0.6826894921370859).z().unwrap() - 1.0).abs() < 1e-9);
        assert!((Confidence::Level(0.95).z().unwrap() - 1.959963984540054).abs() < 1e-9);
        assert!(Confidence::Level(1.0).z().is_err());
    }

    fn uniform_record(model: &SiderealModel, n: usize, span: f64, sigma: f64) -> Vec<KappaSample> {
        (0..n)
            .map(|k| {
                let t = 1.7e9 + span * k as f64 / n as f64;
                KappaSample { t, kappa: model.at(t), sigma }
            })
            .collect()
    }

    fn two_harmonics() -> SiderealModel {
        let w = sidereal_omega();
        SiderealModel {
            kappa_static: 3.0,
            harmonics: vec![Harmonic { omega: w, cos_amp: 0.4, sin_amp: -0.25 }, Harmonic { omega: 2.0 * w, cos_amp: 0.05, sin_amp: 0.1 }],
            epoch: 1.7e9,
        }
    }

    #[test]
    fn noiseless_recovery() {
        let m = two_harmonics();
        let rec = uniform_record(&m, 200, 10.0 * SIDEREAL_DAY_S, 0.01);
        let fit = fit_harmonics(&rec, &[m.harmonics[0].omega, m.harmonics[1].omega], m.epoch).unwrap();
        assert!((fit.offset - 3.0).abs() < 1e-10 * 3.0);
        for (f, h) in fit.harmonics.iter().zip(&m.harmonics) {
            assert!((f.cos_amp - h.cos_amp).abs() < 1e-10 * h.cos_amp.abs().max(1e-3));
            assert!((f.sin_amp - h.sin_amp).abs() < 1e-10 * h.sin_amp.abs().max(1e-3));
        }
        assert!(fit.chi_squared < 1e-12);
        assert_eq!(fit.dof, 200 - 5);
    }

    #[test]
    fn standard_error_and_covariance_scaling() {
        let m = SiderealModel::default();
        let w = [sidereal_omega()];
        let sigma = 0.3;
        let a = fit_harmonics(&uniform_record(&m, 240, 20.0 * SIDEREAL_DAY_S, sigma), &w, 0.0).unwrap();
        let b = fit_harmonics(&uniform_record(&m, 960, 20.0 * SIDEREAL_DAY_S, sigma), &w, 0.0).unwrap();
        let expect = sigma * (2.0f64 / 240.0).sqrt();
        assert!((a.harmonics[0].cos_err / expect - 1.0).abs() < 0.2);
        assert!((a.harmonics[0].sin_err / expect - 1.0).abs() < 0.2);
        for i in 0..3 {
            assert!((a.covariance[(i, i)] / b.covariance[(i, i)] - 4.0).abs() < 0.05);
        }
        let c = &a.covariance;
        assert!((c - c.transpose()).abs().max() < 1e-18);
        assert!(c.clone().symmetric_eigen().eigenvalues.iter().all(|&e| e >= -1e-18));
    }

    #[test]
    fn constant_shift_moves_only_offset() {
        let m = two_harmonics();
        let w = [m.harmonics[0].omega, m.harmonics[1].omega];
        let mut rec = uniform_record(&m, 150, 7.0 * SIDEREAL_DAY_S, 0.02);
        for (k, r) in rec.iter_mut().enumerate() {
            r.kappa += 0.01 * ((k * 7919) % 13) as f64;
        }
        let a = fit_harmonics(&rec, &w, m.epoch).unwrap();
        let shifted: Vec<KappaSample> = rec.iter().map(|r| KappaSample { kappa: r.kappa + 5.0, ..*r }).collect();
        let b = fit_harmonics(&shifted, &w, m.epoch).unwrap();
        assert!((b.offset - a.offset - 5.0).abs() < 1e-9);
        for (x, y) in a.harmonics.iter().zip(&b.harmonics) {
            assert!((x.cos_amp - y.cos_amp).abs() < 1e-10 && (x.sin_amp - y.sin_amp).abs() < 1e-10);
        }
    }

    #[test]
    fn epoch_shift_rotates_phase() {
        let m = two_harmonics();
        let w = [m.harmonics[0].omega];
        let mut rec = uniform_record(&m, 150, 7.0 * SIDEREAL_DAY_S, 0.02);
        for (k, r) in rec.iter_mut().enumerate() {
            r.kappa += 0.03 * ((k * 104729) % 17) as f64 / 17.0;
        }
        let a = fit_harmonics(&rec, &w, m.epoch).unwrap();
        let dt = 12345.0;
        let b = fit_harmonics(&rec, &w, m.epoch + dt).unwrap();
        let (ha, hb) = (a.harmonics[0], b.harmonics[0]);
        assert!((ha.quadrature() - hb.quadrature()).abs() < 1e-10);
        // A cos ω(t−t0) + B sin ω(t−t0) re-expressed about t0 + dt
        let (c, s) = ((w[0] * dt).cos(), (w[0] * dt).sin());
        assert!((hb.cos_amp - (ha.cos_amp * c + ha.sin_amp * s)).abs() < 1e-10);
        assert!((hb.sin_amp - (ha.sin_amp * c - ha.cos_amp * s)).abs() < 1e-10);
    }

    fn yb() -> IonSpecies {
        crate::species::find_species(&crate::species::default_species(), "Yb+").unwrap().clone()
    }

    #[test]
    fn bound_examples() {
        let yb = yb();
        let err = 2.0 * std::f64::consts::PI * 5.1e-3;
        let fit = HarmonicFit {
            epoch: 0.0,
            offset: 0.0,
            offset_err: err,
            harmonics: vec![FittedHarmonic { omega: sidereal_omega(), cos_amp: 0.0, sin_amp: 0.0, cos_err: err, sin_err: err }],
            covariance: DMatrix::from_diagonal_element(3, 3, err * err),
            chi_squared: 0.0,
            dof: 10,
            condition_number: 1.0,
        };
        let b = bound_c02(&fit, &yb, Confidence::Sigma(1.0)).unwrap();
        assert!((b[0].bound_c02 / 1e-18 - 1.0).abs() < 0.02, "{}", b[0].bound_c02);
        let doubled = yb.with_reduced_me(2.0 * yb.reduced_me_au).unwrap();
        let b2 = bound_c02(&fit, &doubled, Confidence::Sigma(1.0)).unwrap();
        assert!((b2[0].bound_c02 * 2.0 - b[0].bound_c02).abs() < 1e-30);
        assert_eq!(bound_c02(&fit, &yb, Confidence::Level(0.0)).unwrap()[0].bound_c02, 0.0);
    }
}
