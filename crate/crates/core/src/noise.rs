//! Magnetic-field noise traces, static κ contributions and decay.
//!
//! The slow drift is an Ornstein–Uhlenbeck process; the AC line is a sum
//! of sinusoids. Default OU parameters are placeholders: the residual
//! drift left by active field compensation is not known.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Default AC-line amplitude, 2π·300 rad/s.
pub const DEFAULT_LINE_AMPLITUDE: f64 = TAU * 300.0;
pub const LINE_FREQUENCY_HZ: f64 = 50.0;

/// Uniform sampling grid `t_k = t0 + k dt`, `k < count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, count: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(Error::InvalidParameter(format!("time grid needs finite t0 and dt > 0, got dt = {dt}")));
        }
        if count == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one sample".into()));
        }
        Ok(TimeGrid { t0, dt, count })
    }

    /// Smallest grid starting at `t0` whose span covers `duration`.
    pub fn covering(t0: f64, dt: f64, duration: f64) -> Result<Self> {
        let count = ((duration / dt).ceil() as usize).max(1) + 1;
        TimeGrid::new(t0, dt, count)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// Sampled detuning `δ(t_k)` in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrace {
    grid: TimeGrid,
    samples: Vec<f64>,
    descriptor: String,
    seed: Option<u64>,
}

impl NoiseTrace {
    pub fn new(grid: TimeGrid, samples: Vec<f64>, descriptor: impl Into<String>) -> Result<Self> {
        if samples.len() != grid.count {
            return Err(Error::InvalidParameter(format!(
                "trace has {} samples for a grid of {}",
                samples.len(),
                grid.count
            )));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("trace samples must be finite".into()));
        }
        Ok(NoiseTrace { grid, samples, descriptor: descriptor.into(), seed: None })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Result<Self> {
        NoiseTrace::new(grid, vec![value; grid.count], format!("constant({value})"))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Time covered by the samples, `count · dt`.
    pub fn span(&self) -> f64 {
        self.grid.count as f64 * self.grid.dt
    }

    /// Linear interpolation between samples, held constant outside the grid.
    pub fn sample_at(&self, t: f64) -> f64 {
        let x = (t - self.grid.t0) / self.grid.dt;
        let last = self.grid.count - 1;
        if !(x > 0.0) {
            return self.samples[0];
        }
        let k = x.floor() as usize;
        if k >= last {
            return self.samples[last];
        }
        let w = x - k as f64;
        self.samples[k] * (1.0 - w) + self.samples[k + 1] * w
    }

    /// Pointwise sum; both traces must share a grid.
    pub fn try_add(&self, other: &NoiseTrace) -> Result<NoiseTrace> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("cannot add traces on different grids".into()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Ok(NoiseTrace {
            grid: self.grid,
            samples,
            descriptor: format!("{} + {}", self.descriptor, other.descriptor),
            seed: self.seed.or(other.seed),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineHarmonic {
    pub freq_hz: f64,
    /// rad/s
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Stationary standard deviation of the drift, rad/s.
    pub ou_sigma: f64,
    /// Drift correlation time, s.
    pub ou_tau_c: f64,
    pub line_harmonics: Vec<LineHarmonic>,
    /// rad/s
    pub dc_offset: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::quiet()
    }
}

impl NoiseModel {
    pub fn quiet() -> Self {
        NoiseModel { ou_sigma: 0.0, ou_tau_c: 1.0, line_harmonics: Vec::new(), dc_offset: 0.0 }
    }

    /// Only the 50 Hz fundamental at the given amplitude.
    pub fn line_only(amplitude: f64) -> Self {
        NoiseModel {
            line_harmonics: vec![LineHarmonic { freq_hz: LINE_FREQUENCY_HZ, amplitude, phase: 0.0 }],
            ..NoiseModel::quiet()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ou_tau_c > 0.0) {
            return Err(Error::InvalidParameter(format!("ou_tau_c must be positive, got {}", self.ou_tau_c)));
        }
        if !(self.ou_sigma >= 0.0) || !self.dc_offset.is_finite() {
            return Err(Error::InvalidParameter("ou_sigma must be >= 0 and dc_offset finite".into()));
        }
        for h in &self.line_harmonics {
            if !(h.amplitude >= 0.0) || !h.freq_hz.is_finite() || !h.phase.is_finite() {
                return Err(Error::InvalidParameter(format!("bad line harmonic {h:?}")));
            }
        }
        Ok(())
    }

    /// True when every trace drawn from this model is identically zero.
    pub fn is_silent(&self) -> bool {
        self.ou_sigma == 0.0 && self.dc_offset == 0.0 && self.line_harmonics.iter().all(|h| h.amplitude == 0.0)
    }

    /// Largest instantaneous |δ| the model can plausibly produce (3σ drift).
    pub fn typical_magnitude(&self) -> f64 {
        self.dc_offset.abs() + 3.0 * self.ou_sigma + self.line_harmonics.iter().map(|h| h.amplitude).sum::<f64>()
    }
}

/// Exact OU discretisation
/// `δ_{k+1} = δ_k e^{−dt/τ} + σ √(1 − e^{−2dt/τ}) ξ_k`, started from the
/// stationary distribution, plus `dc_offset`.
pub fn sample_ou_trace(model: &NoiseModel, grid: TimeGrid, seed: u64) -> Result<NoiseTrace> {
    if !(model.ou_tau_c > 0.0) {
        return Err(Error::InvalidParameter(format!("ou_tau_c must be positive, got {}", model.ou_tau_c)));
    }
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let decay = (-grid.dt / model.ou_tau_c).exp();
    let kick = model.ou_sigma * (1.0 - decay * decay).sqrt();
    let x0: f64 = StandardNormal.sample(&mut rng);
    let mut x = model.ou_sigma * x0;
    let mut samples = Vec::with_capacity(grid.count);
    for _ in 0..grid.count {
        samples.push(x + model.dc_offset);
        let xi: f64 = StandardNormal.sample(&mut rng);
        x = x * decay + kick * xi;
    }
    let mut trace = NoiseTrace::new(grid, samples, format!("ou(sigma={}, tau_c={})", model.ou_sigma, model.ou_tau_c))?;
    trace.seed = Some(seed);
    Ok(trace)
}

/// `dc_offset + Σ a sin(2π f t + phase)`.
pub fn ac_line_trace(model: &NoiseModel, grid: TimeGrid) -> NoiseTrace {
    ac_line_trace_shifted(model, grid, 0.0)
}

/// Line trace with the mains cycle advanced by `offset` seconds, as seen by
/// a sequence that starts at a random point of the cycle.
pub fn ac_line_trace_shifted(model: &NoiseModel, grid: TimeGrid, offset: f64) -> NoiseTrace {
    let samples = (0..grid.count)
        .map(|k| {
            let t = grid.time(k) + offset;
            model.dc_offset
                + model.line_harmonics.iter().map(|h| h.amplitude * (TAU * h.freq_hz * t + h.phase).sin()).sum::<f64>()
        })
        .collect();
    NoiseTrace { grid, samples, descriptor: format!("line({} harmonics)", model.line_harmonics.len()), seed: None }
}

/// Drift plus line noise; the DC offset enters once (through the drift part).
pub fn sample_trace(model: &NoiseModel, grid: TimeGrid, seed: u64, line_offset: f64) -> Result<NoiseTrace> {
    let drift = sample_ou_trace(model, grid, seed)?;
    let line = ac_line_trace_shifted(&NoiseModel { dc_offset: 0.0, ..model.clone() }, grid, line_offset);
    drift.try_add(&line)
}

/// Fraction of population not yet lost to spontaneous decay, `e^{−T/τ}`.
pub fn decay_survival(t: f64, lifetime: f64) -> Result<f64> {
    if !(lifetime > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("need lifetime > 0 and T >= 0, got {lifetime}, {t}")));
    }
    Ok((-t / lifetime).exp())
}

/// Contributions to κ, all rad/s.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StaticKappaBudget {
    pub quadrupole: f64,
    pub second_order_zeeman: f64,
    pub lv_term: f64,
}

impl StaticKappaBudget {
    pub fn total(&self) -> f64 {
        self.quadrupole + self.second_order_zeeman + self.lv_term
    }
}

pub fn static_kappa(budget: &StaticKappaBudget) -> f64 {
    budget.total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silent_ou_is_dc() {
        let model = NoiseModel { dc_offset: 3.5, ..NoiseModel::quiet() };
        let grid = TimeGrid::new(0.0, 1e-5, 100).unwrap();
        let tr = sample_ou_trace(&model, grid, 1).unwrap();
        assert!(tr.samples().iter().all(|&x| x == 3.5));
    }

    #[test]
    fn ou_rejects_bad_tau() {
        let model = NoiseModel { ou_tau_c: 0.0, ..NoiseModel::quiet() };
        let grid = TimeGrid::new(0.0, 1e-5, 10).unwrap();
        assert!(sample_ou_trace(&model, grid, 1).is_err());
    }

    #[test]
    fn line_quarter_period() {
        let model = NoiseModel::line_only(7.0);
        let grid = TimeGrid::new(0.005, 1e-3, 1).unwrap();
        let tr = ac_line_trace(&model, grid);
        assert!((tr.samples()[0] - 7.0).abs() < 1e-12);
        let empty = NoiseModel { dc_offset: 2.0, ..NoiseModel::quiet() };
        let tr = ac_line_trace(&empty, TimeGrid::new(0.0, 1e-3, 20).unwrap());
        assert!(tr.samples().iter().all(|&x| x == 2.0));
    }

    #[test]
    fn line_is_linear_in_harmonics() {
        let grid = TimeGrid::new(0.0, 1e-4, 500).unwrap();
        let a = LineHarmonic { freq_hz: 50.0, amplitude: 3.0, phase: 0.2 };
        let b = LineHarmonic { freq_hz: 150.0, amplitude: 1.5, phase: -1.0 };
        let both = NoiseModel { line_harmonics: vec![a, b], ..NoiseModel::quiet() };
        let ta = ac_line_trace(&NoiseModel { line_harmonics: vec![a], ..NoiseModel::quiet() }, grid);
        let tb = ac_line_trace(&NoiseModel { line_harmonics: vec![b], ..NoiseModel::quiet() }, grid);
        let sum = ta.try_add(&tb).unwrap();
        let direct = ac_line_trace(&both, grid);
        for (x, y) in sum.samples().iter().zip(direct.samples()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_values() {
        assert_eq!(decay_survival(0.0, 0.39).unwrap(), 1.0);
        assert!((decay_survival(0.39, 0.39).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let loss = 1.0 - decay_survival(0.033, 0.390).unwrap();
        assert!((loss - 0.0811).abs() < 5e-4);
        assert!((loss - 0.085).abs() <= 0.005);
        assert!(decay_survival(1.0, 0.0).is_err());
        assert!(decay_survival(-1.0, 1.0).is_err());
    }

    #[test]
    fn budget_total() {
        assert_eq!(static_kappa(&StaticKappaBudget::default()), 0.0);
        let a = StaticKappaBudget { quadrupole: 1.5, second_order_zeeman: -0.25, lv_term: 0.125 };
        let b = StaticKappaBudget { quadrupole: 0.125, second_order_zeeman: 1.5, lv_term: -0.25 };
        assert_eq!(a.total(), 1.375);
        assert_eq!(a.total(), b.total());
    }

    #[test]
    fn interpolated_lookup() {
        let grid = TimeGrid::new(1.0, 0.5, 4).unwrap();
        let tr = NoiseTrace::new(grid, vec![0.0, 1.0, 2.0, 3.0], "ramp").unwrap();
        assert!((tr.sample_at(1.2) - 0.4).abs() < 1e-12);
        assert_eq!(tr.sample_at(1.5), 1.0);
        assert_eq!(tr.sample_at(0.0), 0.0);
        assert_eq!(tr.sample_at(10.0), 3.0);
        assert_eq!(tr.span(), 2.0);
    }
}
