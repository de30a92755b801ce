//! Simulated measurement campaign: repeated DD sequences, binomial readout
//! over N spins, local fringe inversion to κ̂, and a time-stamped record.
//!
//! Seeds are counter-based: the point seed is `derive_seed(master, point)`
//! and the trial seed is `derive_seed(point_seed, trial)`, so results do not
//! depend on evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::noise::{decay_survival, sample_trace, NoiseModel, NoiseTrace, StaticKappaBudget, TimeGrid, LINE_FREQUENCY_HZ};
use crate::sensitivity::steepest_point;
use crate::sequence::{integrate_noisy_with, Fringe, IntegratorOptions, PulseMode, SequenceConfig};
use crate::sidereal::{KappaSample, SiderealModel};

/// SplitMix64 finaliser.
fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` of `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(parent ^ splitmix64(index))
}

/// Whether each sequence starts at a fixed point of the mains cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSync {
    Triggered,
    FreeRunning,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Its `kappa` field is replaced per point by `budget + injected(t)`.
    pub sequence: SequenceConfig,
    pub noise: NoiseModel,
    pub line_sync: LineSync,
    /// Reuse one noise trace for every trial of a point.
    pub correlate_trials: bool,
    pub n_spins: u32,
    pub n_trials: u32,
    /// Upper-level lifetime in seconds; `None` disables decay.
    pub lifetime: Option<f64>,
    pub budget: StaticKappaBudget,
    pub timestamps: Vec<f64>,
    pub injected: SiderealModel,
    pub master_seed: u64,
    pub integrator: IntegratorOptions,
}

impl RunConfig {
    /// Noise-free, decay-free configuration at the given sequence.
    pub fn ideal(sequence: SequenceConfig, n_spins: u32, n_trials: u32, timestamps: Vec<f64>, master_seed: u64) -> Self {
        RunConfig {
            sequence,
            noise: NoiseModel::quiet(),
            line_sync: LineSync::FreeRunning,
            correlate_trials: false,
            n_spins,
            n_trials,
            lifetime: None,
            budget: StaticKappaBudget::default(),
            timestamps,
            injected: SiderealModel::default(),
            master_seed,
            integrator: IntegratorOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins == 0 || self.n_trials == 0 {
            return Err(Error::InvalidParameter("n_spins and n_trials must be at least 1".into()));
        }
        if let Some(l) = self.lifetime {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter(format!("lifetime must be positive, got {l}")));
            }
        }
        if self.timestamps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("timestamps must be finite".into()));
        }
        self.noise.validate()
    }

    /// Ramsey time T.
    pub fn ramsey_time(&self) -> f64 {
        self.sequence.total_time()
    }

    /// Total interrogation time per point, τ = n T.
    pub fn interrogation_time(&self) -> f64 {
        self.n_trials as f64 * self.ramsey_time()
    }

    pub fn contrast(&self) -> Result<f64> {
        match self.lifetime {
            Some(l) => decay_survival(self.ramsey_time(), l),
            None => Ok(1.0),
        }
    }

    /// κ assumed known by the calibration: static budget plus the injected
    /// static term.
    pub fn calibrated_kappa(&self) -> f64 {
        self.budget.total() + self.injected.kappa_static
    }

    pub fn kappa_at(&self, t: f64) -> f64 {
        self.budget.total() + self.injected.at(t)
    }

    /// Sets the quadrupole contribution so the calibrated κT sits on the
    /// steepest point of the fringe; returns that χ.
    pub fn tune_to_working_point(&mut self) -> Result<f64> {
        let fringe = Fringe::new(&self.sequence.sys, self.sequence.initial_m, self.sequence.phi)?;
        let chi = steepest_point(&fringe);
        let other = self.budget.second_order_zeeman + self.budget.lv_term + self.injected.kappa_static;
        self.budget.quadrupole = chi / self.ramsey_time() - other;
        Ok(chi)
    }

    pub fn calibration(&self) -> Result<Calibration> {
        let s = &self.sequence;
        Calibration::new(Fringe::new(&s.sys, s.initial_m, s.phi)?, self.ramsey_time(), self.calibrated_kappa() * self.ramsey_time(), self.contrast()?)
    }
}

/// Fringe model and monotone branch used to invert population to κ.
#[derive(Debug, Clone)]
pub struct Calibration {
    fringe: Fringe,
    total_time: f64,
    contrast: f64,
    baseline: f64,
    pub chi_center: f64,
    pub branch: (f64, f64),
}

impl Calibration {
    pub fn new(fringe: Fringe, total_time: f64, chi_center: f64, contrast: f64) -> Result<Self> {
        if !(total_time > 0.0) {
            return Err(Error::InvalidParameter("Ramsey time must be positive".into()));
        }
        let baseline = 1.0 / fringe.sys().dim() as f64;
        let mut cal = Calibration { fringe, total_time, contrast, baseline, chi_center, branch: (chi_center, chi_center) };
        let s0 = cal.slope(chi_center);
        if s0.abs() < 1e-9 {
            return Err(Error::InsensitiveWorkingPoint(s0));
        }
        let lo = cal.branch_edge(chi_center, -1.0, s0.signum());
        let hi = cal.branch_edge(chi_center, 1.0, s0.signum());
        cal.branch = (lo, hi);
        Ok(cal)
    }

    fn branch_edge(&self, start: f64, dir: f64, sign: f64) -> f64 {
        let step = self.fringe.period() / 2000.0;
        let mut inner = start;
        let limit = self.fringe.period();
        let mut travelled = 0.0;
        loop {
            let outer = inner + dir * step;
            travelled += step;
            if self.slope(outer) * sign <= 0.0 || travelled >= limit {
                let (mut a, mut b) = (inner, outer);
                for _ in 0..60 {
                    let mid = 0.5 * (a + b);
                    if self.slope(mid) * sign > 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                return a;
            }
            inner = outer;
        }
    }

    /// Expected survival probability including contrast loss.
    pub fn model(&self, chi: f64) -> f64 {
        self.contrast * self.fringe.probability(chi) + (1.0 - self.contrast) * self.baseline
    }

    pub fn slope(&self, chi: f64) -> f64 {
        let h = crate::sequence::DERIVATIVE_STEP;
        (self.model(chi + h) - self.model(chi - h)) / (2.0 * h)
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn branch_width(&self) -> f64 {
        self.branch.1 - self.branch.0
    }

    /// Probability range covered by the branch, ascending.
    pub fn probability_range(&self) -> (f64, f64) {
        let a = self.model(self.branch.0);
        let b = self.model(self.branch.1);
        (a.min(b), a.max(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    pub chi: f64,
    pub kappa: f64,
    pub sigma: f64,
}

/// Inverts the calibrated fringe branch by bisection; σ from the delta
/// method, `√(P̂(1−P̂)/M) / (T |dF/dχ|)` with M the number of spin readouts.
pub fn estimate_kappa(successes: u64, trials: u64, cal: &Calibration) -> Result<KappaEstimate> {
    if trials == 0 || successes > trials {
        return Err(Error::InvalidParameter(format!("{successes} successes out of {trials}")));
    }
    let p = successes as f64 / trials as f64;
    let (lo_p, hi_p) = cal.probability_range();
    if p < lo_p || p > hi_p || p == 0.0 || p == 1.0 {
        return Err(Error::FringeWrap { p, lo: lo_p, hi: hi_p });
    }
    let (mut a, mut b) = cal.branch;
    let increasing = cal.model(b) > cal.model(a);
    for _ in 0..200 {
        if b - a < 1e-13 {
            break;
        }
        let mid = 0.5 * (a + b);
        if (cal.model(mid) < p) == increasing {
            a = mid;
        } else {
            b = mid;
        }
    }
    let chi = 0.5 * (a + b);
    let slope = cal.slope(chi).abs();
    if !(slope > 1e-12) {
        return Err(Error::FringeWrap { p, lo: lo_p, hi: hi_p });
    }
    let t = cal.total_time();
    Ok(KappaEstimate { chi, kappa: chi / t, sigma: (p * (1.0 - p) / trials as f64).sqrt() / (t * slope) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointOutcome {
    pub successes: u64,
    /// Spin readouts, `n_trials · N_spins`.
    pub trials: u64,
    /// Mean expected survival probability over the trials.
    pub p_expected: f64,
}

fn ideal_pulses(cfg: &RunConfig) -> bool {
    matches!(cfg.sequence.pulses, PulseMode::Instantaneous)
}

/// One data point at wall-clock time `t`.
pub fn simulate_point(cfg: &RunConfig, t: f64, seed: u64) -> Result<PointOutcome> {
    let mut seq = cfg.sequence.clone();
    seq.kappa = cfg.kappa_at(t);
    let contrast = cfg.contrast()?;
    let baseline = 1.0 / seq.sys.dim() as f64;
    let measured = |p: f64| (contrast * p + (1.0 - contrast) * baseline).clamp(0.0, 1.0);
    let n_spins = cfg.n_spins as u64;
    let readouts = n_spins * cfg.n_trials as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if cfg.noise.is_silent() {
        let p = if ideal_pulses(cfg) {
            Fringe::new(&seq.sys, seq.initial_m, seq.phi)?.probability(seq.kappa_t())
        } else {
            noisy_probability(cfg, &seq, None)?
        };
        let pm = measured(p);
        let successes = draw_binomial(readouts, pm, &mut rng)?;
        return Ok(PointOutcome { successes, trials: readouts, p_expected: pm });
    }

    let mut successes = 0;
    let mut p_sum = 0.0;
    let mut shared: Option<f64> = None;
    for trial in 0..cfg.n_trials as u64 {
        let p = match shared {
            Some(p) => p,
            None => {
                let p = noisy_probability(cfg, &seq, Some(derive_seed(seed, trial)))?;
                if cfg.correlate_trials {
                    shared = Some(p);
                }
                p
            }
        };
        let pm = measured(p);
        p_sum += pm;
        successes += draw_binomial(n_spins, pm, &mut rng)?;
    }
    Ok(PointOutcome { successes, trials: readouts, p_expected: p_sum / cfg.n_trials as f64 })
}

fn draw_binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    let dist = Binomial::new(n, p).map_err(|e| Error::InvalidParameter(format!("binomial({n}, {p}): {e}")))?;
    Ok(dist.sample(rng))
}

/// Survival probability after the stepped integrator with one noise trace.
fn noisy_probability(cfg: &RunConfig, seq: &SequenceConfig, trace_seed: Option<u64>) -> Result<f64> {
    let schedule = seq.schedule();
    let step = cfg.integrator.free_step.unwrap_or(seq.default_free_step());
    let grid = TimeGrid::covering(0.0, step, schedule.total_duration())?;
    let trace = match trace_seed {
        None => NoiseTrace::constant(grid, 0.0)?,
        Some(s) => {
            let offset = match cfg.line_sync {
                LineSync::Triggered => 0.0,
                LineSync::FreeRunning => {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(s, u64::MAX));
                    rng.random::<f64>() / LINE_FREQUENCY_HZ
                }
            };
            sample_trace(&cfg.noise, grid, s, offset)?
        }
    };
    let u = integrate_noisy_with(seq, &schedule, &trace, cfg.integrator)?;
    let idx = seq.sys.index_of(seq.initial_m)?;
    Ok(u.get(idx, idx).norm_sqr().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordPoint {
    pub t: f64,
    pub successes: u64,
    pub trials: u64,
    /// Calibrated working point κT.
    pub chi: f64,
    /// `None` for fringe-wrap exclusions.
    pub estimate: Option<KappaEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub config: RunConfig,
    pub points: Vec<RecordPoint>,
}

impl MeasurementRecord {
    pub fn wrap_count(&self) -> usize {
        self.points.iter().filter(|p| p.estimate.is_none()).count()
    }

    /// κ̂ time series, wraps excluded.
    pub fn kappa_samples(&self) -> Vec<KappaSample> {
        self.points
            .iter()
            .filter_map(|p| p.estimate.map(|e| KappaSample { t: p.t, kappa: e.kappa, sigma: e.sigma }))
            .collect()
    }
}

fn run_point(cfg: &RunConfig, cal: &Calibration, index: usize, t: f64) -> Result<RecordPoint> {
    let outcome = simulate_point(cfg, t, derive_seed(cfg.master_seed, index as u64))?;
    let estimate = match estimate_kappa(outcome.successes, outcome.trials, cal) {
        Ok(e) => Some(e),
        Err(Error::FringeWrap { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(RecordPoint { t, successes: outcome.successes, trials: outcome.trials, chi: cal.chi_center, estimate })
}

/// Simulates every timestamp of the schedule and estimates κ at each.
pub fn run_experiment(cfg: &RunConfig) -> Result<MeasurementRecord> {
    cfg.validate()?;
    let cal = cfg.calibration()?;
    let indexed: Vec<(usize, f64)> = cfg.timestamps.iter().copied().enumerate().collect();
    #[cfg(feature = "parallel")]
    let points: Result<Vec<RecordPoint>> = {
        use rayon::prelude::*;
        indexed.par_iter().map(|&(i, t)| run_point(cfg, &cal, i, t)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let points: Result<Vec<RecordPoint>> = indexed.iter().map(|&(i, t)| run_point(cfg, &cal, i, t)).collect();
    Ok(MeasurementRecord { config: cfg.clone(), points: points? })
}

/// Readout fraction `P` of the ideal fringe at an arbitrary κT, including
/// decay-induced contrast loss.
pub fn expected_probability(cfg: &RunConfig, kappa_t: f64, phi: f64) -> Result<f64> {
    let s = &cfg.sequence;
    let fringe = Fringe::new(&s.sys, s.initial_m, phi)?;
    let c = cfg.contrast()?;
    Ok(c * fringe.probability(kappa_t) + (1.0 - c) / s.sys.dim() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halfint::HalfInt;
    use crate::spin::SpinSystem;
    use std::f64::consts::PI;

    fn base(m_twice: i32) -> SequenceConfig {
        let sys = SpinSystem::from_twice_j(7).unwrap();
        SequenceConfig::new(sys, 1e-3, 5, 0.0, PI, PulseMode::Instantaneous, HalfInt::from_twice(m_twice)).unwrap()
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(7, 4));
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
    }

    #[test]
    fn fringe_maximum_gives_all_successes() {
        // κ = 0, φ = π: the Ramsey pulses cancel and P = 1.
        let cfg = RunConfig::ideal(base(1), 3, 50, vec![0.0], 1);
        for s in 0..20 {
            let out = simulate_point(&cfg, 0.0, s).unwrap();
            assert_eq!(out.successes, out.trials);
            assert_eq!(out.trials, 150);
        }
    }

    #[test]
    fn wrap_outside_branch() {
        let mut cfg = RunConfig::ideal(base(1), 1, 100, vec![0.0], 1);
        cfg.tune_to_working_point().unwrap();
        let cal = cfg.calibration().unwrap();
        let (lo, hi) = cal.probability_range();
        assert!(lo < cal.model(cal.chi_center) && cal.model(cal.chi_center) < hi);
        assert!(matches!(estimate_kappa(0, 100, &cal), Err(Error::FringeWrap { .. })) || lo == 0.0);
        assert!(estimate_kappa(101, 100, &cal).is_err());
    }
}
