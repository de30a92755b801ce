//! Dynamical-decoupling Ramsey sequences on a spin-J multiplet.
//!
//! The interaction-picture Hamiltonian is
//! `H(t) = δ(t) Jz + κ Jz² + Ω(t) (Jx cos φ − Jy sin φ)` and every propagator
//! here is written as `exp(+i H t)`. The usual `exp(−i H t)` convention
//! corresponds to flipping the signs of κ and δ.
//!
//! The closed-form Ramsey pulses carry an explicit factor `i` in the
//! exponent, `exp(i π/2 (Jx cos φ − Jy sin φ))`; without it the operators
//! would not be unitary.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{expi_diagonal, expi_hermitian, CMatrix, Operator, OperatorKind};
use crate::noise::NoiseTrace;
use crate::spin::{build_angular_momentum_ops, drive_generator, rotation_with, AngularMomentum, SpinSystem};

/// How drive pulses are modelled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseMode {
    /// Ideal rotations of zero duration.
    Instantaneous,
    /// Square pulses at Rabi frequency `rabi_omega0` (rad/s).
    Finite { rabi_omega0: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceConfig {
    pub sys: SpinSystem,
    /// Half the spacing between the two π pulses of a block, in seconds.
    pub t_w: f64,
    pub n_blocks: u32,
    /// Coefficient of `Jz²`, rad/s.
    pub kappa: f64,
    /// Phase of the closing π/2 pulse, rad.
    pub phi: f64,
    pub pulses: PulseMode,
    pub initial_m: HalfInt,
}

impl SequenceConfig {
    pub fn new(
        sys: SpinSystem,
        t_w: f64,
        n_blocks: u32,
        kappa: f64,
        phi: f64,
        pulses: PulseMode,
        initial_m: HalfInt,
    ) -> Result<Self> {
        if !(t_w > 0.0 && t_w.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_w must be positive, got {t_w}")));
        }
        if n_blocks == 0 {
            return Err(Error::InvalidParameter("n_blocks must be at least 1".into()));
        }
        if !kappa.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidParameter("kappa and phi must be finite".into()));
        }
        if let PulseMode::Finite { rabi_omega0 } = pulses {
            if !(rabi_omega0 > 0.0 && rabi_omega0.is_finite()) {
                return Err(Error::InvalidParameter(format!("Rabi frequency must be positive, got {rabi_omega0}")));
            }
        }
        sys.index_of(initial_m)?;
        Ok(SequenceConfig { sys, t_w, n_blocks, kappa, phi, pulses, initial_m })
    }

    /// Ramsey time `T = 4 n t_w` (free evolution only).
    pub fn total_time(&self) -> f64 {
        4.0 * self.n_blocks as f64 * self.t_w
    }

    pub fn kappa_t(&self) -> f64 {
        self.kappa * self.total_time()
    }

    /// Default integrator step inside pulses, `min(t_w, π/Ω₀) / 50`.
    pub fn default_step(&self) -> f64 {
        match self.pulses {
            PulseMode::Instantaneous => self.t_w / 50.0,
            PulseMode::Finite { rabi_omega0 } => self.t_w.min(PI / rabi_omega0) / 50.0,
        }
    }

    /// Default step for free-evolution windows, `t_w / 50`.
    pub fn default_free_step(&self) -> f64 {
        self.t_w / 50.0
    }

    /// Human-readable warnings when the strong-drive assumption is weak.
    pub fn warnings(&self, typical_delta: f64) -> Vec<String> {
        let mut out = Vec::new();
        if let PulseMode::Finite { rabi_omega0 } = self.pulses {
            if self.kappa != 0.0 && rabi_omega0 / self.kappa.abs() < 100.0 {
                out.push(format!("Rabi frequency is only {:.1}x |kappa|", rabi_omega0 / self.kappa.abs()));
            }
            if typical_delta != 0.0 && rabi_omega0 / typical_delta.abs() < 100.0 {
                out.push(format!("Rabi frequency is only {:.1}x the typical detuning", rabi_omega0 / typical_delta.abs()));
            }
        }
        out
    }

    fn pulse_duration(&self, area: f64) -> f64 {
        match self.pulses {
            PulseMode::Instantaneous => 0.0,
            PulseMode::Finite { rabi_omega0 } => area / rabi_omega0,
        }
    }

    /// The full sequence: π/2 (φ = 0), `n_blocks` DD blocks, π/2 (φ).
    pub fn schedule(&self) -> PulseSchedule {
        let half = self.pulse_duration(FRAC_PI_2);
        let mut segs = vec![Segment::Pulse { phase: 0.0, area: FRAC_PI_2, duration: half }];
        let block = PulseSchedule::dd_block(self.t_w, self.pulse_duration(PI));
        for _ in 0..self.n_blocks {
            segs.extend_from_slice(&block.segments);
        }
        segs.push(Segment::Pulse { phase: self.phi, area: FRAC_PI_2, duration: half });
        PulseSchedule { segments: segs }
    }
}

/// Rotating-frame bookkeeping; never enters the interaction-picture dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabFrameInfo {
    /// `µ_z B_z / ħ`, rad/s.
    pub zeeman_splitting: f64,
    /// `ω_RF`, rad/s.
    pub rf_frequency: f64,
}

impl LabFrameInfo {
    /// `δ = ω_RF − µ_z B_z / ħ`.
    pub fn detuning(&self) -> f64 {
        self.rf_frequency - self.zeeman_splitting
    }

    /// Whether the drive is near enough to resonance for the RWA, relative
    /// to the splitting.
    pub fn rwa_valid(&self, rel_tol: f64) -> bool {
        self.detuning().abs() <= rel_tol * self.zeeman_splitting.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Free { duration: f64 },
    /// A drive pulse of rotation angle `area`; zero duration is an ideal pulse.
    Pulse { phase: f64, area: f64, duration: f64 },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Free { duration } | Segment::Pulse { duration, .. } => duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    segments: Vec<Segment>,
}

impl PulseSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            match *s {
                Segment::Free { duration } if !(duration > 0.0 && duration.is_finite()) => {
                    return Err(Error::InvalidParameter(format!("free evolution duration {duration}")));
                }
                Segment::Pulse { area, duration, .. } => {
                    if !(area > 0.0 && area <= 2.0 * PI) {
                        return Err(Error::InvalidParameter(format!("pulse area {area} outside (0, 2pi]")));
                    }
                    if !(duration >= 0.0 && duration.is_finite()) {
                        return Err(Error::InvalidParameter(format!("pulse duration {duration}")));
                    }
                }
                _ => {}
            }
        }
        Ok(PulseSchedule { segments })
    }

    /// `[t_w] [π, +y] [2 t_w] [π, −y] [t_w]`.
    pub fn dd_block(t_w: f64, pi_duration: f64) -> PulseSchedule {
        PulseSchedule {
            segments: vec![
                Segment::Free { duration: t_w },
                Segment::Pulse { phase: FRAC_PI_2, area: PI, duration: pi_duration },
                Segment::Free { duration: 2.0 * t_w },
                Segment::Pulse { phase: -FRAC_PI_2, area: PI, duration: pi_duration },
                Segment::Free { duration: t_w },
            ],
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    pub fn free_duration(&self) -> f64 {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Free { duration } => Some(*duration),
                _ => None,
            })
            .sum()
    }
}

fn jz_diag(sys: &SpinSystem) -> Vec<f64> {
    sys.m_values().map(|m| m.value()).collect()
}

fn free_propagator(m: &[f64], linear_phase: f64, quad_phase: f64) -> Vec<Complex64> {
    m.iter().map(|&mm| Complex64::from_polar(1.0, linear_phase * mm + quad_phase * mm * mm)).collect()
}

fn left_mul_diag(diag: &[Complex64], u: &mut CMatrix) {
    for (i, d) in diag.iter().enumerate() {
        for j in 0..u.ncols() {
            u[(i, j)] *= d;
        }
    }
}

fn diag_op(diag: Vec<Complex64>) -> Operator {
    Operator::diagonal(diag).with_kind(OperatorKind::Unitary)
}

/// One DD block with constant detuning and ideal pulses:
/// `e^{i(δ t_w Jz + κ t_w Jz²)} e^{−iπJy} e^{i(2δ t_w Jz + 2κ t_w Jz²)} e^{iπJy} e^{i(δ t_w Jz + κ t_w Jz²)}`.
pub fn dd_block_unitary(cfg: &SequenceConfig, delta: f64) -> Operator {
    let ops = build_angular_momentum_ops(&cfg.sys);
    let m = jz_diag(&cfg.sys);
    let tw = cfg.t_w;
    let outer = diag_op(free_propagator(&m, delta * tw, cfg.kappa * tw));
    let middle = diag_op(free_propagator(&m, 2.0 * delta * tw, 2.0 * cfg.kappa * tw));
    let flip_minus = Operator::new(expi_hermitian(ops.jy.matrix(), -PI), OperatorKind::Unitary);
    let flip_plus = Operator::new(expi_hermitian(ops.jy.matrix(), PI), OperatorKind::Unitary);
    outer.compose(&flip_minus).compose(&middle).compose(&flip_plus).compose(&outer)
}

/// `exp(iT κ Jz²)` sandwiched between the two Ramsey π/2 pulses.
pub fn sequence_unitary(cfg: &SequenceConfig) -> Operator {
    let engine = ClosedForm::new(cfg.sys);
    engine.unitary(cfg.kappa_t(), cfg.phi)
}

/// Precomputed operators for repeated closed-form evaluations.
struct ClosedForm {
    ops: AngularMomentum,
    m: Vec<f64>,
    opening: Operator,
}

impl ClosedForm {
    fn new(sys: SpinSystem) -> Self {
        let ops = build_angular_momentum_ops(&sys);
        let opening = rotation_with(&ops, 0.0, FRAC_PI_2);
        ClosedForm { m: jz_diag(&sys), ops, opening }
    }

    fn closing(&self, phi: f64) -> Operator {
        rotation_with(&self.ops, phi, FRAC_PI_2)
    }

    fn unitary_with(&self, kappa_t: f64, closing: &Operator) -> Operator {
        let mut u = self.opening.matrix().clone();
        left_mul_diag(&expi_diagonal(&self.m.iter().map(|x| x * x).collect::<Vec<_>>(), kappa_t), &mut u);
        Operator::new(closing.matrix() * u, OperatorKind::Unitary)
    }

    fn unitary(&self, kappa_t: f64, phi: f64) -> Operator {
        self.unitary_with(kappa_t, &self.closing(phi))
    }

    fn probability_with(&self, idx: usize, kappa_t: f64, closing: &Operator) -> f64 {
        self.unitary_with(kappa_t, closing).get(idx, idx).norm_sqr()
    }
}

/// `P_{J,m}(κT, φ) = |⟨J,m|U_total|J,m⟩|²`.
pub fn fringe_probability(sys: &SpinSystem, m: HalfInt, kappa_t: f64, phi: f64) -> Result<f64> {
    let idx = sys.index_of(m)?;
    let engine = ClosedForm::new(*sys);
    Ok(engine.probability_with(idx, kappa_t, &engine.closing(phi)).clamp(0.0, 1.0))
}

/// Fringe surface sampled on a grid, rows indexed by κT and columns by φ.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeGrid {
    pub kappa_t: Vec<f64>,
    pub phi: Vec<f64>,
    /// Row-major: `values[i * phi.len() + j]` is `P(kappa_t[i], phi[j])`.
    pub values: Vec<f64>,
}

impl FringeGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.phi.len() + j]
    }
}

fn check_axis(axis: &[f64], name: &'static str) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::EmptyAxis(name));
    }
    if axis.iter().any(|x| !x.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!("{name} axis must be finite and strictly increasing")));
    }
    Ok(())
}

pub fn fringe_grid(sys: &SpinSystem, m: HalfInt, kappa_t_axis: &[f64], phi_axis: &[f64]) -> Result<FringeGrid> {
    check_axis(kappa_t_axis, "kappaT")?;
    check_axis(phi_axis, "phi")?;
    let idx = sys.index_of(m)?;
    let engine = ClosedForm::new(*sys);
    let closings: Vec<Operator> = phi_axis.iter().map(|&p| engine.closing(p)).collect();
    let mut values = Vec::with_capacity(kappa_t_axis.len() * phi_axis.len());
    for &kt in kappa_t_axis {
        for c in &closings {
            values.push(engine.probability_with(idx, kt, c).clamp(0.0, 1.0));
        }
    }
    Ok(FringeGrid { kappa_t: kappa_t_axis.to_vec(), phi: phi_axis.to_vec(), values })
}

/// `n` evenly spaced points on `[start, end]` (or `[start, end)` when
/// `include_end` is false).
pub fn linspace(start: f64, end: f64, n: usize, include_end: bool) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let div = if include_end { (n - 1) as f64 } else { n as f64 };
            (0..n).map(|k| start + (end - start) * k as f64 / div).collect()
        }
    }
}

/// One-dimensional fringe `χ ↦ P_{J,m}(χ, φ)` at fixed φ, evaluated in
/// O(2J+1) per point as `|Σ_k c_k e^{iχ m_k²}|²`.
#[derive(Debug, Clone)]
pub struct Fringe {
    sys: SpinSystem,
    m: HalfInt,
    phi: f64,
    coeffs: Vec<Complex64>,
    m_squared: Vec<f64>,
}

/// Central-difference step for fringe derivatives, rad.
pub const DERIVATIVE_STEP: f64 = 1e-6;

impl Fringe {
    pub fn new(sys: &SpinSystem, m: HalfInt, phi: f64) -> Result<Self> {
        let idx = sys.index_of(m)?;
        let ops = build_angular_momentum_ops(sys);
        let opening = rotation_with(&ops, 0.0, FRAC_PI_2);
        let closing = rotation_with(&ops, phi, FRAC_PI_2);
        let coeffs = (0..sys.dim()).map(|k| closing.get(idx, k) * opening.get(k, idx)).collect();
        let m_squared = sys.m_values().map(|mm| mm.value() * mm.value()).collect();
        Ok(Fringe { sys: *sys, m, phi, coeffs, m_squared })
    }

    pub fn sys(&self) -> &SpinSystem {
        &self.sys
    }

    pub fn m(&self) -> HalfInt {
        self.m
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// κT period of the fringe: π for half-integer J, 2π for integer J.
    pub fn period(&self) -> f64 {
        if self.sys.is_half_integer() {
            PI
        } else {
            2.0 * PI
        }
    }

    pub fn probability(&self, chi: f64) -> f64 {
        let amp: Complex64 = self
            .coeffs
            .iter()
            .zip(&self.m_squared)
            .map(|(c, m2)| c * Complex64::from_polar(1.0, chi * m2))
            .sum();
        amp.norm_sqr().clamp(0.0, 1.0)
    }

    /// Central-difference derivative `dP/dχ`.
    pub fn slope(&self, chi: f64) -> f64 {
        let h = DERIVATIVE_STEP;
        (self.probability(chi + h) - self.probability(chi - h)) / (2.0 * h)
    }
}

/// Step sizes for [`integrate_noisy_with`]. `None` falls back to
/// [`SequenceConfig::default_free_step`] and
/// [`SequenceConfig::default_step`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegratorOptions {
    pub free_step: Option<f64>,
    pub pulse_step: Option<f64>,
}

/// Time-ordered product of `exp(i H(t_k) Δt)` over the schedule, with δ
/// held constant over each step (midpoint sample of the trace).
pub fn integrate_noisy(cfg: &SequenceConfig, schedule: &PulseSchedule, noise: &NoiseTrace) -> Result<Operator> {
    integrate_noisy_with(cfg, schedule, noise, IntegratorOptions::default())
}

pub fn integrate_noisy_with(
    cfg: &SequenceConfig,
    schedule: &PulseSchedule,
    noise: &NoiseTrace,
    opts: IntegratorOptions,
) -> Result<Operator> {
    let free_step = opts.free_step.unwrap_or(cfg.default_free_step());
    let pulse_step = opts.pulse_step.unwrap_or(cfg.default_step());
    for step in [free_step, pulse_step] {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::NonPositiveStep(step));
        }
    }
    let needed = schedule.total_duration();
    if needed > noise.span() * (1.0 + 1e-12) {
        return Err(Error::TraceTooShort { needed, available: noise.span() });
    }

    let ops = build_angular_momentum_ops(&cfg.sys);
    let m = jz_diag(&cfg.sys);
    let jz2 = ops.jz_squared();
    let d = cfg.sys.dim();
    let mut u = CMatrix::identity(d, d);
    let mut t = noise.grid().t0;
    let mut ideal_cache: Vec<(f64, f64, Operator)> = Vec::new();

    for seg in schedule.segments() {
        match *seg {
            Segment::Free { duration } => {
                // Free Hamiltonians commute at all times, so the product of
                // per-step exponentials collapses to one diagonal phase.
                let n = (duration / free_step).ceil().max(1.0) as usize;
                let h = duration / n as f64;
                let linear: f64 = (0..n).map(|k| noise.sample_at(t + (k as f64 + 0.5) * h) * h).sum();
                left_mul_diag(&free_propagator(&m, linear, cfg.kappa * duration), &mut u);
            }
            Segment::Pulse { phase, area, duration: 0.0 } => {
                let pos = ideal_cache.iter().position(|(p, a, _)| *p == phase && *a == area);
                let idx = match pos {
                    Some(i) => i,
                    None => {
                        ideal_cache.push((phase, area, rotation_with(&ops, phase, area)));
                        ideal_cache.len() - 1
                    }
                };
                u = ideal_cache[idx].2.matrix() * u;
            }
            Segment::Pulse { phase, area, duration } => {
                let rabi = area / duration;
                let drive = drive_generator(&ops, phase).map(|z| z * rabi);
                let static_part = jz2.matrix().map(|z| z * cfg.kappa) + drive;
                let n = (duration / pulse_step).ceil().max(1.0) as usize;
                let h = duration / n as f64;
                for k in 0..n {
                    let delta = noise.sample_at(t + (k as f64 + 0.5) * h);
                    let mut ham = static_part.clone();
                    for (i, mm) in m.iter().enumerate() {
                        ham[(i, i)] += Complex64::new(delta * mm, 0.0);
                    }
                    u = expi_hermitian(&ham, h) * u;
                }
            }
        }
        t += seg.duration();
    }
    Ok(Operator::new(u, OperatorKind::Unitary))
}

/// Survival probability of the prepared state under an arbitrary propagator.
pub fn survival_probability(sys: &SpinSystem, m: HalfInt, u: &Operator) -> Result<f64> {
    let idx = sys.index_of(m)?;
    Ok(u.get(idx, idx).norm_sqr().clamp(0.0, 1.0))
}

/// Linear-Zeeman phase left after a train of ideal π pulses: free
/// evolution windows are weighted by the toggling-frame sign of `Jz`,
/// which flips at every π pulse. Other pulse areas are ignored.
pub fn residual_linear_phase(schedule: &PulseSchedule, noise: &NoiseTrace, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::NonPositiveStep(step));
    }
    let needed = schedule.total_duration();
    if needed > noise.span() * (1.0 + 1e-12) {
        return Err(Error::TraceTooShort { needed, available: noise.span() });
    }
    let mut sign = 1.0;
    let mut phase = 0.0;
    let mut t = noise.grid().t0;
    for seg in schedule.segments() {
        match *seg {
            Segment::Free { duration } => {
                let n = (duration / step).ceil().max(1.0) as usize;
                let h = duration / n as f64;
                phase += sign * (0..n).map(|k| noise.sample_at(t + (k as f64 + 0.5) * h) * h).sum::<f64>();
            }
            Segment::Pulse { area, .. } => {
                if (area - PI).abs() < 1e-12 {
                    sign = -sign;
                }
            }
        }
        t += seg.duration();
    }
    Ok(phase)
}
