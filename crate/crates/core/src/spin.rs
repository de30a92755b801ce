//! Angular-momentum operators, rotations and the rank-2 tensor matrix
//! elements that carry the m²-dependent Lorentz-violating shift.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{expi_hermitian, CMatrix, Operator, OperatorKind};
use crate::species::IonSpecies;

/// Hartree energy over Planck's constant, in Hz (CODATA).
pub const HARTREE_HZ: f64 = 6.579683920502e15;

/// A spin-J multiplet with basis `|J, m⟩`, `m = -J, ..., +J` ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinSystem {
    j: HalfInt,
}

impl SpinSystem {
    pub fn new(j: HalfInt) -> Result<Self> {
        if j.twice() < 1 {
            return Err(Error::InvalidSpin(j.twice() as i64));
        }
        Ok(SpinSystem { j })
    }

    pub fn from_twice_j(twice_j: i32) -> Result<Self> {
        SpinSystem::new(HalfInt::from_twice(twice_j))
    }

    pub fn j(&self) -> HalfInt {
        self.j
    }

    pub fn dim(&self) -> usize {
        self.j.twice() as usize + 1
    }

    pub fn is_half_integer(&self) -> bool {
        !self.j.is_integer()
    }

    /// Projection carried by basis index `i`.
    pub fn m_at(&self, i: usize) -> HalfInt {
        HalfInt::from_twice(-self.j.twice() + 2 * i as i32)
    }

    pub fn m_values(&self) -> impl Iterator<Item = HalfInt> + '_ {
        (0..self.dim()).map(|i| self.m_at(i))
    }

    pub fn index_of(&self, m: HalfInt) -> Result<usize> {
        let tj = self.j.twice();
        let tm = m.twice();
        if tm.abs() > tj || (tj - tm) % 2 != 0 {
            return Err(Error::InvalidProjection { j: self.j.to_string(), m: m.to_string() });
        }
        Ok(((tm + tj) / 2) as usize)
    }

    /// The Casimir eigenvalue J(J+1).
    pub fn casimir(&self) -> f64 {
        let j = self.j.value();
        j * (j + 1.0)
    }
}

/// Spin operators with ħ = 1.
#[derive(Debug, Clone)]
pub struct AngularMomentum {
    pub jx: Operator,
    pub jy: Operator,
    pub jz: Operator,
    pub jplus: Operator,
    pub jminus: Operator,
}

impl AngularMomentum {
    /// `Jz²` as a diagonal operator.
    pub fn jz_squared(&self) -> Operator {
        self.jz.compose(&self.jz)
    }
}

pub fn build_angular_momentum_ops(sys: &SpinSystem) -> AngularMomentum {
    let d = sys.dim();
    let j = sys.j().value();
    let mut jplus = CMatrix::zeros(d, d);
    for i in 0..d - 1 {
        let m = sys.m_at(i).value();
        jplus[(i + 1, i)] = Complex64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let jminus = jplus.adjoint();
    let jx = (&jplus + &jminus).map(|z| z * 0.5);
    let jy = (&jplus - &jminus).map(|z| z / Complex64::new(0.0, 2.0));
    let jz = Operator::diagonal(sys.m_values().map(|m| Complex64::new(m.value(), 0.0)));
    AngularMomentum {
        jx: Operator::new(jx, OperatorKind::Hermitian),
        jy: Operator::new(jy, OperatorKind::Hermitian),
        jz,
        jplus: Operator::new(jplus, OperatorKind::General),
        jminus: Operator::new(jminus, OperatorKind::General),
    }
}

/// The drive generator `Jx cos φ − Jy sin φ`.
pub fn drive_generator(ops: &AngularMomentum, phase: f64) -> CMatrix {
    ops.jx.matrix().map(|z| z * phase.cos()) - ops.jy.matrix().map(|z| z * phase.sin())
}

/// `exp(i θ (Jx cos φ − Jy sin φ))`.
pub fn rotation(sys: &SpinSystem, phase: f64, angle: f64) -> Operator {
    rotation_with(&build_angular_momentum_ops(sys), phase, angle)
}

/// [`rotation`] reusing prebuilt operators.
pub fn rotation_with(ops: &AngularMomentum, phase: f64, angle: f64) -> Operator {
    let g = drive_generator(ops, phase);
    Operator::new(expi_hermitian(&g, angle), OperatorKind::Unitary)
}

fn check_tensor_args(j: HalfInt, m: HalfInt) -> Result<()> {
    if j.twice() < 2 {
        return Err(Error::RankTooLow(j.to_string()));
    }
    if m.twice().abs() > j.twice() || (j - m).twice() % 2 != 0 {
        return Err(Error::InvalidProjection { j: j.to_string(), m: m.to_string() });
    }
    Ok(())
}

fn tensor_normalization(j: f64) -> f64 {
    ((2.0 * j + 3.0) * (j + 1.0) * (2.0 * j + 1.0) * j * (2.0 * j - 1.0)).sqrt()
}

/// `⟨J,m|T₀⁽²⁾|J,m⟩ / ⟨J‖T⁽²⁾‖J⟩ = (3m² − J(J+1)) / √((2J+3)(J+1)(2J+1)J(2J−1))`.
pub fn t20_geometric_factor(j: HalfInt, m: HalfInt) -> Result<f64> {
    check_tensor_args(j, m)?;
    let jf = j.value();
    let mf = m.value();
    Ok((3.0 * mf * mf - jf * (jf + 1.0)) / tensor_normalization(jf))
}

/// Magnitude of the tensor energy shift between two sublevels, in Hz.
pub fn lv_energy_shift(species: &IonSpecies, m_hi: HalfInt, m_lo: HalfInt, c02: f64) -> Result<f64> {
    let hi = t20_geometric_factor(species.j, m_hi)?;
    let lo = t20_geometric_factor(species.j, m_lo)?;
    Ok(((hi - lo) * species.reduced_me_au * c02 * HARTREE_HZ / 6.0).abs())
}

/// Shift between the largest and smallest |m| of the species' multiplet.
pub fn full_range_shift(species: &IonSpecies, c02: f64) -> Result<f64> {
    let j = species.j;
    let lo = if j.is_integer() { HalfInt::ZERO } else { HalfInt::from_twice(1) };
    lv_energy_shift(species, j, lo, c02)
}

/// Coefficient of m² in the tensor shift expressed in Hz (κ_LV / 2π).
pub fn kappa_lv_hz(species: &IonSpecies, c02: f64) -> Result<f64> {
    if species.j.twice() < 2 {
        return Err(Error::RankTooLow(species.j.to_string()));
    }
    let norm = tensor_normalization(species.j.value());
    Ok(3.0 / norm * species.reduced_me_au * c02 * HARTREE_HZ / 6.0)
}

/// Coefficient of `Jz²` from the tensor term, in rad/s.
pub fn kappa_lv(species: &IonSpecies, c02: f64) -> Result<f64> {
    Ok(TAU * kappa_lv_hz(species, c02)?)
}
