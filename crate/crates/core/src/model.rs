//! System parameters and projection of `H_eff` and the cavity ladder onto
//! the excitation subspaces.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::basis::{build_basis, BasisState, ExcitationBasis};
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::scalar::{real, Real};

/// Unit in which parameters were supplied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitTag {
    /// Already expressed in multiples of the total cavity decay rate.
    #[default]
    KappaUnits,
    /// Ordinary frequencies in GHz; the angular quantity is `2π` times the value.
    #[serde(rename = "ghz_2pi")]
    Ghz2Pi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Emitter<T> {
    pub omega: T,
    pub gamma: T,
    pub g: T,
}

/// Cavity + emitters, stored in units where `κ = κ_b + κ_c = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams<T> {
    pub omega_c: T,
    pub kappa_b: T,
    pub kappa_c: T,
    pub emitters: Vec<Emitter<T>>,
    pub unit_tag: UnitTag,
    /// Angular `κ` of the source units (rad/ns for GHz input, 1 for κ units).
    pub scale: T,
}

impl<T: Real> SystemParams<T> {
    /// Validates and normalizes raw parameters given in `unit`.
    pub fn new(
        omega_c: T,
        kappa_b: T,
        kappa_c: T,
        emitters: Vec<Emitter<T>>,
        unit: UnitTag,
    ) -> Result<Self> {
        let finite = |x: T| x.is_finite();
        if !finite(omega_c) || !finite(kappa_b) || !finite(kappa_c) {
            return Err(Error::InvalidParams("cavity parameters must be finite".into()));
        }
        if kappa_b < T::zero() || kappa_c < T::zero() {
            return Err(Error::InvalidParams("kappa_b and kappa_c must be nonnegative".into()));
        }
        let kappa = kappa_b + kappa_c;
        if kappa <= T::zero() {
            return Err(Error::InvalidParams("total cavity decay kappa must be positive".into()));
        }
        for (i, e) in emitters.iter().enumerate() {
            if !finite(e.omega) || !finite(e.gamma) || !finite(e.g) {
                return Err(Error::InvalidParams(format!("emitter {i} has non-finite parameters")));
            }
            if e.gamma < T::zero() {
                return Err(Error::InvalidParams(format!("emitter {i} has negative gamma")));
            }
        }
        let angular = match unit {
            UnitTag::KappaUnits => T::one(),
            UnitTag::Ghz2Pi => T::TAU(),
        };
        let scale = kappa * angular;
        // The 2π factor cancels in the ratio; only the κ division matters.
        let n = |x: T| x / kappa;
        Ok(Self {
            omega_c: n(omega_c),
            kappa_b: n(kappa_b),
            kappa_c: n(kappa_c),
            emitters: emitters
                .into_iter()
                .map(|e| Emitter { omega: n(e.omega), gamma: n(e.gamma), g: n(e.g) })
                .collect(),
            unit_tag: unit,
            scale,
        })
    }

    /// Symmetric two-port cavity (`κ_b = κ_c = κ/2`) with `n` identical emitters.
    pub fn identical(n: usize, omega_c: T, omega_e: T, kappa: T, gamma: T, g: T) -> Result<Self> {
        let half = kappa / real(2.0);
        Self::new(omega_c, half, half, vec![Emitter { omega: omega_e, gamma, g }; n], UnitTag::KappaUnits)
    }

    pub fn kappa(&self) -> T {
        self.kappa_b + self.kappa_c
    }

    pub fn n_emitters(&self) -> usize {
        self.emitters.len()
    }

    /// Complex cavity pole `ω_c − iκ/2`.
    pub fn lambda_c(&self) -> Complex<T> {
        Complex::new(self.omega_c, -self.kappa() / real(2.0))
    }

    /// True when every emitter carries bit-identical parameters.
    pub fn is_identical(&self) -> bool {
        self.emitters.windows(2).all(|w| w[0] == w[1])
    }

    /// Returns a copy with emitter frequencies replaced (already in internal units).
    pub fn with_emitter_frequencies(&self, omegas: &[T]) -> Self {
        let mut p = self.clone();
        for (e, &w) in p.emitters.iter_mut().zip(omegas) {
            e.omega = w;
        }
        p
    }

    fn diag_energy(&self, s: &BasisState) -> Complex<T> {
        let lc = self.lambda_c();
        let mut z = lc * real::<T>(s.photons as f64);
        for &k in &s.excited {
            let e = &self.emitters[k];
            z += Complex::new(e.omega, -e.gamma / real(2.0));
        }
        z
    }
}

/// Projected effective Hamiltonian and ladder blocks up to two excitations.
#[derive(Clone, Debug)]
pub struct OperatorBlocks<T: Real> {
    pub h1: CMatrix<T>,
    pub h2: CMatrix<T>,
    /// `⟨G|a|·⟩` restricted to level 1, shape `1 × dim₁`.
    pub a01: CMatrix<T>,
    /// `⟨·|a|·⟩` from level 2 to level 1, shape `dim₁ × dim₂`.
    pub a12: CMatrix<T>,
}

/// `H_eff` restricted to the level-`m` subspace.
pub fn hamiltonian_block<T: Real>(params: &SystemParams<T>, basis: &ExcitationBasis) -> CMatrix<T> {
    let d = basis.dim();
    let mut h = CMatrix::zeros(d, d);
    for (i, s) in basis.states.iter().enumerate() {
        h[(i, i)] = params.diag_energy(s);
        if s.photons == 0 {
            continue;
        }
        // a σ_k† takes |n, S⟩ to √n |n−1, S ∪ {k}⟩.
        let fock = real::<T>(s.photons as f64).sqrt();
        for (k, e) in params.emitters.iter().enumerate() {
            if s.excited.binary_search(&k).is_ok() {
                continue;
            }
            let mut set = s.excited.clone();
            let pos = set.binary_search(&k).unwrap_err();
            set.insert(pos, k);
            let j = basis
                .index_of(&BasisState { photons: s.photons - 1, excited: set })
                .expect("target state lies in the same subspace");
            let v = Complex::new(e.g * fock, T::zero());
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Matrix of `a` from `upper` (level m+1) to `lower` (level m).
pub fn ladder_block<T: Real>(lower: &ExcitationBasis, upper: &ExcitationBasis) -> CMatrix<T> {
    let mut a = CMatrix::zeros(lower.dim(), upper.dim());
    for (j, s) in upper.states.iter().enumerate() {
        if s.photons == 0 {
            continue;
        }
        let target = BasisState { photons: s.photons - 1, excited: s.excited.clone() };
        if let Some(i) = lower.index_of(&target) {
            a[(i, j)] = Complex::new(real::<T>(s.photons as f64).sqrt(), T::zero());
        }
    }
    a
}

pub fn project_operators<T: Real>(params: &SystemParams<T>) -> Result<OperatorBlocks<T>> {
    let n = params.n_emitters();
    let b0 = build_basis(0, n)?;
    let b1 = build_basis(1, n)?;
    let b2 = build_basis(2, n)?;
    Ok(OperatorBlocks {
        h1: hamiltonian_block(params, &b1),
        h2: hamiltonian_block(params, &b2),
        a01: ladder_block(&b0, &b1),
        a12: ladder_block(&b1, &b2),
    })
}

/// Level-1 blocks only; sufficient for the transmissivity.
pub fn project_level1<T: Real>(params: &SystemParams<T>) -> Result<(CMatrix<T>, CMatrix<T>)> {
    let n = params.n_emitters();
    let b0 = build_basis(0, n)?;
    let b1 = build_basis(1, n)?;
    Ok((hamiltonian_block(params, &b1), ladder_block(&b0, &b1)))
}
