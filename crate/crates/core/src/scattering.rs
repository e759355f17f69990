//! Transmission and photon correlations from the excitation-subspace
//! eigensystems.
//!
//! Notation used throughout, with `ω` the drive frequency:
//!
//! * `c_j = ⟨G|a|φ⁽¹⁾_j⟩_T`, the single-photon overlaps;
//! * `B = U₁ᵀ A₁₂ U₂`, so `B_ji = ⟨φ⁽¹⁾_j|a|φ⁽²⁾_i⟩_T`;
//! * `s(ω) = Σ_j c_j² / (λ⁽¹⁾_j − ω)`, the one-photon amplitude, `T = κ_bκ_c|s|²`;
//! * `X_i = (cᵀB)_i / (λ⁽²⁾_i − 2ω) · (Bᵀ R₁ c)_i` with `R₁ = diag(1/(λ⁽¹⁾ − ω))`,
//!   the two-photon amplitude resolved over two-excitation eigenstates.
//!
//! Then `Γ_i = (κ_bκ_c / T)·X_i` and `g²(0) = |Σ Γ_i|² = |Σ X_i|² / |s|⁴`.

use std::sync::OnceLock;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::build_basis;
use crate::eigen::{diag_complex_symmetric, EigenSystem};
use crate::error::{Error, Result};
use crate::identical;
use crate::matrix::CMatrix;
use crate::model::{hamiltonian_block, ladder_block, project_level1, OperatorBlocks, SystemParams};
use crate::scalar::{real, to_f64, Real};

/// Transmissivities below this are treated as exact Fano zeros.
pub const T_FLOOR: f64 = 1e-14;
/// Overlaps below this magnitude count as dark.
pub const BRIGHT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum<T> {
    pub omega_grid: Vec<T>,
    pub t: Vec<T>,
    pub g2zero: Vec<T>,
}

/// Per-eigenstate weights reproducing `g²(τ)`:
/// `g²(τ) = |Σ_k g_k + Σ_k (f_k − g_k)·e^{−i(λ_k − ω)τ}|² / |s|⁴`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct G2Components<T> {
    pub omega_l: T,
    pub lambdas1: Vec<Complex<T>>,
    /// `g_k = s·c_k²/(λ_k − ω)`; sums to `s²`.
    pub disconnected_weights: Vec<Complex<T>>,
    /// `f_k = (B R₂ Bᵀ R₁ c)_k · c_k`; sums to `Σ X_i`.
    pub connected_weights: Vec<Complex<T>>,
    /// The one-photon amplitude `s(ω)`.
    pub amplitude: Complex<T>,
}

impl<T: Real> G2Components<T> {
    pub fn eval(&self, tau: T) -> T {
        let mut acc = Complex::<T>::zero();
        for ((&g, &f), &l) in self.disconnected_weights.iter().zip(&self.connected_weights).zip(&self.lambdas1) {
            let z = l - Complex::new(self.omega_l, T::zero());
            // e^{−i z τ}; Im z ≤ 0 so this decays.
            let phase = (Complex::new(T::zero(), -tau) * z).exp();
            acc += g + (f - g) * phase;
        }
        acc.norm_sqr() / self.amplitude.norm_sqr().powi(2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G2Trace<T> {
    pub omega_l: T,
    pub taus: Vec<T>,
    pub g2: Vec<T>,
}

impl<T: Real> G2Trace<T> {
    /// First grid delay after which `|g² − 1| < tol` holds for the rest of
    /// the grid. `None` if the last point still violates it.
    pub fn settling_time(&self, tol: T) -> Option<T> {
        match self.g2.iter().rposition(|&v| (v - T::one()).abs() >= tol) {
            None => self.taus.first().copied(),
            Some(k) if k + 1 < self.taus.len() => Some(self.taus[k + 1]),
            Some(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipContribution<T> {
    /// Index into the sorted two-excitation eigenvalues.
    pub index: usize,
    pub lambda: Complex<T>,
    pub gamma: Complex<T>,
    pub magnitude: T,
    pub phase: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnharmonicityReport<T> {
    pub delta_omega_12: T,
    pub delta_omega_2: T,
    /// `(i, j)`: single- and two-excitation eigenstate indices of the minimizer.
    pub pair: (usize, usize),
}

struct Level1<T: Real> {
    es: EigenSystem<T>,
    c: Vec<Complex<T>>,
}

struct Level2<T: Real> {
    es: EigenSystem<T>,
    b: CMatrix<T>,
    cb: Vec<Complex<T>>,
}

enum Source<T: Real> {
    Full,
    Blocks(OperatorBlocks<T>),
}

/// Scattering calculator with lazily computed, cached eigensystems.
///
/// Shareable across threads; each eigensystem is computed at most once.
pub struct Scatterer<T: Real> {
    params: SystemParams<T>,
    source: Source<T>,
    level1: OnceLock<Result<Level1<T>>>,
    level2: OnceLock<Result<Level2<T>>>,
}

impl<T: Real> Scatterer<T> {
    /// General path: full excitation subspaces for arbitrary emitters.
    pub fn new(params: SystemParams<T>) -> Self {
        Self { params, source: Source::Full, level1: OnceLock::new(), level2: OnceLock::new() }
    }

    /// Uses the reduced bright blocks when all emitters are identical.
    pub fn auto(params: SystemParams<T>) -> Self {
        if params.n_emitters() > 0 && params.is_identical() {
            let blocks = identical::bright_blocks(&params);
            Self::from_blocks(params, blocks)
        } else {
            Self::new(params)
        }
    }

    /// Uses caller-supplied blocks; `params` only provides `κ_b, κ_c`.
    pub fn from_blocks(params: SystemParams<T>, blocks: OperatorBlocks<T>) -> Self {
        Self { params, source: Source::Blocks(blocks), level1: OnceLock::new(), level2: OnceLock::new() }
    }

    pub fn params(&self) -> &SystemParams<T> {
        &self.params
    }

    fn level1(&self) -> Result<&Level1<T>> {
        self.level1
            .get_or_init(|| {
                let (h1, a01) = match &self.source {
                    Source::Full => project_level1(&self.params)?,
                    Source::Blocks(b) => (b.h1.clone(), b.a01.clone()),
                };
                let es = diag_complex_symmetric(&h1, 1)?;
                let c = a01.matmul(&es.u).row(0).to_vec();
                Ok(Level1 { es, c })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn level2(&self) -> Result<&Level2<T>> {
        let l1 = self.level1()?;
        self.level2
            .get_or_init(|| {
                let (h2, a12) = match &self.source {
                    Source::Full => {
                        let n = self.params.n_emitters();
                        let b1 = build_basis(1, n)?;
                        let b2 = build_basis(2, n)?;
                        (hamiltonian_block(&self.params, &b2), ladder_block(&b1, &b2))
                    }
                    Source::Blocks(b) => (b.h2.clone(), b.a12.clone()),
                };
                let es = diag_complex_symmetric(&h2, 2)?;
                // A₁₂ has at most one nonzero per column, so A₁₂U₂ is a
                // scaled row selection of U₂.
                let (d1, d2) = (a12.rows(), a12.cols());
                let mut au = CMatrix::zeros(d1, d2);
                for i in 0..d1 {
                    for j in 0..d2 {
                        let a = a12[(i, j)];
                        if a.is_zero() {
                            continue;
                        }
                        for k in 0..d2 {
                            au[(i, k)] += a * es.u[(j, k)];
                        }
                    }
                }
                let b = l1.es.u.transpose().matmul(&au);
                let cb = b.vecmat(&l1.c);
                Ok(Level2 { es, b, cb })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn eigensystem1(&self) -> Result<&EigenSystem<T>> {
        Ok(&self.level1()?.es)
    }

    pub fn eigensystem2(&self) -> Result<&EigenSystem<T>> {
        Ok(&self.level2()?.es)
    }

    /// `⟨G|a|φ⁽¹⁾_j⟩_T` for every single-excitation eigenstate.
    pub fn single_overlaps(&self) -> Result<&[Complex<T>]> {
        Ok(&self.level1()?.c)
    }

    /// `⟨G|a²|φ⁽²⁾_i⟩_T` for every two-excitation eigenstate.
    pub fn two_photon_overlaps(&self) -> Result<&[Complex<T>]> {
        Ok(&self.level2()?.cb)
    }

    fn amplitude(l1: &Level1<T>, omega: T) -> Complex<T> {
        let w = Complex::new(omega, T::zero());
        l1.c.iter().zip(&l1.es.lambdas).map(|(&c, &l)| c * c / (l - w)).fold(Complex::zero(), |a, b| a + b)
    }

    fn kbkc(&self) -> T {
        self.params.kappa_b * self.params.kappa_c
    }

    pub fn transmission(&self, omega: T) -> Result<T> {
        let l1 = self.level1()?;
        Ok(self.kbkc() * Self::amplitude(l1, omega).norm_sqr())
    }

    fn guarded_amplitude(&self, omega: T) -> Result<(&Level1<T>, Complex<T>)> {
        let l1 = self.level1()?;
        let s = Self::amplitude(l1, omega);
        let t = self.kbkc() * s.norm_sqr();
        if !(t >= real(T_FLOOR)) {
            return Err(Error::TransmissionFloor { omega_l: to_f64(omega), t: to_f64(t) });
        }
        Ok((l1, s))
    }

    /// `R₁c`, i.e. `c_j/(λ⁽¹⁾_j − ω)`.
    fn r1c(l1: &Level1<T>, omega: T) -> Vec<Complex<T>> {
        let w = Complex::new(omega, T::zero());
        l1.c.iter().zip(&l1.es.lambdas).map(|(&c, &l)| c / (l - w)).collect()
    }

    /// `g²(0)` as `|Σ Γ_i|²`, with the bright-state contributions.
    pub fn g2_zero(&self, omega: T) -> Result<(T, Vec<DipContribution<T>>)> {
        let (l1, s) = self.guarded_amplitude(omega)?;
        let l2 = self.level2()?;
        let r1c = Self::r1c(l1, omega);
        let btr = l2.b.vecmat(&r1c);
        let w2 = Complex::new(omega + omega, T::zero());
        let pref = T::one() / s.norm_sqr();
        let mut contributions = Vec::new();
        let mut total = Complex::<T>::zero();
        for (i, ((&cb, &l), &y)) in l2.cb.iter().zip(&l2.es.lambdas).zip(&btr).enumerate() {
            if cb.norm() <= real(BRIGHT_TOL) {
                continue;
            }
            let gamma = cb / (l - w2) * y * pref;
            total += gamma;
            contributions.push(DipContribution { index: i, lambda: l, gamma, magnitude: gamma.norm(), phase: gamma.arg() });
        }
        Ok((total.norm_sqr(), contributions))
    }

    /// Disconnected/connected weight vectors for the delayed correlation.
    pub fn g2_components(&self, omega: T) -> Result<G2Components<T>> {
        let (l1, s) = self.guarded_amplitude(omega)?;
        let l2 = self.level2()?;
        let r1c = Self::r1c(l1, omega);
        let w2 = Complex::new(omega + omega, T::zero());
        let y: Vec<Complex<T>> =
            l2.b.vecmat(&r1c).iter().zip(&l2.es.lambdas).map(|(&v, &l)| v / (l - w2)).collect();
        let by = l2.b.matvec(&y);
        let connected = by.iter().zip(&l1.c).map(|(&v, &c)| v * c).collect();
        let disconnected = r1c.iter().zip(&l1.c).map(|(&r, &c)| s * c * r).collect();
        Ok(G2Components {
            omega_l: omega,
            lambdas1: l1.es.lambdas.clone(),
            disconnected_weights: disconnected,
            connected_weights: connected,
            amplitude: s,
        })
    }

    /// `g²(0)` through the kernel vectors; independent of the Γ summation.
    pub fn g2_zero_kernel(&self, omega: T) -> Result<T> {
        Ok(self.g2_components(omega)?.eval(T::zero()))
    }

    pub fn g2_tau(&self, omega: T, taus: &[T]) -> Result<G2Trace<T>> {
        check_taus(taus)?;
        let comp = self.g2_components(omega)?;
        Ok(G2Trace { omega_l: omega, taus: taus.to_vec(), g2: taus.iter().map(|&t| comp.eval(t)).collect() })
    }

    /// Sweeps `T` and `g²(0)` over a strictly increasing grid, in parallel.
    pub fn spectrum(&self, grid: &[T]) -> Result<Spectrum<T>> {
        check_grid(grid)?;
        self.level2()?;
        let pts: Vec<(T, T)> = grid
            .par_iter()
            .map(|&w| Ok((self.transmission(w)?, self.g2_zero(w)?.0)))
            .collect::<Result<_>>()?;
        let (t, g2zero) = pts.into_iter().unzip();
        Ok(Spectrum { omega_grid: grid.to_vec(), t, g2zero })
    }

    /// Minimum detuning between twice a bright single-excitation energy and a
    /// bright two-excitation energy.
    pub fn anharmonicity(&self) -> Result<AnharmonicityReport<T>> {
        let l1 = self.level1()?;
        let l2 = self.level2()?;
        let tol: T = real(BRIGHT_TOL);
        let mut best: Option<AnharmonicityReport<T>> = None;
        for (i, (&c, &li)) in l1.c.iter().zip(&l1.es.lambdas).enumerate() {
            if c.norm() <= tol {
                continue;
            }
            for (j, (&cb, &lj)) in l2.cb.iter().zip(&l2.es.lambdas).enumerate() {
                if cb.norm() <= tol {
                    continue;
                }
                let d = (li.re + li.re - lj.re).abs();
                if best.as_ref().is_none_or(|b| d < b.delta_omega_12) {
                    best = Some(AnharmonicityReport { delta_omega_12: d, delta_omega_2: lj.im.abs(), pair: (i, j) });
                }
            }
        }
        Ok(best.unwrap_or(AnharmonicityReport { delta_omega_12: T::zero(), delta_omega_2: T::zero(), pair: (0, 0) }))
    }
}

pub(crate) fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty frequency grid".into()));
    }
    if grid.iter().any(|w| !w.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("frequency grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn check_taus<T: Real>(taus: &[T]) -> Result<()> {
    if taus.iter().any(|t| !(*t >= T::zero()) || !t.is_finite()) || taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid("delays must be finite, nonnegative and ascending".into()));
    }
    Ok(())
}

/// Evenly spaced grid including both ends.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / real((n - 1) as f64);
            (0..n).map(|k| if k + 1 == n { hi } else { lo + step * real(k as f64) }).collect()
        }
    }
}

pub fn transmission<T: Real>(params: &SystemParams<T>, omega: T) -> Result<T> {
    Scatterer::new(params.clone()).transmission(omega)
}

pub fn g2_zero<T: Real>(params: &SystemParams<T>, omega: T) -> Result<(T, Vec<DipContribution<T>>)> {
    Scatterer::new(params.clone()).g2_zero(omega)
}

pub fn g2_tau<T: Real>(params: &SystemParams<T>, omega: T, taus: &[T]) -> Result<G2Trace<T>> {
    Scatterer::new(params.clone()).g2_tau(omega, taus)
}

pub fn anharmonicity<T: Real>(params: &SystemParams<T>) -> Result<AnharmonicityReport<T>> {
    Scatterer::new(params.clone()).anharmonicity()
}
