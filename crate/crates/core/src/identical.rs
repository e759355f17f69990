//! Identical emitters: collective (Dicke) reduction, large-N series and
//! closed-form N → ∞ limits.
//!
//! With all emitters equal only the symmetric states couple to the cavity.
//! In the single-excitation sector the bright basis is `{|1,G⟩, |0,W⟩}` and
//! in the two-excitation sector `{|2,G⟩, |1,W⟩, |0,D₂⟩}`, where `W` is the
//! symmetric one-excitation Dicke state and `D₂` its two-excitation partner.
//! Everything else splits into `N − 1` dark pairs (one photon on a dark
//! single-excitation emitter state, mixed with the matching two-excitation
//! emitter state) and `N(N−3)/2` doubly excited states with no photon
//! admixture at `2ω_e − iγ`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::basis::binomial;
use crate::eigen::{diag_complex_symmetric, fix_sign, EigenSystem};
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::model::{project_operators, OperatorBlocks, SystemParams};
use crate::scalar::{c_to_f64, real, Real};

/// Parameters of a cavity with `n` identical emitters (`κ`-units).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdenticalParams<T> {
    pub n: usize,
    pub omega_c: T,
    pub omega_e: T,
    pub kappa_b: T,
    pub kappa_c: T,
    pub gamma: T,
    pub g: T,
}

impl<T: Real> IdenticalParams<T> {
    /// Symmetric two-port cavity with total decay `kappa`.
    pub fn new(n: usize, omega_c: T, omega_e: T, kappa: T, gamma: T, g: T) -> Self {
        let half = kappa / real(2.0);
        Self { n, omega_c, omega_e, kappa_b: half, kappa_c: half, gamma, g }
    }

    /// Extracts the shared emitter parameters; `None` for non-identical or empty systems.
    pub fn from_system(p: &SystemParams<T>) -> Option<Self> {
        let e = p.emitters.first()?;
        p.is_identical().then(|| Self {
            n: p.n_emitters(),
            omega_c: p.omega_c,
            omega_e: e.omega,
            kappa_b: p.kappa_b,
            kappa_c: p.kappa_c,
            gamma: e.gamma,
            g: e.g,
        })
    }

    pub fn to_system(&self) -> Result<SystemParams<T>> {
        let em = crate::model::Emitter { omega: self.omega_e, gamma: self.gamma, g: self.g };
        SystemParams::new(self.omega_c, self.kappa_b, self.kappa_c, vec![em; self.n], crate::model::UnitTag::KappaUnits)
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    pub fn kappa(&self) -> T {
        self.kappa_b + self.kappa_c
    }

    /// `λ_c = ω_c − iκ/2`.
    pub fn lambda_c(&self) -> Complex<T> {
        Complex::new(self.omega_c, -self.kappa() / real(2.0))
    }

    /// `λ_e = ω_e − iγ/2`.
    pub fn lambda_e(&self) -> Complex<T> {
        Complex::new(self.omega_e, -self.gamma / real(2.0))
    }

    /// `Δ = λ_e − λ_c = ω_e − ω_c − i(γ − κ)/2`.
    pub fn big_delta(&self) -> Complex<T> {
        self.lambda_e() - self.lambda_c()
    }

    fn nf(&self) -> T {
        real(self.n as f64)
    }
}

fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Bright single-excitation block in the basis `{|1,G⟩, |0,W⟩}`.
pub fn bright_h1<T: Real>(p: &IdenticalParams<T>) -> CMatrix<T> {
    let c = re(p.g * p.nf().sqrt());
    let (lc, le) = (p.lambda_c(), p.lambda_e());
    CMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => lc,
        (1, 1) => le,
        _ => c,
    })
}

/// Bright two-excitation block in `{|2,G⟩, |1,W⟩, |0,D₂⟩}`; the last state
/// does not exist for `N = 1`, leaving a 2×2 block.
pub fn bright_h2<T: Real>(p: &IdenticalParams<T>) -> CMatrix<T> {
    let two: T = real(2.0);
    let (lc, le) = (p.lambda_c(), p.lambda_e());
    let c01 = re(p.g * (two * p.nf()).sqrt());
    let c12 = re(p.g * (two * (p.nf() - T::one())).sqrt());
    let diag = [lc + lc, lc + le, le + le];
    let d = if p.n >= 2 { 3 } else { 2 };
    CMatrix::from_fn(d, d, |i, j| match (i.min(j), i.max(j)) {
        (a, b) if a == b => diag[a],
        (0, 1) => c01,
        (1, 2) => c12,
        _ => Complex::new(T::zero(), T::zero()),
    })
}

/// Reduced operator blocks for the bright manifold, usable with
/// [`crate::scattering::Scatterer::from_blocks`]. For `N = 0` the bare
/// cavity blocks are returned.
pub fn bright_blocks<T: Real>(params: &SystemParams<T>) -> OperatorBlocks<T> {
    let Some(p) = IdenticalParams::from_system(params) else {
        return project_operators(params).expect("bare cavity blocks");
    };
    let h1 = bright_h1(&p);
    let h2 = bright_h2(&p);
    let mut a01 = CMatrix::zeros(1, 2);
    a01[(0, 0)] = re(T::one());
    let mut a12 = CMatrix::zeros(2, h2.rows());
    a12[(0, 0)] = re(real::<T>(2.0).sqrt());
    a12[(1, 1)] = re(T::one());
    OperatorBlocks { h1, h2, a01, a12 }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BrightEigen1<T> {
    pub lambdas: Vec<Complex<T>>,
    /// `(A, B)` amplitudes on `{|1,G⟩, |0,W⟩}`, `A² + B² = 1`.
    pub coeffs: Vec<[Complex<T>; 2]>,
    pub subradiant_multiplicity: usize,
    pub subradiant_lambda: Complex<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BrightEigen2<T> {
    /// Three bright eigenvalues (two for `N = 1`).
    pub lambdas3: Vec<Complex<T>>,
    /// Amplitudes on `{|2,G⟩, |1,W⟩, |0,D₂⟩}`, transpose-normalized.
    pub coeffs3: Vec<Vec<Complex<T>>>,
    /// Eigenvalues of one dark pair block (two for `N ≥ 3`, one for `N = 2`).
    pub pair_lambdas: Vec<Complex<T>>,
    /// Number of copies of the dark pair block.
    pub pair_multiplicity: usize,
    pub deep_subradiant_multiplicity: usize,
    pub deep_subradiant_lambda: Complex<T>,
}

fn columns<T: Real>(es: &EigenSystem<T>) -> Vec<Vec<Complex<T>>> {
    (0..es.dim()).map(|k| es.u.col(k)).collect()
}

pub fn bright_single_eigen<T: Real>(p: &IdenticalParams<T>) -> Result<BrightEigen1<T>> {
    if p.n == 0 {
        return Err(Error::InvalidParams("bright manifold needs at least one emitter".into()));
    }
    let es = diag_complex_symmetric(&bright_h1(p), 1)?;
    Ok(BrightEigen1 {
        coeffs: columns(&es).into_iter().map(|v| [v[0], v[1]]).collect(),
        lambdas: es.lambdas,
        subradiant_multiplicity: p.n - 1,
        subradiant_lambda: p.lambda_e(),
    })
}

/// Dark pair block `[[λ_c+λ_e, g√(N−2)], [g√(N−2), 2λ_e]]`; a single state
/// `λ_c + λ_e` at `N = 2` and nothing at `N = 1`.
pub fn dark_pair_block<T: Real>(p: &IdenticalParams<T>) -> Option<CMatrix<T>> {
    let (lc, le) = (p.lambda_c(), p.lambda_e());
    match p.n {
        0 | 1 => None,
        2 => Some(CMatrix::from_diag(&[lc + le])),
        _ => {
            let c = re(p.g * (p.nf() - real(2.0)).sqrt());
            Some(CMatrix::from_fn(2, 2, |i, j| match (i, j) {
                (0, 0) => lc + le,
                (1, 1) => le + le,
                _ => c,
            }))
        }
    }
}

pub fn bright_two_eigen<T: Real>(p: &IdenticalParams<T>) -> Result<BrightEigen2<T>> {
    if p.n == 0 {
        return Err(Error::InvalidParams("bright manifold needs at least one emitter".into()));
    }
    let es = diag_complex_symmetric(&bright_h2(p), 2)?;
    let pair_lambdas = match dark_pair_block(p) {
        Some(h) => diag_complex_symmetric(&h, 2)?.lambdas,
        None => Vec::new(),
    };
    let le = p.lambda_e();
    Ok(BrightEigen2 {
        coeffs3: columns(&es),
        lambdas3: es.lambdas,
        pair_lambdas,
        pair_multiplicity: if p.n >= 2 { p.n - 1 } else { 0 },
        deep_subradiant_multiplicity: deep_subradiant_count(p.n),
        deep_subradiant_lambda: le + le,
    })
}

/// `max(0, N(N−3)/2)`.
pub fn deep_subradiant_count(n: usize) -> usize {
    if n >= 3 {
        n * (n - 3) / 2
    } else {
        0
    }
}

/// Number of spin-`(N/2 − i)` irreducible copies in `N` spin-½ particles,
/// `((N+1−2i)/(N+1))·C(N+1, i)`; `None` outside `0 ≤ i ≤ N/2` or if the
/// division is not exact.
pub fn dicke_multiplicity(n: usize, i: usize) -> Option<usize> {
    if 2 * i > n {
        return None;
    }
    let num = (n + 1 - 2 * i) * binomial(n + 1, i);
    num.is_multiple_of(n + 1).then(|| num / (n + 1))
}

/// Large-`N` series for the bright eigenvalues and eigenvectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticEigen<T> {
    pub n: usize,
    /// Highest power of `N^{-1/2}` kept in `μ` and `ν` (relative to the leading term).
    pub order: usize,
    pub big_delta: Complex<T>,
    pub mu_plus: Complex<T>,
    pub mu_minus: Complex<T>,
    pub nu_plus: Complex<T>,
    pub nu_minus: Complex<T>,
    pub nu_zero: Complex<T>,
    /// `[λ₋, λ₊]`, single excitation.
    pub lambda1: [Complex<T>; 2],
    /// `[λ₋, λ₀, λ₊]`, two excitations.
    pub lambda2: [Complex<T>; 3],
    /// `(A, B)` per single-excitation state, same order as `lambda1`.
    pub coeffs1: [[Complex<T>; 2]; 2],
    /// `(A, B, C)` per two-excitation state, same order as `lambda2`.
    pub coeffs2: [[Complex<T>; 3]; 3],
}

pub const DEFAULT_SERIES_ORDER: usize = 4;

pub fn asymptotic_eigen<T: Real>(p: &IdenticalParams<T>, order: usize) -> AsymptoticEigen<T> {
    let n = p.nf();
    let sn = n.sqrt();
    let g = re(p.g);
    let d = p.big_delta();
    let d2 = d * d;
    let keep = |k: usize, z: Complex<T>| if k <= order { z } else { re(T::zero()) };
    let r = |x: f64| re(real::<T>(x));

    // μ = ±√(g² + Δ²/4N), expanded.
    let mu_corr = keep(2, d2 / (r(8.0) * g * n)) - keep(4, d2 * d2 / (r(128.0) * g * g * g * n * n));
    let mu_plus = g + mu_corr;
    let mu_minus = -(g + mu_corr);

    // Roots of x³ − (Δ² + 2g²(2N−1))x + 2g²Δ = 0 with x = √N ν.
    let a = d2 - r(2.0) * g * g;
    let t2 = keep(2, a / (r(4.0) * g * n));
    let t3 = keep(3, d / (r(4.0) * n * sn));
    let t4 = keep(4, a * a / (r(64.0) * g * g * g * n * n));
    let nu_plus = r(2.0) * g + t2 - t3 - t4;
    let nu_minus = -(r(2.0) * g) - t2 - t3 + t4;
    let nu_zero = keep(3, d / (r(2.0) * n * sn));

    let (lc, le) = (p.lambda_c(), p.lambda_e());
    let c1 = (lc + le) / r(2.0);
    let c2 = lc + le;
    let sqn = re(sn);
    let lambda1 = [c1 + sqn * mu_minus, c1 + sqn * mu_plus];
    let lambda2 = [c2 + sqn * nu_minus, c2 + sqn * nu_zero, c2 + sqn * nu_plus];

    // Eigenvectors of the bright blocks written relative to their centers.
    let normalize = |v: &mut [Complex<T>]| {
        let s = v.iter().fold(re(T::zero()), |acc, &z| acc + z * z).sqrt();
        v.iter_mut().for_each(|z| *z /= s);
        fix_sign(v);
    };
    let gsn = g * sqn;
    let coeffs1 = [mu_minus, mu_plus].map(|mu| {
        let mut v = [gsn, d / r(2.0) + sqn * mu];
        normalize(&mut v);
        v
    });
    let p_c = g * re((real::<T>(2.0) * n).sqrt());
    let q_c = g * re((real::<T>(2.0) * (n - T::one())).sqrt());
    let coeffs2 = [nu_minus, nu_zero, nu_plus].map(|nu| {
        let x = sqn * nu;
        let mut v = [p_c * (x - d), x * x - d2, q_c * (x + d)];
        normalize(&mut v);
        v
    });

    AsymptoticEigen {
        n: p.n,
        order,
        big_delta: d,
        mu_plus,
        mu_minus,
        nu_plus,
        nu_minus,
        nu_zero,
        lambda1,
        lambda2,
        coeffs1,
        coeffs2,
    }
}

/// `lim N²·T(ω) = κ_bκ_c |ω − λ_e|² / g⁴`.
pub fn limit_transmission<T: Real>(p: &IdenticalParams<T>, omega: T) -> T {
    let x = re(omega) - p.lambda_e();
    p.kappa_b * p.kappa_c * x.norm_sqr() / p.g.powi(4)
}

/// `lim g²(0; ω) = |1 + g² / ((ω − λ_e)(2ω − λ_e − λ_c))|²`.
pub fn limit_g2<T: Real>(p: &IdenticalParams<T>, omega: T) -> T {
    let w = re(omega);
    let (lc, le) = (p.lambda_c(), p.lambda_e());
    let corr = re(p.g * p.g) / ((w - le) * (w + w - le - lc));
    (re(T::one()) + corr).norm_sqr()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FastPathReport {
    pub n: usize,
    pub max_deviation_1: f64,
    pub max_deviation_2: f64,
    /// Full-path eigenvalues found at `λ_e` in the single-excitation block.
    pub subradiant_found_1: usize,
    /// Full-path eigenvalues found at `2λ_e` in the two-excitation block.
    pub deep_subradiant_found_2: usize,
}

/// Largest size for which the full path is run as a reference.
pub const FASTPATH_MAX_N: usize = 8;
/// Absolute eigenvalue matching tolerance (scaled by `max(1, |λ|)`).
pub const FASTPATH_TOL: f64 = 1e-9;

/// Greedy nearest matching; returns the worst distance or the unmatched values.
fn match_multisets(expected: &[Complex<f64>], found: &[Complex<f64>]) -> std::result::Result<f64, String> {
    if expected.len() != found.len() {
        return Err(format!("expected {} eigenvalues, full path has {}", expected.len(), found.len()));
    }
    let mut used = vec![false; found.len()];
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for &e in expected {
        let best = found
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, f)| (k, (f - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((k, dist)) if dist <= FASTPATH_TOL * e.norm().max(1.0) => {
                used[k] = true;
                worst = worst.max(dist);
            }
            Some((_, dist)) => bad.push(format!("{e} (nearest at distance {dist:.3e})")),
            None => bad.push(format!("{e}")),
        }
    }
    if bad.is_empty() {
        Ok(worst)
    } else {
        Err(bad.join(", "))
    }
}

/// Compares the reduced-block spectrum (with multiplicities) to the full
/// diagonalization for small `N`.
pub fn fastpath_equivalence<T: Real>(p: &IdenticalParams<T>) -> Result<FastPathReport> {
    if p.n == 0 || p.n > FASTPATH_MAX_N {
        return Err(Error::InvalidParams(format!("fast-path check needs 1 <= N <= {FASTPATH_MAX_N}")));
    }
    let b1 = bright_single_eigen(p)?;
    let b2 = bright_two_eigen(p)?;
    let mut exp1: Vec<Complex<f64>> = b1.lambdas.iter().map(|&z| c_to_f64(z)).collect();
    exp1.extend(std::iter::repeat_n(c_to_f64(b1.subradiant_lambda), b1.subradiant_multiplicity));
    let mut exp2: Vec<Complex<f64>> = b2.lambdas3.iter().map(|&z| c_to_f64(z)).collect();
    for _ in 0..b2.pair_multiplicity {
        exp2.extend(b2.pair_lambdas.iter().map(|&z| c_to_f64(z)));
    }
    exp2.extend(std::iter::repeat_n(c_to_f64(b2.deep_subradiant_lambda), b2.deep_subradiant_multiplicity));

    let full = project_operators(&p.to_system()?)?;
    let f1: Vec<Complex<f64>> = diag_complex_symmetric(&full.h1, 1)?.lambdas.iter().map(|&z| c_to_f64(z)).collect();
    let f2: Vec<Complex<f64>> = diag_complex_symmetric(&full.h2, 2)?.lambdas.iter().map(|&z| c_to_f64(z)).collect();

    let dev1 = match_multisets(&exp1, &f1).map_err(|e| Error::FastPathMismatch(format!("level 1: {e}")))?;
    let dev2 = match_multisets(&exp2, &f2).map_err(|e| Error::FastPathMismatch(format!("level 2: {e}")))?;
    let count = |v: &[Complex<f64>], target: Complex<f64>| {
        v.iter().filter(|z| (**z - target).norm() <= FASTPATH_TOL * target.norm().max(1.0)).count()
    };
    Ok(FastPathReport {
        n: p.n,
        max_deviation_1: dev1,
        max_deviation_2: dev2,
        subradiant_found_1: count(&f1, c_to_f64(b1.subradiant_lambda)),
        deep_subradiant_found_2: count(&f2, c_to_f64(b2.deep_subradiant_lambda)),
    })
}
