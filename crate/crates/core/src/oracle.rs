//! Lindblad master-equation reference for small systems.
//!
//! The cavity is driven by `Ω(a + a†)` in the frame rotating at `ω_L`,
//! with collapse operators `√κ a` and `√γ_q σ_q`. The steady state is found
//! by a direct LU solve of the vectorized generator with one equation
//! replaced by the trace condition. Two-time correlations follow from the
//! quantum regression theorem.
//!
//! Hilbert space: Fock states `n ≤ n_max` times all `2^N` emitter
//! configurations. Under weak drive a density-matrix element `ρ_ij` scales
//! as `Ω^{e_i + e_j}` with `e` the excitation number, so the operator space
//! is by default restricted to `e_i + e_j ≤ pair_cutoff`; with
//! `pair_cutoff = None` the full operator space is used. Unknowns are
//! rescaled by `(Ω/κ)^{e_i + e_j}` so the linear system is well conditioned
//! even though the physical elements span many orders of magnitude.

use std::collections::HashMap;

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::scattering::{check_grid, check_taus, G2Trace};

type C = Complex<f64>;

pub const MAX_EMITTERS: usize = 4;
pub const MAX_DRIVE: f64 = 1e-2;
pub const MIN_N_MAX: usize = 4;
/// Relative change tolerated when halving `Ω` or raising `n_max` by two.
pub const CONVERGENCE_TOL: f64 = 5e-3;
/// Largest operator space assembled as a dense system.
pub const MAX_DENSE_UNKNOWNS: usize = 6000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    /// Drive strength `Ω = √κ_b·β₀`, in units of `κ`.
    pub omega: f64,
    pub n_max: usize,
    /// Bound on `e_i + e_j` for retained elements `|i⟩⟨j|`; `None` keeps all.
    pub pair_cutoff: Option<usize>,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self { omega: 1e-3, n_max: 6, pair_cutoff: Some(6) }
    }
}

impl DriveConfig {
    /// Drive from a coherent input amplitude `β₀`.
    pub fn from_beta0(params: &SystemParams<f64>, beta0: f64, n_max: usize) -> Self {
        Self { omega: params.kappa_b.sqrt() * beta0, n_max, pair_cutoff: Some(n_max) }
    }

    pub fn beta0(&self, params: &SystemParams<f64>) -> f64 {
        self.omega / params.kappa_b.sqrt()
    }

    fn validate(&self, params: &SystemParams<f64>) -> Result<()> {
        if params.n_emitters() > MAX_EMITTERS {
            return Err(Error::OracleTooLarge(format!(
                "{} emitters (limit {MAX_EMITTERS})",
                params.n_emitters()
            )));
        }
        if !(self.omega > 0.0) || self.omega > MAX_DRIVE {
            return Err(Error::WeakDrive { omega: self.omega, bound: MAX_DRIVE });
        }
        if self.n_max < MIN_N_MAX {
            return Err(Error::InvalidParams(format!("n_max must be at least {MIN_N_MAX}")));
        }
        Ok(())
    }

    fn refined(&self) -> Self {
        Self { n_max: self.n_max + 2, pair_cutoff: self.pair_cutoff.map(|k| k + 2), ..*self }
    }

    fn weaker(&self) -> Self {
        Self { omega: self.omega / 2.0, ..*self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleObservables {
    pub t: f64,
    pub g2zero: f64,
    /// `⟨a†a⟩`.
    pub photon_number: f64,
}

/// Sparse row-major generator.
struct Csr {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<C>,
}

impl Csr {
    fn matvec(&self, x: &[C], out: &mut [C]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C::new(0.0, 0.0);
            for k in self.ptr[r]..self.ptr[r + 1] {
                acc += self.val[k] * x[self.idx[k]];
            }
            *o = acc;
        }
    }

    fn norm1_bound(&self) -> f64 {
        (0..self.ptr.len() - 1)
            .map(|r| self.val[self.ptr[r]..self.ptr[r + 1]].iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Truncated operator space with its scaled generator.
struct Liouvillian {
    n_emitters: usize,
    /// Excitation number of each Hilbert basis state.
    exc: Vec<usize>,
    photons: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
    /// Scale `s = Ω/κ` used for the unknowns.
    s: f64,
    gen: Csr,
}

impl Liouvillian {
    fn build(params: &SystemParams<f64>, omega_l: f64, drive: &DriveConfig) -> Result<Self> {
        let n_em = params.n_emitters();
        let nq = 1usize << n_em;
        let dim = (drive.n_max + 1) * nq;
        let photons: Vec<usize> = (0..dim).map(|h| h / nq).collect();
        let exc: Vec<usize> = (0..dim).map(|h| h / nq + (h % nq).count_ones() as usize).collect();
        let cutoff = drive.pair_cutoff.unwrap_or(usize::MAX);

        let mut pairs = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                if exc[i] + exc[j] <= cutoff {
                    pairs.push((i, j));
                }
            }
        }
        if pairs.len() > MAX_DENSE_UNKNOWNS {
            return Err(Error::OracleTooLarge(format!(
                "{} density-matrix unknowns (limit {MAX_DENSE_UNKNOWNS}); lower n_max or set a pair cutoff",
                pairs.len()
            )));
        }
        let index: HashMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(p, &ij)| (ij, p)).collect();

        // H_eff = H − (i/2) Σ L†L, stored as sparse rows.
        let kappa = params.kappa();
        let mut heff: Vec<Vec<(usize, C)>> = vec![Vec::new(); dim];
        for h in 0..dim {
            let n = photons[h];
            let mask = h % nq;
            let mut d = C::new((params.omega_c - omega_l) * n as f64, -0.5 * kappa * n as f64);
            for (q, e) in params.emitters.iter().enumerate() {
                if mask >> q & 1 == 1 {
                    d += C::new(e.omega - omega_l, -0.5 * e.gamma);
                }
            }
            heff[h].push((h, d));
            // a σ_q†: |n, mask⟩ → √n |n−1, mask | q⟩, plus the Hermitian partner.
            if n > 0 {
                for (q, e) in params.emitters.iter().enumerate() {
                    if mask >> q & 1 == 0 {
                        let t = (n - 1) * nq + (mask | 1 << q);
                        let v = C::new(e.g * (n as f64).sqrt(), 0.0);
                        heff[t].push((h, v));
                        heff[h].push((t, v));
                    }
                }
            }
            // Ω(a + a†).
            if n < drive.n_max {
                let t = (n + 1) * nq + mask;
                let v = C::new(drive.omega * ((n + 1) as f64).sqrt(), 0.0);
                heff[t].push((h, v));
                heff[h].push((t, v));
            }
        }

        // Jump operators as (row ← column, value) lists indexed by row.
        let mut jumps: Vec<Vec<Vec<(usize, C)>>> = Vec::new();
        let mut cav = vec![Vec::new(); dim];
        for h in 0..dim {
            if photons[h] < drive.n_max {
                let k = h + nq;
                cav[h].push((k, C::new((kappa * (photons[h] + 1) as f64).sqrt(), 0.0)));
            }
        }
        jumps.push(cav);
        for (q, e) in params.emitters.iter().enumerate() {
            if e.gamma == 0.0 {
                continue;
            }
            let mut op = vec![Vec::new(); dim];
            for (h, row) in op.iter_mut().enumerate() {
                if (h % nq) >> q & 1 == 0 {
                    row.push((h | 1 << q, C::new(e.gamma.sqrt(), 0.0)));
                }
            }
            jumps.push(op);
        }

        let s = drive.omega / kappa;
        let pow = |k: i64| s.powi(k as i32);
        let mut ptr = vec![0usize];
        let mut idx = Vec::new();
        let mut val = Vec::new();
        let mut row: HashMap<usize, C> = HashMap::new();
        for &(i, j) in &pairs {
            row.clear();
            let (ei, ej) = (exc[i] as i64, exc[j] as i64);
            let mut add = |k: usize, l: usize, z: C| {
                if let Some(&p) = index.get(&(k, l)) {
                    let scale = pow(exc[k] as i64 + exc[l] as i64 - ei - ej);
                    *row.entry(p).or_insert(C::new(0.0, 0.0)) += z * scale;
                }
            };
            for &(k, h) in &heff[i] {
                add(k, j, C::new(0.0, -1.0) * h);
            }
            for &(k, h) in &heff[j] {
                add(i, k, C::new(0.0, 1.0) * h.conj());
            }
            for op in &jumps {
                for &(k, a) in &op[i] {
                    for &(l, b) in &op[j] {
                        add(k, l, a * b.conj());
                    }
                }
            }
            let mut entries: Vec<(usize, C)> = row.iter().map(|(&p, &z)| (p, z)).collect();
            entries.sort_by_key(|e| e.0);
            for (p, z) in entries {
                idx.push(p);
                val.push(z);
            }
            ptr.push(idx.len());
        }

        Ok(Self { n_emitters: n_em, exc, photons, pairs, index, s, gen: Csr { ptr, idx, val } })
    }

    fn unknowns(&self) -> usize {
        self.pairs.len()
    }

    /// Solves `M x = 0` with the ground-population row replaced by `Tr ρ = 1`.
    fn steady_state(&self) -> Result<Vec<C>> {
        let n = self.unknowns();
        let trace_row = self.index[&(0, 0)];
        let mut m = Mat::<C>::zeros(n, n);
        for r in 0..n {
            if r == trace_row {
                continue;
            }
            for k in self.gen.ptr[r]..self.gen.ptr[r + 1] {
                m[(r, self.gen.idx[k])] = self.gen.val[k];
            }
        }
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            if i == j {
                m[(trace_row, p)] = C::new(self.s.powi(2 * self.exc[i] as i32), 0.0);
            }
        }
        let mut rhs = Mat::<C>::zeros(n, 1);
        rhs[(trace_row, 0)] = C::new(1.0, 0.0);
        let x = m.partial_piv_lu().solve(&rhs);
        let out: Vec<C> = (0..n).map(|p| x[(p, 0)]).collect();
        if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::RefinementNeeded("singular steady-state system".into()));
        }
        Ok(out)
    }

    /// `Σ_i w(n_i)·ρ_ii` for a scaled vector.
    fn diag_moment(&self, x: &[C], w: impl Fn(usize) -> f64) -> f64 {
        self.pairs
            .iter()
            .zip(x)
            .filter(|((i, j), _)| i == j)
            .map(|(&(i, _), z)| w(self.photons[i]) * self.s.powi(2 * self.exc[i] as i32) * z.re)
            .sum()
    }

    /// Scaled form of `a ρ a†` divided by `s²`.
    fn apply_a_both_sides(&self, x: &[C]) -> Vec<C> {
        let nq = 1usize << self.n_emitters;
        self.pairs
            .iter()
            .map(|&(i, j)| {
                let (ni, nj) = (self.photons[i], self.photons[j]);
                match self.index.get(&(i + nq, j + nq)) {
                    Some(&p) if i + nq < self.exc.len() && j + nq < self.exc.len() => {
                        x[p] * (((ni + 1) * (nj + 1)) as f64).sqrt()
                    }
                    _ => C::new(0.0, 0.0),
                }
            })
            .collect()
    }

    /// Propagates `x` by `dt` under the generator with a substepped Taylor series.
    fn propagate(&self, x: &mut [C], dt: f64) {
        if dt <= 0.0 {
            return;
        }
        let norm = self.gen.norm1_bound().max(1e-300);
        let steps = (dt * norm / 0.5).ceil().max(1.0) as usize;
        let h = dt / steps as f64;
        let n = x.len();
        let mut term = vec![C::new(0.0, 0.0); n];
        let mut next = vec![C::new(0.0, 0.0); n];
        for _ in 0..steps {
            term.copy_from_slice(x);
            let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
            for k in 1..60 {
                self.gen.matvec(&term, &mut next);
                let f = h / k as f64;
                let mut biggest = 0.0f64;
                for (t, nx) in term.iter_mut().zip(&next) {
                    *t = nx * f;
                    biggest = biggest.max(t.norm());
                }
                for (xi, t) in x.iter_mut().zip(&term) {
                    *xi += t;
                }
                if biggest < 1e-18 * scale {
                    break;
                }
            }
        }
    }

    fn dense_density(&self, x: &[C]) -> Vec<Vec<C>> {
        let dim = self.exc.len();
        let mut rho = vec![vec![C::new(0.0, 0.0); dim]; dim];
        for (&(i, j), z) in self.pairs.iter().zip(x) {
            rho[i][j] = z * self.s.powi((self.exc[i] + self.exc[j]) as i32);
        }
        rho
    }
}

fn observables(params: &SystemParams<f64>, l: &Liouvillian, x: &[C], drive: &DriveConfig) -> OracleObservables {
    let n1 = l.diag_moment(x, |n| n as f64);
    let n2 = l.diag_moment(x, |n| (n * n.saturating_sub(1)) as f64);
    OracleObservables {
        t: params.kappa_b * params.kappa_c * n1 / (drive.omega * drive.omega),
        g2zero: n2 / (n1 * n1),
        photon_number: n1,
    }
}

/// Steady-state observables at one drive setting, without the convergence check.
pub fn steady_state_single(params: &SystemParams<f64>, omega_l: f64, drive: &DriveConfig) -> Result<OracleObservables> {
    drive.validate(params)?;
    let l = Liouvillian::build(params, omega_l, drive)?;
    let x = l.steady_state()?;
    Ok(observables(params, &l, &x, drive))
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Steady-state `T` and `g²(0)`, repeated at `Ω/2` and `n_max + 2` to check
/// convergence.
pub fn steady_state_observables(params: &SystemParams<f64>, omega_l: f64, drive: &DriveConfig) -> Result<OracleObservables> {
    let base = steady_state_single(params, omega_l, drive)?;
    for (label, alt) in [("Omega/2", drive.weaker()), ("n_max+2", drive.refined())] {
        let o = steady_state_single(params, omega_l, &alt)?;
        let (dt, dg) = (rel_change(base.t, o.t), rel_change(base.g2zero, o.g2zero));
        if dt > CONVERGENCE_TOL || dg > CONVERGENCE_TOL {
            return Err(Error::RefinementNeeded(format!(
                "omega_L = {omega_l}: {label} changes T by {dt:.2e} and g2(0) by {dg:.2e}"
            )));
        }
    }
    Ok(base)
}

/// Parallel sweep of [`steady_state_observables`].
pub fn oracle_spectrum(params: &SystemParams<f64>, grid: &[f64], drive: &DriveConfig) -> Result<Vec<OracleObservables>> {
    check_grid(grid)?;
    grid.par_iter().map(|&w| steady_state_observables(params, w, drive)).collect()
}

/// Quantum-regression `g²(τ) = Tr[a†a e^{𝓛τ}(a ρ a†)] / ⟨a†a⟩²`.
pub fn g2_tau_regression(params: &SystemParams<f64>, omega_l: f64, drive: &DriveConfig, taus: &[f64]) -> Result<G2Trace<f64>> {
    check_taus(taus)?;
    drive.validate(params)?;
    let l = Liouvillian::build(params, omega_l, drive)?;
    let x = l.steady_state()?;
    let n1 = l.diag_moment(&x, |n| n as f64);
    let mut y = l.apply_a_both_sides(&x);
    let mut t_prev = 0.0;
    let mut g2 = Vec::with_capacity(taus.len());
    for &t in taus {
        l.propagate(&mut y, t - t_prev);
        t_prev = t;
        let num = l.diag_moment(&y, |n| n as f64) * l.s * l.s;
        g2.push(num / (n1 * n1));
    }
    Ok(G2Trace { omega_l, taus: taus.to_vec(), g2 })
}

/// Validity diagnostics of the steady state: `(|Tr ρ − 1|, max |ρ − ρ†|, λ_min(ρ))`.
pub fn steady_state_diagnostics(params: &SystemParams<f64>, omega_l: f64, drive: &DriveConfig) -> Result<(f64, f64, f64)> {
    drive.validate(params)?;
    let l = Liouvillian::build(params, omega_l, drive)?;
    let x = l.steady_state()?;
    let rho = l.dense_density(&x);
    let dim = rho.len();
    let trace: C = (0..dim).map(|i| rho[i][i]).sum();
    let mut herm = 0.0f64;
    for (i, row) in rho.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            herm = herm.max((z - rho[j][i].conj()).norm());
        }
    }
    // Eigenvalues of the Hermitian part.
    let m = Mat::<C>::from_fn(dim, dim, |i, j| (rho[i][j] + rho[j][i].conj()) * 0.5);
    let ev = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::EigenSolve(format!("{e:?}")))?;
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(((trace - 1.0).norm(), herm, min))
}

/// Number of retained density-matrix unknowns for a configuration.
pub fn operator_space_size(params: &SystemParams<f64>, drive: &DriveConfig) -> usize {
    let nq = 1usize << params.n_emitters();
    let dim = (drive.n_max + 1) * nq;
    let exc: Vec<usize> = (0..dim).map(|h| h / nq + (h % nq).count_ones() as usize).collect();
    let cutoff = drive.pair_cutoff.unwrap_or(usize::MAX);
    exc.iter().map(|&a| exc.iter().filter(|&&b| a + b <= cutoff).count()).sum()
}
