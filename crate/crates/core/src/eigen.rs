//! Transpose-orthonormal eigendecomposition of complex symmetric matrices.
//!
//! For `h = hᵀ` the right eigenvectors of distinct eigenvalues are orthogonal
//! under the bilinear product `xᵀy`, so after rescaling `v ← v/√(vᵀv)` the
//! eigenvector matrix satisfies `uᵀu = I` and `h = u·diag(λ)·uᵀ`.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::matrix::{tdot, CMatrix};
use crate::scalar::{real, to_f64, Real};

/// Relative cluster radius for treating eigenvalues as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct EigenSystem<T: Real> {
    pub level: usize,
    /// Sorted by real part, then imaginary part.
    pub lambdas: Vec<Complex<T>>,
    /// Column `k` is the eigenvector of `lambdas[k]`.
    pub u: CMatrix<T>,
}

impl<T: Real> EigenSystem<T> {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// `max |uᵀu − I|`.
    pub fn orthonormality_error(&self) -> T {
        self.u.transpose().matmul(&self.u).max_abs_diff(&CMatrix::identity(self.dim()))
    }

    /// `‖u·diag(λ)·uᵀ − h‖_F / ‖h‖_F`.
    pub fn reconstruction_error(&self, h: &CMatrix<T>) -> T {
        let d = CMatrix::from_diag(&self.lambdas);
        let r = self.u.matmul(&d).matmul(&self.u.transpose());
        let norm = h.frobenius_norm();
        let diff = r.sub(h).frobenius_norm();
        if norm > T::zero() {
            diff / norm
        } else {
            diff
        }
    }
}

fn cmp_lambda<T: Real>(a: &Complex<T>, b: &Complex<T>) -> std::cmp::Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
}

/// Self-overlap below this fraction of `‖v‖²` marks a self-orthogonal vector.
fn defect_threshold<T: Real>() -> T {
    T::epsilon().sqrt() * real(0.1)
}

fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Fixes the overall sign: the largest-magnitude entry gets a positive real
/// part (positive imaginary part if the real part vanishes).
pub(crate) fn fix_sign<T: Real>(v: &mut [Complex<T>]) {
    let max = v.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if max == T::zero() {
        return;
    }
    let cut = max * (T::one() - real(1e-9));
    let Some(lead) = v.iter().find(|z| z.norm() >= cut) else { return };
    let flip = if lead.re.abs() > max * real(1e-12) { lead.re < T::zero() } else { lead.im < T::zero() };
    if flip {
        v.iter_mut().for_each(|z| *z = -*z);
    }
}

fn scale_by<T: Real>(v: &mut [Complex<T>], s: Complex<T>) {
    v.iter_mut().for_each(|z| *z *= s);
}

/// Transpose Gram-Schmidt with pivoting on the self-overlap, applied in place
/// to the vectors of one degenerate cluster.
fn transpose_gram_schmidt<T: Real>(vs: &mut [Vec<Complex<T>>], level: usize, lambda: Complex<T>) -> Result<()> {
    let defective = || Error::Defective { level, re: to_f64(lambda.re), im: to_f64(lambda.im) };
    let thr = defect_threshold::<T>();
    let m = vs.len();
    for k in 0..m {
        // Pivot: the remaining vector with the best relative self-overlap.
        let score = |v: &[Complex<T>]| {
            let n2 = norm_sqr(v);
            if n2 > T::zero() { tdot(v, v).norm() / n2 } else { T::zero() }
        };
        let (best, best_score) = (k..m)
            .map(|i| (i, score(&vs[i])))
            .fold((k, -T::one()), |acc, x| if x.1 > acc.1 { x } else { acc });
        vs.swap(k, best);
        if best_score < thr {
            // Every remaining vector is (nearly) self-orthogonal; a sum of two
            // of them usually is not.
            let mut fixed = false;
            'outer: for i in k + 1..m {
                for phase in [Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::one())] {
                    let cand: Vec<_> = vs[k].iter().zip(&vs[i]).map(|(&a, &b)| a + phase * b).collect();
                    if score(&cand) >= thr {
                        vs[k] = cand;
                        fixed = true;
                        break 'outer;
                    }
                }
            }
            if !fixed {
                return Err(defective());
            }
        }
        let s = tdot(&vs[k], &vs[k]).sqrt();
        scale_by(&mut vs[k], s.inv());
        let (head, tail) = vs.split_at_mut(k + 1);
        let q = &head[k];
        for w in tail.iter_mut() {
            let c = tdot(q, w);
            for (wi, &qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
    }
    Ok(())
}

/// Eigendecomposition of a complex symmetric `h` with `uᵀu = I`.
///
/// `level` only labels errors. Fails with [`Error::Defective`] at
/// exceptional points where an eigenvector is self-orthogonal.
pub fn diag_complex_symmetric<T: Real>(h: &CMatrix<T>, level: usize) -> Result<EigenSystem<T>> {
    if !h.is_square() {
        return Err(Error::EigenSolve(format!("non-square input {}x{}", h.rows(), h.cols())));
    }
    let n = h.rows();
    let is_diag = (0..n).all(|i| (0..n).all(|j| i == j || h[(i, j)].is_zero()));
    let (raw_l, raw_v) = if is_diag {
        ((0..n).map(|i| h[(i, i)]).collect::<Vec<_>>(), CMatrix::identity(n))
    } else {
        T::general_eigen(h).map_err(Error::EigenSolve)?
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp_lambda(&raw_l[a], &raw_l[b]));
    let lambdas: Vec<Complex<T>> = order.iter().map(|&k| raw_l[k]).collect();
    let mut vecs: Vec<Vec<Complex<T>>> = order.iter().map(|&k| raw_v.col(k)).collect();

    // Union clusters of eigenvalues closer than the scale-aware tolerance.
    // Sorting by real part means only a forward window needs checking.
    // Roundoff splits exact degeneracies by a few ulps, which in single
    // precision exceeds the nominal radius.
    let radius = T::max(real(DEGENERACY_TOL), T::epsilon() * real(64.0));
    let tol = h.frobenius_norm() * radius;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if lambdas[j].re - lambdas[i].re > tol {
                break;
            }
            if (lambdas[j] - lambdas[i]).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        clusters[r].push(i);
    }

    for members in clusters.into_iter().filter(|c| !c.is_empty()) {
        let lambda = lambdas[members[0]];
        if members.len() == 1 {
            let v = &mut vecs[members[0]];
            let vtv = tdot(v, v);
            if vtv.norm() < defect_threshold::<T>() * norm_sqr(v) {
                return Err(Error::Defective { level, re: to_f64(lambda.re), im: to_f64(lambda.im) });
            }
            scale_by(v, vtv.sqrt().inv());
        } else {
            let mut group: Vec<Vec<Complex<T>>> = members.iter().map(|&k| vecs[k].clone()).collect();
            transpose_gram_schmidt(&mut group, level, lambda)?;
            for (&k, v) in members.iter().zip(group) {
                vecs[k] = v;
            }
        }
    }

    let mut u = CMatrix::zeros(n, n);
    for (k, v) in vecs.iter_mut().enumerate() {
        fix_sign(v);
        u.set_col(k, v);
    }
    Ok(EigenSystem { level, lambdas, u })
}
