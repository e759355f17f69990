//! Scalar abstraction over `f32` / `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};

use crate::matrix::CMatrix;

/// Real floating-point type the spectral machinery is generic over.
///
/// The dense general eigensolve is delegated to `faer`, which has concrete
/// kernels for both precisions.
pub trait Real:
    Float + FloatConst + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Eigenvalues and right eigenvectors (as columns) of a general complex matrix.
    fn general_eigen(m: &CMatrix<Self>) -> Result<(Vec<Complex<Self>>, CMatrix<Self>), String>;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn general_eigen(
                m: &CMatrix<Self>,
            ) -> Result<(Vec<Complex<Self>>, CMatrix<Self>), String> {
                let n = m.rows();
                let a = faer::Mat::<Complex<$t>>::from_fn(n, n, |i, j| m[(i, j)]);
                let e = a.eigen().map_err(|err| format!("{err:?}"))?;
                let s = e.S();
                let u = e.U();
                let lambdas = (0..n).map(|i| s[i]).collect();
                let vecs = CMatrix::from_fn(n, n, |i, j| u[(i, j)]);
                Ok((lambdas, vecs))
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Converts an `f64` literal into `T`.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from(x).expect("f64 literal representable in target float")
}

/// Builds a complex number from `f64` parts.
#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(real(re), real(im))
}

/// Widens any `Real` to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Widens a complex number to `Complex<f64>`.
#[inline]
pub fn c_to_f64<T: Real>(z: Complex<T>) -> Complex<f64> {
    Complex::new(to_f64(z.re), to_f64(z.im))
}

/// Narrows a `Complex<f64>` into `Complex<T>`.
#[inline]
pub fn c_from_f64<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(real(z.re), real(z.im))
}
