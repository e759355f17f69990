//! Few-photon transport through a cavity coupled to `N` two-level emitters.
//!
//! Under weak coherent drive the transmissivity `T(ω)` and the photon
//! correlations `g²(0; ω)`, `g²(τ; ω)` follow from the eigensystems of the
//! non-Hermitian effective Hamiltonian restricted to the one- and
//! two-excitation subspaces. Those blocks are complex symmetric, which is
//! what makes the bilinear ("transpose") eigenvector normalization work.
//!
//! Module map:
//!
//! * [`model`], [`basis`]: parameters, subspaces, projected blocks.
//! * [`eigen`]: transpose-orthonormal eigendecomposition.
//! * [`scattering`]: `T`, `g²(0)` with per-eigenstate amplitudes, `g²(τ)`,
//!   anharmonicity.
//! * [`identical`]: collective-state reduction for identical emitters, large-`N`
//!   series and limits.
//! * [`montecarlo`]: inhomogeneous-broadening ensembles and dip statistics.
//! * [`oracle`]: Lindblad master-equation reference (small `N` only).
//! * [`bench`]: timing harness for the scaling study.
//!
//! Frequencies and rates are stored in units of the total cavity decay
//! rate `κ`. The spectral code is generic over [`Real`] (`f32` or `f64`);
//! the aliases at the crate root fix it to `f64`.

// Range checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod bench;
pub mod eigen;
pub mod error;
pub mod identical;
pub mod matrix;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod scalar;
pub mod scattering;

pub use error::{Error, Result};
pub use model::UnitTag;
pub use scalar::Real;

pub use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type Emitter = model::Emitter<f64>;
pub type CMatrix = matrix::CMatrix<f64>;
pub type SystemParams = model::SystemParams<f64>;
pub type OperatorBlocks = model::OperatorBlocks<f64>;
pub type EigenSystem = eigen::EigenSystem<f64>;
pub type Scatterer = scattering::Scatterer<f64>;
pub type Spectrum = scattering::Spectrum<f64>;
pub type G2Trace = scattering::G2Trace<f64>;
pub type G2Components = scattering::G2Components<f64>;
pub type DipContribution = scattering::DipContribution<f64>;
pub type AnharmonicityReport = scattering::AnharmonicityReport<f64>;
pub type IdenticalParams = identical::IdenticalParams<f64>;
pub type BrightEigen1 = identical::BrightEigen1<f64>;
pub type BrightEigen2 = identical::BrightEigen2<f64>;
pub type AsymptoticEigen = identical::AsymptoticEigen<f64>;
