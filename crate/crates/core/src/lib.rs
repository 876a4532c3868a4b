//! Continuous-variable quantum state tomography in a truncated Fock basis.
//!
//! The crate covers the full loop used to study reconstruction of one- and
//! two-mode bosonic states:
//!
//! * [`fock`] and [`state`]: Hermite wavefunctions, coherent amplitudes,
//!   ladder operators and the catalogue of target states.
//! * [`povm`]: weighted rotated-quadrature (homodyne) and coherent-state
//!   (heterodyne) measurement elements sampled on phase-space grids.
//! * [`measure`]: Born-rule frequencies with optional Poisson noise.
//! * [`sdp`]: the entropy-regularized semidefinite reconstruction, with an
//!   interior-point and an ADMM backend.
//! * [`radon`]: the filtered back-projection baseline.
//! * [`wigner`]: Wigner functions of reconstructed states.
//! * [`metrics`]: fidelity, negativity and probe entropies.
//! * [`pipeline`]: end-to-end runs and fidelity sweeps.
//!
//! Units are dimensionless with ħ = 1 and `z = (q + ip)/√2` throughout.
//! Multi-mode indices are flattened with mode 1 as the slowest index.

pub mod error;
pub mod fock;
pub mod gauss_hermite;
pub mod linalg;
pub mod measure;
pub mod metrics;
pub mod pipeline;
pub mod povm;
pub mod radon;
pub mod sdp;
pub mod state;
pub mod wigner;

pub use error::{Error, Result};
pub use fock::TruncationConfig;
pub use state::{DensityMatrix, PureState, StateSpec};

/// Complex scalar used everywhere in the crate.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
