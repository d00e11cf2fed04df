//! Numerical laboratory for Harper-type Hamiltonians on the rotation algebra.
//!
//! Elements of the algebra are finite Fourier sums `Σ a_m W(m)`; they can be
//! represented on a 1D chain (covariant family `π_ω`), on the 2D magnetic
//! lattice, or on `L²(ℝ)` through Weyl operators. On top of that sit density
//! of states and multifractal estimators, wave-packet transport exponents,
//! coherent-state frames and Diophantine lattice sums.

pub mod diophantine;
pub mod dynamics;
pub mod error;
pub mod frames;
pub mod lattice_sums;
pub mod linalg;
pub mod rotation_algebra;
pub mod scaling;
pub mod spectral;
pub mod weyl_phase_space;

pub use diophantine::{ContinuedFraction, StopReason};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rotation_algebra::{BandedMatrix, FourierElement, HamiltonianSpec, Model, SparseMatrix2D};
pub use scaling::ScalingFit;
pub use spectral::EmpiricalMeasure;
pub use weyl_phase_space::{GridFunction, GridSpec, SymmetryOscillator};

/// Integer 2×2 matrices `[[a, b], [c, d]]` acting on lattice vectors.
pub type IntMatrix = [[i64; 2]; 2];

/// The order-3 symmetry of the triangular lattice.
pub const S3: IntMatrix = [[0, -1], [1, -1]];
/// Quarter turn, the symmetry of the square lattice.
pub const S4: IntMatrix = [[0, -1], [1, 0]];
/// The order-6 symmetry of the triangular lattice.
pub const S6: IntMatrix = [[1, -1], [1, 0]];

/// `(√5 − 1)/2`.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;
