//! Dense linear-algebra kernels: the matrix type, exponential, spectra,
//! norms and linear solves.

mod dense;
mod eigen;
mod expm;
mod matrix;

pub use dense::{inverse, operator_norm, reciprocal_condition, solve, SINGULAR_RCOND};
pub use eigen::{
    eigendecompose, eigenvalues, invariant_split, match_spectra, schur, spectral_abscissa,
    InvariantSplit, SchurForm, Spectrum,
};
pub(crate) use expm::exp_scaled;
pub use expm::expm;
pub use matrix::{Matrix, C64};
