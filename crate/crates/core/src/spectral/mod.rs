//! Reversibility analysis.
//!
//! For a linear filter `f(I) = A I`, the reverse iteration error evolves as
//! `e^{t+1} = (Id - A) e^t`. Components on which `Id - A` shrinks (the set
//! Omega) converge geometrically; the rest may stall or grow. Three views of
//! this are provided:
//!
//! * [`kernel_spectrum`]: for circular convolution the operator is diagonal
//!   in the DFT basis, so Omega is a set of frequency bins with
//!   `|1 - K(p)| < 1` and the contraction constant is the largest such
//!   modulus.
//! * [`analyze_linear_operator`]: for an explicit matrix, the SVD of
//!   `Id - A` splits the space into singular directions with `s_p^2 < 1` and
//!   the rest; the constant is reported on the squared scale.
//! * [`empirical_contraction`]: for arbitrary (nonlinear, black-box) filters,
//!   the ratio `||(a - f(a)) - (b - f(b))|| / ||a - b||` over sample pairs.

mod empirical;
mod jacobi;
mod linear;
mod spectrum;

pub use empirical::{empirical_contraction, ContractionStats};
pub use linear::{
    analyze_linear_operator, matrix_from_conv, DMatrix, LinearFilter, LinearOperatorReport,
    MAX_OPERATOR_DIM,
};
pub use spectrum::{
    kernel_spectrum, project_mask, project_omega, ContractionClass, OmegaSide, SpectralReport,
    OMEGA_BOUNDARY_TOL,
};
