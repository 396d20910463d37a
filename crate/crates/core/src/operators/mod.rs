//! Finite spectral models: Jacobi SVD, source elements, `R_alpha` and
//! source-set membership.

mod model;
mod svd;

pub use model::{
    log_regularization_error, make_source_element, membership_probe, regularization_error, regularize, CoefVector,
    Matrix, Membership, Provenance, SourceElement, SpectralModel, SpectrumRule, MEMBERSHIP_S_FLOOR,
    MEMBERSHIP_TAIL_SHARE, MEMBERSHIP_TERM_FACTOR,
};
pub use svd::{svd_decompose, SvdResult, MAX_DIM, MAX_SWEEPS};
