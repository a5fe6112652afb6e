//! Gaussian quantum-illumination receiver simulator.
//!
//! States are zero-mean Gaussian covariance matrices over (return, idler)
//! modes with vacuum covariance equal to the identity. Receivers are
//! quadratic operators in the ladder operators; their means and variances
//! feed the K-mode decision statistics. The coherent-state benchmark is the
//! quantum Chernoff exponent computed in a truncated number basis.

// `!(x > 0.0)` style guards deliberately also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod chernoff;
pub mod detection;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod operators;
pub mod optimize;
pub mod oracle;
pub mod receiver;
pub mod reference;
pub mod special;
pub mod sweep;
pub mod validate;

pub use chernoff::{ci_chernoff, ChernoffCache, ChernoffResult};
pub use detection::{
    approx_error_from_snr, closed_form_snr, error_probabilities, optimal_threshold, snr, snr_db,
    DetectionStats, ErrorProbabilities,
};
pub use error::{QiError, Result};
pub use fock::{displacement_matrix, thermal_fock, FockMatrix};
pub use gaussian::{
    apply_beam_splitter, make_coherent, make_thermal, make_tmsv, qi_channel, GaussianState,
    Hypothesis, QiScenario,
};
pub use operators::{
    build_dhd_operator, build_dhd_prime, build_opa_operator, build_pc_operator, conjugate_by_bs,
    moments, quadrature_operator, MomentPair, QuadraticOperator,
};
pub use oracle::fock_oracle_moments;
pub use receiver::{Receiver, SnrSource};
pub use special::{erfc, log_erfc};
