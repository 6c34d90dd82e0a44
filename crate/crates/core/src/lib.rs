//! Symmetric H+-tensors through power cones.
//!
//! A symmetric tensor is an H+-tensor exactly when it splits into sparse
//! generalized diagonally dominant pieces, and that split is a power-cone
//! feasibility problem. This crate builds and solves that problem, checks
//! the resulting certificates without a solver, computes minimum
//! H-eigenvalues of M-tensors, and bounds the minimum of even-degree forms.
//!
//! ```
//! use htensor::{is_h_plus, SolverConfig, SymmetricTensor, VerdictKind};
//!
//! let a = SymmetricTensor::from_entries(
//!     4,
//!     2,
//!     vec![
//!         (vec![1, 1, 1, 1], 4.0),
//!         (vec![1, 1, 1, 2], -2.0),
//!         (vec![1, 1, 2, 2], -1.0),
//!         (vec![1, 2, 2, 2], 64.0 / 3.0),
//!         (vec![2, 2, 2, 2], 1000.0),
//!     ],
//! )
//! .unwrap();
//! assert!(!a.is_dd_plus());
//! let verdict = is_h_plus(&a, &SolverConfig::default()).unwrap();
//! assert_eq!(verdict.kind, VerdictKind::Member);
//! ```

pub mod certificate;
pub mod error;
pub mod index;
pub mod membership;
pub mod poly;
pub mod polyopt;
pub mod spectral;
pub mod tensor;

pub use certificate::{
    certificate_scalings, component_scaling, component_tensor, decompose, verify_certificate,
    verify_certificate_exact, ComponentScaling, GddCertificate, VerifyReport,
};
pub use error::{Result, TensorError};
pub use htensor_conic::{SolveStatus, SolverConfig};
pub use index::{enumerate_offdiagonal, MultiIndex, TightPair};
pub use membership::{
    build_feasibility, build_shift_program, is_h_plus, is_m_tensor, max_diagonal_shift, MembershipVerdict, VerdictKind,
};
pub use poly::{HomogeneousPolynomial, Poly, RationalPolynomial};
pub use polyopt::{
    appendix_identity, basis_f, basis_g, is_ddth, is_gddth, lower_bound_ddth, lower_bound_ddth_lp, lower_bound_gddth,
    poly_from_tensor, sampled_upper_bound, tensor_from_poly, SamplingConfig, Sign, SquareDecomposition,
};
pub use spectral::{
    bisection_fallback, default_bracket, min_h_eigenvalue_conic, min_h_eigenvalue_oracle, rho_nonnegative, to_m_form,
    EigMethod, EigResult, MTensorForm, PowerConfig,
};
pub use tensor::{DiagonalScaling, SymmetricTensor};
