//! Finite-dimensional C*-dynamical systems and their crossed products.
//!
//! A *system* is a pair (A, α): a finite-dimensional C*-algebra `A`
//! (a direct sum of complex matrix blocks, [`algebra::FdAlgebra`]) together
//! with a *-endomorphism α ([`endo::Endomorphism`]) stored in a canonical
//! multiplicity form. On top of the pair the crate computes, exactly where
//! mathematics permits and with certified truncations elsewhere:
//!
//! * crossed-product element arithmetic in the matrix *-algebra M(A) of
//!   finitely supported A-valued matrices ([`matcalc`]);
//! * exact operator norms of k-diagonal elements and the defining seminorm
//!   of the crossed product attached to an ideal of covariance J ([`norms`]);
//! * the reduction chain J_n, the reduction ideal J_∞, and the reduced
//!   system ([`reduction`]);
//! * the canonical extension (A_J, α_J) with unital kernel, and the pullback
//!   model with its comparison maps ([`canonical`]);
//! * concrete finite-matrix representations — truncated Toeplitz towers,
//!   ℓ²-amplifications, automorphism representations — plus verification of
//!   the covariance identities on them ([`reps`]).
//!
//! All numerical comparisons go through explicit tolerances ([`Tolerances`]);
//! combinatorial answers (kernels, ideals, multiplicity supports) are exact.

pub mod algebra;
pub mod canonical;
pub mod endo;
pub mod error;
pub mod matcalc;
pub mod norms;
pub mod par;
pub mod reduction;
pub mod reps;
pub mod sample;
pub mod schema;

pub use algebra::{distance_to_ideal, quotient, AlgElement, BlockIdeal, FdAlgebra, QuotientMap};
pub use canonical::{
    build_canonical, build_katsura, extend_to_canonical, unit_recovery, Canonical,
    KatsuraPullback, UnitRecovery,
};
pub use endo::{dual_partial_map, DualSystem, DynamicalSystem, Endomorphism};
pub use error::Error;
pub use reduction::{correspondence_cross_check, reduce, stacey_reduce, Reduction};
pub use matcalc::{DiagonalPart, MatElement};
pub use norms::{seminorm_general, NormContext, NormEstimate};
pub use schema::{
    element_to_json, parse_element, parse_representation, parse_system, system_to_json,
};
pub use reps::{
    adequate_amplification, amplify, automorphism_rep, toeplitz_stabilized_norm,
    toeplitz_truncation, CoefficientAlgebra, CorrespondenceReport, KernelReport, Representation,
    ValidationReport,
};

/// Comparison tolerances shared across the crate.
///
/// Every judgement about a computed real ("is this zero", "are these equal")
/// uses one of these thresholds; nothing compares floats bare.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// General-purpose comparison tolerance for derived quantities.
    pub cmp: f64,
    /// Tolerance for verifying algebraic identities of constructed data
    /// (homomorphism checks, unitarity, dimension-balanced evaluations).
    pub exact: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            cmp: 1e-9,
            exact: 1e-12,
        }
    }
}

impl Tolerances {
    /// Tolerances with a custom general comparison threshold.
    pub fn with_cmp(cmp: f64) -> Self {
        Tolerances {
            cmp,
            ..Tolerances::default()
        }
    }
}

/// Entries with norm below this threshold are pruned from sparse supports.
pub const PRUNE_TOL: f64 = 1e-14;
