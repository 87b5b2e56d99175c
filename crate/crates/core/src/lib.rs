//! Numerical laboratory for shift-operator subspaces on truncated vector
//! Hardy spaces.
//!
//! The crate works with matrix-valued Laurent symbols stored as banded
//! Fourier-coefficient families, builds truncated Toeplitz/Hankel/shift
//! matrices from them, and checks operator identities, almost-invariance
//! defects, partial-isometry representations, finite-rank perturbations and
//! reproducing kernels on guarded trust windows.
//!
//! Everything is generic over the real scalar (`f32` or `f64`) through
//! [`RealScalar`]; the `*64` aliases at the crate root are the concrete
//! types used by the CLI and the test suites.

pub mod corpus;
pub mod error;
pub mod invariance;
pub mod io;
pub mod kernels;
pub mod operators;
pub mod perturbations;
pub mod representations;
pub mod scalar;
pub mod subspaces;
pub mod symbols;

pub use error::{Error, Result};
pub use invariance::{absorption_chain, almost_defect, duality_check, enlarged_defect,
                     essential_t0, minimal_defect_space_qr, nearly_defect, ChainStep,
                     DefectReport, DualityReport, EnlargedDefect};
pub use kernels::{kernel_consistency, kernel_m, kernel_mperp, szego_tail, szego_vector,
                  KernelConsistency};
pub use operators::{verify_identity, IdentityKind, IdentityReport, TruncatedOp};
pub use perturbations::{synth_t0_general, synth_t0_shift, synth_t1_backshift, synth_t2_reducing,
                        verify_invariance, InvarianceMode, InvarianceReport, PerturbationSpec,
                        RankOneTerm, Synthesis};
pub use representations::{build_rep, constant_block_rank, defect_thm_main, defect_thm_main2,
                          equivalence_check, halfspace_probe, model_projector, model_space,
                          nearly_criterion, perp_rep, two_sided_model_check, EquivalenceReport,
                          Growth, GrowthTable, NearlyReport, PartialIsometryReport, PerpRep,
                          RepFlavor, RepSpec, Representation, TheoremDefect, TwoSidedReport};
pub use scalar::{Cx, RealScalar};
pub use subspaces::Subspace;
pub use symbols::{InnerCertificate, LaurentSymbol};

use scalar::real;

/// Numerical thresholds shared across the lattice of checks.
///
/// The defaults are the calibration used throughout: they sit well above the
/// accumulated symbol-tail noise of `sym_tail`-truncated symbols and well
/// below any genuine structural gap in the test corpora.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T: RealScalar> {
    /// Relative singular-value cutoff for numerical rank (floor-1 scale).
    pub rank: T,
    /// Threshold on `1 - cos^2` for subspace intersection eigenvalues, and
    /// the principal-angle budget for subspace equality checks.
    pub angle: T,
    /// Absolute floor added to identity-residual thresholds.
    pub identity: T,
    /// Inner-function certification threshold.
    pub inner: T,
    /// Certified geometric tail for non-polynomial symbol truncation.
    pub sym_tail: T,
    /// Absolute floor added to partial-isometry residual thresholds.
    pub isometry: T,
    /// Relative containment tolerance for free-term membership checks.
    pub membership: T,
}

impl<T: RealScalar> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            rank: real(1e-8),
            angle: real(1e-6),
            identity: real(1e-10),
            inner: real(1e-8),
            sym_tail: real(1e-12),
            isometry: real(1e-8),
            membership: real(1e-8),
        }
    }
}

pub type Symbol64 = LaurentSymbol<f64>;
pub type Op64 = TruncatedOp<f64>;
pub type Subspace64 = Subspace<f64>;
pub type RepSpec64 = RepSpec<f64>;
pub type Tolerances64 = Tolerances<f64>;
