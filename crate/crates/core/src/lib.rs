//! Numerical tensor algebra for Kähler curvature tensors of quasi-constant
//! holomorphic sectional curvature (QCH).
//!
//! The crate builds the tensors Π, Φ, Ψ on a Hermitian vector space with a
//! distinguished J-invariant plane, lets curvature tensors act as derivations,
//! and checks the pseudosymmetry identity `R.R = (a + b/2) Π.R` for every
//! `R = aΠ + bΦ + cΨ`. The [`profile`] module constructs warping profiles whose
//! factor `a + b/2 = −4r''/r` changes sign.

pub mod curvature;
pub mod derivation;
pub mod error;
pub mod identities;
pub mod profile;
pub mod space;
pub mod tensor;

pub use curvature::{
    build_phi, build_pi, build_psi, check_kahler_symmetries, combine, fit_coefficients, hol_sect,
    product_curvature, CurvatureTensor, QchBasis, QchCoefficients, SymmetryReport,
};
pub use derivation::{curv_dot, curvature_endomorphism, endo_derive, pseudosymmetry_defect};
pub use error::{QchError, Result};
pub use identities::{
    run_suite, run_suite_with, verify_algebraic_route, verify_eq32, verify_multiplication_table,
    verify_product_route, verify_theorem1, CheckResult, SuiteConfig,
};
pub use profile::{
    ab2, ab2_alternate, eval_profile, profile_report, profile_report_with_margin, solve_profile,
    Profile, ProfileReport, ProfileValues,
};
pub use space::{seeded_rng, HermitianSpace, StructureTensors};
pub use tensor::{Evaluated, Tensor, Valence};

/// Canonical adapted space of complex dimension `n ≥ 2`.
pub fn make_space(n: usize) -> Result<HermitianSpace> {
    HermitianSpace::canonical(n)
}
