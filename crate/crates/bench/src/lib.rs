//! Shared fixtures for the criterion benchmarks.

use qch_core::identities::suite_basis;
use qch_core::QchBasis;

/// Seeded basis triple used by every benchmark at complex dimension `n`.
pub fn fixture(n: usize) -> QchBasis {
    suite_basis(n, 42, None).expect("n >= 2")
}
