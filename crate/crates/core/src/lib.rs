//! Locating corrupted nodes in an MDS-coded storage system by hashing.
//!
//! A data object is laid out as a `k(n-k) x N` matrix `X` over `F_q` and
//! every column is encoded with the same `(n, k)` MDS code, so node `i`
//! stores an `(n-k) x N` slice of `G·X`. To audit, all nodes project each
//! stored row onto one shared vector `r` of length `N`. Because
//! `(G·X)·r = G·(X·r)`, the `n(n-k)` projections form a codeword of the
//! same code plus whatever error the corrupted nodes contribute, and a
//! verifier locates up to `⌊(n-k)/2⌋` bad nodes by decoding that short word
//! instead of downloading the data.
//!
//! `r` is either uniform ([`hashing::draw_random_vector`]) or expanded from
//! a seed of two `F_{q^m}` elements ([`hashing::prg_expand`]).
//!
//! Modules:
//!
//! - [`field`]: `F_q` and `F_{q^m}` arithmetic
//! - [`code`]: generator, encoding, erasure and error decoding
//! - [`storage`]: simulated nodes and adversarial error plans
//! - [`hashing`]: projection vectors and hash products
//! - [`verifier`]: audit, repair, communication budget, field sizing
//! - [`experiments`]: exact enumerations and Monte Carlo failure rates
//! - [`format`], [`report`], [`cli`]: on-disk containers, reports, and the
//!   `mdsaudit` command line

pub mod cli;
pub mod code;
pub mod experiments;
pub mod field;
pub mod format;
pub mod hashing;
pub mod matrix;
pub mod poly;
pub mod report;
pub mod storage;
pub mod verifier;

pub use code::{make_code, Code, CodeParams, CodedMatrix, Decoder, GeneratorMatrix, HashDecode};
pub use field::{
    make_extension, make_field, next_prime_power, ExtElement, ExtField, Field, FieldElement,
};
pub use hashing::{
    draw_random_vector, prg_expand, HashVector, PrgSeed, RandomVector, RandomnessKind,
};
pub use matrix::Matrix;
pub use storage::{sample_error_plan, ErrorModel, ErrorPlan, SystemState};
pub use verifier::{
    accounting, choose_field, collect_hashes, verify, AuditBudget, AuditStatus, VerificationReport,
};

/// Process-wide logical clock ordering error commitments against the
/// drawing of projection vectors.
pub(crate) mod epoch {
    use std::sync::atomic::{AtomicU64, Ordering};

    static CLOCK: AtomicU64 = AtomicU64::new(1);

    pub fn tick() -> u64 {
        CLOCK.fetch_add(1, Ordering::Relaxed)
    }
}
