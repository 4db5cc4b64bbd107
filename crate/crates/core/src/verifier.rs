//! The trusted verifier: gathers hash products, decodes them to flag bad
//! nodes, rebuilds nodes by decode-and-re-encode, and accounts for bits.

use std::collections::BTreeSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::code::{Code, CodeError, CodeParams, HashDecode};
use crate::field::{make_field, next_prime_power, Field, FieldError};
use crate::hashing::{
    node_hash, seed_bit_count, HashError, HashVector, RandomVector, RandomnessKind,
};
use crate::matrix::Matrix;
use crate::storage::{StorageError, SystemState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("projection vector was drawn before the errors were committed")]
    CommitmentViolation,
    #[error("need at least {need} helpers, got {got}")]
    TooFewHelpers { need: usize, got: usize },
    #[error("helper {0} is inconsistent with the other helpers")]
    CorruptHelper(usize),
    #[error("no error tolerance: n - k = {alpha} gives t1 = 0")]
    DegenerateCode { alpha: usize },
    #[error("file size must be at least one bit")]
    EmptyFile,
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// What a node in the adversary's set sends when asked for its hashes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeBehavior {
    /// Honestly hashes its (corrupted) stored rows.
    #[default]
    HashStored,
    /// Replies with arbitrary symbols drawn from the given seed.
    Arbitrary { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditStatus {
    Clean,
    ErrorsLocated,
    Undecodable,
}

impl AuditStatus {
    pub fn name(self) -> &'static str {
        match self {
            AuditStatus::Clean => "clean",
            AuditStatus::ErrorsLocated => "errors-located",
            AuditStatus::Undecodable => "undecodable",
        }
    }
}

impl fmt::Display for AuditStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub flagged: BTreeSet<usize>,
    pub status: AuditStatus,
    /// `n·alpha·⌈log2 q⌉`.
    pub hash_bits: u64,
    pub seed_bits: u64,
    pub randomness: RandomnessKind,
}

/// Collects every node's hash block for `r`, refusing vectors drawn before
/// the state's latest commitment.
pub fn collect_hashes(state: &SystemState, r: &RandomVector) -> Result<HashVector, VerifyError> {
    collect_hashes_with(state, r, NodeBehavior::HashStored)
}

pub fn collect_hashes_with(
    state: &SystemState,
    r: &RandomVector,
    behavior: NodeBehavior,
) -> Result<HashVector, VerifyError> {
    if state.committed_at().is_some_and(|t| t > r.drawn_at()) {
        return Err(VerifyError::CommitmentViolation);
    }
    collect_unchecked(state, r, behavior)
}

/// Skips the commitment check. Exists for negative controls where the
/// adversary is allowed to see `r` first.
pub fn collect_hashes_unchecked(
    state: &SystemState,
    r: &RandomVector,
) -> Result<HashVector, VerifyError> {
    collect_unchecked(state, r, NodeBehavior::HashStored)
}

fn collect_unchecked(
    state: &SystemState,
    r: &RandomVector,
    behavior: NodeBehavior,
) -> Result<HashVector, VerifyError> {
    let params = state.params();
    let field = &params.field;
    let liars: BTreeSet<usize> = match behavior {
        NodeBehavior::HashStored => BTreeSet::new(),
        NodeBehavior::Arbitrary { .. } => state.plans().iter().flat_map(|p| p.nodes()).collect(),
    };
    let mut symbols = Vec::with_capacity(params.coded_rows());
    for (i, slice) in state.nodes().iter().enumerate() {
        let node = i + 1;
        match behavior {
            NodeBehavior::Arbitrary { seed } if liars.contains(&node) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(node as u64);
                symbols.extend((0..params.alpha).map(|_| field.random(&mut rng)));
            }
            _ => symbols.extend(node_hash(field, slice, r)?),
        }
    }
    Ok(HashVector::new(
        symbols,
        params.alpha,
        r.kind(),
        r.seed_bits(),
    ))
}

/// Decodes `h` and reports which nodes carry errors.
pub fn verify(code: &Code, h: &HashVector) -> Result<VerificationReport, VerifyError> {
    let params = &code.params;
    let hash_bits = (params.coded_rows() as u64) * params.field.symbol_bits() as u64;
    let (flagged, status) = match code.hash_word_decode(h.symbols())? {
        HashDecode::Decoded { error_nodes, .. } if error_nodes.is_empty() => {
            (error_nodes, AuditStatus::Clean)
        }
        HashDecode::Decoded { error_nodes, .. } => (error_nodes, AuditStatus::ErrorsLocated),
        HashDecode::Undecodable => (BTreeSet::new(), AuditStatus::Undecodable),
    };
    Ok(VerificationReport {
        flagged,
        status,
        hash_bits,
        seed_bits: h.seed_bits(),
        randomness: h.kind(),
    })
}

/// Rebuilds `target`'s slice from the helpers' stored content. The first
/// `k` helpers are decoded; any extra helper is used to cross-check, so a
/// corrupt helper is only detectable with more than `k` helpers.
pub fn repair_node(
    state: &SystemState,
    target: usize,
    helpers: &[usize],
) -> Result<Matrix, VerifyError> {
    let params = state.params();
    params.check_node(target)?;
    if helpers.len() < params.k {
        return Err(VerifyError::TooFewHelpers {
            need: params.k,
            got: helpers.len(),
        });
    }
    let slices = helpers
        .iter()
        .map(|&h| Ok((h, state.node(h)?.clone())))
        .collect::<Result<Vec<_>, StorageError>>()?;
    let x = match state.code().erasure_decode(&slices) {
        Ok(x) => x,
        Err(CodeError::InconsistentNode(n)) => return Err(VerifyError::CorruptHelper(n)),
        Err(e) => return Err(e.into()),
    };
    Ok(state.code().encode(&x)?.node_slice(params.alpha, target))
}

/// Communication figures for one audit, in whole bits.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditBudget {
    /// File size `M = k·alpha·N·⌈log2 q⌉`.
    pub file_bits: u64,
    /// Hash upload `n·alpha·⌈log2 q⌉`; independent of `N`.
    pub hash_bits: u64,
    /// Downloading every node, `⌈(n/k)·M⌉`.
    pub naive_bits: u64,
    /// Common randomness for the chosen scheme.
    pub seed_bits: u64,
    /// Cost of the verifier broadcasting the seed to all `n` nodes.
    pub seed_distribution_bits: u64,
    /// `n(n-k)(log2 M + log2 t1)`, the real-valued closed form.
    pub formula_bits: f64,
}

pub fn accounting(params: &CodeParams, kind: RandomnessKind) -> AuditBudget {
    let width = params.field.symbol_bits() as u64;
    let (n, k) = (params.n as u64, params.k as u64);
    let file_bits = params.message_rows() as u64 * params.columns as u64 * width;
    let seed_bits = seed_bit_count(kind, params.field.order(), params.columns);
    let log_t1 = if params.t1 > 0 {
        (params.t1 as f64).log2()
    } else {
        0.0
    };
    AuditBudget {
        file_bits,
        hash_bits: params.coded_rows() as u64 * width,
        naive_bits: (n * file_bits).div_ceil(k),
        seed_bits,
        seed_distribution_bits: n * seed_bits,
        formula_bits: (n * params.alpha as u64) as f64 * ((file_bits as f64).log2() + log_t1),
    }
}

/// The `q` target before rounding up to a prime power: `t1·M` for uniform
/// projection, `2(n-k)·t1·M` for small-bias projection.
pub fn field_target(
    m_bits: u64,
    n: usize,
    k: usize,
    mode: RandomnessKind,
) -> Result<u64, VerifyError> {
    if m_bits == 0 {
        return Err(VerifyError::EmptyFile);
    }
    if k == 0 || k >= n {
        return Err(CodeError::InvalidParams(format!("need 1 <= k < n, got n={n} k={k}")).into());
    }
    let alpha = (n - k) as u64;
    let t1 = alpha / 2;
    if t1 == 0 {
        return Err(VerifyError::DegenerateCode {
            alpha: alpha as usize,
        });
    }
    let target = match mode {
        RandomnessKind::TrueRandom => t1.checked_mul(m_bits),
        RandomnessKind::Pseudorandom => (2 * alpha * t1).checked_mul(m_bits),
    };
    target.ok_or(VerifyError::Field(FieldError::OrderOverflow {
        base: m_bits,
        degree: 1,
    }))
}

/// Picks `F_q` with `q` the smallest prime power at or above
/// [`field_target`], which keeps the failure bound at or below `1/M`.
pub fn choose_field(
    m_bits: u64,
    n: usize,
    k: usize,
    mode: RandomnessKind,
) -> Result<Field, VerifyError> {
    let (p, s) = next_prime_power(field_target(m_bits, n, k, mode)?);
    Ok(make_field(p, s)?)
}
