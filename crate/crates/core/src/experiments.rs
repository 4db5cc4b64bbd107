//! Quantitative checks of the failure bounds.
//!
//! Exact enumerators are the ground truth wherever the sample space is
//! small enough; the Monte Carlo harness covers the rest. Every trial draws
//! from its own ChaCha stream indexed by `(label, trial)`, so results do not
//! depend on how rayon schedules the work.

use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::code::Code;
use crate::field::{make_extension, ExtField, Field, FieldElement, FieldError};
use crate::hashing::{
    draw_random_vector, minimal_extension_degree, prg_expand, prg_expand_counted, HashError,
    PrgSeed, RandomVector, RandomnessKind,
};
use crate::matrix::Matrix;
use crate::storage::{sample_error_plan, ErrorModel, StorageError, SystemState};
use crate::verifier::{collect_hashes_with, verify, AuditStatus, NodeBehavior, VerifyError};

/// Largest sample space the exact enumerators will walk.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExperimentError {
    #[error("{cases} cases exceed the enumeration limit of {limit}")]
    TooLargeToEnumerate { cases: u128, limit: u128 },
    #[error("t = {t} exceeds t1 = {t1}")]
    TooManyErrors { t: usize, t1: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Independent randomness consumers within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Data and the adversary's errors.
    Simulation = 1,
    /// The verifier's projection vector or seed.
    Challenge = 2,
    /// Replies of lying nodes.
    Liar = 3,
}

/// The generator for `(label, index)` under `master`.
pub fn stream_rng(master: u64, label: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((label as u64) << 48) | (index & ((1 << 48) - 1)));
    rng
}

/// One experiment setting.
#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub code: Code,
    pub model: ErrorModel,
    /// Number of corrupted nodes.
    pub t: usize,
    pub kind: RandomnessKind,
    pub behavior: NodeBehavior,
    ext: Option<ExtField>,
}

impl TrialConfig {
    pub fn new(
        code: Code,
        model: ErrorModel,
        t: usize,
        kind: RandomnessKind,
    ) -> Result<Self, ExperimentError> {
        if t > code.params.t1 {
            return Err(ExperimentError::TooManyErrors {
                t,
                t1: code.params.t1,
            });
        }
        Self::unchecked(code, model, t, kind)
    }

    /// Like [`TrialConfig::new`] but allows `t > t1`.
    pub fn unchecked(
        code: Code,
        model: ErrorModel,
        t: usize,
        kind: RandomnessKind,
    ) -> Result<Self, ExperimentError> {
        let ext = match kind {
            RandomnessKind::TrueRandom => None,
            RandomnessKind::Pseudorandom => {
                let m = minimal_extension_degree(code.field().order(), code.params.columns);
                Some(make_extension(code.field(), m)?)
            }
        };
        Ok(TrialConfig {
            code,
            model,
            t,
            kind,
            behavior: NodeBehavior::HashStored,
            ext,
        })
    }

    pub fn with_behavior(mut self, behavior: NodeBehavior) -> Self {
        self.behavior = behavior;
        self
    }

    /// Union bound on the per-audit miss probability: `t1/q` for uniform
    /// projection, `2(n-k)·t1/q` for small-bias projection.
    pub fn bound(&self) -> f64 {
        let p = &self.code.params;
        let q = p.field.order() as f64;
        match self.kind {
            RandomnessKind::TrueRandom => p.t1 as f64 / q,
            RandomnessKind::Pseudorandom => (2 * p.alpha * p.t1) as f64 / q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    pub detected: bool,
    /// Corrupted nodes the verifier did not flag.
    pub missed: BTreeSet<usize>,
    /// Flagged nodes that were actually honest.
    pub false_flags: BTreeSet<usize>,
    pub truth: BTreeSet<usize>,
    pub flagged: BTreeSet<usize>,
    pub status: AuditStatus,
    pub kind: RandomnessKind,
}

/// Runs one audit: commit errors, then draw the projection, hash, verify.
pub fn run_trial(
    config: &TrialConfig,
    master: u64,
    index: u64,
) -> Result<TrialResult, ExperimentError> {
    let code = &config.code;
    let params = &code.params;
    let field = code.field();
    let mut sim = stream_rng(master, Stream::Simulation, index);
    let x = Matrix::random(field, params.message_rows(), params.columns, &mut sim);
    let mut state = SystemState::new(code, x)?;
    let plan = sample_error_plan(&config.model, config.t, &mut sim, params)?;
    state.corrupt(plan)?;

    let mut challenge = stream_rng(master, Stream::Challenge, index);
    let r = draw_projection(config, &mut challenge)?;
    let behavior = match config.behavior {
        NodeBehavior::Arbitrary { seed } => NodeBehavior::Arbitrary {
            seed: seed ^ index.rotate_left(17),
        },
        b => b,
    };
    let hashes = collect_hashes_with(&state, &r, behavior)?;
    let report = verify(code, &hashes)?;
    let truth = state.true_error_set()?;
    let missed: BTreeSet<usize> = truth.difference(&report.flagged).copied().collect();
    let false_flags: BTreeSet<usize> = report.flagged.difference(&truth).copied().collect();
    Ok(TrialResult {
        detected: missed.is_empty(),
        missed,
        false_flags,
        truth,
        flagged: report.flagged,
        status: report.status,
        kind: config.kind,
    })
}

fn draw_projection(
    config: &TrialConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RandomVector, ExperimentError> {
    let n_cols = config.code.params.columns;
    Ok(match &config.ext {
        None => draw_random_vector(n_cols, config.code.field(), rng),
        Some(ext) => {
            let seed = PrgSeed::new(ext.clone(), ext.random(rng), ext.random(rng));
            prg_expand(&seed, n_cols)?
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub trials: u64,
    pub failures: u64,
    /// Trials that flagged an honest node.
    pub false_accusations: u64,
    pub estimate: f64,
    /// `estimate ± 3σ̂` (normal approximation).
    pub low: f64,
    pub high: f64,
    pub bound: f64,
}

/// Binomial standard deviation of a rate estimate.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

impl RateEstimate {
    pub fn from_counts(trials: u64, failures: u64, false_accusations: u64, bound: f64) -> Self {
        let estimate = if trials == 0 {
            0.0
        } else {
            failures as f64 / trials as f64
        };
        let s = binomial_sigma(estimate, trials);
        RateEstimate {
            trials,
            failures,
            false_accusations,
            estimate,
            low: (estimate - 3.0 * s).max(0.0),
            high: (estimate + 3.0 * s).min(1.0),
            bound,
        }
    }

    /// `|estimate - p| <= sigmas · σ(p)`.
    pub fn within_sigma_of(&self, p: f64, sigmas: f64) -> bool {
        (self.estimate - p).abs() <= sigmas * binomial_sigma(p, self.trials)
    }

    /// The estimate is not significantly above the bound.
    pub fn respects_bound(&self, sigmas: f64) -> bool {
        self.estimate <= self.bound + sigmas * binomial_sigma(self.bound.min(1.0), self.trials)
    }
}

/// Monte Carlo miss rate over `trials` independent audits.
pub fn mc_failure_rate(
    config: &TrialConfig,
    trials: u64,
    master: u64,
) -> Result<RateEstimate, ExperimentError> {
    let (failures, accusations) = (0..trials)
        .into_par_iter()
        .map(|i| {
            run_trial(config, master, i)
                .map(|t| (u64::from(!t.detected), u64::from(!t.false_flags.is_empty())))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(RateEstimate::from_counts(
        trials,
        failures,
        accusations,
        config.bound(),
    ))
}

fn check_enumerable(q: u64, exponent: usize) -> Result<u128, ExperimentError> {
    let cases = (q as u128)
        .checked_pow(exponent as u32)
        .unwrap_or(u128::MAX);
    if cases > ENUMERATION_LIMIT {
        Err(ExperimentError::TooLargeToEnumerate {
            cases,
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(cases)
    }
}

/// Calls `visit` on every vector of `F_q^len` in index order.
fn for_each_vector(field: &Field, len: usize, mut visit: impl FnMut(&[FieldElement])) {
    let q = field.order();
    let mut v = vec![FieldElement::ZERO; len];
    loop {
        visit(&v);
        let mut i = 0;
        loop {
            if i == len {
                return;
            }
            let next = v[i].index() + 1;
            if next < q {
                v[i] = FieldElement::from_index(next);
                break;
            }
            v[i] = FieldElement::ZERO;
            i += 1;
        }
    }
}

/// Some node's every error row is orthogonal to `r`.
fn misses(field: &Field, errors: &[Matrix], r: &[FieldElement]) -> bool {
    errors
        .iter()
        .any(|e| (0..e.rows()).all(|j| field.dot(e.row(j), r).is_zero()))
}

fn check_error_widths(errors: &[Matrix], columns: usize) -> Result<(), ExperimentError> {
    match errors.iter().find(|e| e.cols() != columns) {
        Some(e) => Err(ExperimentError::ShapeMismatch(format!(
            "error block has {} columns, expected {columns}",
            e.cols()
        ))),
        None => Ok(()),
    }
}

/// Exact `P[F]` for uniform `r ∈ F_q^N`, where `F` is the event that at
/// least one corrupted node hashes to exactly its honest values.
pub fn exact_failure_small(
    field: &Field,
    columns: usize,
    errors: &[Matrix],
) -> Result<Ratio<u64>, ExperimentError> {
    check_error_widths(errors, columns)?;
    let total = check_enumerable(field.order(), columns)? as u64;
    let mut hits = 0u64;
    for_each_vector(field, columns, |r| {
        if misses(field, errors, r) {
            hits += 1;
        }
    });
    Ok(Ratio::new(hits, total))
}

/// Exact `P[F']` for `r'` expanded from a uniform seed in `F_{q^m}^2`.
pub fn exact_failure_prg(
    field: &Field,
    m: usize,
    columns: usize,
    errors: &[Matrix],
) -> Result<Ratio<u64>, ExperimentError> {
    check_error_widths(errors, columns)?;
    let vectors = all_prg_vectors(field, m, columns)?;
    let hits = vectors.iter().filter(|r| misses(field, errors, r)).count() as u64;
    Ok(Ratio::new(hits, vectors.len() as u64))
}

fn all_prg_vectors(
    field: &Field,
    m: usize,
    columns: usize,
) -> Result<Vec<Vec<FieldElement>>, ExperimentError> {
    check_enumerable(field.order(), 2 * m)?;
    let ext = make_extension(field, m)?;
    let mut out = Vec::new();
    for x in ext.elements() {
        for y in ext.elements() {
            let seed = PrgSeed::new(ext.clone(), x.clone(), y);
            out.push(prg_expand(&seed, columns)?.values().to_vec());
        }
    }
    Ok(out)
}

/// Exact zero count of a linear test `Σ β_i r_i + c` over a sample space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiasMeasurement {
    pub q: u64,
    pub zeros: u64,
    pub total: u64,
}

impl BiasMeasurement {
    /// `(q - 1)·P[X = 0] - P[X ≠ 0] = (q·zeros - total) / total`.
    pub fn bias(&self) -> Ratio<i64> {
        Ratio::new(
            self.q as i64 * self.zeros as i64 - self.total as i64,
            self.total as i64,
        )
    }

    pub fn zero_probability(&self) -> Ratio<u64> {
        Ratio::new(self.zeros, self.total)
    }
}

fn linear_test(
    field: &Field,
    beta: &[FieldElement],
    c: FieldElement,
    r: &[FieldElement],
) -> FieldElement {
    field.add(field.dot(beta, r), c)
}

/// Bias of `Σ β_i r'_i + c` over all `q^{2m}` seeds.
pub fn exact_bias(
    field: &Field,
    m: usize,
    columns: usize,
    beta: &[FieldElement],
    c: FieldElement,
) -> Result<BiasMeasurement, ExperimentError> {
    if beta.len() != columns {
        return Err(ExperimentError::ShapeMismatch(format!(
            "beta has length {}",
            beta.len()
        )));
    }
    let vectors = all_prg_vectors(field, m, columns)?;
    let zeros = vectors
        .iter()
        .filter(|r| linear_test(field, beta, c, r).is_zero())
        .count() as u64;
    Ok(BiasMeasurement {
        q: field.order(),
        zeros,
        total: vectors.len() as u64,
    })
}

/// Bias of the same test over uniform `r ∈ F_q^N`.
pub fn exact_bias_uniform(
    field: &Field,
    columns: usize,
    beta: &[FieldElement],
    c: FieldElement,
) -> Result<BiasMeasurement, ExperimentError> {
    let total = check_enumerable(field.order(), columns)? as u64;
    let mut zeros = 0;
    for_each_vector(field, columns, |r| {
        if linear_test(field, beta, c, r).is_zero() {
            zeros += 1;
        }
    });
    Ok(BiasMeasurement {
        q: field.order(),
        zeros,
        total,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasSweep {
    pub q: u64,
    pub m: usize,
    pub columns: usize,
    /// Number of `(β, c)` pairs examined.
    pub tests: u64,
    pub max_abs_bias: Ratio<i64>,
    pub max_zero_probability: Ratio<u64>,
    /// `(q - 1)(N - 1) / q^m`.
    pub bias_bound: Ratio<u64>,
}

impl BiasSweep {
    pub fn within_bounds(&self) -> bool {
        let bound = Ratio::new(
            *self.bias_bound.numer() as i64,
            *self.bias_bound.denom() as i64,
        );
        self.max_abs_bias <= bound
            && self.bias_bound <= Ratio::from_integer(1)
            && self.max_zero_probability <= Ratio::new(2, self.q)
    }
}

/// Worst bias over every nonzero `β ∈ F_q^N` and every `c ∈ F_q`.
pub fn bias_sweep(field: &Field, m: usize, columns: usize) -> Result<BiasSweep, ExperimentError> {
    let q = field.order();
    check_enumerable(q, columns)?;
    let vectors = all_prg_vectors(field, m, columns)?;
    let total = vectors.len() as u64;
    let mut max_bias = Ratio::from_integer(0i64);
    let mut max_zero = Ratio::from_integer(0u64);
    let mut tests = 0;
    let mut hist = vec![0u64; q as usize];
    for_each_vector(field, columns, |beta| {
        if beta.iter().all(|b| b.is_zero()) {
            return;
        }
        hist.iter_mut().for_each(|h| *h = 0);
        for r in &vectors {
            hist[field.dot(beta, r).index() as usize] += 1;
        }
        for c in field.elements() {
            // Σβr + c = 0 exactly when Σβr = -c
            let zeros = hist[field.neg(c).index() as usize];
            let meas = BiasMeasurement { q, zeros, total };
            let b = meas.bias();
            let abs = if b < Ratio::from_integer(0) { -b } else { b };
            max_bias = max_bias.max(abs);
            max_zero = max_zero.max(meas.zero_probability());
            tests += 1;
        }
    });
    let qm = q.pow(m as u32);
    Ok(BiasSweep {
        q,
        m,
        columns,
        tests,
        max_abs_bias: max_bias,
        max_zero_probability: max_zero,
        bias_bound: Ratio::new((q - 1) * (columns as u64).saturating_sub(1), qm),
    })
}

/// Exact law of the sum of `count` independent uniform `F_q` variables,
/// indexed by element.
pub fn uniform_sum_law(field: &Field, count: usize) -> Vec<Ratio<u64>> {
    let q = field.order() as usize;
    // weights are numerators over q^count
    let mut dist = vec![0u64; q];
    dist[0] = 1;
    for _ in 0..count {
        let mut next = vec![0u64; q];
        for a in field.elements() {
            let w = dist[a.index() as usize];
            if w == 0 {
                continue;
            }
            for b in field.elements() {
                next[field.add(a, b).index() as usize] += w;
            }
        }
        dist = next;
    }
    let denom = (q as u64).pow(count as u32);
    dist.into_iter().map(|w| Ratio::new(w, denom)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostRow {
    pub columns: usize,
    pub m: usize,
    pub ops: u64,
}

/// Base-field operation counts of seed expansion. `m = None` uses the
/// minimal degree for each `N`.
pub fn cost_counter(
    field: &Field,
    columns: &[usize],
    m: Option<usize>,
) -> Result<Vec<CostRow>, ExperimentError> {
    let mut rng = stream_rng(0, Stream::Challenge, 0);
    columns
        .iter()
        .map(|&n| {
            let degree = m.unwrap_or_else(|| minimal_extension_degree(field.order(), n));
            let seed = PrgSeed::draw_with_degree(field, degree, &mut rng)?;
            let (_, ops) = prg_expand_counted(&seed, n)?;
            Ok(CostRow {
                columns: n,
                m: degree,
                ops: ops.total(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostFit {
    /// Constant `c` in `ops ≈ c·N·m²`.
    pub c: f64,
    /// Largest factor by which any row deviates from `c·N·m²`.
    pub worst_factor: f64,
}

/// Fits `c` so the worst multiplicative deviation is minimised.
pub fn fit_cost(rows: &[CostRow]) -> CostFit {
    let ratios: Vec<f64> = rows
        .iter()
        .map(|r| r.ops as f64 / (r.columns as f64 * (r.m * r.m) as f64))
        .collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    CostFit {
        c: (lo * hi).sqrt(),
        worst_factor: (hi / lo).sqrt(),
    }
}
