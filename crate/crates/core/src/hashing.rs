//! Shared projection vectors and per-node hash products.
//!
//! A projection vector is either drawn uniformly from `F_q^N`, or expanded
//! from a short seed `(x, y)` of two `F_{q^m}` elements as
//!
//! ```text
//! r'_i = <coords(x^i), coords(y)>,   i = 0..N-1
//! ```
//!
//! For a nonzero test `β`, `Σ β_i r'_i = <coords(P(x)), coords(y)>` with
//! `P(z) = Σ β_i z^i` of degree at most `N - 1`. Unless `x` is one of the at
//! most `N - 1` roots of `P` the sum is uniform over `F_q`, so every linear
//! test has bias at most `(q - 1)(N - 1) / q^m`. Choosing the smallest `m`
//! with `q^m >= (q - 1)(N - 1)` keeps that bias at most 1.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::epoch;
use crate::field::{
    make_extension, ExtElement, ExtField, Field, FieldElement, FieldError, OpCount,
};
use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HashError {
    #[error("extension GF({q}^{m}) is smaller than (q-1)(N-1) = {need}")]
    ExtensionTooSmall { q: u64, m: usize, need: u128 },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("seed does not belong to an extension of {0}")]
    ForeignSeed(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Which of the two hashing schemes produced a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RandomnessKind {
    /// Every entry uniform and independent.
    TrueRandom,
    /// Expanded from a small-bias seed.
    Pseudorandom,
}

impl RandomnessKind {
    pub fn name(self) -> &'static str {
        match self {
            RandomnessKind::TrueRandom => "true-random",
            RandomnessKind::Pseudorandom => "pseudorandom",
        }
    }
}

impl fmt::Display for RandomnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    TrueRandom {
        bits: u64,
    },
    Pseudorandom {
        m: usize,
        seed_bits: u64,
    },
    /// Supplied verbatim, e.g. the all-ones vector of a worked example.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomVector {
    values: Vec<FieldElement>,
    provenance: Provenance,
    drawn_at: u64,
}

impl RandomVector {
    pub fn fixed(values: Vec<FieldElement>) -> RandomVector {
        RandomVector {
            values,
            provenance: Provenance::Fixed,
            drawn_at: epoch::tick(),
        }
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn kind(&self) -> RandomnessKind {
        match self.provenance {
            Provenance::Pseudorandom { .. } => RandomnessKind::Pseudorandom,
            _ => RandomnessKind::TrueRandom,
        }
    }

    /// Common-randomness bits behind this vector (zero when fixed).
    pub fn seed_bits(&self) -> u64 {
        match self.provenance {
            Provenance::TrueRandom { bits } => bits,
            Provenance::Pseudorandom { seed_bits, .. } => seed_bits,
            Provenance::Fixed => 0,
        }
    }

    /// Logical time at which the vector came into existence.
    pub fn drawn_at(&self) -> u64 {
        self.drawn_at
    }
}

/// `N` independent uniform symbols.
pub fn draw_random_vector<R: Rng + ?Sized>(
    columns: usize,
    field: &Field,
    rng: &mut R,
) -> RandomVector {
    RandomVector {
        values: (0..columns).map(|_| field.random(rng)).collect(),
        provenance: Provenance::TrueRandom {
            bits: seed_bit_count(RandomnessKind::TrueRandom, field.order(), columns),
        },
        drawn_at: epoch::tick(),
    }
}

/// The smallest `m >= 1` with `q^m >= (q - 1)(N - 1)`.
pub fn minimal_extension_degree(q: u64, columns: usize) -> usize {
    let need = (q as u128 - 1) * (columns.saturating_sub(1) as u128);
    let mut m = 1;
    let mut size = q as u128;
    while size < need {
        m += 1;
        size = size.saturating_mul(q as u128);
    }
    m
}

/// Common-randomness bits: `N·⌈log2 q⌉` for a uniform vector,
/// `2·m·⌈log2 q⌉` for a small-bias seed.
pub fn seed_bit_count(kind: RandomnessKind, q: u64, columns: usize) -> u64 {
    let width = crate::field::ceil_log2(q) as u64;
    match kind {
        RandomnessKind::TrueRandom => columns as u64 * width,
        RandomnessKind::Pseudorandom => 2 * minimal_extension_degree(q, columns) as u64 * width,
    }
}

/// A small-bias seed: two elements of `F_{q^m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrgSeed {
    ext: ExtField,
    x: ExtElement,
    y: ExtElement,
}

impl PrgSeed {
    pub fn new(ext: ExtField, x: ExtElement, y: ExtElement) -> PrgSeed {
        PrgSeed { ext, x, y }
    }

    /// Draws a seed in the minimal extension for `N` columns.
    pub fn draw<R: Rng + ?Sized>(
        field: &Field,
        columns: usize,
        rng: &mut R,
    ) -> Result<PrgSeed, HashError> {
        let m = minimal_extension_degree(field.order(), columns);
        Self::draw_with_degree(field, m, rng)
    }

    pub fn draw_with_degree<R: Rng + ?Sized>(
        field: &Field,
        m: usize,
        rng: &mut R,
    ) -> Result<PrgSeed, HashError> {
        let ext = make_extension(field, m)?;
        let x = ext.random(rng);
        let y = ext.random(rng);
        Ok(PrgSeed { ext, x, y })
    }

    /// Rebuilds a seed from its `2m` base-field coordinates, `x` first.
    pub fn from_coords(
        field: &Field,
        m: usize,
        coords: &[FieldElement],
    ) -> Result<PrgSeed, HashError> {
        if coords.len() != 2 * m {
            return Err(HashError::ShapeMismatch {
                expected: (2 * m, 1),
                got: (coords.len(), 1),
            });
        }
        let ext = make_extension(field, m)?;
        let x = ext.from_coords(&coords[..m])?;
        let y = ext.from_coords(&coords[m..])?;
        Ok(PrgSeed { ext, x, y })
    }

    pub fn to_coords(&self) -> Vec<FieldElement> {
        let mut c = self.ext.coords(&self.x);
        c.extend(self.ext.coords(&self.y));
        c
    }

    pub fn extension(&self) -> &ExtField {
        &self.ext
    }

    pub fn x(&self) -> &ExtElement {
        &self.x
    }

    pub fn y(&self) -> &ExtElement {
        &self.y
    }

    pub fn degree(&self) -> usize {
        self.ext.degree()
    }

    pub fn bit_count(&self) -> u64 {
        2 * self.ext.degree() as u64 * self.ext.base().symbol_bits() as u64
    }
}

pub fn prg_expand(seed: &PrgSeed, columns: usize) -> Result<RandomVector, HashError> {
    prg_expand_counted(seed, columns).map(|(r, _)| r)
}

/// [`prg_expand`] that also reports how many base-field operations it
/// performed.
pub fn prg_expand_counted(
    seed: &PrgSeed,
    columns: usize,
) -> Result<(RandomVector, OpCount), HashError> {
    let ext = &seed.ext;
    let f = ext.base();
    let q = f.order();
    let need = (q as u128 - 1) * (columns.saturating_sub(1) as u128);
    if ext.order().is_some_and(|o| o < need) {
        return Err(HashError::ExtensionTooSmall {
            q,
            m: ext.degree(),
            need,
        });
    }
    let mut ops = OpCount::default();
    let y = ext.coords(&seed.y);
    let mut power = ext.one();
    let mut values = Vec::with_capacity(columns);
    for i in 0..columns {
        values.push(f.dot(power.coords(), &y));
        ops.mul += y.len() as u64;
        ops.add += y.len() as u64;
        if i + 1 < columns {
            power = ext.mul_counted(&power, &seed.x, &mut ops);
        }
    }
    let vector = RandomVector {
        values,
        provenance: Provenance::Pseudorandom {
            m: ext.degree(),
            seed_bits: seed.bit_count(),
        },
        drawn_at: epoch::tick(),
    };
    Ok((vector, ops))
}

/// Inner product of each stored row with `r`.
pub fn node_hash(
    field: &Field,
    content: &Matrix,
    r: &RandomVector,
) -> Result<Vec<FieldElement>, HashError> {
    if content.cols() != r.len() {
        return Err(HashError::ShapeMismatch {
            expected: (content.rows(), r.len()),
            got: content.shape(),
        });
    }
    Ok((0..content.rows())
        .map(|j| field.dot(content.row(j), r.values()))
        .collect())
}

/// The `n·alpha` hash products gathered from all nodes, in node-block order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashVector {
    symbols: Vec<FieldElement>,
    alpha: usize,
    kind: RandomnessKind,
    seed_bits: u64,
}

impl HashVector {
    pub fn new(
        symbols: Vec<FieldElement>,
        alpha: usize,
        kind: RandomnessKind,
        seed_bits: u64,
    ) -> HashVector {
        HashVector {
            symbols,
            alpha,
            kind,
            seed_bits,
        }
    }

    pub fn symbols(&self) -> &[FieldElement] {
        &self.symbols
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// The `alpha` symbols reported by `node` (1-based).
    pub fn block(&self, node: usize) -> &[FieldElement] {
        &self.symbols[(node - 1) * self.alpha..node * self.alpha]
    }

    pub fn kind(&self) -> RandomnessKind {
        self.kind
    }

    pub fn seed_bits(&self) -> u64 {
        self.seed_bits
    }
}
