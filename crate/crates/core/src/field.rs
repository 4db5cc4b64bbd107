//! Finite fields `F_q` with `q = p^s`, and extensions `F_{q^m}` over them.
//!
//! Elements of `F_q` are stored as a single integer index: the coefficient
//! vector of the polynomial-basis representation read as base-`p` digits,
//! constant term first. The index is canonical, so equality of elements is
//! equality of indices. Prime-power fields of moderate order carry log/exp
//! tables; everything else multiplies polynomials directly.
//!
//! Moduli are the lowest irreducible polynomial in index order, which makes
//! every field in this crate reproducible from `(p, s)` alone.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use thiserror::Error;

use crate::poly;

/// Orders at or below this size (with `s > 1`) get log/exp tables.
const TABLE_LIMIT: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NonPrimeCharacteristic(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {base}^{degree} does not fit in 64 bits")]
    OrderOverflow { base: u64, degree: usize },
    #[error("no irreducible polynomial of degree {degree} over GF({order})")]
    NoIrreducibleFound { order: u64, degree: usize },
    #[error("element index {value} is not a member of GF({order})")]
    FieldMismatch { value: u64, order: u64 },
    #[error("division by zero")]
    DivisionByZero,
}

/// An element of some `F_q`, identified by its canonical index in `[0, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(u64);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    /// Wraps a raw index without a membership check.
    pub const fn from_index(index: u64) -> Self {
        FieldElement(index)
    }

    pub const fn index(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithKind {
    Add,
    Sub,
    Mul,
}

struct Tables {
    // exp has length 2(q-1) so log sums never need a reduction.
    exp: Vec<u32>,
    log: Vec<u32>,
}

struct Inner {
    p: u64,
    s: usize,
    q: u64,
    modulus: Vec<u64>,
    tables: Option<Tables>,
    primitive: OnceLock<FieldElement>,
}

/// A finite field `F_q`, `q = p^s`. Cloning is cheap.
#[derive(Clone)]
pub struct Field(Arc<Inner>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("p", &self.0.p)
            .field("s", &self.0.s)
            .field("modulus", &self.0.modulus)
            .finish()
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.s == 1 {
            write!(f, "GF({})", self.0.p)
        } else {
            write!(f, "GF({}^{})", self.0.p, self.0.s)
        }
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.s == other.0.s && self.0.modulus == other.0.modulus)
    }
}

impl Eq for Field {}

/// Builds `F_{p^s}` with the lowest irreducible modulus of degree `s`.
pub fn make_field(p: u64, s: usize) -> Result<Field, FieldError> {
    if !is_prime(p) {
        return Err(FieldError::NonPrimeCharacteristic(p));
    }
    if s == 0 {
        return Err(FieldError::ZeroDegree);
    }
    let q = checked_power(p, s).ok_or(FieldError::OrderOverflow { base: p, degree: s })?;
    if s == 1 {
        return Ok(Field::assemble(p, 1, q, vec![0, 1]));
    }
    let prime = Field::assemble(p, 1, p, vec![0, 1]);
    let modulus = poly::lowest_irreducible(&prime, s)?;
    let modulus = modulus.iter().map(|c| c.index()).collect();
    Ok(Field::assemble(p, s, q, modulus))
}

/// Builds the field of order `q`, which must be a prime power.
pub fn field_of_order(q: u64) -> Result<Field, FieldError> {
    match prime_power_decompose(q) {
        Some((p, s)) => make_field(p, s),
        None => Err(FieldError::NonPrimeCharacteristic(q)),
    }
}

impl Field {
    fn assemble(p: u64, s: usize, q: u64, modulus: Vec<u64>) -> Field {
        let mut inner = Inner {
            p,
            s,
            q,
            modulus,
            tables: None,
            primitive: OnceLock::new(),
        };
        if s > 1 && q <= TABLE_LIMIT {
            let bare = Field(Arc::new(inner));
            let g = bare.search_primitive();
            let mut exp = vec![0u32; 2 * (q as usize - 1)];
            let mut log = vec![0u32; q as usize];
            let mut cur = FieldElement::ONE;
            for i in 0..(q as usize - 1) {
                exp[i] = cur.0 as u32;
                exp[i + q as usize - 1] = cur.0 as u32;
                log[cur.0 as usize] = i as u32;
                cur = bare.mul_direct(cur, g);
            }
            inner = Arc::try_unwrap(bare.0).unwrap_or_else(|_| unreachable!());
            inner.tables = Some(Tables { exp, log });
            let _ = inner.primitive.set(g);
        }
        Field(Arc::new(inner))
    }

    /// Shorthand for a prime field.
    pub fn prime(p: u64) -> Result<Field, FieldError> {
        make_field(p, 1)
    }

    pub fn order(&self) -> u64 {
        self.0.q
    }

    pub fn characteristic(&self) -> u64 {
        self.0.p
    }

    pub fn degree(&self) -> usize {
        self.0.s
    }

    /// Modulus coefficients over `F_p`, constant term first, monic.
    pub fn modulus(&self) -> &[u64] {
        &self.0.modulus
    }

    /// `⌈log2 q⌉`, the width of one symbol in whole bits.
    pub fn symbol_bits(&self) -> u32 {
        ceil_log2(self.0.q)
    }

    /// `⌊log2 q⌋`, the number of payload bits every symbol can carry.
    pub fn packing_bits(&self) -> u32 {
        63 - self.0.q.leading_zeros()
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        a.0 < self.0.q
    }

    pub fn element(&self, index: u64) -> Result<FieldElement, FieldError> {
        if index < self.0.q {
            Ok(FieldElement(index))
        } else {
            Err(FieldError::FieldMismatch {
                value: index,
                order: self.0.q,
            })
        }
    }

    /// The image of an integer in the prime subfield.
    pub fn from_int(&self, v: u64) -> FieldElement {
        FieldElement(v % self.0.p)
    }

    pub fn coeffs(&self, a: FieldElement) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.0.s);
        let mut x = a.0;
        for _ in 0..self.0.s {
            out.push(x % self.0.p);
            x /= self.0.p;
        }
        out
    }

    pub fn from_coeffs(&self, coeffs: &[u64]) -> FieldElement {
        let mut v = 0u64;
        for &c in coeffs.iter().take(self.0.s).rev() {
            v = v * self.0.p + c % self.0.p;
        }
        FieldElement(v)
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.0.q).map(FieldElement)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(rng.random_range(0..self.0.q))
    }

    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(rng.random_range(1..self.0.q))
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let p = self.0.p;
        if self.0.s == 1 {
            let (sum, carry) = a.0.overflowing_add(b.0);
            return FieldElement(if carry || sum >= p {
                sum.wrapping_sub(p)
            } else {
                sum
            });
        }
        if p == 2 {
            return FieldElement(a.0 ^ b.0);
        }
        self.digitwise(a, b, |x, y| (x + y) % p)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let p = self.0.p;
        if self.0.s == 1 {
            return FieldElement(if a.0 >= b.0 {
                a.0 - b.0
            } else {
                p - (b.0 - a.0)
            });
        }
        if p == 2 {
            return FieldElement(a.0 ^ b.0);
        }
        self.digitwise(a, b, |x, y| (x + p - y) % p)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        self.sub(FieldElement::ZERO, a)
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        if self.0.s == 1 {
            return FieldElement(mulmod(a.0, b.0, self.0.p));
        }
        match &self.0.tables {
            Some(t) => {
                let i = t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize;
                FieldElement(t.exp[i] as u64)
            }
            None => self.mul_direct(a, b),
        }
    }

    /// Multiplication by polynomial product and reduction, bypassing tables.
    pub fn mul_direct(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let p = self.0.p;
        let s = self.0.s;
        if s == 1 {
            return FieldElement(mulmod(a.0, b.0, p));
        }
        let ca = self.coeffs(a);
        let cb = self.coeffs(b);
        let mut prod = vec![0u64; 2 * s - 1];
        for (i, &x) in ca.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in cb.iter().enumerate() {
                prod[i + j] = (prod[i + j] + mulmod(x, y, p)) % p;
            }
        }
        let modulus = &self.0.modulus;
        for d in (s..2 * s - 1).rev() {
            let c = prod[d];
            if c == 0 {
                continue;
            }
            for i in 0..=s {
                let t = mulmod(c, modulus[i], p);
                prod[d - s + i] = (prod[d - s + i] + p - t) % p;
            }
        }
        self.from_coeffs(&prod[..s])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::DivisionByZero);
        }
        if let Some(t) = &self.0.tables {
            let q1 = self.0.q as usize - 1;
            return Ok(FieldElement(
                t.exp[(q1 - t.log[a.0 as usize] as usize) % q1] as u64,
            ));
        }
        Ok(self.pow(a, self.0.q - 2))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^e`, with `0^0 = 1`.
    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.0 == 0 {
            return FieldElement::ZERO;
        }
        if let Some(t) = &self.0.tables {
            let q1 = self.0.q - 1;
            let l = (t.log[a.0 as usize] as u128 * (e % q1) as u128 % q1 as u128) as usize;
            return FieldElement(t.exp[l] as u64);
        }
        let mut base = a;
        let mut acc = FieldElement::ONE;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Checked arithmetic: both operands must be members of this field.
    pub fn arith(
        &self,
        kind: ArithKind,
        a: FieldElement,
        b: FieldElement,
    ) -> Result<FieldElement, FieldError> {
        self.element(a.0)?;
        self.element(b.0)?;
        Ok(match kind {
            ArithKind::Add => self.add(a, b),
            ArithKind::Sub => self.sub(a, b),
            ArithKind::Mul => self.mul(a, b),
        })
    }

    pub fn dot(&self, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
        a.iter().zip(b).fold(FieldElement::ZERO, |acc, (&x, &y)| {
            self.add(acc, self.mul(x, y))
        })
    }

    /// A generator of the multiplicative group, found by lowest index.
    pub fn primitive_element(&self) -> FieldElement {
        *self.0.primitive.get_or_init(|| self.search_primitive())
    }

    fn search_primitive(&self) -> FieldElement {
        let q = self.0.q;
        if q == 2 {
            return FieldElement::ONE;
        }
        let factors = prime_factors(q - 1);
        (2..q)
            .map(FieldElement)
            .find(|&g| {
                factors
                    .iter()
                    .all(|&r| self.pow_direct(g, (q - 1) / r) != FieldElement::ONE)
            })
            .expect("multiplicative group of a finite field is cyclic")
    }

    fn pow_direct(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_direct(acc, base);
            }
            base = self.mul_direct(base, base);
            e >>= 1;
        }
        acc
    }

    fn digitwise(
        &self,
        a: FieldElement,
        b: FieldElement,
        op: impl Fn(u64, u64) -> u64,
    ) -> FieldElement {
        let p = self.0.p;
        let (mut x, mut y) = (a.0, b.0);
        let mut place = 1u64;
        let mut out = 0u64;
        for i in 0..self.0.s {
            out += op(x % p, y % p) * place;
            x /= p;
            y /= p;
            if i + 1 < self.0.s {
                place *= p;
            }
        }
        FieldElement(out)
    }
}

/// Running tally of base-field operations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub mul: u64,
    pub add: u64,
}

impl OpCount {
    pub fn total(&self) -> u64 {
        self.mul + self.add
    }
}

/// An element of `F_{q^m}`: its coordinate vector over `F_q` in the
/// polynomial basis, constant term first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExtElement(Vec<FieldElement>);

impl ExtElement {
    pub fn coords(&self) -> &[FieldElement] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }
}

/// `F_{q^m}` built as a degree-`m` extension of `F_q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtField {
    base: Field,
    m: usize,
    modulus: Vec<FieldElement>,
}

/// Builds `F_{q^m}` over `base` with the lowest irreducible modulus.
pub fn make_extension(base: &Field, m: usize) -> Result<ExtField, FieldError> {
    if m == 0 {
        return Err(FieldError::ZeroDegree);
    }
    let modulus = if m == 1 {
        vec![FieldElement::ZERO, FieldElement::ONE]
    } else {
        poly::lowest_irreducible(base, m)?
    };
    Ok(ExtField {
        base: base.clone(),
        m,
        modulus,
    })
}

impl ExtField {
    pub fn base(&self) -> &Field {
        &self.base
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn modulus(&self) -> &[FieldElement] {
        &self.modulus
    }

    /// `q^m`, or `None` when it exceeds `u128`.
    pub fn order(&self) -> Option<u128> {
        (self.base.order() as u128).checked_pow(self.m as u32)
    }

    pub fn zero(&self) -> ExtElement {
        ExtElement(vec![FieldElement::ZERO; self.m])
    }

    pub fn one(&self) -> ExtElement {
        self.embed(FieldElement::ONE)
    }

    pub fn embed(&self, a: FieldElement) -> ExtElement {
        let mut c = vec![FieldElement::ZERO; self.m];
        c[0] = a;
        ExtElement(c)
    }

    /// The class of the indeterminate (for `m = 1` this is `0`).
    pub fn generator_x(&self) -> ExtElement {
        let mut c = vec![FieldElement::ZERO; self.m];
        if self.m > 1 {
            c[1] = FieldElement::ONE;
        }
        ExtElement(c)
    }

    /// The `F_q`-coordinate vector of `a`.
    pub fn coords(&self, a: &ExtElement) -> Vec<FieldElement> {
        a.0.clone()
    }

    pub fn from_coords(&self, coords: &[FieldElement]) -> Result<ExtElement, FieldError> {
        if coords.len() != self.m {
            return Err(FieldError::FieldMismatch {
                value: coords.len() as u64,
                order: self.m as u64,
            });
        }
        for &c in coords {
            self.base.element(c.index())?;
        }
        Ok(ExtElement(coords.to_vec()))
    }

    /// Element whose coordinates are the base-`q` digits of `index`.
    pub fn from_index(&self, mut index: u128) -> ExtElement {
        let q = self.base.order() as u128;
        let c = (0..self.m)
            .map(|_| {
                let d = (index % q) as u64;
                index /= q;
                FieldElement(d)
            })
            .collect();
        ExtElement(c)
    }

    pub fn index_of(&self, a: &ExtElement) -> u128 {
        let q = self.base.order() as u128;
        a.0.iter()
            .rev()
            .fold(0u128, |acc, c| acc * q + c.index() as u128)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> ExtElement {
        ExtElement((0..self.m).map(|_| self.base.random(rng)).collect())
    }

    pub fn add(&self, a: &ExtElement, b: &ExtElement) -> ExtElement {
        ExtElement(
            a.0.iter()
                .zip(&b.0)
                .map(|(&x, &y)| self.base.add(x, y))
                .collect(),
        )
    }

    pub fn sub(&self, a: &ExtElement, b: &ExtElement) -> ExtElement {
        ExtElement(
            a.0.iter()
                .zip(&b.0)
                .map(|(&x, &y)| self.base.sub(x, y))
                .collect(),
        )
    }

    pub fn scale(&self, c: FieldElement, a: &ExtElement) -> ExtElement {
        ExtElement(a.0.iter().map(|&x| self.base.mul(c, x)).collect())
    }

    pub fn mul(&self, a: &ExtElement, b: &ExtElement) -> ExtElement {
        self.mul_counted(a, b, &mut OpCount::default())
    }

    /// Schoolbook product and reduction; every base-field operation is
    /// tallied, including those on zero operands, so the count depends only
    /// on `m`.
    pub fn mul_counted(&self, a: &ExtElement, b: &ExtElement, ops: &mut OpCount) -> ExtElement {
        let f = &self.base;
        let m = self.m;
        let mut prod = vec![FieldElement::ZERO; 2 * m - 1];
        for i in 0..m {
            for j in 0..m {
                prod[i + j] = f.add(prod[i + j], f.mul(a.0[i], b.0[j]));
            }
        }
        ops.mul += (m * m) as u64;
        ops.add += (m * m) as u64;
        for d in (m..2 * m - 1).rev() {
            let c = prod[d];
            for i in 0..m {
                prod[d - m + i] = f.sub(prod[d - m + i], f.mul(c, self.modulus[i]));
            }
            ops.mul += m as u64;
            ops.add += m as u64;
        }
        prod.truncate(m);
        ExtElement(prod)
    }

    pub fn pow(&self, a: &ExtElement, mut e: u128) -> ExtElement {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: &ExtElement) -> Result<ExtElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        let order = self.order().ok_or(FieldError::OrderOverflow {
            base: self.base.order(),
            degree: self.m,
        })?;
        Ok(self.pow(a, order - 2))
    }

    /// All elements in index order. Only sensible for small orders.
    pub fn elements(&self) -> impl Iterator<Item = ExtElement> + '_ {
        let order = self.order().unwrap_or(u128::MAX);
        (0..order).map(move |i| self.from_index(i))
    }
}

pub(crate) fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    acc
}

pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

fn checked_power(base: u64, exp: usize) -> Option<u64> {
    u32::try_from(exp).ok().and_then(|e| base.checked_pow(e))
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &BASES {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors by trial division.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// `Some((p, s))` when `v = p^s` for a prime `p`.
pub fn prime_power_decompose(v: u64) -> Option<(u64, usize)> {
    if v < 2 {
        return None;
    }
    for s in 1..64usize {
        let approx = (v as f64).powf(1.0 / s as f64).round() as u64;
        if approx < 2 {
            break;
        }
        for cand in approx.saturating_sub(1)..=approx + 1 {
            if checked_power(cand, s) == Some(v) && is_prime(cand) {
                return Some((cand, s));
            }
        }
    }
    None
}

/// The smallest prime power `>= x`, as `(p, s)`.
pub fn next_prime_power(x: u64) -> (u64, usize) {
    (x.max(2)..)
        .find_map(prime_power_decompose)
        .expect("prime powers are unbounded")
}
