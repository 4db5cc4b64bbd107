//! Dense univariate polynomials over a [`Field`], constant term first.

use crate::field::{prime_factors, Field, FieldElement, FieldError};

pub type Poly = Vec<FieldElement>;

pub fn trim(mut a: Poly) -> Poly {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

/// Degree, with `None` for the zero polynomial.
pub fn degree(a: &[FieldElement]) -> Option<usize> {
    a.iter().rposition(|c| !c.is_zero())
}

pub fn add(f: &Field, a: &[FieldElement], b: &[FieldElement]) -> Poly {
    let n = a.len().max(b.len());
    let get = |v: &[FieldElement], i| v.get(i).copied().unwrap_or(FieldElement::ZERO);
    trim((0..n).map(|i| f.add(get(a, i), get(b, i))).collect())
}

pub fn sub(f: &Field, a: &[FieldElement], b: &[FieldElement]) -> Poly {
    let n = a.len().max(b.len());
    let get = |v: &[FieldElement], i| v.get(i).copied().unwrap_or(FieldElement::ZERO);
    trim((0..n).map(|i| f.sub(get(a, i), get(b, i))).collect())
}

pub fn mul(f: &Field, a: &[FieldElement], b: &[FieldElement]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![FieldElement::ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    trim(out)
}

/// Quotient and remainder of `a / b`.
pub fn divmod(
    f: &Field,
    a: &[FieldElement],
    b: &[FieldElement],
) -> Result<(Poly, Poly), FieldError> {
    let db = degree(b).ok_or(FieldError::DivisionByZero)?;
    let lead_inv = f.inv(b[db])?;
    let mut rem = trim(a.to_vec());
    let Some(da) = degree(&rem) else {
        return Ok((Vec::new(), Vec::new()));
    };
    if da < db {
        return Ok((Vec::new(), rem));
    }
    let mut quot = vec![FieldElement::ZERO; da - db + 1];
    for d in (db..=da).rev() {
        let c = rem[d];
        if c.is_zero() {
            continue;
        }
        let factor = f.mul(c, lead_inv);
        quot[d - db] = factor;
        for (i, &bc) in b.iter().enumerate().take(db + 1) {
            rem[d - db + i] = f.sub(rem[d - db + i], f.mul(factor, bc));
        }
    }
    Ok((trim(quot), trim(rem)))
}

pub fn rem(f: &Field, a: &[FieldElement], m: &[FieldElement]) -> Result<Poly, FieldError> {
    divmod(f, a, m).map(|(_, r)| r)
}

pub fn powmod(
    f: &Field,
    base: &[FieldElement],
    mut e: u64,
    m: &[FieldElement],
) -> Result<Poly, FieldError> {
    let mut acc = rem(f, &[FieldElement::ONE], m)?;
    let mut b = rem(f, base, m)?;
    while e > 0 {
        if e & 1 == 1 {
            acc = rem(f, &mul(f, &acc, &b), m)?;
        }
        b = rem(f, &mul(f, &b, &b), m)?;
        e >>= 1;
    }
    Ok(acc)
}

pub fn gcd(f: &Field, a: &[FieldElement], b: &[FieldElement]) -> Result<Poly, FieldError> {
    let mut x = trim(a.to_vec());
    let mut y = trim(b.to_vec());
    while degree(&y).is_some() {
        let r = rem(f, &x, &y)?;
        x = y;
        y = r;
    }
    Ok(x)
}

pub fn eval(f: &Field, a: &[FieldElement], x: FieldElement) -> FieldElement {
    a.iter()
        .rev()
        .fold(FieldElement::ZERO, |acc, &c| f.add(f.mul(acc, x), c))
}

/// Rabin's test: `g` of degree `d` is irreducible iff `x^(q^d) = x mod g`
/// and `gcd(x^(q^(d/r)) - x, g) = 1` for every prime `r | d`.
pub fn is_irreducible(f: &Field, g: &[FieldElement]) -> Result<bool, FieldError> {
    let Some(d) = degree(g) else {
        return Ok(false);
    };
    if d == 0 {
        return Ok(false);
    }
    if d == 1 {
        return Ok(true);
    }
    let q = f.order();
    let x = vec![FieldElement::ZERO, FieldElement::ONE];
    // frob[i] = x^(q^i) mod g
    let mut frob = vec![rem(f, &x, g)?];
    for _ in 0..d {
        let next = powmod(f, frob.last().unwrap(), q, g)?;
        frob.push(next);
    }
    if frob[d] != frob[0] {
        return Ok(false);
    }
    for r in prime_factors(d as u64) {
        let h = sub(f, &frob[d / r as usize], &x);
        let common = gcd(f, &h, g)?;
        if degree(&common) != Some(0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The monic polynomial of degree `d` whose lower coefficients, read as
/// base-`q` digits (constant term least significant), form `index`.
pub fn monic_from_index(f: &Field, d: usize, mut index: u128) -> Poly {
    let q = f.order() as u128;
    let mut c: Poly = (0..d)
        .map(|_| {
            let digit = (index % q) as u64;
            index /= q;
            FieldElement::from_index(digit)
        })
        .collect();
    c.push(FieldElement::ONE);
    c
}

/// The irreducible monic polynomial of degree `d` with the lowest index.
pub fn lowest_irreducible(f: &Field, d: usize) -> Result<Poly, FieldError> {
    let count = (f.order() as u128)
        .checked_pow(d as u32)
        .unwrap_or(u128::MAX);
    for i in 0..count {
        let cand = monic_from_index(f, d, i);
        if is_irreducible(f, &cand)? {
            return Ok(cand);
        }
    }
    Err(FieldError::NoIrreducibleFound {
        order: f.order(),
        degree: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    /// Exhaustive factor check: no monic divisor of degree 1..=d/2.
    fn irreducible_by_trial(f: &Field, g: &[FieldElement]) -> bool {
        let d = degree(g).unwrap();
        for fd in 1..=d / 2 {
            let count = (f.order() as u128).pow(fd as u32);
            for i in 0..count {
                let h = monic_from_index(f, fd, i);
                if rem(f, g, &h).unwrap().is_empty() {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn rabin_matches_trial_division() {
        for (p, s, d) in [
            (2, 1, 2),
            (2, 1, 3),
            (2, 1, 4),
            (2, 1, 6),
            (3, 1, 2),
            (3, 1, 4),
            (5, 1, 3),
            (2, 2, 2),
            (2, 2, 3),
        ] {
            let f = make_field(p, s).unwrap();
            let count = (f.order() as u128).pow(d as u32);
            for i in 0..count {
                let g = monic_from_index(&f, d, i);
                assert_eq!(
                    is_irreducible(&f, &g).unwrap(),
                    irreducible_by_trial(&f, &g),
                    "{f} degree {d} index {i}"
                );
            }
        }
    }

    #[test]
    fn degree_two_over_gf2_has_one_irreducible() {
        let f2 = make_field(2, 1).unwrap();
        let irreducible: Vec<_> = (0..4u128)
            .map(|i| monic_from_index(&f2, 2, i))
            .filter(|g| irreducible_by_trial(&f2, g))
            .collect();
        assert_eq!(irreducible.len(), 1);
        assert_eq!(lowest_irreducible(&f2, 2).unwrap(), irreducible[0]);
    }

    #[test]
    fn lowest_degree_eight_over_gf2_by_trial() {
        let f2 = make_field(2, 1).unwrap();
        let first = (0..256u128)
            .map(|i| monic_from_index(&f2, 8, i))
            .find(|g| irreducible_by_trial(&f2, g))
            .unwrap();
        assert_eq!(lowest_irreducible(&f2, 8).unwrap(), first);
    }

    #[test]
    fn divmod_reconstructs() {
        let f = make_field(7, 1).unwrap();
        let a: Poly = [3, 0, 5, 1, 6]
            .iter()
            .map(|&v| FieldElement::from_index(v))
            .collect();
        let b: Poly = [2, 4, 1]
            .iter()
            .map(|&v| FieldElement::from_index(v))
            .collect();
        let (qt, r) = divmod(&f, &a, &b).unwrap();
        assert_eq!(add(&f, &mul(&f, &qt, &b), &r), trim(a));
        assert!(degree(&r).map_or(true, |d| d < 2));
    }
}
