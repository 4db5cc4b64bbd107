//! Row-major dense matrices over a [`Field`].

use rand::Rng;

use crate::field::{Field, FieldElement};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![FieldElement::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, FieldElement::ONE);
        }
        m
    }

    /// Returns `None` when the data length is not `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<FieldElement>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<FieldElement>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Convenience constructor from raw element indices.
    pub fn from_indices(rows: usize, cols: usize, data: &[u64]) -> Option<Self> {
        Self::from_vec(
            rows,
            cols,
            data.iter().map(|&v| FieldElement::from_index(v)).collect(),
        )
    }

    pub fn random<R: Rng + ?Sized>(field: &Field, rows: usize, cols: usize, rng: &mut R) -> Self {
        Matrix {
            rows,
            cols,
            data: (0..rows * cols).map(|_| field.random(rng)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[FieldElement] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [FieldElement] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<FieldElement> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[FieldElement] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Rows `start..start + count` as a new matrix.
    pub fn row_block(&self, start: usize, count: usize) -> Matrix {
        Matrix {
            rows: count,
            cols: self.cols,
            data: self.data[start * self.cols..(start + count) * self.cols].to_vec(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn vstack(blocks: &[Matrix]) -> Option<Matrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return None;
        }
        Some(Matrix {
            rows: blocks.iter().map(|b| b.rows).sum(),
            cols,
            data: blocks.iter().flat_map(|b| b.data.iter().copied()).collect(),
        })
    }

    pub fn add(&self, field: &Field, other: &Matrix) -> Option<Matrix> {
        self.zip_with(other, |a, b| field.add(a, b))
    }

    pub fn sub(&self, field: &Field, other: &Matrix) -> Option<Matrix> {
        self.zip_with(other, |a, b| field.sub(a, b))
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: impl Fn(FieldElement, FieldElement) -> FieldElement,
    ) -> Option<Matrix> {
        if self.shape() != other.shape() {
            return None;
        }
        Some(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    pub fn mul(&self, field: &Field, other: &Matrix) -> Option<Matrix> {
        if self.cols != other.rows {
            return None;
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = field.add(out.get(i, j), field.mul(a, other.get(l, j)));
                    out.set(i, j, v);
                }
            }
        }
        Some(out)
    }

    pub fn mul_vec(&self, field: &Field, v: &[FieldElement]) -> Option<Vec<FieldElement>> {
        if v.len() != self.cols {
            return None;
        }
        Some((0..self.rows).map(|r| field.dot(self.row(r), v)).collect())
    }

    /// Reduces to row echelon form in place and returns the pivot columns.
    pub fn row_reduce(&mut self, field: &Field) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = field.inv(self.get(r, c)).expect("pivot is nonzero");
            for j in 0..self.cols {
                let v = field.mul(self.get(r, j), inv);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                for j in 0..self.cols {
                    let v = field.sub(self.get(i, j), field.mul(factor, self.get(r, j)));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self, field: &Field) -> usize {
        self.clone().row_reduce(field).len()
    }

    pub fn inverse(&self, field: &Field) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, n + i, FieldElement::ONE);
        }
        let pivots = aug.row_reduce(field);
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        let mut inv = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, aug.get(i, n + j));
            }
        }
        Some(inv)
    }

    /// Some solution of `self · x = b` (free variables set to zero), or
    /// `None` when the system is inconsistent.
    pub fn solve(&self, field: &Field, b: &[FieldElement]) -> Option<Vec<FieldElement>> {
        if b.len() != self.rows {
            return None;
        }
        let n = self.cols;
        let mut aug = Matrix::zeros(self.rows, n + 1);
        for i in 0..self.rows {
            aug.row_mut(i)[..n].copy_from_slice(self.row(i));
            aug.set(i, n, b[i]);
        }
        let pivots = aug.row_reduce(field);
        if pivots.last() == Some(&n) {
            return None;
        }
        let mut x = vec![FieldElement::ZERO; n];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = aug.get(r, n);
        }
        Some(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl std::fmt::Display for Matrix {
    /// One row per line, symbols by index.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|v| v.index().to_string()).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inverse_roundtrip() {
        let f = make_field(7, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut found = 0;
        while found < 20 {
            let a = Matrix::random(&f, 4, 4, &mut rng);
            if let Some(inv) = a.inverse(&f) {
                assert_eq!(a.mul(&f, &inv).unwrap(), Matrix::identity(4));
                found += 1;
            } else {
                assert!(a.rank(&f) < 4);
            }
        }
    }

    #[test]
    fn solve_detects_inconsistency() {
        let f = make_field(5, 1).unwrap();
        let a = Matrix::from_indices(2, 2, &[1, 2, 2, 4]).unwrap();
        assert!(a
            .solve(&f, &[FieldElement::ONE, FieldElement::ONE])
            .is_none());
        let x = a
            .solve(
                &f,
                &[FieldElement::from_index(1), FieldElement::from_index(2)],
            )
            .unwrap();
        assert_eq!(
            a.mul_vec(&f, &x).unwrap(),
            vec![FieldElement::from_index(1), FieldElement::from_index(2)]
        );
    }

    #[test]
    fn rank_of_outer_product_is_one() {
        let f = make_field(3, 2).unwrap();
        let v: Vec<_> = [1, 5, 7]
            .iter()
            .map(|&i| FieldElement::from_index(i))
            .collect();
        let scaled = |c: u64| {
            v.iter()
                .map(|&x| f.mul(FieldElement::from_index(c), x))
                .collect::<Vec<_>>()
        };
        let m = Matrix::from_rows(&[scaled(1), scaled(4), scaled(0)]).unwrap();
        assert_eq!(m.rank(&f), 1);
        assert_eq!(Matrix::zeros(3, 3).rank(&f), 0);
        assert_eq!(Matrix::identity(3).rank(&f), 3);
    }
}
