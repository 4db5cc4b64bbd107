//! The `(n, k)` MDS code in N-extended layout.
//!
//! Every node stores `alpha = n - k` rows. The message matrix `X` has
//! `k * alpha` rows split into `alpha` sub-row groups of `k` rows; group `j`
//! is encoded by a systematic Reed–Solomon `(n, k)` code and node `i` keeps
//! symbol `i` of every group's codeword as its row `j`. Any `k` nodes
//! therefore hold `k` symbols of each group, which is enough to decode.
//!
//! Node ids are 1-based throughout the public API.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use thiserror::Error;

use crate::field::{Field, FieldElement};
use crate::matrix::Matrix;
use crate::poly;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("field of order {q} is too small for {n} evaluation points")]
    FieldTooSmall { n: usize, q: u64 },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("need {need} distinct nodes, got {got}")]
    TooFewNodes { need: usize, got: usize },
    #[error("node {0} listed twice")]
    DuplicateNode(usize),
    #[error("node id {0} out of range")]
    BadNodeId(usize),
    #[error("decoding system is singular")]
    SingularSystem,
    #[error("node {0} is inconsistent with the others")]
    InconsistentNode(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    /// Rows per node, `n - k`.
    pub alpha: usize,
    /// `⌊alpha / 2⌋`, the number of node errors the code can locate.
    pub t1: usize,
    /// Number of columns `N`, i.e. how many times the base code is reused.
    pub columns: usize,
    pub field: Field,
    pub eval_points: Vec<FieldElement>,
}

impl CodeParams {
    pub fn message_rows(&self) -> usize {
        self.k * self.alpha
    }

    pub fn coded_rows(&self) -> usize {
        self.n * self.alpha
    }

    pub fn check_node(&self, node: usize) -> Result<(), CodeError> {
        if (1..=self.n).contains(&node) {
            Ok(())
        } else {
            Err(CodeError::BadNodeId(node))
        }
    }

    /// The 1-based row set `R_i` owned by `node`.
    pub fn node_rows(&self, node: usize) -> Result<RangeInclusive<usize>, CodeError> {
        self.check_node(node)?;
        Ok((node - 1) * self.alpha + 1..=node * self.alpha)
    }
}

/// Per-group Reed–Solomon generator. `symbols` is `n x k`: entry `(i, d)` is
/// the `d`-th Lagrange basis polynomial evaluated at point `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    alpha: usize,
    symbols: Matrix,
}

impl GeneratorMatrix {
    /// The `n x k` Reed–Solomon generator shared by every group.
    pub fn group_generator(&self) -> &Matrix {
        &self.symbols
    }

    /// The full `n·alpha x k·alpha` matrix `G`. Row `i·alpha + j` reads only
    /// message rows `j·k .. j·k + k`.
    pub fn to_dense(&self) -> Matrix {
        let (n, k) = self.symbols.shape();
        let a = self.alpha;
        let mut g = Matrix::zeros(n * a, k * a);
        for i in 0..n {
            for j in 0..a {
                for d in 0..k {
                    g.set(i * a + j, j * k + d, self.symbols.get(i, d));
                }
            }
        }
        g
    }
}

/// `G·X`, `n·alpha x N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedMatrix(Matrix);

impl CodedMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// The `alpha x N` slice stored by `node` (1-based).
    pub fn node_slice(&self, alpha: usize, node: usize) -> Matrix {
        self.0.row_block((node - 1) * alpha, alpha)
    }
}

/// Result of decoding a hash word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HashDecode {
    Decoded {
        /// The `k·alpha` message-hash vector `X·r`, group-major.
        message: Vec<FieldElement>,
        /// The nearest codeword, `n·alpha` symbols in node-block order.
        codeword: Vec<FieldElement>,
        error_nodes: BTreeSet<usize>,
    },
    Undecodable,
}

/// Which per-group error locator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Decoder {
    #[default]
    BerlekampWelch,
    /// Tries every error-position set of size `<= t1`.
    Subsets,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Code {
    pub params: CodeParams,
    pub generator: GeneratorMatrix,
}

/// Evaluation points `0, 1, g, g^2, ...` for a primitive element `g`.
fn evaluation_points(field: &Field, n: usize) -> Vec<FieldElement> {
    let g = field.primitive_element();
    let mut pts = vec![FieldElement::ZERO];
    let mut cur = FieldElement::ONE;
    while pts.len() < n {
        pts.push(cur);
        cur = field.mul(cur, g);
    }
    pts.truncate(n);
    pts
}

pub fn make_code(n: usize, k: usize, field: &Field, columns: usize) -> Result<Code, CodeError> {
    if k == 0 || k >= n {
        return Err(CodeError::InvalidParams(format!(
            "need 1 <= k < n, got n={n} k={k}"
        )));
    }
    if columns == 0 {
        return Err(CodeError::InvalidParams("N must be at least 1".into()));
    }
    if n as u64 > field.order() {
        return Err(CodeError::FieldTooSmall {
            n,
            q: field.order(),
        });
    }
    let alpha = n - k;
    let points = evaluation_points(field, n);
    let mut symbols = Matrix::zeros(n, k);
    for (i, &x) in points.iter().enumerate() {
        for d in 0..k {
            let mut num = FieldElement::ONE;
            let mut den = FieldElement::ONE;
            for e in (0..k).filter(|&e| e != d) {
                num = field.mul(num, field.sub(x, points[e]));
                den = field.mul(den, field.sub(points[d], points[e]));
            }
            let l = field.div(num, den).map_err(|_| CodeError::SingularSystem)?;
            symbols.set(i, d, l);
        }
    }
    Ok(Code {
        params: CodeParams {
            n,
            k,
            alpha,
            t1: alpha / 2,
            columns,
            field: field.clone(),
            eval_points: points,
        },
        generator: GeneratorMatrix { alpha, symbols },
    })
}

impl Code {
    pub fn field(&self) -> &Field {
        &self.params.field
    }

    pub fn node_rows(&self, node: usize) -> Result<RangeInclusive<usize>, CodeError> {
        self.params.node_rows(node)
    }

    /// Encodes one group's `k` message symbols into `n` codeword symbols.
    pub fn encode_group(&self, message: &[FieldElement]) -> Vec<FieldElement> {
        self.generator
            .symbols
            .mul_vec(self.field(), message)
            .expect("message has k symbols")
    }

    /// Encodes a message vector of length `k·alpha` (e.g. `X·r`) into the
    /// `n·alpha` node-block-ordered word.
    pub fn encode_vector(&self, message: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        let CodeParams { n, k, alpha, .. } = self.params;
        if message.len() != k * alpha {
            return Err(CodeError::ShapeMismatch {
                expected: (k * alpha, 1),
                got: (message.len(), 1),
            });
        }
        let mut out = vec![FieldElement::ZERO; n * alpha];
        for j in 0..alpha {
            let word = self.encode_group(&message[j * k..(j + 1) * k]);
            for (i, s) in word.into_iter().enumerate() {
                out[i * alpha + j] = s;
            }
        }
        Ok(out)
    }

    pub fn encode(&self, x: &Matrix) -> Result<CodedMatrix, CodeError> {
        let CodeParams {
            n,
            k,
            alpha,
            columns,
            ..
        } = self.params;
        if x.shape() != (k * alpha, columns) {
            return Err(CodeError::ShapeMismatch {
                expected: (k * alpha, columns),
                got: x.shape(),
            });
        }
        let f = self.field();
        let mut out = Matrix::zeros(n * alpha, columns);
        for i in 0..n {
            let coeffs = self.generator.symbols.row(i);
            for j in 0..alpha {
                let row = out.row_mut(i * alpha + j);
                for (d, &c) in coeffs.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    for (dst, &src) in row.iter_mut().zip(x.row(j * k + d)) {
                        *dst = f.add(*dst, f.mul(c, src));
                    }
                }
            }
        }
        Ok(CodedMatrix(out))
    }

    /// Recovers `X` from the slices of at least `k` nodes. The first `k`
    /// distinct nodes are decoded; any further nodes are checked against the
    /// re-encoding.
    pub fn erasure_decode(&self, nodes: &[(usize, Matrix)]) -> Result<Matrix, CodeError> {
        let CodeParams {
            k, alpha, columns, ..
        } = self.params;
        let mut seen = BTreeSet::new();
        for (id, slice) in nodes {
            self.params.check_node(*id)?;
            if !seen.insert(*id) {
                return Err(CodeError::DuplicateNode(*id));
            }
            if slice.shape() != (alpha, columns) {
                return Err(CodeError::ShapeMismatch {
                    expected: (alpha, columns),
                    got: slice.shape(),
                });
            }
        }
        if nodes.len() < k {
            return Err(CodeError::TooFewNodes {
                need: k,
                got: nodes.len(),
            });
        }
        let f = self.field();
        let chosen = &nodes[..k];
        let idx: Vec<usize> = chosen.iter().map(|(id, _)| id - 1).collect();
        let inv = self
            .generator
            .symbols
            .select_rows(&idx)
            .inverse(f)
            .ok_or(CodeError::SingularSystem)?;
        let mut x = Matrix::zeros(k * alpha, columns);
        for j in 0..alpha {
            for d in 0..k {
                let row = x.row_mut(j * k + d);
                for (s, (_, slice)) in chosen.iter().enumerate() {
                    let c = inv.get(d, s);
                    if c.is_zero() {
                        continue;
                    }
                    for (dst, &src) in row.iter_mut().zip(slice.row(j)) {
                        *dst = f.add(*dst, f.mul(c, src));
                    }
                }
            }
        }
        if nodes.len() > k {
            let coded = self.encode(&x)?;
            for (id, slice) in &nodes[k..] {
                if coded.node_slice(alpha, *id) != *slice {
                    return Err(CodeError::InconsistentNode(*id));
                }
            }
        }
        Ok(x)
    }

    /// Locates node errors in a hash word `H` of `n·alpha` symbols.
    pub fn hash_word_decode(&self, h: &[FieldElement]) -> Result<HashDecode, CodeError> {
        self.hash_word_decode_with(h, Decoder::default())
    }

    pub fn hash_word_decode_with(
        &self,
        h: &[FieldElement],
        decoder: Decoder,
    ) -> Result<HashDecode, CodeError> {
        let CodeParams {
            n, k, alpha, t1, ..
        } = self.params;
        if h.len() != n * alpha {
            return Err(CodeError::ShapeMismatch {
                expected: (n * alpha, 1),
                got: (h.len(), 1),
            });
        }
        let mut message = vec![FieldElement::ZERO; k * alpha];
        let mut codeword = vec![FieldElement::ZERO; n * alpha];
        let mut error_nodes = BTreeSet::new();
        for j in 0..alpha {
            let word: Vec<FieldElement> = (0..n).map(|i| h[i * alpha + j]).collect();
            let decoded = match decoder {
                Decoder::BerlekampWelch => self.decode_group_bw(&word),
                Decoder::Subsets => self.decode_group_subsets(&word),
            };
            let Some(cw) = decoded else {
                return Ok(HashDecode::Undecodable);
            };
            for i in 0..n {
                if cw[i] != word[i] {
                    error_nodes.insert(i + 1);
                }
                codeword[i * alpha + j] = cw[i];
            }
            message[j * k..(j + 1) * k].copy_from_slice(&cw[..k]);
        }
        // Each group is within t1 of a codeword; the node-level word is only
        // within t1 node blocks if the union of error positions is.
        if error_nodes.len() > t1 {
            return Ok(HashDecode::Undecodable);
        }
        Ok(HashDecode::Decoded {
            message,
            codeword,
            error_nodes,
        })
    }

    /// Berlekamp–Welch: find monic `E` of degree `t1` and `Q` of degree
    /// `< k + t1` with `Q(a_i) = y_i E(a_i)`, then `P = Q / E`.
    pub fn decode_group_bw(&self, y: &[FieldElement]) -> Option<Vec<FieldElement>> {
        let CodeParams { n, k, t1: e, .. } = self.params;
        let f = self.field();
        let pts = &self.params.eval_points;
        let unknowns = k + 2 * e;
        let mut a = Matrix::zeros(n, unknowns);
        let mut rhs = vec![FieldElement::ZERO; n];
        for i in 0..n {
            let mut pw = FieldElement::ONE;
            for j in 0..k + e {
                a.set(i, j, pw);
                if j < e {
                    a.set(i, k + e + j, f.neg(f.mul(y[i], pw)));
                }
                pw = f.mul(pw, pts[i]);
            }
            rhs[i] = f.mul(y[i], f.pow(pts[i], e as u64));
        }
        let sol = a.solve(f, &rhs)?;
        let q_poly = poly::trim(sol[..k + e].to_vec());
        let mut e_poly = sol[k + e..].to_vec();
        e_poly.push(FieldElement::ONE);
        let (p, r) = poly::divmod(f, &q_poly, &e_poly).ok()?;
        if !r.is_empty() || poly::degree(&p).is_some_and(|d| d >= k) {
            return None;
        }
        let cw: Vec<FieldElement> = pts.iter().map(|&x| poly::eval(f, &p, x)).collect();
        let dist = cw.iter().zip(y).filter(|(a, b)| a != b).count();
        (dist <= e).then_some(cw)
    }

    /// Tries every candidate error set of size `<= t1`: decode from `k`
    /// positions outside it and accept if all other positions agree.
    pub fn decode_group_subsets(&self, y: &[FieldElement]) -> Option<Vec<FieldElement>> {
        let CodeParams { n, k, t1, .. } = self.params;
        let f = self.field();
        let mut found: Option<Vec<FieldElement>> = None;
        for size in 0..=t1 {
            for errs in combinations(n, size) {
                let keep: Vec<usize> = (0..n).filter(|i| !errs.contains(i)).collect();
                let basis = &keep[..k];
                let inv = self.generator.symbols.select_rows(basis).inverse(f)?;
                let sym: Vec<FieldElement> = basis.iter().map(|&i| y[i]).collect();
                let msg = inv.mul_vec(f, &sym)?;
                let cw = self.encode_group(&msg);
                if keep.iter().all(|&i| cw[i] == y[i]) {
                    match &found {
                        None => found = Some(cw),
                        Some(prev) if *prev == cw => {}
                        Some(_) => return None,
                    }
                }
            }
        }
        found
    }
}

/// All `size`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= n {
        rec(0, n, size, &mut Vec::new(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(v: u64) -> FieldElement {
        FieldElement::from_index(v)
    }

    #[test]
    fn parameters() {
        let f7 = make_field(7, 1).unwrap();
        let c = make_code(6, 3, &f7, 4).unwrap();
        assert_eq!((c.params.alpha, c.params.t1), (3, 1));
        let f5 = make_field(5, 1).unwrap();
        let c = make_code(4, 2, &f5, 3).unwrap();
        assert_eq!(c.generator.to_dense().shape(), (8, 4));
        assert_eq!(c.node_rows(1).unwrap(), 1..=2);
        assert_eq!(c.node_rows(4).unwrap(), 7..=8);
        assert_eq!(c.node_rows(5), Err(CodeError::BadNodeId(5)));
        let f5b = make_field(5, 1).unwrap();
        let c = make_code(4, 3, &f5b, 1).unwrap();
        assert_eq!(c.node_rows(3).unwrap(), 3..=3);
    }

    #[test]
    fn errors() {
        let f5 = make_field(5, 1).unwrap();
        assert_eq!(
            make_code(6, 2, &f5, 1),
            Err(CodeError::FieldTooSmall { n: 6, q: 5 })
        );
        assert!(matches!(
            make_code(3, 3, &f5, 1),
            Err(CodeError::InvalidParams(_))
        ));
        let c = make_code(4, 2, &f5, 3).unwrap();
        assert!(matches!(
            c.encode(&Matrix::zeros(3, 3)),
            Err(CodeError::ShapeMismatch { .. })
        ));
        let x = Matrix::zeros(4, 3);
        let gx = c.encode(&x).unwrap();
        let one = vec![(1, gx.node_slice(2, 1))];
        assert_eq!(
            c.erasure_decode(&one),
            Err(CodeError::TooFewNodes { need: 2, got: 1 })
        );
        let dup = vec![(1, gx.node_slice(2, 1)), (1, gx.node_slice(2, 1))];
        assert_eq!(c.erasure_decode(&dup), Err(CodeError::DuplicateNode(1)));
    }

    #[test]
    fn replication_code() {
        let f2 = make_field(2, 1).unwrap();
        let c = make_code(2, 1, &f2, 1).unwrap();
        let x = Matrix::from_indices(1, 1, &[1]).unwrap();
        let gx = c.encode(&x).unwrap();
        assert_eq!(gx.matrix(), &Matrix::from_indices(2, 1, &[1, 1]).unwrap());
    }

    #[test]
    fn systematic_layout_and_constant_message() {
        let f5 = make_field(5, 1).unwrap();
        let c = make_code(4, 2, &f5, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Matrix::random(&f5, 4, 3, &mut rng);
        let gx = c.encode(&x).unwrap();
        // nodes 1 and 2 hold group j's message rows as their row j
        assert_eq!(gx.node_slice(2, 1).row(0), x.row(0));
        assert_eq!(gx.node_slice(2, 2).row(0), x.row(1));
        assert_eq!(gx.node_slice(2, 1).row(1), x.row(2));
        assert_eq!(gx.node_slice(2, 2).row(1), x.row(3));

        // constant polynomial 1 in group 1: systematic message (1, 1)
        let word = c.encode_group(&[e(1), e(1)]);
        assert_eq!(word, vec![e(1); 4]);
    }

    #[test]
    fn group_encoding_matches_polynomial_evaluation() {
        let f7 = make_field(7, 1).unwrap();
        let c = make_code(6, 3, &f7, 1).unwrap();
        let pts = &c.params.eval_points;
        // P(x) = 2 + 3x + x^2 evaluated at every point
        let p = [e(2), e(3), e(1)];
        let evals: Vec<_> = pts.iter().map(|&x| poly::eval(&f7, &p, x)).collect();
        assert_eq!(c.encode_group(&evals[..3]), evals);
    }

    #[test]
    fn nodes_3_and_4_decode() {
        let f5 = make_field(5, 1).unwrap();
        let c = make_code(4, 2, &f5, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Matrix::random(&f5, 4, 3, &mut rng);
        let gx = c.encode(&x).unwrap();
        let nodes = vec![(3, gx.node_slice(2, 3)), (4, gx.node_slice(2, 4))];
        assert_eq!(c.erasure_decode(&nodes).unwrap(), x);
    }

    #[test]
    fn extra_nodes_are_checked() {
        let f5 = make_field(5, 1).unwrap();
        let c = make_code(4, 2, &f5, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Matrix::random(&f5, 4, 3, &mut rng);
        let gx = c.encode(&x).unwrap();
        let mut bad = gx.node_slice(2, 4);
        bad.set(0, 0, f5.add(bad.get(0, 0), e(1)));
        let nodes = vec![(1, gx.node_slice(2, 1)), (2, gx.node_slice(2, 2)), (4, bad)];
        assert_eq!(
            c.erasure_decode(&nodes),
            Err(CodeError::InconsistentNode(4))
        );
    }

    #[test]
    fn clean_hash_word_has_no_errors() {
        let f7 = make_field(7, 1).unwrap();
        let c = make_code(6, 3, &f7, 1).unwrap();
        let msg: Vec<_> = (0..9).map(|i| e(i % 7)).collect();
        let h = c.encode_vector(&msg).unwrap();
        match c.hash_word_decode(&h).unwrap() {
            HashDecode::Decoded {
                message,
                error_nodes,
                ..
            } => {
                assert_eq!(message, msg);
                assert!(error_nodes.is_empty());
            }
            HashDecode::Undecodable => panic!("clean word must decode"),
        }
    }

    #[test]
    fn garbage_block_is_located() {
        let f5 = make_field(5, 1).unwrap();
        let c = make_code(4, 2, &f5, 1).unwrap();
        let msg = vec![e(3), e(1), e(4), e(2)];
        let mut h = c.encode_vector(&msg).unwrap();
        h[4] = f5.add(h[4], e(2));
        h[5] = f5.add(h[5], e(1));
        match c.hash_word_decode(&h).unwrap() {
            HashDecode::Decoded {
                message,
                error_nodes,
                ..
            } => {
                assert_eq!(message, msg);
                assert_eq!(error_nodes, BTreeSet::from([3]));
            }
            HashDecode::Undecodable => panic!(),
        }
    }

    #[test]
    fn two_blocks_in_different_groups_exceed_t1() {
        let f5 = make_field(5, 1).unwrap();
        let c = make_code(4, 2, &f5, 1).unwrap();
        let mut h = c.encode_vector(&[e(0); 4]).unwrap();
        // node 1 group 1 and node 2 group 2: each group alone has one error
        h[0] = e(1);
        h[3] = e(1);
        assert_eq!(c.hash_word_decode(&h).unwrap(), HashDecode::Undecodable);
        assert_eq!(
            c.hash_word_decode_with(&h, Decoder::Subsets).unwrap(),
            HashDecode::Undecodable
        );
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(6, 3).len(), 20);
        assert_eq!(combinations(4, 0), vec![Vec::<usize>::new()]);
        assert!(combinations(2, 3).is_empty());
    }
}
