//! Simulated storage system: ground truth `X`, stored `Y = GX + E`, and the
//! adversary's error plans.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::code::{Code, CodeError, CodeParams, CodedMatrix};
use crate::epoch;
use crate::field::{Field, FieldElement};
use crate::matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StorageError {
    #[error("{bits} bits exceed capacity of {capacity} bits")]
    DataTooLarge { bits: usize, capacity: usize },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("invalid error plan: {0}")]
    InvalidPlan(String),
    #[error("bad error model: {0}")]
    BadModel(String),
    #[error("state carries no ground truth")]
    NoGroundTruth,
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// How the adversary shapes each corrupted node's error matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorModel {
    /// One nonzero symbol.
    SingleCell,
    /// Every symbol uniform, all-zero rows redrawn.
    RandomDense,
    /// Nonzero rows are multiples of a single row.
    Rank1,
    /// Row space of rank exactly `f`.
    RankF(usize),
    /// Every row orthogonal to the given vector. Only meaningful as a
    /// negative control, since it presumes knowledge of the projection.
    NullAgainst(Vec<FieldElement>),
}

impl ErrorModel {
    pub fn name(&self) -> String {
        match self {
            ErrorModel::SingleCell => "single-cell".into(),
            ErrorModel::RandomDense => "random-dense".into(),
            ErrorModel::Rank1 => "rank1".into(),
            ErrorModel::RankF(f) => format!("rank{f}"),
            ErrorModel::NullAgainst(_) => "null-against-vector".into(),
        }
    }
}

impl fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ErrorModel {
    type Err = StorageError;

    /// Accepts `single-cell`, `random-dense` (or `dense`), `rank1`, `rank<f>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single-cell" | "cell" => Ok(ErrorModel::SingleCell),
            "random-dense" | "dense" => Ok(ErrorModel::RandomDense),
            "rank1" | "rank-1" => Ok(ErrorModel::Rank1),
            _ => s
                .strip_prefix("rank")
                .map(|r| r.trim_start_matches('-'))
                .and_then(|r| r.parse::<usize>().ok())
                .filter(|&f| f >= 1)
                .map(ErrorModel::RankF)
                .ok_or_else(|| StorageError::BadModel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeError {
    pub node: usize,
    /// `alpha x N`.
    pub matrix: Matrix,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorPlan {
    pub model: ErrorModel,
    errors: Vec<NodeError>,
    committed: bool,
}

impl ErrorPlan {
    /// Validates and wraps per-node error matrices. Ranks are computed, and
    /// must agree with the model's declared rank.
    pub fn new(
        field: &Field,
        model: ErrorModel,
        errors: Vec<(usize, Matrix)>,
    ) -> Result<ErrorPlan, StorageError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(errors.len());
        for (node, matrix) in errors {
            if !seen.insert(node) {
                return Err(StorageError::InvalidPlan(format!(
                    "node {node} listed twice"
                )));
            }
            if matrix.is_zero() {
                return Err(StorageError::InvalidPlan(format!(
                    "node {node} has an all-zero error matrix"
                )));
            }
            let rank = matrix.rank(field);
            let ok = match &model {
                ErrorModel::SingleCell => {
                    matrix.as_slice().iter().filter(|v| !v.is_zero()).count() == 1
                }
                ErrorModel::Rank1 => rank == 1,
                ErrorModel::RankF(f) => rank == *f,
                ErrorModel::RandomDense => true,
                ErrorModel::NullAgainst(v) => {
                    v.len() == matrix.cols()
                        && (0..matrix.rows()).all(|r| field.dot(matrix.row(r), v).is_zero())
                }
            };
            if !ok {
                return Err(StorageError::InvalidPlan(format!(
                    "node {node} does not fit model {model} (rank {rank})"
                )));
            }
            out.push(NodeError { node, matrix, rank });
        }
        out.sort_by_key(|e| e.node);
        Ok(ErrorPlan {
            model,
            errors: out,
            committed: false,
        })
    }

    pub fn empty() -> ErrorPlan {
        ErrorPlan {
            model: ErrorModel::RandomDense,
            errors: Vec::new(),
            committed: false,
        }
    }

    pub fn single_cell(
        field: &Field,
        params: &CodeParams,
        node: usize,
        row: usize,
        col: usize,
        value: FieldElement,
    ) -> Result<ErrorPlan, StorageError> {
        let mut m = Matrix::zeros(params.alpha, params.columns);
        if row >= params.alpha || col >= params.columns {
            return Err(StorageError::InvalidPlan(format!(
                "cell ({row}, {col}) out of range"
            )));
        }
        m.set(row, col, value);
        ErrorPlan::new(field, ErrorModel::SingleCell, vec![(node, m)])
    }

    pub fn errors(&self) -> &[NodeError] {
        &self.errors
    }

    pub fn nodes(&self) -> BTreeSet<usize> {
        self.errors.iter().map(|e| e.node).collect()
    }

    pub fn is_committed(&self) -> bool {
        self.committed
    }
}

fn nonzero_row<R: Rng + ?Sized>(field: &Field, n: usize, rng: &mut R) -> Vec<FieldElement> {
    loop {
        let row: Vec<_> = (0..n).map(|_| field.random(rng)).collect();
        if row.iter().any(|v| !v.is_zero()) {
            return row;
        }
    }
}

fn full_rank<R: Rng + ?Sized>(field: &Field, rows: usize, cols: usize, rng: &mut R) -> Matrix {
    loop {
        let m = Matrix::random(field, rows, cols, rng);
        if m.rank(field) == rows.min(cols) {
            return m;
        }
    }
}

fn sample_matrix<R: Rng + ?Sized>(
    model: &ErrorModel,
    params: &CodeParams,
    rng: &mut R,
) -> Result<Matrix, StorageError> {
    let field = &params.field;
    let (a, n) = (params.alpha, params.columns);
    Ok(match model {
        ErrorModel::SingleCell => {
            let mut m = Matrix::zeros(a, n);
            m.set(
                rng.random_range(0..a),
                rng.random_range(0..n),
                field.random_nonzero(rng),
            );
            m
        }
        ErrorModel::RandomDense => {
            let rows: Vec<_> = (0..a).map(|_| nonzero_row(field, n, rng)).collect();
            Matrix::from_rows(&rows).expect("uniform row length")
        }
        ErrorModel::Rank1 => {
            let v = nonzero_row(field, n, rng);
            let c = nonzero_row(field, a, rng);
            let rows: Vec<Vec<_>> = c
                .iter()
                .map(|&ci| v.iter().map(|&x| field.mul(ci, x)).collect())
                .collect();
            Matrix::from_rows(&rows).expect("uniform row length")
        }
        ErrorModel::RankF(f) => {
            if *f == 0 || *f > a.min(n) {
                return Err(StorageError::BadModel(format!(
                    "rank {f} impossible for {a}x{n} error blocks"
                )));
            }
            let left = full_rank(field, a, *f, rng);
            let right = full_rank(field, *f, n, rng);
            left.mul(field, &right).expect("inner dimensions agree")
        }
        ErrorModel::NullAgainst(v) => {
            if v.len() != n {
                return Err(StorageError::BadModel(
                    "target vector length differs from N".into(),
                ));
            }
            let pivot = v.iter().position(|x| !x.is_zero());
            if pivot.is_some() && n < 2 {
                return Err(StorageError::BadModel(
                    "no nonzero row is orthogonal to a nonzero vector of length 1".into(),
                ));
            }
            let mut rows = Vec::with_capacity(a);
            while rows.len() < a {
                let mut u: Vec<_> = (0..n).map(|_| field.random(rng)).collect();
                if let Some(l) = pivot {
                    u[l] = FieldElement::ZERO;
                    let s = field.dot(&u, v);
                    u[l] = field.neg(field.div(s, v[l]).expect("pivot is nonzero"));
                }
                if u.iter().any(|x| !x.is_zero()) {
                    rows.push(u);
                }
            }
            Matrix::from_rows(&rows).expect("uniform row length")
        }
    })
}

/// Draws a committed-style plan: `t` nodes chosen uniformly, matrices per
/// `model`.
pub fn sample_error_plan<R: Rng + ?Sized>(
    model: &ErrorModel,
    t: usize,
    rng: &mut R,
    params: &CodeParams,
) -> Result<ErrorPlan, StorageError> {
    if t > params.n {
        return Err(StorageError::InvalidPlan(format!(
            "t = {t} exceeds n = {}",
            params.n
        )));
    }
    let mut nodes: Vec<usize> = sample(rng, params.n, t)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    nodes.sort_unstable();
    let mut errors = Vec::with_capacity(t);
    for node in nodes {
        errors.push((node, sample_matrix(model, params, rng)?));
    }
    ErrorPlan::new(&params.field, model.clone(), errors)
}

/// Packs bytes into `X`, LSB-first, `⌊log2 q⌋` bits per symbol, row-major.
pub fn ingest(data: &[u8], params: &CodeParams) -> Result<Matrix, StorageError> {
    let width = params.field.packing_bits() as usize;
    let rows = params.message_rows();
    let capacity = capacity_bits(params);
    let bits = data.len() * 8;
    if bits > capacity {
        return Err(StorageError::DataTooLarge { bits, capacity });
    }
    let mut x = Matrix::zeros(rows, params.columns);
    let bit = |i: usize| (data[i / 8] >> (i % 8)) & 1;
    for sym in 0..bits.div_ceil(width) {
        let mut v = 0u64;
        for b in 0..width {
            let i = sym * width + b;
            if i < bits {
                v |= (bit(i) as u64) << b;
            }
        }
        x.set(
            sym / params.columns,
            sym % params.columns,
            FieldElement::from_index(v),
        );
    }
    Ok(x)
}

/// Inverse of [`ingest`]: returns `⌊capacity / 8⌋` bytes.
pub fn extract(x: &Matrix, params: &CodeParams) -> Vec<u8> {
    let width = params.field.packing_bits() as usize;
    let capacity = capacity_bits(params);
    let mut out = vec![0u8; capacity / 8];
    for i in 0..out.len() * 8 {
        let sym = i / width;
        let v = x.get(sym / params.columns, sym % params.columns).index();
        if (v >> (i % width)) & 1 == 1 {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

pub fn capacity_bits(params: &CodeParams) -> usize {
    params.message_rows() * params.columns * params.field.packing_bits() as usize
}

#[derive(Debug, Clone)]
struct GroundTruth {
    data: Matrix,
    coded: CodedMatrix,
}

/// What the storage nodes hold right now.
#[derive(Debug, Clone)]
pub struct SystemState {
    code: Code,
    stored: Vec<Matrix>,
    truth: Option<GroundTruth>,
    plans: Vec<ErrorPlan>,
    committed_at: Option<u64>,
}

impl SystemState {
    /// Encodes `x` and stores it honestly, retaining the ground truth.
    pub fn new(code: &Code, x: Matrix) -> Result<SystemState, StorageError> {
        let coded = code.encode(&x)?;
        let alpha = code.params.alpha;
        let stored = (1..=code.params.n)
            .map(|i| coded.node_slice(alpha, i))
            .collect();
        Ok(SystemState {
            code: code.clone(),
            stored,
            truth: Some(GroundTruth { data: x, coded }),
            plans: Vec::new(),
            committed_at: None,
        })
    }

    /// A state assembled from node contents alone (e.g. read from disk).
    pub fn from_nodes(code: &Code, stored: Vec<Matrix>) -> Result<SystemState, StorageError> {
        let expected = (code.params.alpha, code.params.columns);
        if stored.len() != code.params.n {
            return Err(StorageError::ShapeMismatch {
                expected: (code.params.n, 1),
                got: (stored.len(), 1),
            });
        }
        if let Some(bad) = stored.iter().find(|m| m.shape() != expected) {
            return Err(StorageError::ShapeMismatch {
                expected,
                got: bad.shape(),
            });
        }
        Ok(SystemState {
            code: code.clone(),
            stored,
            truth: None,
            plans: Vec::new(),
            committed_at: None,
        })
    }

    pub fn code(&self) -> &Code {
        &self.code
    }

    pub fn params(&self) -> &CodeParams {
        &self.code.params
    }

    pub fn node(&self, node: usize) -> Result<&Matrix, StorageError> {
        self.code.params.check_node(node)?;
        Ok(&self.stored[node - 1])
    }

    pub fn nodes(&self) -> &[Matrix] {
        &self.stored
    }

    pub fn ground_truth(&self) -> Option<&Matrix> {
        self.truth.as_ref().map(|t| &t.data)
    }

    pub fn coded_truth(&self) -> Option<&CodedMatrix> {
        self.truth.as_ref().map(|t| &t.coded)
    }

    pub fn plans(&self) -> &[ErrorPlan] {
        &self.plans
    }

    /// Logical time of the latest commitment, if any.
    pub fn committed_at(&self) -> Option<u64> {
        self.committed_at
    }

    /// Adds each planned error matrix to its node's slice and commits the
    /// plan.
    pub fn corrupt(&mut self, mut plan: ErrorPlan) -> Result<(), StorageError> {
        let field = self.code.params.field.clone();
        let expected = (self.code.params.alpha, self.code.params.columns);
        for e in plan.errors() {
            self.code.params.check_node(e.node)?;
            if e.matrix.shape() != expected {
                return Err(StorageError::ShapeMismatch {
                    expected,
                    got: e.matrix.shape(),
                });
            }
        }
        for e in plan.errors() {
            let slot = &mut self.stored[e.node - 1];
            *slot = slot.add(&field, &e.matrix).expect("shape checked");
        }
        plan.committed = true;
        self.committed_at = Some(epoch::tick());
        self.plans.push(plan);
        Ok(())
    }

    /// Overwrites a node's slice outright, as a lying or failed disk would.
    pub fn overwrite(&mut self, node: usize, content: Matrix) -> Result<(), StorageError> {
        self.code.params.check_node(node)?;
        let expected = (self.code.params.alpha, self.code.params.columns);
        if content.shape() != expected {
            return Err(StorageError::ShapeMismatch {
                expected,
                got: content.shape(),
            });
        }
        self.stored[node - 1] = content;
        self.committed_at = Some(epoch::tick());
        Ok(())
    }

    /// `stored - GX` for one node.
    pub fn error_matrix(&self, node: usize) -> Result<Matrix, StorageError> {
        let truth = self.truth.as_ref().ok_or(StorageError::NoGroundTruth)?;
        let honest = truth.coded.node_slice(self.code.params.alpha, node);
        Ok(self
            .node(node)?
            .sub(&self.code.params.field, &honest)
            .expect("same shape"))
    }

    /// Nodes whose stored slice differs from the honest encoding.
    pub fn true_error_set(&self) -> Result<BTreeSet<usize>, StorageError> {
        let truth = self.truth.as_ref().ok_or(StorageError::NoGroundTruth)?;
        let alpha = self.code.params.alpha;
        Ok((1..=self.code.params.n)
            .filter(|&i| self.stored[i - 1] != truth.coded.node_slice(alpha, i))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::make_code;
    use crate::field::make_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Code, SystemState, ChaCha8Rng) {
        let f = make_field(5, 1).unwrap();
        let code = make_code(4, 2, &f, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Matrix::random(&f, 4, 3, &mut rng);
        let state = SystemState::new(&code, x).unwrap();
        (code, state, rng)
    }

    #[test]
    fn ingest_examples() {
        let (code, _, _) = setup();
        let p = &code.params;
        assert_eq!(ingest(&[], p).unwrap(), Matrix::zeros(4, 3));
        // 0xAB = 1010_1011, LSB first in 2-bit symbols: 11, 01, 01, 01
        let x = ingest(&[0xAB], p).unwrap();
        let expected = Matrix::from_indices(4, 3, &[3, 2, 2, 2, 0, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(x, expected);
        assert_eq!(capacity_bits(p), 24);
        let full = [0x12, 0xFE, 0x7A];
        assert_eq!(extract(&ingest(&full, p).unwrap(), p), full.to_vec());
        assert_eq!(
            ingest(&[0; 4], p),
            Err(StorageError::DataTooLarge {
                bits: 32,
                capacity: 24
            })
        );
    }

    #[test]
    fn corrupt_single_cell() {
        let (code, mut state, _) = setup();
        let f = code.field().clone();
        let before = state.clone();
        state.corrupt(ErrorPlan::empty()).unwrap();
        assert_eq!(state.nodes(), before.nodes());
        let plan =
            ErrorPlan::single_cell(&f, &code.params, 1, 0, 1, FieldElement::from_index(3)).unwrap();
        state.corrupt(plan).unwrap();
        let diffs: usize = (1..=4)
            .map(|i| {
                let (a, b) = (state.node(i).unwrap(), before.node(i).unwrap());
                a.as_slice()
                    .iter()
                    .zip(b.as_slice())
                    .filter(|(x, y)| x != y)
                    .count()
            })
            .sum();
        assert_eq!(diffs, 1);
        assert_eq!(state.true_error_set().unwrap(), BTreeSet::from([1]));
        assert!(state.plans()[1].is_committed());
    }

    #[test]
    fn worked_example_pattern() {
        let (code, mut state, _) = setup();
        let f = code.field().clone();
        let e = Matrix::from_indices(2, 3, &[1, 2, 3, 4, 0, 1]).unwrap();
        let plan = ErrorPlan::new(&f, ErrorModel::RandomDense, vec![(1, e.clone())]).unwrap();
        state.corrupt(plan).unwrap();
        assert_eq!(state.error_matrix(1).unwrap(), e);
        for i in 2..=4 {
            assert!(state.error_matrix(i).unwrap().is_zero());
        }
    }

    #[test]
    fn zero_error_rejected_and_no_truth() {
        let (code, _, _) = setup();
        let f = code.field().clone();
        assert!(matches!(
            ErrorPlan::new(&f, ErrorModel::RandomDense, vec![(3, Matrix::zeros(2, 3))]),
            Err(StorageError::InvalidPlan(_))
        ));
        let bare = SystemState::from_nodes(&code, vec![Matrix::zeros(2, 3); 4]).unwrap();
        assert_eq!(bare.true_error_set(), Err(StorageError::NoGroundTruth));
    }

    #[test]
    fn overwriting_with_honest_content_is_not_an_error() {
        let (_, mut state, _) = setup();
        let same = state.node(3).unwrap().clone();
        state.overwrite(3, same).unwrap();
        assert!(state.true_error_set().unwrap().is_empty());
    }

    #[test]
    fn sampled_plans_have_truthful_ranks() {
        let f = make_field(7, 1).unwrap();
        let code = make_code(7, 3, &f, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ones = vec![FieldElement::ONE; 5];
        let models = [
            ErrorModel::SingleCell,
            ErrorModel::RandomDense,
            ErrorModel::Rank1,
            ErrorModel::RankF(2),
            ErrorModel::RankF(4),
            ErrorModel::NullAgainst(ones.clone()),
        ];
        for model in &models {
            for _ in 0..50 {
                let plan = sample_error_plan(model, 2, &mut rng, &code.params).unwrap();
                assert_eq!(plan.nodes().len(), 2);
                for e in plan.errors() {
                    assert_eq!(e.matrix.rank(&f), e.rank);
                    match model {
                        ErrorModel::Rank1 | ErrorModel::SingleCell => assert_eq!(e.rank, 1),
                        ErrorModel::RankF(r) => assert_eq!(e.rank, *r),
                        ErrorModel::NullAgainst(v) => {
                            for r in 0..e.matrix.rows() {
                                assert!(f.dot(e.matrix.row(r), v).is_zero());
                            }
                        }
                        ErrorModel::RandomDense => {
                            for r in 0..e.matrix.rows() {
                                assert!(e.matrix.row(r).iter().any(|v| !v.is_zero()));
                            }
                        }
                    }
                }
            }
        }
        assert!(matches!(
            sample_error_plan(&ErrorModel::RankF(5), 1, &mut rng, &code.params),
            Err(StorageError::BadModel(_))
        ));
    }

    #[test]
    fn parse_models() {
        assert_eq!("rank1".parse::<ErrorModel>().unwrap(), ErrorModel::Rank1);
        assert_eq!("rank3".parse::<ErrorModel>().unwrap(), ErrorModel::RankF(3));
        assert_eq!(
            "dense".parse::<ErrorModel>().unwrap(),
            ErrorModel::RandomDense
        );
        assert!("banana".parse::<ErrorModel>().is_err());
        assert!("rank0".parse::<ErrorModel>().is_err());
    }
}
