//! Binary containers for data, node slices, hashes, projections and seeds.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   "NXMDS1"                  6 bytes
//! version 1                         1 byte
//! kind    payload kind              1 byte
//! p s n k N                         5 x u64
//! modulus s+1 coefficients in F_p   each ⌈⌈log2 p⌉/8⌉ bytes
//! aux     node id or m              u64
//! payload symbols, row-major        each ⌈⌈log2 q⌉/8⌉ bytes
//! ```
//!
//! `aux` holds the node id for node slices and hash blocks, the extension
//! degree for seeds, and zero otherwise.

use thiserror::Error;

use crate::code::{make_code, Code, CodeError};
use crate::field::{make_field, Field, FieldElement, FieldError};
use crate::hashing::PrgSeed;
use crate::matrix::Matrix;

pub const MAGIC: &[u8; 6] = b"NXMDS1";
pub const VERSION: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic")]
    BadMagic,
    #[error("format version {found}, expected {VERSION}")]
    VersionMismatch { found: u8 },
    #[error("truncated payload: need {need} bytes, have {have}")]
    TruncatedPayload { need: usize, have: usize },
    #[error("{0} trailing bytes")]
    TrailingBytes(usize),
    #[error("unknown payload kind {0}")]
    UnknownKind(u8),
    #[error("stored modulus does not match the canonical one for this field")]
    ModulusMismatch,
    #[error("symbol {value} is not an element of F_{q}")]
    SymbolOutOfRange { value: u64, q: u64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum PayloadKind {
    Data = 1,
    Node = 2,
    HashBlock = 3,
    Hashes = 4,
    Projection = 5,
    Seed = 6,
}

impl PayloadKind {
    fn from_byte(b: u8) -> Result<Self, FormatError> {
        Ok(match b {
            1 => PayloadKind::Data,
            2 => PayloadKind::Node,
            3 => PayloadKind::HashBlock,
            4 => PayloadKind::Hashes,
            5 => PayloadKind::Projection,
            6 => PayloadKind::Seed,
            other => return Err(FormatError::UnknownKind(other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    /// The `k(n-k) x N` data matrix.
    Data(Matrix),
    /// One node's `(n-k) x N` slice.
    Node { node: usize, slice: Matrix },
    /// One node's `n-k` hash symbols.
    HashBlock {
        node: usize,
        symbols: Vec<FieldElement>,
    },
    /// All `n(n-k)` hash symbols.
    Hashes(Vec<FieldElement>),
    /// An expanded or uniform length-`N` vector.
    Projection(Vec<FieldElement>),
    /// Seed coordinates `x` then `y`, `2m` base-field symbols.
    Seed { m: usize, coords: Vec<FieldElement> },
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Data(_) => PayloadKind::Data,
            Payload::Node { .. } => PayloadKind::Node,
            Payload::HashBlock { .. } => PayloadKind::HashBlock,
            Payload::Hashes(_) => PayloadKind::Hashes,
            Payload::Projection(_) => PayloadKind::Projection,
            Payload::Seed { .. } => PayloadKind::Seed,
        }
    }

    pub fn seed(seed: &PrgSeed) -> Payload {
        Payload::Seed {
            m: seed.degree(),
            coords: seed.to_coords(),
        }
    }

    fn aux(&self) -> u64 {
        match self {
            Payload::Node { node, .. } | Payload::HashBlock { node, .. } => *node as u64,
            Payload::Seed { m, .. } => *m as u64,
            _ => 0,
        }
    }

    fn symbols(&self) -> &[FieldElement] {
        match self {
            Payload::Data(m) | Payload::Node { slice: m, .. } => m.as_slice(),
            Payload::HashBlock { symbols, .. } => symbols,
            Payload::Hashes(s) | Payload::Projection(s) => s,
            Payload::Seed { coords, .. } => coords,
        }
    }
}

/// Parsed header fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContainerHeader {
    pub kind: PayloadKind,
    pub p: u64,
    pub s: usize,
    pub n: usize,
    pub k: usize,
    pub columns: usize,
    pub modulus: Vec<u64>,
    pub aux: u64,
}

impl ContainerHeader {
    pub fn byte_len(&self) -> usize {
        6 + 1 + 1 + 5 * 8 + (self.s + 1) * byte_width(self.p) + 8
    }
}

/// Bytes per value in `0..order`.
pub fn byte_width(order: u64) -> usize {
    let bits = 64 - order.saturating_sub(1).leading_zeros() as usize;
    bits.div_ceil(8).max(1)
}

/// Bytes per symbol of `field`.
pub fn symbol_bytes(field: &Field) -> usize {
    byte_width(field.order())
}

fn expected_len(code: &Code, kind: PayloadKind, aux: u64) -> usize {
    let p = &code.params;
    match kind {
        PayloadKind::Data => p.message_rows() * p.columns,
        PayloadKind::Node => p.alpha * p.columns,
        PayloadKind::HashBlock => p.alpha,
        PayloadKind::Hashes => p.coded_rows(),
        PayloadKind::Projection => p.columns,
        PayloadKind::Seed => 2 * aux as usize,
    }
}

fn put_uint(out: &mut Vec<u8>, value: u64, width: usize) {
    out.extend_from_slice(&value.to_le_bytes()[..width]);
}

/// Encodes `payload` under the parameters of `code`.
pub fn serialize(code: &Code, payload: &Payload) -> Result<Vec<u8>, FormatError> {
    let field = code.field();
    let params = &code.params;
    let aux = payload.aux();
    match payload {
        Payload::Node { node, .. } | Payload::HashBlock { node, .. } => params.check_node(*node)?,
        Payload::Seed { m, .. } if *m == 0 => {
            return Err(FormatError::ShapeMismatch(
                "seed degree must be positive".into(),
            ))
        }
        _ => {}
    }
    let shape_ok = match payload {
        Payload::Data(m) => m.shape() == (params.message_rows(), params.columns),
        Payload::Node { slice, .. } => slice.shape() == (params.alpha, params.columns),
        _ => true,
    };
    let symbols = payload.symbols();
    if !shape_ok || symbols.len() != expected_len(code, payload.kind(), aux) {
        return Err(FormatError::ShapeMismatch(format!(
            "{:?} payload does not match (n={}, k={}, N={})",
            payload.kind(),
            params.n,
            params.k,
            params.columns
        )));
    }
    if let Some(bad) = symbols.iter().find(|s| !field.contains(**s)) {
        return Err(FormatError::SymbolOutOfRange {
            value: bad.index(),
            q: field.order(),
        });
    }

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(payload.kind() as u8);
    for v in [
        field.characteristic(),
        field.degree() as u64,
        params.n as u64,
        params.k as u64,
        params.columns as u64,
    ] {
        put_uint(&mut out, v, 8);
    }
    let cw = byte_width(field.characteristic());
    for &c in field.modulus() {
        put_uint(&mut out, c, cw);
    }
    put_uint(&mut out, aux, 8);
    let sw = symbol_bytes(field);
    for s in symbols {
        put_uint(&mut out, s.index(), sw);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], FormatError> {
        let have = self.bytes.len() - self.pos;
        if n > have {
            return Err(FormatError::TruncatedPayload {
                need: self.pos + n,
                have: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn uint(&mut self, width: usize) -> Result<u64, FormatError> {
        let mut buf = [0u8; 8];
        buf[..width].copy_from_slice(self.take(width)?);
        Ok(u64::from_le_bytes(buf))
    }
}

/// A decoded container: the code it was written under plus the payload.
#[derive(Debug, Clone)]
pub struct Container {
    pub code: Code,
    pub header: ContainerHeader,
    pub payload: Payload,
}

/// Parses only the header, validating magic and version first.
pub fn read_header(bytes: &[u8]) -> Result<ContainerHeader, FormatError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(6).map_err(|_| FormatError::BadMagic)?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(FormatError::VersionMismatch { found: version });
    }
    let kind = PayloadKind::from_byte(r.take(1)?[0])?;
    let p = r.uint(8)?;
    let s = r.uint(8)? as usize;
    let n = r.uint(8)? as usize;
    let k = r.uint(8)? as usize;
    let columns = r.uint(8)? as usize;
    if s == 0 || s > 64 {
        return Err(FormatError::Field(FieldError::ZeroDegree));
    }
    let cw = byte_width(p);
    let modulus = (0..=s).map(|_| r.uint(cw)).collect::<Result<Vec<_>, _>>()?;
    let aux = r.uint(8)?;
    Ok(ContainerHeader {
        kind,
        p,
        s,
        n,
        k,
        columns,
        modulus,
        aux,
    })
}

pub fn deserialize(bytes: &[u8]) -> Result<Container, FormatError> {
    let header = read_header(bytes)?;
    let field = make_field(header.p, header.s)?;
    if field.modulus() != header.modulus.as_slice() {
        return Err(FormatError::ModulusMismatch);
    }
    let code = make_code(header.n, header.k, &field, header.columns)?;
    if header.kind == PayloadKind::Seed && header.aux == 0 {
        return Err(FormatError::ShapeMismatch(
            "seed degree must be positive".into(),
        ));
    }
    let count = expected_len(&code, header.kind, header.aux);
    let sw = symbol_bytes(&field);
    let mut r = Reader {
        bytes,
        pos: header.byte_len(),
    };
    // Check the full length up front so nothing partial is built.
    let need = header.byte_len() + count * sw;
    if bytes.len() < need {
        return Err(FormatError::TruncatedPayload {
            need,
            have: bytes.len(),
        });
    }
    if bytes.len() > need {
        return Err(FormatError::TrailingBytes(bytes.len() - need));
    }
    let mut symbols = Vec::with_capacity(count);
    for _ in 0..count {
        let v = r.uint(sw)?;
        if v >= field.order() {
            return Err(FormatError::SymbolOutOfRange {
                value: v,
                q: field.order(),
            });
        }
        symbols.push(FieldElement::from_index(v));
    }
    let params = &code.params;
    let node = || -> Result<usize, FormatError> {
        let id = header.aux as usize;
        params.check_node(id)?;
        Ok(id)
    };
    let payload = match header.kind {
        PayloadKind::Data => Payload::Data(
            Matrix::from_vec(params.message_rows(), params.columns, symbols)
                .expect("length checked"),
        ),
        PayloadKind::Node => Payload::Node {
            node: node()?,
            slice: Matrix::from_vec(params.alpha, params.columns, symbols).expect("length checked"),
        },
        PayloadKind::HashBlock => Payload::HashBlock {
            node: node()?,
            symbols,
        },
        PayloadKind::Hashes => Payload::Hashes(symbols),
        PayloadKind::Projection => Payload::Projection(symbols),
        PayloadKind::Seed => Payload::Seed {
            m: header.aux as usize,
            coords: symbols,
        },
    };
    Ok(Container {
        code,
        header,
        payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn code_f5() -> Code {
        make_code(4, 2, &make_field(5, 1).unwrap(), 3).unwrap()
    }

    #[test]
    fn node_slice_roundtrip() {
        let code = code_f5();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let slice = Matrix::random(code.field(), 2, 3, &mut rng);
        let p = Payload::Node { node: 3, slice };
        let bytes = serialize(&code, &p).unwrap();
        let c = deserialize(&bytes).unwrap();
        assert_eq!(c.payload, p);
        assert_eq!(c.code.params, code.params);
    }

    #[test]
    fn q5_symbol_is_one_byte() {
        let code = code_f5();
        let p = Payload::Projection(vec![FieldElement::from_index(4); 3]);
        let bytes = serialize(&code, &p).unwrap();
        let header_len = read_header(&bytes).unwrap().byte_len();
        assert_eq!(&bytes[header_len..], &[0x04, 0x04, 0x04]);
    }

    #[test]
    fn wide_symbols_are_little_endian() {
        let code = make_code(4, 2, &make_field(257, 1).unwrap(), 1).unwrap();
        let p = Payload::Projection(vec![FieldElement::from_index(256)]);
        let bytes = serialize(&code, &p).unwrap();
        assert_eq!(&bytes[bytes.len() - 2..], &[0x00, 0x01]);
    }

    #[test]
    fn truncated_file() {
        let code = code_f5();
        let p = Payload::Hashes(vec![FieldElement::ONE; 8]);
        let bytes = serialize(&code, &p).unwrap();
        for cut in [bytes.len() - 1, 30, 7] {
            assert!(matches!(
                deserialize(&bytes[..cut]),
                Err(FormatError::TruncatedPayload { .. })
            ));
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let code = code_f5();
        let mut bytes =
            serialize(&code, &Payload::Projection(vec![FieldElement::ZERO; 3])).unwrap();
        bytes[6] = 9;
        assert_eq!(
            deserialize(&bytes).unwrap_err(),
            FormatError::VersionMismatch { found: 9 }
        );
        bytes[0] = b'X';
        assert_eq!(deserialize(&bytes).unwrap_err(), FormatError::BadMagic);
        assert_eq!(deserialize(b"NX").unwrap_err(), FormatError::BadMagic);
    }

    #[test]
    fn extension_field_seed_roundtrip() {
        let f4 = make_field(2, 2).unwrap();
        let code = make_code(4, 2, &f4, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seed = PrgSeed::draw(&f4, 6, &mut rng).unwrap();
        let bytes = serialize(&code, &Payload::seed(&seed)).unwrap();
        let c = deserialize(&bytes).unwrap();
        match c.payload {
            Payload::Seed { m, coords } => {
                let back = PrgSeed::from_coords(&f4, m, &coords).unwrap();
                assert_eq!(back, seed);
            }
            other => panic!("unexpected payload {other:?}"),
        }
    }

    #[test]
    fn shape_is_checked() {
        let code = code_f5();
        let wrong = Matrix::zeros(3, 3);
        assert!(matches!(
            serialize(
                &code,
                &Payload::Node {
                    node: 1,
                    slice: wrong
                }
            ),
            Err(FormatError::ShapeMismatch(_))
        ));
        assert!(serialize(
            &code,
            &Payload::HashBlock {
                node: 5,
                symbols: vec![FieldElement::ZERO; 2]
            }
        )
        .is_err());
    }
}
