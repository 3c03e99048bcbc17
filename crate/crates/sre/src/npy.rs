//! NPY v1.0/v2.0 arrays restricted to the dtypes MedMNIST ships: `|u1`,
//! `<i8` and `<f4`.
//!
//! [`read_npy`] never panics: every byte stream yields an array or an
//! [`NpyError`].

use std::fmt;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";

/// Header dictionaries larger than this are rejected before parsing.
const MAX_HEADER: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NpyDtype {
    U8,
    I64,
    F32,
}

impl NpyDtype {
    pub fn size(self) -> usize {
        match self {
            NpyDtype::U8 => 1,
            NpyDtype::I64 => 8,
            NpyDtype::F32 => 4,
        }
    }

    pub fn descr(self) -> &'static str {
        match self {
            NpyDtype::U8 => "|u1",
            NpyDtype::I64 => "<i8",
            NpyDtype::F32 => "<f4",
        }
    }

    fn parse(descr: &str) -> Option<Self> {
        match descr {
            "|u1" | "<u1" | "u1" => Some(NpyDtype::U8),
            "<i8" => Some(NpyDtype::I64),
            "<f4" => Some(NpyDtype::F32),
            _ => None,
        }
    }
}

impl fmt::Display for NpyDtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.descr())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum NpyError {
    #[error("not an NPY stream (bad magic)")]
    BadMagic,
    #[error("unsupported NPY format version {major}.{minor}")]
    UnsupportedVersion { major: u8, minor: u8 },
    #[error("NPY stream truncated inside the header")]
    Truncated,
    #[error("malformed NPY header: {0}")]
    Header(String),
    #[error("unsupported NPY dtype {0:?}")]
    UnsupportedDtype(String),
    #[error("NPY payload holds {found} bytes, header describes {expected}")]
    LengthMismatch { expected: u128, found: usize },
    #[error("NPY array is {found}, expected {expected}")]
    WrongDtype { expected: NpyDtype, found: NpyDtype },
}

/// A little-endian array in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NpyArray {
    dtype: NpyDtype,
    shape: Vec<usize>,
    data: Vec<u8>,
}

impl NpyArray {
    /// Wraps raw little-endian row-major bytes.
    pub fn from_bytes(dtype: NpyDtype, shape: Vec<usize>, data: Vec<u8>) -> Result<Self, NpyError> {
        let expected = payload_len(dtype, &shape)?;
        if expected != data.len() as u128 {
            return Err(NpyError::LengthMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(NpyArray { dtype, shape, data })
    }

    pub fn from_u8(shape: Vec<usize>, values: Vec<u8>) -> Result<Self, NpyError> {
        Self::from_bytes(NpyDtype::U8, shape, values)
    }

    pub fn from_i64(shape: Vec<usize>, values: &[i64]) -> Result<Self, NpyError> {
        Self::from_bytes(NpyDtype::I64, shape, values.iter().flat_map(|v| v.to_le_bytes()).collect())
    }

    pub fn from_f32(shape: Vec<usize>, values: &[f32]) -> Result<Self, NpyError> {
        Self::from_bytes(NpyDtype::F32, shape, values.iter().flat_map(|v| v.to_le_bytes()).collect())
    }

    pub fn dtype(&self) -> NpyDtype {
        self.dtype
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Raw little-endian payload.
    pub fn bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dtype.size()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_u8(&self) -> Result<&[u8], NpyError> {
        self.expect(NpyDtype::U8)?;
        Ok(&self.data)
    }

    pub fn to_i64(&self) -> Result<Vec<i64>, NpyError> {
        self.expect(NpyDtype::I64)?;
        Ok(self
            .data
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn to_f32(&self) -> Result<Vec<f32>, NpyError> {
        self.expect(NpyDtype::F32)?;
        Ok(self
            .data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// Integer values of a `|u1` or `<i8` array.
    pub fn integers(&self) -> Result<Vec<i64>, NpyError> {
        match self.dtype {
            NpyDtype::U8 => Ok(self.data.iter().map(|&v| v as i64).collect()),
            NpyDtype::I64 => self.to_i64(),
            NpyDtype::F32 => Err(NpyError::WrongDtype {
                expected: NpyDtype::I64,
                found: NpyDtype::F32,
            }),
        }
    }

    fn expect(&self, dtype: NpyDtype) -> Result<(), NpyError> {
        if self.dtype == dtype {
            Ok(())
        } else {
            Err(NpyError::WrongDtype {
                expected: dtype,
                found: self.dtype,
            })
        }
    }
}

fn payload_len(dtype: NpyDtype, shape: &[usize]) -> Result<u128, NpyError> {
    shape
        .iter()
        .try_fold(dtype.size() as u128, |acc, &d| acc.checked_mul(d as u128))
        .ok_or_else(|| NpyError::Header("shape overflows".into()))
}

/// Parses one NPY stream.
pub fn read_npy(bytes: &[u8]) -> Result<NpyArray, NpyError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(NpyError::BadMagic);
    }
    let version = bytes.get(6..8).ok_or(NpyError::Truncated)?;
    let (major, minor) = (version[0], version[1]);
    let (header_len, start) = match major {
        1 => {
            let b = bytes.get(8..10).ok_or(NpyError::Truncated)?;
            (u16::from_le_bytes([b[0], b[1]]) as usize, 10)
        }
        2 => {
            let b = bytes.get(8..12).ok_or(NpyError::Truncated)?;
            (u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize, 12)
        }
        _ => return Err(NpyError::UnsupportedVersion { major, minor }),
    };
    if minor != 0 {
        return Err(NpyError::UnsupportedVersion { major, minor });
    }
    if header_len > MAX_HEADER {
        return Err(NpyError::Header(format!("header of {header_len} bytes")));
    }
    let header = bytes.get(start..start + header_len).ok_or(NpyError::Truncated)?;
    let header = std::str::from_utf8(header).map_err(|_| NpyError::Header("header is not UTF-8".into()))?;
    let dict = HeaderDict::parse(header)?;
    let dtype = NpyDtype::parse(&dict.descr).ok_or_else(|| NpyError::UnsupportedDtype(dict.descr.clone()))?;
    let payload = &bytes[start + header_len..];
    let expected = payload_len(dtype, &dict.shape)?;
    if expected != payload.len() as u128 {
        return Err(NpyError::LengthMismatch {
            expected,
            found: payload.len(),
        });
    }
    let data = if dict.fortran_order && dict.shape.len() > 1 {
        fortran_to_c(payload, &dict.shape, dtype.size())
    } else {
        payload.to_vec()
    };
    Ok(NpyArray {
        dtype,
        shape: dict.shape,
        data,
    })
}

/// Serializes as NPY v1.0 (v2.0 if the header does not fit a u16 length).
pub fn write_npy(array: &NpyArray) -> Vec<u8> {
    let shape = match array.shape.len() {
        0 => "()".to_string(),
        1 => format!("({},)", array.shape[0]),
        _ => format!(
            "({})",
            array.shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        array.dtype.descr(),
        shape
    );
    let v1 = 10 + dict.len() + 1 <= u16::MAX as usize;
    let prefix = if v1 { 10 } else { 12 };
    let total = (prefix + dict.len() + 1).div_ceil(64) * 64;
    while prefix + dict.len() + 1 < total {
        dict.push(' ');
    }
    dict.push('\n');
    let mut out = Vec::with_capacity(total + array.data.len());
    out.extend_from_slice(MAGIC);
    if v1 {
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    } else {
        out.extend_from_slice(&[2, 0]);
        out.extend_from_slice(&(dict.len() as u32).to_le_bytes());
    }
    out.extend_from_slice(dict.as_bytes());
    out.extend_from_slice(&array.data);
    out
}

fn fortran_to_c(src: &[u8], shape: &[usize], elem: usize) -> Vec<u8> {
    let n: usize = shape.iter().product();
    let mut out = vec![0u8; src.len()];
    let mut idx = vec![0usize; shape.len()];
    for c in 0..n {
        let mut f = 0;
        let mut stride = 1;
        for (i, &d) in idx.iter().zip(shape) {
            f += i * stride;
            stride *= d;
        }
        out[c * elem..(c + 1) * elem].copy_from_slice(&src[f * elem..(f + 1) * elem]);
        for a in (0..shape.len()).rev() {
            idx[a] += 1;
            if idx[a] < shape[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

#[derive(Debug)]
struct HeaderDict {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

#[derive(Debug)]
enum Literal {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

fn bad(msg: &str) -> NpyError {
    NpyError::Header(msg.to_string())
}

impl<'a> Cursor<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> Result<(), NpyError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(bad(&format!("expected {:?}", c as char)))
        }
    }

    fn string(&mut self) -> Result<String, NpyError> {
        let quote = self.peek().ok_or_else(|| bad("unexpected end"))?;
        if quote != b'\'' && quote != b'"' {
            return Err(bad("expected a string"));
        }
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != quote {
            if self.s[self.pos] == b'\\' {
                return Err(bad("escapes are not supported"));
            }
            self.pos += 1;
        }
        if self.pos >= self.s.len() {
            return Err(bad("unterminated string"));
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).map_err(|_| bad("string is not UTF-8"))?;
        self.pos += 1;
        Ok(text.to_string())
    }

    fn integer(&mut self) -> Result<usize, NpyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        // Python 2 era writers append `L` to long integers.
        let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or_default();
        if self.s.get(self.pos) == Some(&b'L') {
            self.pos += 1;
        }
        digits.parse().map_err(|_| bad("expected a non-negative integer"))
    }

    fn literal(&mut self) -> Result<Literal, NpyError> {
        match self.peek() {
            Some(b'\'') | Some(b'"') => Ok(Literal::Str(self.string()?)),
            Some(b'(') => {
                self.pos += 1;
                let mut dims = Vec::new();
                loop {
                    if self.peek() == Some(b')') {
                        self.pos += 1;
                        break;
                    }
                    dims.push(self.integer()?);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {}
                        _ => return Err(bad("malformed shape tuple")),
                    }
                }
                Ok(Literal::Tuple(dims))
            }
            _ => {
                let rest = &self.s[self.pos..];
                if rest.starts_with(b"True") {
                    self.pos += 4;
                    Ok(Literal::Bool(true))
                } else if rest.starts_with(b"False") {
                    self.pos += 5;
                    Ok(Literal::Bool(false))
                } else {
                    Err(bad("unsupported value"))
                }
            }
        }
    }
}

impl HeaderDict {
    fn parse(text: &str) -> Result<Self, NpyError> {
        let mut c = Cursor {
            s: text.as_bytes(),
            pos: 0,
        };
        c.eat(b'{')?;
        let (mut descr, mut fortran, mut shape) = (None, None, None);
        loop {
            if c.peek() == Some(b'}') {
                c.pos += 1;
                break;
            }
            let key = c.string()?;
            c.eat(b':')?;
            let value = c.literal()?;
            match (key.as_str(), value) {
                ("descr", Literal::Str(s)) if descr.is_none() => descr = Some(s),
                ("fortran_order", Literal::Bool(b)) if fortran.is_none() => fortran = Some(b),
                ("shape", Literal::Tuple(t)) if shape.is_none() => shape = Some(t),
                (k, _) => return Err(bad(&format!("unexpected or duplicate entry {k:?}"))),
            }
            match c.peek() {
                Some(b',') => c.pos += 1,
                Some(b'}') => {}
                _ => return Err(bad("expected ',' or '}'")),
            }
        }
        if c.s[c.pos..].iter().any(|b| !b.is_ascii_whitespace()) {
            return Err(bad("trailing characters after the dictionary"));
        }
        match (descr, fortran, shape) {
            (Some(descr), Some(fortran_order), Some(shape)) => Ok(HeaderDict {
                descr,
                fortran_order,
                shape,
            }),
            _ => Err(bad("missing descr, fortran_order or shape")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_header(header: &str, payload: &[u8]) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(header.len() as u16).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(payload);
        out
    }

    #[test]
    fn single_float() {
        let bytes = with_header("{'descr': '<f4', 'fortran_order': False, 'shape': (1,), }\n", &[0, 0, 0x80, 0x3f]);
        let a = read_npy(&bytes).unwrap();
        assert_eq!(a.dtype(), NpyDtype::F32);
        assert_eq!(a.shape(), &[1]);
        assert_eq!(a.bytes(), &[0x00, 0x00, 0x80, 0x3f]);
        assert_eq!(a.to_f32().unwrap(), vec![1.0]);
    }

    #[test]
    fn distinct_errors() {
        assert_eq!(read_npy(b"\x93NUMPX\x01\x00"), Err(NpyError::BadMagic));
        let short = with_header("{'descr': '|u1', 'fortran_order': False, 'shape': (2, 3), }", &[0; 5]);
        assert_eq!(
            read_npy(&short),
            Err(NpyError::LengthMismatch { expected: 6, found: 5 })
        );
        let f8 = with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (1,), }", &[0; 8]);
        assert_eq!(read_npy(&f8), Err(NpyError::UnsupportedDtype("<f8".into())));
        assert!(matches!(read_npy(&MAGIC[..]), Err(NpyError::Truncated)));
    }

    #[test]
    fn fortran_order_is_transposed_on_load() {
        // column-major 2×3 [[1,2,3],[4,5,6]]
        let bytes = with_header(
            "{'descr': '|u1', 'fortran_order': True, 'shape': (2, 3), }",
            &[1, 4, 2, 5, 3, 6],
        );
        assert_eq!(read_npy(&bytes).unwrap().as_u8().unwrap(), &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn written_headers_are_aligned() {
        for shape in [vec![], vec![3], vec![2, 3, 4]] {
            let n = shape.iter().product::<usize>();
            let a = NpyArray::from_i64(shape, &vec![-7; n]).unwrap();
            let bytes = write_npy(&a);
            assert_eq!((bytes.len() - a.bytes().len()) % 64, 0);
            assert_eq!(read_npy(&bytes).unwrap(), a);
        }
    }
}
