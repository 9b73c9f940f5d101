//! RSFJ: `"RSFJ"`, version u32, dtype u8, layout u8, 2 reserved zero bytes,
//! `P` u64, `K` u64, then `P·K` little-endian values in row-major order.

use std::path::Path;

use super::{check_version, read_file, require_exact_len, require_len, u32_at, u64_at, write_file, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::matrixkit::DenseMatrix;
use crate::regions::{JacobianMatrix, Provenance};

pub const JACOBIAN_HEADER_LEN: usize = 28;
const MAGIC: [u8; 4] = *b"RSFJ";
const LAYOUT_ROW_MAJOR: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(Error::InvalidHeader(format!("unknown dtype code {other}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// Serializes `m`. A value that is non-finite, or overflows when narrowed to
/// 32 bits, is rejected with `InvalidPayload`.
pub fn encode_jacobian(m: &DenseMatrix, dtype: Dtype) -> Result<Vec<u8>> {
    let (p, k) = m.shape();
    let mut out = Vec::with_capacity(JACOBIAN_HEADER_LEN + p * k * dtype.size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(dtype.code());
    out.push(LAYOUT_ROW_MAJOR);
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&(p as u64).to_le_bytes());
    out.extend_from_slice(&(k as u64).to_le_bytes());
    for (i, &v) in m.data().iter().enumerate() {
        let ok = match dtype {
            Dtype::F64 => {
                out.extend_from_slice(&v.to_le_bytes());
                v.is_finite()
            }
            Dtype::F32 => {
                let narrow = v as f32;
                out.extend_from_slice(&narrow.to_le_bytes());
                narrow.is_finite()
            }
        };
        if !ok {
            return Err(Error::InvalidPayload(i as u64));
        }
    }
    Ok(out)
}

pub fn decode_jacobian(bytes: &[u8]) -> Result<JacobianMatrix> {
    require_len(bytes, MAGIC.len() as u64)?;
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::NotAJacobianFile(magic));
    }
    require_len(bytes, JACOBIAN_HEADER_LEN as u64)?;
    check_version(u32_at(bytes, 4))?;
    let dtype = Dtype::from_code(bytes[8])?;
    if bytes[9] != LAYOUT_ROW_MAJOR {
        return Err(Error::InvalidHeader(format!("unknown layout code {}", bytes[9])));
    }
    if bytes[10..12] != [0, 0] {
        return Err(Error::InvalidHeader("reserved bytes are not zero".into()));
    }
    let (p, k) = (u64_at(bytes, 12), u64_at(bytes, 20));
    if p == 0 || k == 0 {
        return Err(Error::InvalidHeader(format!("empty matrix {p}x{k}")));
    }
    let payload = p
        .checked_mul(k)
        .and_then(|n| n.checked_mul(dtype.size() as u64))
        .and_then(|n| n.checked_add(JACOBIAN_HEADER_LEN as u64))
        .ok_or_else(|| Error::InvalidHeader(format!("dimensions {p}x{k} overflow")))?;
    require_exact_len(bytes, payload)?;

    let body = &bytes[JACOBIAN_HEADER_LEN..];
    let data: Vec<f64> = match dtype {
        Dtype::F64 => body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect(),
        Dtype::F32 => body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect(),
    };
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidPayload(i as u64));
    }
    let matrix = DenseMatrix::new(p as usize, k as usize, data)?;
    JacobianMatrix::new(matrix, Provenance::Imported)
}

/// Writes a 64-bit RSFJ file.
pub fn write_jacobian(m: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_jacobian_as(m, path, Dtype::F64)
}

pub fn write_jacobian_as(m: &DenseMatrix, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    write_file(path.as_ref(), &encode_jacobian(m, dtype)?)
}

/// Reads an RSFJ file; 32-bit payloads are widened.
pub fn read_jacobian(path: impl AsRef<Path>) -> Result<JacobianMatrix> {
    decode_jacobian(&read_file(path.as_ref())?)
}
