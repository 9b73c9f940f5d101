//! On-disk formats: RSFJ Jacobians, RSFM masks, TOML direction files and
//! plain-text PGM/PPM previews.
//!
//! Binary readers load the whole file, check the header against the file
//! length before allocating, and map every malformed input to a typed error.
//! Writers replace the target in place; concurrent writes to one path are
//! undefined.

mod directions;
mod image;
mod jacobian;
mod mask;

pub use directions::{read_directions, write_directions, DirectionRecord, DirectionsFile, DIRECTIONS_VERSION, UNIT_NORM_TOLERANCE};
pub use image::{encode_image, write_image};
pub use jacobian::{decode_jacobian, encode_jacobian, read_jacobian, write_jacobian, write_jacobian_as, Dtype, JACOBIAN_HEADER_LEN};
pub use mask::{decode_mask, encode_mask, read_mask, write_mask, MASK_HEADER_LEN};

use std::path::Path;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

/// Fails with `TruncatedFile` unless `bytes` holds at least `need` bytes.
fn require_len(bytes: &[u8], need: u64) -> Result<()> {
    let have = bytes.len() as u64;
    if have < need {
        return Err(Error::TruncatedFile {
            expected: need,
            actual: have,
        });
    }
    Ok(())
}

/// Exact-length check for the payload that follows a header.
fn require_exact_len(bytes: &[u8], need: u64) -> Result<()> {
    require_len(bytes, need)?;
    let extra = bytes.len() as u64 - need;
    if extra > 0 {
        return Err(Error::TrailingBytes(extra));
    }
    Ok(())
}

fn check_version(version: u32) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    Ok(())
}
