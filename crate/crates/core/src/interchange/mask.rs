//! RSFM: `"RSFM"`, version u32, `P` u64, then one byte per element, 1 for
//! foreground and 0 for background.

use std::path::Path;

use super::{check_version, read_file, require_exact_len, require_len, u32_at, u64_at, write_file, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::regions::RegionMask;

pub const MASK_HEADER_LEN: usize = 16;
const MAGIC: [u8; 4] = *b"RSFM";

pub fn encode_mask(mask: &RegionMask) -> Vec<u8> {
    let mut out = Vec::with_capacity(MASK_HEADER_LEN + mask.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(mask.len() as u64).to_le_bytes());
    out.extend(mask.flags().iter().map(|&f| f as u8));
    out
}

pub fn decode_mask(bytes: &[u8]) -> Result<RegionMask> {
    require_len(bytes, MAGIC.len() as u64)?;
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(Error::NotAMaskFile(magic));
    }
    require_len(bytes, MASK_HEADER_LEN as u64)?;
    check_version(u32_at(bytes, 4))?;
    let p = u64_at(bytes, 8);
    let total = p
        .checked_add(MASK_HEADER_LEN as u64)
        .ok_or_else(|| Error::InvalidHeader(format!("element count {p} overflows")))?;
    require_exact_len(bytes, total)?;
    let flags = bytes[MASK_HEADER_LEN..]
        .iter()
        .enumerate()
        .map(|(i, &b)| match b {
            0 => Ok(false),
            1 => Ok(true),
            value => Err(Error::InvalidMaskValue { index: i as u64, value }),
        })
        .collect::<Result<Vec<bool>>>()?;
    RegionMask::new(flags)
}

pub fn write_mask(mask: &RegionMask, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_mask(mask))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<RegionMask> {
    decode_mask(&read_file(path.as_ref())?)
}
