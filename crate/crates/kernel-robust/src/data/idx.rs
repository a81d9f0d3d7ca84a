//! Reader/writer for the IDX binary container (big-endian magic, 32-bit
//! dimension sizes, unsigned byte payload).

use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC_IMAGES: u32 = 0x0000_0803;
pub const MAGIC_LABELS: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxFile {
    pub magic: u32,
    pub dims: Vec<usize>,
    pub payload: Vec<u8>,
}

impl IdxFile {
    pub fn items(&self) -> usize {
        self.dims.first().copied().unwrap_or(0)
    }

    /// Product of the per-item dimensions (1 for label files).
    pub fn item_len(&self) -> usize {
        self.dims.iter().skip(1).product()
    }
}

/// Parse an IDX file, rejecting unknown magics and any payload-length
/// mismatch with the declared dimensions.
pub fn read_idx(path: &Path) -> Result<IdxFile> {
    let mut file = std::fs::File::open(path)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    parse_idx(&bytes)
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxFile> {
    let take_u32 = |offset: usize| -> Result<u32> {
        let end = offset + 4;
        if end > bytes.len() {
            return Err(Error::IdxFormat { offset, reason: "truncated header".into() });
        }
        Ok(u32::from_be_bytes(bytes[offset..end].try_into().unwrap()))
    };
    let magic = take_u32(0)?;
    let ndims = match magic {
        MAGIC_IMAGES => 3,
        MAGIC_LABELS => 1,
        other => {
            return Err(Error::IdxFormat {
                offset: 0,
                reason: format!("unknown magic 0x{other:08x}"),
            })
        }
    };
    let mut dims = Vec::with_capacity(ndims);
    for d in 0..ndims {
        dims.push(take_u32(4 + 4 * d)? as usize);
    }
    let header = 4 + 4 * ndims;
    let expected: usize = dims.iter().product();
    let payload = &bytes[header..];
    if payload.len() != expected {
        return Err(Error::IdxFormat {
            offset: header,
            reason: format!("payload is {} bytes, dimensions require {expected}", payload.len()),
        });
    }
    Ok(IdxFile { magic, dims, payload: payload.to_vec() })
}

/// Serialize an [`IdxFile`] (used for test fixtures).
pub fn write_idx(idx: &IdxFile, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(4 + 4 * idx.dims.len() + idx.payload.len());
    out.extend_from_slice(&idx.magic.to_be_bytes());
    for d in &idx.dims {
        out.extend_from_slice(&(*d as u32).to_be_bytes());
    }
    out.extend_from_slice(&idx.payload);
    let mut f = std::fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}
