use std::io::{Read, Write};
use std::path::Path;

use super::{DenseMatrix, NumericsError};

pub const ROMX_MAGIC: &[u8; 4] = b"ROMX";
pub const ROMX_VERSION: u32 = 1;

/// Serializes `m` as: magic, `u32` version, `u64` rows, `u64` cols, then
/// little-endian `f64` entries in row-major order.
pub fn write_romx<W: Write>(w: &mut W, m: &DenseMatrix) -> Result<(), NumericsError> {
    let mut buf = Vec::with_capacity(24 + 8 * m.as_slice().len());
    buf.extend_from_slice(ROMX_MAGIC);
    buf.extend_from_slice(&ROMX_VERSION.to_le_bytes());
    buf.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_romx<R: Read>(r: &mut R) -> Result<DenseMatrix, NumericsError> {
    let mut head = [0u8; 24];
    r.read_exact(&mut head).map_err(|e| NumericsError::Format(format!("truncated header: {e}")))?;
    if &head[0..4] != ROMX_MAGIC {
        return Err(NumericsError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != ROMX_VERSION {
        return Err(NumericsError::Format(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    let count = rows
        .checked_mul(cols)
        .filter(|c| c.checked_mul(8).is_some())
        .ok_or_else(|| NumericsError::Format(format!("absurd shape {rows}x{cols}")))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * count {
        return Err(NumericsError::Format(format!("expected {} payload bytes, found {}", 8 * count, bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    DenseMatrix::from_row_major(rows, cols, data)
}

pub fn write_romx_file(path: impl AsRef<Path>, m: &DenseMatrix) -> Result<(), NumericsError> {
    let mut f = std::fs::File::create(path)?;
    write_romx(&mut f, m)
}

pub fn read_romx_file(path: impl AsRef<Path>) -> Result<DenseMatrix, NumericsError> {
    let mut f = std::fs::File::open(path)?;
    read_romx(&mut f)
}
