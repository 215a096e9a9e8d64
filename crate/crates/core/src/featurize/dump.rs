use std::io::{Read, Write};

use super::sparse::SparseVec;
use super::FeatureError;

/// File magic of the dense fingerprint dump.
pub const DUMP_MAGIC: &[u8; 8] = b"MRXNFP01";

/// Writes `magic, rows: u32, dim: u32`, then every row densely as
/// little-endian f32, row-major.
pub fn write_fingerprint_dump<W: Write>(mut w: W, rows: &[SparseVec]) -> Result<(), FeatureError> {
    let dim = rows.first().map_or(0, |r| r.dim());
    if rows.iter().any(|r| r.dim() != dim) {
        return Err(FeatureError::Dump("rows differ in dimension".into()));
    }
    let n = u32::try_from(rows.len()).map_err(|_| FeatureError::Dump("too many rows".into()))?;
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(dim * 4);
    for r in rows {
        buf.clear();
        for x in r.to_dense() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_fingerprint_dump<R: Read>(mut r: R) -> Result<Vec<SparseVec>, FeatureError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(FeatureError::Dump("bad magic".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let dim = u32::from_le_bytes(word) as usize;
    let mut row = vec![0u8; dim * 4];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut row)?;
        let values: Vec<f32> = row
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push(SparseVec::from_dense(&values));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_layout() {
        let rows = vec![
            SparseVec::from_pairs(3, [(0, 1.5)]),
            SparseVec::from_pairs(3, [(2, -2.0)]),
        ];
        let mut buf = Vec::new();
        write_fingerprint_dump(&mut buf, &rows).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 2 * 3 * 4);
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(&buf[16..20], &1.5f32.to_le_bytes());
        assert_eq!(read_fingerprint_dump(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(read_fingerprint_dump(&b"NOTMAGIC\0\0\0\0\0\0\0\0"[..]).is_err());
    }
}
