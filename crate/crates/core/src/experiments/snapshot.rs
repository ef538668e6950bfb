//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `ACS3` |
//! | 4 | format version (u32, currently 1) |
//! | 12 | `n_eta`, `n_phi1`, `n_phi2` (u32 each) |
//! | 16 | `eps`, `time` (f64 each) |
//! | 8·N | values (f64), `φ₂` fastest, then `φ₁`, then `η` |

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{build_grid, ScalarField};

pub const MAGIC: &[u8; 4] = b"ACS3";
pub const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 12 + 16;

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub eps: f64,
    pub time: f64,
    pub field: ScalarField,
}

impl Snapshot {
    pub fn dims(&self) -> (usize, usize, usize) {
        self.field.grid().dims()
    }
}

pub fn encode_snapshot(field: &ScalarField, eps: f64, time: f64) -> Vec<u8> {
    let (n, n1, n2) = field.grid().dims();
    let mut out = Vec::with_capacity(HEADER + 8 * field.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [n, n1, n2] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&eps.to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let bad = |m: String| Err(Error::Snapshot(m));
    if bytes.len() < HEADER {
        return bad(format!(
            "file has {} bytes, shorter than the {HEADER}-byte header",
            bytes.len()
        ));
    }
    if &bytes[..4] != MAGIC {
        return bad(format!("bad magic {:?}", &bytes[..4]));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return bad(format!("unsupported version {version}"));
    }
    let (n, n1, n2) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
    let (eps, time) = (f64_at(20), f64_at(28));
    let count = n
        .checked_mul(n1)
        .and_then(|v| v.checked_mul(n2))
        .ok_or_else(|| Error::Snapshot(format!("dimensions {n}x{n1}x{n2} overflow")))?;
    let payload = bytes.len() - HEADER;
    if payload != 8 * count {
        return bad(format!(
            "payload has {payload} bytes but {n}x{n1}x{n2} needs {}",
            8 * count
        ));
    }
    let grid =
        build_grid(n, n1, n2).map_err(|e| Error::Snapshot(format!("bad dimensions: {e}")))?;
    let values = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Snapshot {
        eps,
        time,
        field: ScalarField::new(grid, values)?,
    })
}

pub fn write_snapshot(path: &Path, field: &ScalarField, eps: f64, time: f64) -> Result<()> {
    std::fs::write(path, encode_snapshot(field, eps, time)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = build_grid(6, 4, 8).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] * 7.3).sin() / 3.0 + x[3]);
        let s = decode_snapshot(&encode_snapshot(&f, 0.05, 1.25)).unwrap();
        assert_eq!(s.dims(), (6, 4, 8));
        assert_eq!(s.eps.to_bits(), 0.05f64.to_bits());
        assert_eq!(s.time, 1.25);
        assert!(s
            .field
            .values()
            .iter()
            .zip(f.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn corrupt_inputs_are_typed_errors() {
        let g = build_grid(4, 4, 4).unwrap();
        let mut b = encode_snapshot(&ScalarField::zeros(&g), 0.1, 0.0);
        assert!(matches!(
            decode_snapshot(&b[..b.len() - 8]),
            Err(Error::Snapshot(_))
        ));
        assert!(matches!(decode_snapshot(&b[..10]), Err(Error::Snapshot(_))));
        b[0] = b'X';
        assert!(matches!(decode_snapshot(&b), Err(Error::Snapshot(_))));
    }
}
