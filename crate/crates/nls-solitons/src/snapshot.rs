//! Binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! | bytes | content                                  |
//! |-------|------------------------------------------|
//! | 4     | magic `NLSS`                             |
//! | 4     | format version (`u32`, currently 1)      |
//! | 4     | dimension `d` (`u32`, 1 or 2)            |
//! | 4     | points per axis `n` (`u32`, power of 2)  |
//! | 8     | box half-width `L` (`f64`)               |
//! | 8     | time `t` (`f64`)                         |
//! | …     | component 1 then component 2, each `n^d` |
//! |       | values as interleaved `re, im` `f64`     |

use crate::error::{Error, Result};
use crate::grid::{FieldPair, PeriodicGrid};
use crate::system_model::C64;

pub const MAGIC: &[u8; 4] = b"NLSS";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;
/// Largest number of grid points accepted by the decoder.
pub const MAX_POINTS: usize = 1 << 24;

/// A decoded snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: PeriodicGrid,
    pub t: f64,
    pub u: FieldPair,
}

/// Serialize a field pair with its grid and time.
pub fn encode(grid: &PeriodicGrid, t: f64, u: &FieldPair) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 32 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.d as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n as u32).to_le_bytes());
    out.extend_from_slice(&grid.half_width.to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in u {
        for c in v {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(format!("snapshot: {}", msg.into()))
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

/// Parse a snapshot, validating the header and the payload length.
pub fn decode(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(invalid(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(invalid("bad magic"));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(invalid(format!("unsupported version {version}")));
    }
    let d = u32_at(bytes, 8) as usize;
    let n = u32_at(bytes, 12) as usize;
    let half_width = f64_at(bytes, 16);
    let t = f64_at(bytes, 24);
    if !t.is_finite() {
        return Err(invalid("non-finite time"));
    }
    if !(1..=2).contains(&d) {
        return Err(invalid(format!("dimension {d}")));
    }
    let points = n.checked_pow(d as u32).filter(|&p| p <= MAX_POINTS).ok_or_else(|| invalid("grid too large"))?;
    let grid = PeriodicGrid::new(d, n, half_width)?;
    let expected = HEADER_LEN + 32 * points;
    if bytes.len() != expected {
        return Err(invalid(format!("payload has {} bytes, expected {expected}", bytes.len())));
    }
    let mut u = grid.zeros();
    let mut at = HEADER_LEN;
    for v in u.iter_mut() {
        for c in v.iter_mut() {
            *c = C64::new(f64_at(bytes, at), f64_at(bytes, at + 8));
            at += 16;
        }
    }
    Ok(Snapshot { grid, t, u })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(d: usize, n: usize) -> (PeriodicGrid, FieldPair) {
        let grid = PeriodicGrid::new(d, n, 4.5).unwrap();
        let u = grid.sample(|x| [C64::new(x[0], -x[1]), C64::new((x[0] * x[1]).sin(), 0.25)]);
        (grid, u)
    }

    #[test]
    fn round_trip() {
        for (d, n) in [(1, 16), (2, 8)] {
            let (grid, u) = sample(d, n);
            let bytes = encode(&grid, 1.25, &u);
            let s = decode(&bytes).unwrap();
            assert_eq!(s, Snapshot { grid, t: 1.25, u });
        }
    }

    #[test]
    fn rejects_corrupt_headers() {
        let (grid, u) = sample(1, 16);
        let good = encode(&grid, 0.0, &u);
        assert!(decode(&good[..good.len() - 1]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = good.clone();
        bad[12..16].copy_from_slice(&12u32.to_le_bytes());
        assert!(decode(&bad).is_err());
        let mut bad = good;
        bad[8..12].copy_from_slice(&3u32.to_le_bytes());
        assert!(decode(&bad).is_err());
    }

    proptest! {
        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let _ = decode(&bytes);
        }

        #[test]
        fn decode_inverts_encode(vals in proptest::collection::vec(-1e6f64..1e6, 64), t in -1e3f64..1e3) {
            let grid = PeriodicGrid::new(1, 16, 2.0).unwrap();
            let u: FieldPair = [
                vals[..32].chunks(2).map(|c| C64::new(c[0], c[1])).collect(),
                vals[32..].chunks(2).map(|c| C64::new(c[0], c[1])).collect(),
            ];
            let s = decode(&encode(&grid, t, &u)).unwrap();
            prop_assert_eq!(s.u, u);
            prop_assert_eq!(s.t, t);
        }
    }
}
