//! Chain snapshots: an 8-byte little-endian cell count followed by the cells
//! as little-endian integers of 1, 2 or 4 bytes. The width is implied by the
//! payload size.

use std::path::Path;

use super::chain::{Chain, Weights};
use crate::error::{Error, Result};

pub fn encode_snapshot(chain: &Chain) -> Vec<u8> {
    let w = chain.weights();
    let mut out = Vec::with_capacity(8 + w.len() * w.width());
    out.extend_from_slice(&(w.len() as u64).to_le_bytes());
    match w {
        Weights::U8(v) => out.extend_from_slice(v),
        Weights::U16(v) => v
            .iter()
            .for_each(|c| out.extend_from_slice(&c.to_le_bytes())),
        Weights::U32(v) => v
            .iter()
            .for_each(|c| out.extend_from_slice(&c.to_le_bytes())),
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Chain> {
    let header: [u8; 8] = bytes
        .get(..8)
        .and_then(|h| h.try_into().ok())
        .ok_or_else(|| Error::Decode("snapshot shorter than its 8-byte header".into()))?;
    let len = u64::from_le_bytes(header);
    let payload = &bytes[8..];
    if len == 0 {
        return Err(Error::Decode("snapshot declares an empty chain".into()));
    }
    if !(payload.len() as u64).is_multiple_of(len) {
        return Err(Error::Decode(format!(
            "payload of {} bytes does not hold {len} cells",
            payload.len()
        )));
    }
    let len = len as usize;
    let weights = match payload.len() / len {
        1 => Weights::U8(payload.to_vec()),
        2 => Weights::U16(
            payload
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect(),
        ),
        4 => Weights::U32(
            payload
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
        w => return Err(Error::Decode(format!("unsupported cell width {w}"))),
    };
    Chain::from_storage(weights)
}

pub fn write_snapshot(chain: &Chain, path: &Path) -> Result<()> {
    std::fs::write(path, encode_snapshot(chain))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Chain> {
    decode_snapshot(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_all_widths() {
        for w in [vec![0u64, 1, 255, 3], vec![256, 1, 9, 0], vec![70_000, 2]] {
            let c = Chain::from_weights(&w).unwrap();
            let back = decode_snapshot(&encode_snapshot(&c)).unwrap();
            assert_eq!(back.to_vec(), w);
            assert_eq!(back.mass(), c.mass());
        }
    }

    #[test]
    fn malformed_input() {
        assert!(decode_snapshot(&[1, 2, 3]).is_err());
        assert!(decode_snapshot(&0u64.to_le_bytes()).is_err());
        let mut b = 2u64.to_le_bytes().to_vec();
        b.extend_from_slice(&[1, 2, 3]);
        assert!(decode_snapshot(&b).is_err());
        let mut b = 1u64.to_le_bytes().to_vec();
        b.extend_from_slice(&[1, 2, 3]);
        assert!(decode_snapshot(&b).is_err());
        let mut b = u64::MAX.to_le_bytes().to_vec();
        b.push(0);
        assert!(decode_snapshot(&b).is_err());
    }
}
