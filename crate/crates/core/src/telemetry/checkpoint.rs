//! Binary policy checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "STBN"
//! 4       4     format version (u32, currently 1)
//! 8       1     feature layout bits (bit 0 strict, bit 1 handicap)
//! 9       3     reserved, zero
//! 12      4     hidden width (u32)
//! 16      4     turns per episode (u32)
//! 20      8     reward scale (f64)
//! 28      8     parameter count (u64)
//! 36      8·k   parameters (f64)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::policy::{FeatureLayout, PolicyParams};

pub const MAGIC: [u8; 4] = *b"STBN";
pub const VERSION: u32 = 1;
const HEADER: usize = 36;

pub fn encode_checkpoint(params: &PolicyParams) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER + 8 * params.len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(params.layout().bits());
    buf.extend_from_slice(&[0; 3]);
    buf.extend_from_slice(&(params.hidden() as u32).to_le_bytes());
    buf.extend_from_slice(&params.turns_per_episode().to_le_bytes());
    buf.extend_from_slice(&params.reward_scale().to_le_bytes());
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for w in params.theta() {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    buf
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<PolicyParams> {
    let fail = |message: String| Error::Checkpoint {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER {
        return Err(fail(format!("truncated header ({} bytes)", bytes.len())));
    }
    if bytes[0..4] != MAGIC {
        return Err(fail("bad magic, not a policy checkpoint".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(fail(format!("unsupported format version {version} (expected {VERSION})")));
    }
    let layout = FeatureLayout::from_bits(bytes[8]).ok_or_else(|| fail(format!("bad layout bits {}", bytes[8])))?;
    let hidden = u32_at(12) as usize;
    let turns = u32_at(16);
    let scale = f64::from_bits(u64_at(20));
    let count = u64_at(28) as usize;
    let body = &bytes[HEADER..];
    if body.len() != count.saturating_mul(8) {
        return Err(fail(format!("expected {count} parameters, found {} bytes", body.len())));
    }
    let theta = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    PolicyParams::from_parts(layout, scale, turns, hidden, theta).map_err(|e| fail(e.to_string()))
}

pub fn save_checkpoint(params: &PolicyParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(params)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<PolicyParams> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Action, Observation};
    use crate::policy::Policy;
    use crate::rng::{substream, Stream};
    use rand::Rng;

    #[test]
    fn round_trip_preserves_distributions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.bin");
        let layout = FeatureLayout { strict: false, handicap: true };
        let p = PolicyParams::init(layout, 10.0, 40, 32, &mut substream(1, Stream::Init));
        save_checkpoint(&p, &path).unwrap();
        let q = load_checkpoint(&path).unwrap();
        assert_eq!(p, q);
        let mut rng = substream(2, Stream::Probe);
        for _ in 0..100 {
            let n: u32 = rng.random_range(0..10);
            let o = Observation {
                est_left: rng.random_range(0.0..10.0),
                est_right: rng.random_range(0.0..10.0),
                own_prev: (n > 0).then_some(Action::Left),
                other_prev: (n > 0).then_some(Action::Right),
                skirmish_turn_norm: f64::from(n) / 40.0,
                turn_in_skirmish: n,
                own_handicap: Some(rng.random_range(0.0..5.0)),
            };
            assert_eq!(p.dist(&o).unwrap(), q.dist(&o).unwrap());
        }
    }

    #[test]
    fn rejects_wrong_version_and_magic() {
        let p = PolicyParams::zeros(FeatureLayout::default(), 10.0, 40, 4);
        let mut bytes = encode_checkpoint(&p);
        bytes[4] = 2;
        let err = decode_checkpoint(&bytes, Path::new("x")).unwrap_err().to_string();
        assert!(err.contains("version 2"), "{err}");
        bytes[0] = b'X';
        assert!(decode_checkpoint(&bytes, Path::new("x")).is_err());
        let good = encode_checkpoint(&p);
        assert!(decode_checkpoint(&good[..good.len() - 1], Path::new("x")).is_err());
    }
}
