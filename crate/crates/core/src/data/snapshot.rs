//! Binary dataset snapshot with an embedded SHA-256 content hash.
//!
//! Layout (little endian): `MNAMSNP1`, `u64` payload length, payload,
//! 32-byte SHA-256 of the payload. The payload holds `n`, `p`, the feature
//! metadata, the row-major `f64` matrix and one byte per label.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::Dataset;
use crate::error::{Error, Result};
use crate::nam::FeatureMeta;

const MAGIC: &[u8; 8] = b"MNAMSNP1";

fn encode_payload(data: &Dataset) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + data.raw_features().len() * 8 + data.n_rows());
    out.extend_from_slice(&(data.n_rows() as u64).to_le_bytes());
    out.extend_from_slice(&(data.n_features() as u64).to_le_bytes());
    for m in data.meta() {
        out.extend_from_slice(&(m.name.len() as u64).to_le_bytes());
        out.extend_from_slice(m.name.as_bytes());
        out.extend_from_slice(&m.domain_lo.to_le_bytes());
        out.extend_from_slice(&m.domain_hi.to_le_bytes());
    }
    for v in data.raw_features() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(data.labels());
    out
}

/// Hex SHA-256 of the snapshot payload; identical datasets hash identically.
pub fn content_hash(data: &Dataset) -> String {
    hex::encode(Sha256::digest(encode_payload(data)))
}

pub fn write(data: &Dataset, path: impl AsRef<Path>) -> Result<String> {
    let payload = encode_payload(data);
    let digest = Sha256::digest(&payload);
    let mut out = Vec::with_capacity(payload.len() + 48);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&digest);
    fs::write(path, out)?;
    Ok(hex::encode(digest))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(s)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn read(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let fail = |reason: &str| Error::Snapshot {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let bytes = fs::read(path)?;
    if bytes.len() < 48 || &bytes[..8] != MAGIC {
        return Err(fail("not a dataset snapshot"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() != 16 + len + 32 {
        return Err(fail("truncated snapshot"));
    }
    let payload = &bytes[16..16 + len];
    if Sha256::digest(payload).as_slice() != &bytes[16 + len..] {
        return Err(fail("content hash mismatch"));
    }

    let mut cur = Cursor {
        buf: payload,
        pos: 0,
    };
    let corrupt = || fail("corrupt payload");
    let n = cur.u64().ok_or_else(corrupt)? as usize;
    let p = cur.u64().ok_or_else(corrupt)? as usize;
    let mut meta = Vec::with_capacity(p);
    for index in 0..p {
        let name_len = cur.u64().ok_or_else(corrupt)? as usize;
        let name = String::from_utf8(cur.take(name_len).ok_or_else(corrupt)?.to_vec())
            .map_err(|_| corrupt())?;
        let domain_lo = cur.f64().ok_or_else(corrupt)?;
        let domain_hi = cur.f64().ok_or_else(corrupt)?;
        meta.push(FeatureMeta {
            name,
            index,
            domain_lo,
            domain_hi,
        });
    }
    let cells = n.checked_mul(p).ok_or_else(corrupt)?;
    let mut features = Vec::with_capacity(cells);
    for _ in 0..cells {
        features.push(cur.f64().ok_or_else(corrupt)?);
    }
    let labels = cur.take(n).ok_or_else(corrupt)?.to_vec();
    if cur.pos != payload.len() {
        return Err(corrupt());
    }
    Dataset::with_meta(features, labels, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::new(
            vec![0.0, 0.5, 1.0, 0.25, 0.75, 0.125],
            vec![0, 1, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_preserves_data_and_hash() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.snap");
        let ds = sample();
        let hash = write(&ds, &path).unwrap();
        assert_eq!(hash, content_hash(&ds));
        assert_eq!(read(&path).unwrap(), ds);
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.snap");
        write(&sample(), &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[40] ^= 1;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(read(&path), Err(Error::Snapshot { .. })));
    }
}
