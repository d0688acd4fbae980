//! Checksummed, versioned corpus snapshots.
//!
//! Layout: 8-byte magic, little-endian u32 version, little-endian u64
//! payload length, JSON payload, then the SHA-256 of everything before it.
//! Restores are all-or-nothing.

use atlas_core::corpus::CorpusState;
use atlas_core::{CorpusError, CorpusStore, Taxonomy};
use sha2::{Digest, Sha256};

pub const MAGIC: &[u8; 8] = b"ATLASNAP";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SnapshotError {
    #[error("not a snapshot (bad magic)")]
    BadMagic,
    #[error("snapshot truncated")]
    Truncated,
    #[error("snapshot checksum mismatch")]
    Checksum,
    #[error("snapshot version {found} is not supported (this build reads {supported})")]
    Version { found: u32, supported: u32 },
    #[error("snapshot payload: {0}")]
    Payload(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

pub fn snapshot(store: &CorpusStore) -> Vec<u8> {
    let payload = serde_json::to_vec(&store.to_state()).expect("corpus state serializes");
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + CHECKSUM_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    let sum = Sha256::digest(&out);
    out.extend_from_slice(&sum);
    out
}

pub fn restore(blob: &[u8], taxonomy: &Taxonomy) -> Result<CorpusStore, SnapshotError> {
    if blob.len() < MAGIC.len() || &blob[..MAGIC.len()] != MAGIC {
        return Err(if MAGIC.starts_with(blob) { SnapshotError::Truncated } else { SnapshotError::BadMagic });
    }
    if blob.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(SnapshotError::Truncated);
    }
    let version = u32::from_le_bytes(blob[8..12].try_into().expect("4 bytes"));
    let len = u64::from_le_bytes(blob[12..20].try_into().expect("8 bytes"));
    let body_end = usize::try_from(len).ok().and_then(|l| l.checked_add(HEADER_LEN)).ok_or(SnapshotError::Truncated)?;
    if blob.len() != body_end + CHECKSUM_LEN {
        return Err(if blob.len() < body_end + CHECKSUM_LEN { SnapshotError::Truncated } else { SnapshotError::Checksum });
    }
    if Sha256::digest(&blob[..body_end]).as_slice() != &blob[body_end..] {
        return Err(SnapshotError::Checksum);
    }
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::Version { found: version, supported: SNAPSHOT_VERSION });
    }
    let state: CorpusState = serde_json::from_slice(&blob[HEADER_LEN..body_end]).map_err(|e| SnapshotError::Payload(e.to_string()))?;
    Ok(CorpusStore::from_state(state, taxonomy)?)
}
