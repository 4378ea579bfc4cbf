//! Content-addressed artifact cache: one file per key in a plain directory,
//! written via tempfile + atomic rename so partial writes are never visible.
//! Payloads carry a checksum line so corruption is detected on read.

use crate::error::{integrity, Result};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CacheKey(pub String);

impl CacheKey {
    /// Digest of the labelled parts, length-prefixed so distinct part lists
    /// can never collide by concatenation.
    pub fn digest(parts: &[(&str, &[u8])]) -> CacheKey {
        let mut h = Sha256::new();
        for (label, bytes) in parts {
            h.update((label.len() as u64).to_le_bytes());
            h.update(label.as_bytes());
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        }
        CacheKey(hex::encode(h.finalize()))
    }
}

pub struct Store {
    root: PathBuf,
}

const MAGIC: &[u8] = b"seqembed-store-v1\n";

impl Store {
    pub fn open(root: impl AsRef<Path>) -> Result<Store> {
        std::fs::create_dir_all(root.as_ref())?;
        Ok(Store { root: root.as_ref().to_path_buf() })
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.root.join(&key.0)
    }

    /// Write-then-rename: readers either see the whole artifact or nothing.
    pub fn put(&self, key: &CacheKey, bytes: &[u8]) -> Result<()> {
        let checksum = hex::encode(Sha256::digest(bytes));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root)?;
        tmp.write_all(MAGIC)?;
        tmp.write_all(checksum.as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.write_all(bytes)?;
        tmp.flush()?;
        tmp.persist(self.path(key)).map_err(|e| e.error)?;
        Ok(())
    }

    /// None when absent; an integrity error (naming the key) when the entry
    /// exists but fails its checksum.
    pub fn get(&self, key: &CacheKey) -> Result<Option<Vec<u8>>> {
        let path = self.path(key);
        let raw = match std::fs::read(&path) {
            Ok(r) => r,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let header_len = MAGIC.len() + 64 + 1;
        if raw.len() < header_len || &raw[..MAGIC.len()] != MAGIC || raw[header_len - 1] != b'\n' {
            return Err(integrity(format!("store entry {} is malformed", key.0)));
        }
        let stored = &raw[MAGIC.len()..header_len - 1];
        let body = &raw[header_len..];
        let actual = hex::encode(Sha256::digest(body));
        if stored != actual.as_bytes() {
            return Err(integrity(format!("store entry {} fails its checksum", key.0)));
        }
        Ok(Some(body.to_vec()))
    }

    pub fn list(&self) -> Result<Vec<CacheKey>> {
        let mut keys = Vec::new();
        for entry in std::fs::read_dir(&self.root)? {
            let entry = entry?;
            if let Some(name) = entry.file_name().to_str() {
                // tempfiles in flight have non-hex names and are skipped
                if name.len() == 64 && name.chars().all(|c| c.is_ascii_hexdigit()) {
                    keys.push(CacheKey(name.to_string()));
                }
            }
        }
        keys.sort();
        Ok(keys)
    }
}
