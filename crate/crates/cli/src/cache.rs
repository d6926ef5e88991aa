//! On-disk store for partial Green sums, keyed by a digest of everything
//! that determines them except the horizon. Entries are written to a
//! temporary file and renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

const MAGIC: &[u8; 8] = b"QWALKPS1";

/// A stored accumulator state at some horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub horizon: usize,
    pub sections: Vec<Vec<f64>>,
}

/// How a cached computation was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Miss,
    Hit,
    Resumed { from: usize },
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Miss => write!(f, "miss"),
            Outcome::Hit => write!(f, "hit"),
            Outcome::Resumed { from } => write!(f, "resumed from horizon {from}"),
        }
    }
}

pub fn key(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn at(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: Some(dir.to_path_buf()) })
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.bin")))
    }

    /// Corrupt or unreadable entries are reported and treated as absent.
    pub fn load(&self, key: &str) -> Option<Entry> {
        let path = self.path(key)?;
        let bytes = std::fs::read(&path).ok()?;
        match decode(&bytes) {
            Some(e) => Some(e),
            None => {
                log::warn!("ignoring corrupt cache entry {}", path.display());
                None
            }
        }
    }

    pub fn store(&self, key: &str, entry: &Entry) {
        let Some(path) = self.path(key) else { return };
        let dir = path.parent().expect("cache path has a parent");
        let result = tempfile::NamedTempFile::new_in(dir).and_then(|mut f| {
            f.write_all(&encode(entry))?;
            f.persist(&path).map_err(|e| e.error)?;
            Ok(())
        });
        if let Err(e) = result {
            log::warn!("could not write cache entry {}: {e}", path.display());
        }
    }
}

fn encode(entry: &Entry) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(entry.horizon as u64).to_le_bytes());
    out.extend_from_slice(&(entry.sections.len() as u64).to_le_bytes());
    for s in &entry.sections {
        out.extend_from_slice(&(s.len() as u64).to_le_bytes());
        for v in s {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

fn decode(bytes: &[u8]) -> Option<Entry> {
    if bytes.len() < MAGIC.len() + 16 + 32 || &bytes[..8] != MAGIC {
        return None;
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return None;
    }
    let mut pos = 8;
    let mut word = || -> Option<u64> {
        let w = u64::from_le_bytes(body.get(pos..pos + 8)?.try_into().ok()?);
        pos += 8;
        Some(w)
    };
    let horizon = word()? as usize;
    let n = word()? as usize;
    let mut sections = Vec::with_capacity(n.min(64));
    for _ in 0..n {
        let len = word()? as usize;
        let mut s = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            s.push(f64::from_bits(word()?));
        }
        sections.push(s);
    }
    (pos == body.len()).then_some(Entry { horizon, sections })
}
