//! On-disk cache of density-of-states measures.
//!
//! Each entry stores the serialized measure together with its SHA-256. An
//! entry whose checksum does not match, or that does not parse, is reported
//! and recomputed.

use std::fs;
use std::path::{Path, PathBuf};

use rotlab::EmpiricalMeasure;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::output::write_atomic;

/// Environment variable naming the cache root when the config has none.
pub const CACHE_ENV: &str = "ROTLAB_CACHE";

#[derive(Serialize, Deserialize)]
struct Entry {
    checksum: String,
    payload: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss,
    Corrupt,
    Disabled,
}

pub struct Cache {
    root: Option<PathBuf>,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Cache {
    /// Config directory first, then the environment variable; otherwise disabled.
    pub fn new(config_dir: Option<&Path>) -> Self {
        let root = config_dir.map(Path::to_path_buf).or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
        Self { root }
    }

    pub fn disabled() -> Self {
        Self { root: None }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join(format!("dos-{}.json", digest(key.as_bytes()))))
    }

    fn load(&self, key: &str) -> (Lookup, Option<EmpiricalMeasure>) {
        let Some(path) = self.path(key) else { return (Lookup::Disabled, None) };
        let Ok(text) = fs::read_to_string(&path) else { return (Lookup::Miss, None) };
        let parsed = serde_json::from_str::<Entry>(&text)
            .ok()
            .filter(|e| digest(e.payload.as_bytes()) == e.checksum)
            .and_then(|e| serde_json::from_str::<EmpiricalMeasure>(&e.payload).ok());
        match parsed {
            Some(mu) => (Lookup::Hit, Some(mu)),
            None => (Lookup::Corrupt, None),
        }
    }

    fn store(&self, key: &str, mu: &EmpiricalMeasure) -> std::io::Result<()> {
        let Some(path) = self.path(key) else { return Ok(()) };
        let payload = serde_json::to_string(mu).expect("measure serializes");
        let entry = Entry { checksum: digest(payload.as_bytes()), payload };
        write_atomic(&path, serde_json::to_string(&entry).expect("entry serializes").as_bytes())
    }

    /// Cached measure for `key`, computing and storing it on a miss.
    pub fn measure<F>(&self, key: &str, compute: F) -> rotlab::Result<(EmpiricalMeasure, Lookup)>
    where
        F: FnOnce() -> rotlab::Result<EmpiricalMeasure>,
    {
        let (status, hit) = self.load(key);
        if let Some(mu) = hit {
            eprintln!("cache hit: {}", self.path(key).expect("enabled").display());
            return Ok((mu, status));
        }
        if status == Lookup::Corrupt {
            eprintln!("cache entry {} failed its checksum; recomputing", self.path(key).expect("enabled").display());
        }
        let mu = compute()?;
        if let Err(e) = self.store(key, &mu) {
            eprintln!("cache write failed: {e}");
        }
        Ok((mu, status))
    }
}
