//! Content-addressed response cache.
//!
//! Keys are SHA-256 digests of the canonical JSON form of a request; values
//! are canonical JSON files at `<root>/<namespace>/<hash>.json`. Writes go
//! through a temporary file and an atomic rename so concurrent readers never
//! see a partial value.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Canonical JSON: object keys sorted, no insignificant whitespace.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("cache values serialize to JSON");
    serde_json::to_string(&value).expect("JSON values serialize")
}

pub fn hash_key<T: Serialize + ?Sized>(key: &T) -> String {
    mbc_core::prompts::sha256_hex(canonical_json(key).as_bytes())
}

#[derive(Debug, Clone)]
enum Backend {
    Disabled,
    Memory(Arc<RwLock<HashMap<String, String>>>),
    Dir(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Cache {
    backend: Backend,
}

impl Cache {
    pub fn disabled() -> Self {
        Self { backend: Backend::Disabled }
    }

    pub fn memory() -> Self {
        Self { backend: Backend::Memory(Arc::default()) }
    }

    pub fn dir(root: impl Into<PathBuf>) -> Self {
        Self { backend: Backend::Dir(root.into()) }
    }

    pub fn root(&self) -> Option<&Path> {
        match &self.backend {
            Backend::Dir(p) => Some(p),
            _ => None,
        }
    }

    fn path(root: &Path, namespace: &str, hash: &str) -> PathBuf {
        root.join(namespace).join(format!("{hash}.json"))
    }

    pub fn get<K, V>(&self, namespace: &str, key: &K) -> Option<V>
    where
        K: Serialize + ?Sized,
        V: DeserializeOwned,
    {
        let hash = hash_key(key);
        let raw = match &self.backend {
            Backend::Disabled => return None,
            Backend::Memory(map) => map.read().ok()?.get(&format!("{namespace}/{hash}")).cloned()?,
            Backend::Dir(root) => fs::read_to_string(Self::path(root, namespace, &hash)).ok()?,
        };
        match serde_json::from_str(&raw) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {namespace}/{hash}: {e}");
                None
            }
        }
    }

    pub fn put<K, V>(&self, namespace: &str, key: &K, value: &V) -> Result<()>
    where
        K: Serialize + ?Sized,
        V: Serialize + ?Sized,
    {
        let hash = hash_key(key);
        let body = canonical_json(value);
        match &self.backend {
            Backend::Disabled => Ok(()),
            Backend::Memory(map) => {
                if let Ok(mut map) = map.write() {
                    map.insert(format!("{namespace}/{hash}"), body);
                }
                Ok(())
            }
            Backend::Dir(root) => {
                let dir = root.join(namespace);
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                let target = Self::path(root, namespace, &hash);
                let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
                tmp.write_all(body.as_bytes()).map_err(|e| Error::io(&target, e))?;
                tmp.persist(&target).map_err(|e| Error::io(&target, e.error))?;
                Ok(())
            }
        }
    }
}
