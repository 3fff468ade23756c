//! Range-addressable object store with in-memory and local-directory
//! backends: whole-object put/get, byte-range reads, and multipart writes
//! merged in part-number order.
//!
//! Backends inject no latency; all timing lives in the simulator's delay
//! model. A JSON sidecar under `<key>.meta.json` carries the coding metadata
//! a coded object needs for reconstruction.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Object-store interface shaped after the partial-read / multipart-write
/// APIs of commodity storage clouds. Concurrent access to distinct keys is
/// safe; same-key mutation is last-writer-wins.
pub trait ObjectStore {
    fn put(&self, key: &str, bytes: &[u8]) -> Result<()>;
    fn get(&self, key: &str) -> Result<Vec<u8>>;
    fn get_range(&self, key: &str, offset: u64, length: u64) -> Result<Vec<u8>>;
    fn delete(&self, key: &str) -> Result<()>;
    fn start_multipart(&self, key: &str) -> Result<()>;
    fn upload_part(&self, key: &str, part_number: u32, bytes: &[u8]) -> Result<()>;
    /// Concatenate the uploaded parts in part-number order and store the
    /// result under the key. Completion is idempotent: the parts stay staged,
    /// so re-completing yields the same object.
    fn complete_multipart(&self, key: &str) -> Result<()>;
}

fn check_range(size: u64, offset: u64, length: u64) -> Result<()> {
    let end = offset.checked_add(length).ok_or(Error::RangeOutOfBounds {
        offset,
        end: u64::MAX,
        size,
    })?;
    if end > size {
        return Err(Error::RangeOutOfBounds { offset, end, size });
    }
    Ok(())
}

fn assemble_parts(key: &str, parts: &BTreeMap<u32, Vec<u8>>) -> Result<Vec<u8>> {
    if parts.is_empty() {
        return Err(Error::NoMultipart(key.to_string()));
    }
    // part numbers must form the contiguous sequence 1..=count
    for (i, &num) in parts.keys().enumerate() {
        let expected = i as u32 + 1;
        if num != expected {
            return Err(Error::MissingPart {
                key: key.to_string(),
                part: expected,
            });
        }
    }
    Ok(parts.values().flat_map(|p| p.iter().copied()).collect())
}

#[derive(Default)]
struct MemoryInner {
    objects: HashMap<String, Vec<u8>>,
    multiparts: HashMap<String, BTreeMap<u32, Vec<u8>>>,
}

/// Heap-backed store, used by tests and the codec demo.
#[derive(Default)]
pub struct MemoryStore {
    inner: Mutex<MemoryInner>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ObjectStore for MemoryStore {
    fn put(&self, key: &str, bytes: &[u8]) -> Result<()> {
        let mut inner = self.inner.lock().unwrap();
        inner.objects.insert(key.to_string(), bytes.to_vec());
        Ok(())
    }

    fn get(&self, key: &str) -> Result<Vec<u8>> {
        let inner = self.inner.lock().unwrap();
        inner
            .objects
            .get(key)
            .cloned()
            .ok_or_else(|| Error::NotFound(key.to_string()))
    }

    fn get_range(&self, key: &str, offset: u64, length: u64) -> Result<Vec<u8>> {
        let inner = self.inner.lock().unwrap();
        let obj = inner
            .objects
            .get(key)
            .ok_or_else(|| Error::NotFound(key.to_string()))?;
        check_range(obj.len() as u64, offset, length)?;
        Ok(obj[offset as usize..(offset + length) as usize].to_vec())
    }

    fn delete(&self, key: &str) -> Result<()> {
        let mut inner = self.inner.lock().unwrap();
        inner
            .objects
            .remove(key)
            .map(|_| ())
            .ok_or_else(|| Error::NotFound(key.to_string()))
    }

    fn start_multipart(&self, key: &str) -> Result<()> {
        let mut inner = self.inner.lock().unwrap();
        inner.multiparts.insert(key.to_string(), BTreeMap::new());
        Ok(())
    }

    fn upload_part(&self, key: &str, part_number: u32, bytes: &[u8]) -> Result<()> {
        let mut inner = self.inner.lock().unwrap();
        let parts = inner
            .multiparts
            .get_mut(key)
            .ok_or_else(|| Error::NoMultipart(key.to_string()))?;
        parts.insert(part_number, bytes.to_vec());
        Ok(())
    }

    fn complete_multipart(&self, key: &str) -> Result<()> {
        let mut inner = self.inner.lock().unwrap();
        let parts = inner
            .multiparts
            .get(key)
            .ok_or_else(|| Error::NoMultipart(key.to_string()))?;
        let object = assemble_parts(key, parts)?;
        inner.objects.insert(key.to_string(), object);
        Ok(())
    }
}

/// Filesystem-backed store: one file per key under the root directory, with
/// multipart parts staged under `<root>/.multipart/`.
pub struct DirStore {
    root: PathBuf,
}

impl DirStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    fn object_path(&self, key: &str) -> PathBuf {
        self.root.join(key)
    }

    fn part_dir(&self, key: &str) -> PathBuf {
        self.root.join(".multipart").join(key)
    }

    fn staged_parts(&self, key: &str) -> Result<BTreeMap<u32, Vec<u8>>> {
        let dir = self.part_dir(key);
        if !dir.is_dir() {
            return Err(Error::NoMultipart(key.to_string()));
        }
        let mut parts = BTreeMap::new();
        for entry in std::fs::read_dir(&dir)? {
            let entry = entry?;
            let name = entry.file_name();
            let Some(num) = name.to_str().and_then(|s| s.parse::<u32>().ok()) else {
                continue;
            };
            parts.insert(num, std::fs::read(entry.path())?);
        }
        Ok(parts)
    }
}

impl ObjectStore for DirStore {
    fn put(&self, key: &str, bytes: &[u8]) -> Result<()> {
        let path = self.object_path(key);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }

    fn get(&self, key: &str) -> Result<Vec<u8>> {
        let path = self.object_path(key);
        if !path.is_file() {
            return Err(Error::NotFound(key.to_string()));
        }
        Ok(std::fs::read(path)?)
    }

    fn get_range(&self, key: &str, offset: u64, length: u64) -> Result<Vec<u8>> {
        use std::io::{Read, Seek, SeekFrom};
        let path = self.object_path(key);
        if !path.is_file() {
            return Err(Error::NotFound(key.to_string()));
        }
        let mut file = std::fs::File::open(path)?;
        let size = file.metadata()?.len();
        check_range(size, offset, length)?;
        file.seek(SeekFrom::Start(offset))?;
        let mut buf = vec![0u8; length as usize];
        file.read_exact(&mut buf)?;
        Ok(buf)
    }

    fn delete(&self, key: &str) -> Result<()> {
        let path = self.object_path(key);
        if !path.is_file() {
            return Err(Error::NotFound(key.to_string()));
        }
        std::fs::remove_file(path)?;
        Ok(())
    }

    fn start_multipart(&self, key: &str) -> Result<()> {
        let dir = self.part_dir(key);
        if dir.is_dir() {
            std::fs::remove_dir_all(&dir)?;
        }
        std::fs::create_dir_all(&dir)?;
        Ok(())
    }

    fn upload_part(&self, key: &str, part_number: u32, bytes: &[u8]) -> Result<()> {
        let dir = self.part_dir(key);
        if !dir.is_dir() {
            return Err(Error::NoMultipart(key.to_string()));
        }
        std::fs::write(dir.join(part_number.to_string()), bytes)?;
        Ok(())
    }

    fn complete_multipart(&self, key: &str) -> Result<()> {
        let parts = self.staged_parts(key)?;
        let object = assemble_parts(key, &parts)?;
        self.put(key, &object)
    }
}

/// Coding metadata stored next to a coded object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodedObjectMeta {
    pub original_len: u64,
    pub strip_bytes: u64,
    pub data_strips: u32,
    pub total_strips: u32,
}

impl CodedObjectMeta {
    pub fn sidecar_key(key: &str) -> String {
        format!("{key}.meta.json")
    }

    pub fn store(&self, store: &dyn ObjectStore, key: &str) -> Result<()> {
        store.put(&Self::sidecar_key(key), &serde_json::to_vec_pretty(self)?)
    }

    pub fn load(store: &dyn ObjectStore, key: &str) -> Result<Self> {
        let bytes = store.get(&Self::sidecar_key(key))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}
