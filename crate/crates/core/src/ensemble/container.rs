use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::codec::{to_u32, Reader, Writer};
use crate::error::{Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"BPTE";
pub const CONTAINER_VERSION: u32 = 1;

/// Named byte blobs, written in key order:
/// magic, version, u32 count, then per entry a u32-length key and a u32-length blob.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Container {
    entries: BTreeMap<String, Vec<u8>>,
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, blob: Vec<u8>) {
        self.entries.insert(key.into(), blob);
    }

    pub fn get(&self, key: &str) -> Option<&[u8]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn require(&self, key: &str) -> Result<&[u8]> {
        self.get(key).ok_or_else(|| Error::Format(format!("container has no entry {key:?}")))
    }

    pub fn remove(&mut self, key: &str) -> Option<Vec<u8>> {
        self.entries.remove(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::with_magic(CONTAINER_MAGIC, CONTAINER_VERSION);
        w.u32(to_u32(self.entries.len())?);
        for (k, v) in &self.entries {
            w.len_prefixed(k.as_bytes())?;
            w.len_prefixed(v)?;
        }
        Ok(w.finish())
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let (mut r, version) = Reader::open(buf, CONTAINER_MAGIC, "model container")?;
        if version != CONTAINER_VERSION {
            return Err(Error::Format(format!("unsupported container version {version}")));
        }
        let n = r.u32()?;
        let mut entries = BTreeMap::new();
        for _ in 0..n {
            let key = std::str::from_utf8(r.len_prefixed()?)
                .map_err(|_| Error::Format("container key is not UTF-8".into()))?
                .to_owned();
            let blob = r.len_prefixed()?.to_vec();
            if entries.insert(key.clone(), blob).is_some() {
                return Err(Error::Format(format!("duplicate container key {key:?}")));
            }
        }
        r.finish()?;
        Ok(Self { entries })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_layout() {
        let mut c = Container::new();
        c.insert("b", vec![1, 2, 3]);
        c.insert("a", vec![]);
        let bytes = c.to_bytes().unwrap();
        // magic 4 + version 4 + count 4 + ("a": 4+1 + 4+0) + ("b": 4+1 + 4+3)
        assert_eq!(bytes.len(), 12 + 9 + 12);
        assert_eq!(&bytes[..4], b"BPTE");
        assert_eq!(&bytes[16], &b'a');
        assert_eq!(Container::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn corrupt_input() {
        let mut c = Container::new();
        c.insert("k", vec![9; 10]);
        let bytes = c.to_bytes().unwrap();
        assert!(Container::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Container::from_bytes(&extra).is_err());
        assert!(Container::from_bytes(b"XXXX\x01\x00\x00\x00").is_err());
    }
}
