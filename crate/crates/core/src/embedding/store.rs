//! Binary layout (all integers little-endian):
//!
//! ```text
//! magic "EMBD" | version u32 = 1 | dim u32 | count u64
//! count × ( key_len u32 | key UTF-8 bytes | dim × f32 )
//! ```
//!
//! Files that do not start with the magic are read as CSV rows
//! `key,v0,...,v{dim-1}` with an optional `key,...` header row.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::EmbeddingError;

const MAGIC: &[u8; 4] = b"EMBD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Option<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            None
        } else {
            Some(EmbeddingVector(values))
        }
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }

    /// Unit L2 norm; the zero vector is returned unchanged.
    pub fn normalized(&self) -> EmbeddingVector {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        EmbeddingVector(self.0.iter().map(|&v| (v as f64 / n) as f32).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    entries: BTreeMap<String, EmbeddingVector>,
    provenance: String,
}

impl EmbeddingStore {
    pub fn new(dim: usize, provenance: &str) -> Self {
        EmbeddingStore {
            dim,
            entries: BTreeMap::new(),
            provenance: provenance.to_string(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&EmbeddingVector> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn insert(&mut self, key: &str, values: Vec<f32>) -> Result<(), EmbeddingError> {
        if values.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch(key.to_string()));
        }
        let v = EmbeddingVector::new(values)
            .ok_or_else(|| EmbeddingError::CorruptEntry(key.to_string()))?;
        self.entries.insert(key.to_string(), v);
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.entries.len() * (8 + self.dim * 4));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for (key, v) in &self.entries {
            out.extend_from_slice(&(key.len() as u32).to_le_bytes());
            out.extend_from_slice(key.as_bytes());
            for x in v.values() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbeddingError> {
        crate::util::write_atomic(path, &self.to_bytes())?;
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8], provenance: &str) -> Result<Self, EmbeddingError> {
        if bytes.len() >= 4 && &bytes[..4] == MAGIC {
            parse_binary(bytes, provenance)
        } else {
            parse_csv(bytes, provenance)
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

fn parse_binary(bytes: &[u8], provenance: &str) -> Result<EmbeddingStore, EmbeddingError> {
    let header = |m: &str| EmbeddingError::BadHeader(m.to_string());
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u32().ok_or_else(|| header("truncated header"))?;
    if version != VERSION {
        return Err(header(&format!("unsupported version {version}")));
    }
    let dim = r.u32().ok_or_else(|| header("truncated header"))? as usize;
    let count = r.u64().ok_or_else(|| header("truncated header"))?;
    if dim == 0 {
        return Err(header("zero dimension"));
    }
    let mut store = EmbeddingStore::new(dim, provenance);
    for i in 0..count {
        let corrupt = || EmbeddingError::CorruptEntry(format!("#{i}"));
        let len = r.u32().ok_or_else(corrupt)? as usize;
        let key = std::str::from_utf8(r.take(len).ok_or_else(corrupt)?).map_err(|_| corrupt())?;
        let raw = r
            .take(dim * 4)
            .ok_or_else(|| EmbeddingError::CorruptEntry(key.to_string()))?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        store.insert(key, values)?;
    }
    if r.pos != bytes.len() {
        return Err(header("trailing bytes after last entry"));
    }
    Ok(store)
}

fn parse_csv(bytes: &[u8], provenance: &str) -> Result<EmbeddingStore, EmbeddingError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut store: Option<EmbeddingStore> = None;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let key = record.get(0).unwrap_or_default();
        if i == 0 && key == "key" {
            continue;
        }
        let values: Vec<f32> = record
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f32>())
            .collect::<Result<_, _>>()
            .map_err(|_| EmbeddingError::CorruptEntry(key.to_string()))?;
        let store = store.get_or_insert_with(|| EmbeddingStore::new(values.len(), provenance));
        store.insert(key, values)?;
    }
    store.ok_or_else(|| EmbeddingError::BadHeader("empty embedding file".to_string()))
}

/// Load a binary or CSV embedding file, validating dimensions and
/// finiteness of every entry.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingStore, EmbeddingError> {
    let bytes = fs::read(path)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    EmbeddingStore::from_bytes(&bytes, &format!("file:{name}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_three_keys() {
        let rows: String = (0..3)
            .map(|k| {
                let vals: Vec<String> = (0..8).map(|d| format!("{}", (k * 8 + d) as f32 / 10.0)).collect();
                format!("key{k},{}\n", vals.join(","))
            })
            .collect();
        let store = EmbeddingStore::from_bytes(rows.as_bytes(), "t").unwrap();
        assert_eq!(store.len(), 3);
        assert_eq!(store.dim(), 8);
    }

    #[test]
    fn csv_mixed_dims() {
        let text = "a,1,2,3,4,5,6,7,8\nb,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16\n";
        assert!(matches!(
            EmbeddingStore::from_bytes(text.as_bytes(), "t"),
            Err(EmbeddingError::DimensionMismatch(k)) if k == "b"
        ));
    }

    #[test]
    fn nan_entry_is_corrupt() {
        let text = "key,v0,v1\na,1,2\nb,NaN,1\n";
        assert!(matches!(
            EmbeddingStore::from_bytes(text.as_bytes(), "t"),
            Err(EmbeddingError::CorruptEntry(k)) if k == "b"
        ));
        let mut store = EmbeddingStore::new(2, "t");
        assert!(store.insert("x", vec![f32::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn truncated_binary() {
        let mut store = EmbeddingStore::new(4, "t");
        store.insert("a", vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let bytes = store.to_bytes();
        assert!(EmbeddingStore::from_bytes(&bytes[..bytes.len() - 2], "t").is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(entries in prop::collection::btree_map("[a-z ]{1,12}", prop::collection::vec(-100.0f32..100.0, 5), 0..20)) {
            let mut store = EmbeddingStore::new(5, "p");
            for (k, v) in &entries {
                store.insert(k, v.clone()).unwrap();
            }
            let bytes = store.to_bytes();
            let back = EmbeddingStore::from_bytes(&bytes, "p").unwrap();
            prop_assert_eq!(&back, &store);
            prop_assert_eq!(back.to_bytes(), bytes);
        }
    }
}
