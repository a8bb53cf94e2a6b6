use std::sync::{Mutex, RwLock};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingStore, EmbeddingVector};
use crate::rng::{seeded, stable_hash};

/// Something that turns texts into fixed-dimension vectors.
pub trait EmbeddingProvider: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbeddingError>;
    fn provenance(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MockMode {
    /// One pseudo-random unit vector per distinct key.
    #[default]
    KeyHash,
    /// Sum of per-token pseudo-random vectors, so texts sharing words land
    /// near each other.
    BagOfWords,
}

/// Offline provider: vectors are a pure function of `(seed, text)`.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    dim: usize,
    seed: u64,
    mode: MockMode,
}

impl MockEmbedder {
    pub fn new(dim: usize, seed: u64, mode: MockMode) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        MockEmbedder { dim, seed, mode }
    }

    fn gaussian(&self, key: &str) -> Vec<f64> {
        let mut rng = seeded(stable_hash(self.seed, key));
        (0..self.dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    pub fn vector(&self, text: &str) -> Vec<f32> {
        let raw = match self.mode {
            MockMode::KeyHash => self.gaussian(text),
            MockMode::BagOfWords => {
                let mut acc = vec![0.0; self.dim];
                let mut any = false;
                for token in text
                    .split(|c: char| !c.is_alphanumeric())
                    .filter(|t| t.len() > 2)
                {
                    any = true;
                    let v = self.gaussian(&format!("tok:{}", token.to_lowercase()));
                    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
                }
                if any {
                    acc
                } else {
                    self.gaussian(text)
                }
            }
        };
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        raw.iter().map(|v| (v / norm) as f32).collect()
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbeddingError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }

    fn provenance(&self) -> String {
        let mode = match self.mode {
            MockMode::KeyHash => "key-hash",
            MockMode::BagOfWords => "bag-of-words",
        };
        format!("mock:{mode}:dim={}:seed={}", self.dim, self.seed)
    }
}

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde::{Deserialize, Serialize};

    use super::{EmbeddingError, EmbeddingProvider};

    /// POSTs `{texts}` and expects `{vectors}` back.
    pub struct HttpEmbedder {
        url: String,
        dim: usize,
        agent: ureq::Agent,
    }

    #[derive(Serialize)]
    struct Body<'a> {
        texts: &'a [String],
    }

    #[derive(Deserialize)]
    struct Reply {
        vectors: Vec<Vec<f32>>,
    }

    impl HttpEmbedder {
        pub fn new(url: &str, dim: usize, timeout: Duration) -> Self {
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(timeout))
                .http_status_as_error(false)
                .build()
                .into();
            HttpEmbedder {
                url: url.to_string(),
                dim,
                agent,
            }
        }
    }

    impl EmbeddingProvider for HttpEmbedder {
        fn dim(&self) -> usize {
            self.dim
        }

        fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, EmbeddingError> {
            let remote = |m: String| EmbeddingError::Remote(m);
            let mut response = self
                .agent
                .post(&self.url)
                .send_json(Body { texts })
                .map_err(|e| remote(e.to_string()))?;
            let status = response.status().as_u16();
            if !(200..300).contains(&status) {
                return Err(remote(format!("status {status}")));
            }
            let reply: Reply = response
                .body_mut()
                .read_json()
                .map_err(|e| remote(e.to_string()))?;
            if reply.vectors.len() != texts.len() {
                return Err(remote(format!(
                    "expected {} vectors, got {}",
                    texts.len(),
                    reply.vectors.len()
                )));
            }
            Ok(reply.vectors)
        }

        fn provenance(&self) -> String {
            format!("http:{}", self.url)
        }
    }
}

#[cfg(feature = "http")]
pub use http::HttpEmbedder;

/// Cache-first lookup over a store, with an optional provider for misses.
///
/// Reads share a lock; inserts are serialized. Remote batches are fetched in
/// waves of at most `max_in_flight` concurrent requests.
pub struct EmbeddingCache {
    store: RwLock<EmbeddingStore>,
    provider: Option<Box<dyn EmbeddingProvider>>,
    normalize: bool,
    batch_size: usize,
    max_in_flight: usize,
    fetch_lock: Mutex<()>,
}

impl EmbeddingCache {
    pub fn new(store: EmbeddingStore, provider: Option<Box<dyn EmbeddingProvider>>) -> Self {
        EmbeddingCache {
            store: RwLock::new(store),
            provider,
            normalize: true,
            batch_size: 64,
            max_in_flight: 4,
            fetch_lock: Mutex::new(()),
        }
    }

    pub fn offline(store: EmbeddingStore) -> Self {
        Self::new(store, None)
    }

    pub fn with_normalization(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn with_concurrency(mut self, batch_size: usize, max_in_flight: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self.max_in_flight = max_in_flight.max(1);
        self
    }

    pub fn dim(&self) -> usize {
        self.store.read().unwrap().dim()
    }

    pub fn len(&self) -> usize {
        self.store.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy of the underlying store, for persisting fetched vectors.
    pub fn snapshot(&self) -> EmbeddingStore {
        self.store.read().unwrap().clone()
    }

    fn finish(&self, v: &EmbeddingVector) -> EmbeddingVector {
        if self.normalize {
            v.normalized()
        } else {
            v.clone()
        }
    }

    pub fn get_embedding(&self, key: &str) -> Result<EmbeddingVector, EmbeddingError> {
        let mut out = self.get_many(&[key.to_string()])?;
        Ok(out.pop().expect("one key in, one vector out"))
    }

    pub fn get_many(&self, keys: &[String]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        if keys.iter().any(|k| k.is_empty()) {
            return Err(EmbeddingError::EmptyKey);
        }
        let missing = self.missing(keys);
        if !missing.is_empty() {
            let Some(provider) = &self.provider else {
                return Err(EmbeddingError::MissingEmbedding(missing[0].clone()));
            };
            let _guard = self.fetch_lock.lock().unwrap();
            // Another caller may have filled some keys while we waited.
            let missing = self.missing(&missing);
            self.fetch(provider.as_ref(), &missing)?;
        }
        let store = self.store.read().unwrap();
        keys.iter()
            .map(|k| {
                store
                    .get(k)
                    .map(|v| self.finish(v))
                    .ok_or_else(|| EmbeddingError::MissingEmbedding(k.clone()))
            })
            .collect()
    }

    fn missing(&self, keys: &[String]) -> Vec<String> {
        let store = self.store.read().unwrap();
        let mut out: Vec<String> = keys.iter().filter(|k| store.get(k).is_none()).cloned().collect();
        out.sort();
        out.dedup();
        out
    }

    fn fetch(&self, provider: &dyn EmbeddingProvider, keys: &[String]) -> Result<(), EmbeddingError> {
        let batches: Vec<&[String]> = keys.chunks(self.batch_size).collect();
        for wave in batches.chunks(self.max_in_flight) {
            let results: Vec<Result<Vec<Vec<f32>>, EmbeddingError>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|batch| s.spawn(move || provider.embed(batch)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("embedding worker panicked")).collect()
            });
            let mut store = self.store.write().unwrap();
            for (batch, result) in wave.iter().zip(results) {
                let vectors = result?;
                for (key, values) in batch.iter().zip(vectors) {
                    store.insert(key, values)?;
                }
            }
        }
        Ok(())
    }
}
