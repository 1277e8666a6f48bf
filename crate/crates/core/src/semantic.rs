//! Dense retrieval over unit-normalized chunk embeddings.
//!
//! Two embedders are provided: a deterministic feature-hashing embedder that
//! needs nothing outside the process, and a client for an HTTP embedding
//! service (`POST /embed`). The index is an exact cosine scan.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::chunker::Chunk;
use crate::error::{Error, Result};
use crate::lexical::tokenize;
use crate::ranking::{rank_scores, RankedHit};

pub const DEFAULT_DIMENSION: usize = 384;
pub const REMOTE_BATCH_SIZE: usize = 32;
pub const DEFAULT_REMOTE_TIMEOUT: Duration = Duration::from_secs(30);

pub const BUCKET_SEED: u64 = 0x5EED_0001;
pub const SIGN_SEED: u64 = 0x5EED_0002;

/// Either unit norm or the all-zeros vector reserved for token-free text.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn zeros(dimension: usize) -> Self {
        Self(vec![0.0; dimension])
    }

    /// L2-normalizes `values`; an all-zero input stays zero.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;

    /// Identifies the embedding space; indexes refuse queries from another kind.
    fn kind(&self) -> String;

    /// Texts per call when building an index.
    fn batch_size(&self) -> usize;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>>;

    fn embed(&self, text: &str) -> Result<Embedding> {
        self.embed_batch(&[text])?
            .pop()
            .ok_or_else(|| Error::RemoteEmbedder {
                batch: 0,
                message: "no vector returned".into(),
            })
    }
}

/// 64-bit FNV-1a with the seed folded into the offset basis, followed by the
/// splitmix64 finalizer.
pub fn seeded_hash(seed: u64, bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for &byte in bytes {
        h ^= u64::from(byte);
        h = h.wrapping_mul(PRIME);
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Bucket index of `token` in a `dimension`-wide hashed space.
pub fn hash_bucket(token: &str, dimension: usize) -> usize {
    (seeded_hash(BUCKET_SEED, token.as_bytes()) % dimension as u64) as usize
}

pub fn hash_sign(token: &str) -> f64 {
    if seeded_hash(SIGN_SEED, token.as_bytes()) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Signed feature hashing of the lexical token stream, L2-normalized. If the
/// signs cancel completely the unsigned counts are used instead.
pub fn embed_hashing(text: &str, dimension: usize) -> Embedding {
    let mut values = vec![0.0; dimension];
    if dimension == 0 {
        return Embedding(values);
    }
    let tokens = tokenize(text);
    for token in &tokens {
        values[hash_bucket(token, dimension)] += hash_sign(token);
    }
    if !tokens.is_empty() && values.iter().all(|&v| v == 0.0) {
        // signs cancelled out; unsigned counts keep the zero vector for empty text
        for token in &tokens {
            values[hash_bucket(token, dimension)] += 1.0;
        }
    }
    Embedding::normalized(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        Ok(Self { dimension })
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_DIMENSION,
        }
    }
}

impl Embedder for HashingEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn kind(&self) -> String {
        format!("hashing/{}", self.dimension)
    }

    fn batch_size(&self) -> usize {
        usize::MAX
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        Ok(texts
            .iter()
            .map(|t| embed_hashing(t, self.dimension))
            .collect())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for an embedding service answering `POST <base>/embed`.
pub struct RemoteEmbedder {
    endpoint: String,
    dimension: usize,
    agent: ureq::Agent,
}

impl RemoteEmbedder {
    pub fn new(base_url: &str, dimension: usize, timeout: Duration) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        if !(base_url.starts_with("http://") || base_url.starts_with("https://")) {
            return Err(Error::Config(format!("embedder url {base_url:?} is not http(s)")));
        }
        let trimmed = base_url.trim_end_matches('/');
        let endpoint = if trimmed.ends_with("/embed") {
            trimmed.to_owned()
        } else {
            format!("{trimmed}/embed")
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Ok(Self {
            endpoint,
            dimension,
            agent,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Embeds `texts` in one request. `batch` is only used to label errors.
    pub fn embed_remote(&self, texts: &[&str], batch: usize) -> Result<Vec<Embedding>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let remote_err = |message: String| Error::RemoteEmbedder { batch, message };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(EmbedRequest { texts })
            .map_err(|e| remote_err(e.to_string()))?;
        if response.status() != 200 {
            return Err(remote_err(format!("status {}", response.status())));
        }
        let body: EmbedResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| remote_err(format!("malformed response: {e}")))?;
        if body.vectors.len() != texts.len() {
            return Err(remote_err(format!(
                "expected {} vectors, got {}",
                texts.len(),
                body.vectors.len()
            )));
        }
        body.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dimension {
                    return Err(Error::Config(format!(
                        "embedding service returned dimension {}, configured {}",
                        v.len(),
                        self.dimension
                    )));
                }
                Ok(Embedding::normalized(v))
            })
            .collect()
    }
}

impl Embedder for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn kind(&self) -> String {
        format!("remote:{}/{}", self.endpoint, self.dimension)
    }

    fn batch_size(&self) -> usize {
        REMOTE_BATCH_SIZE
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>> {
        self.embed_remote(texts, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dimension: usize,
    embedder_kind: String,
    rows: Vec<(String, Embedding)>,
}

impl VectorIndex {
    /// One row per chunk in input order.
    pub fn build(chunks: &[Chunk], embedder: &dyn Embedder) -> Result<Self> {
        let dimension = embedder.dimension();
        let batch_size = embedder.batch_size().max(1);
        let mut rows = Vec::with_capacity(chunks.len());

        for (batch_no, batch) in chunks.chunks(batch_size).enumerate() {
            let texts: Vec<&str> = batch.iter().map(|c| c.text.as_str()).collect();
            let label = |source: Error| Error::Embedding {
                chunk_id: batch[0].id.clone(),
                source: Box::new(match source {
                    Error::RemoteEmbedder { message, .. } => Error::RemoteEmbedder {
                        batch: batch_no,
                        message,
                    },
                    other => other,
                }),
            };
            let vectors = embedder.embed_batch(&texts).map_err(label)?;
            if vectors.len() != batch.len() {
                return Err(label(Error::RemoteEmbedder {
                    batch: batch_no,
                    message: format!("expected {} vectors, got {}", batch.len(), vectors.len()),
                }));
            }
            for (chunk, vector) in batch.iter().zip(vectors) {
                if vector.dimension() != dimension {
                    return Err(Error::Embedding {
                        chunk_id: chunk.id.clone(),
                        source: Box::new(Error::Config(format!(
                            "vector dimension {} differs from {dimension}",
                            vector.dimension()
                        ))),
                    });
                }
                rows.push((chunk.id.clone(), vector));
            }
        }

        Ok(Self {
            dimension,
            embedder_kind: embedder.kind(),
            rows,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(String, Embedding)] {
        &self.rows
    }

    /// Exhaustive cosine scan. Rows with the zero vector never match.
    pub fn query(&self, text: &str, embedder: &dyn Embedder, top_n: usize) -> Result<Vec<RankedHit>> {
        if embedder.dimension() != self.dimension || embedder.kind() != self.embedder_kind {
            return Err(Error::Config(format!(
                "query embedder {} does not match index embedder {}",
                embedder.kind(),
                self.embedder_kind
            )));
        }
        let query = embedder.embed(text)?;
        if query.dimension() != self.dimension {
            return Err(Error::Config(format!(
                "query vector dimension {} differs from index dimension {}",
                query.dimension(),
                self.dimension
            )));
        }
        if query.is_zero() || top_n == 0 {
            return Ok(Vec::new());
        }
        let scored = self
            .rows
            .iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(id, v)| (id.clone(), query.dot(v)));
        Ok(rank_scores(scored, top_n))
    }
}
