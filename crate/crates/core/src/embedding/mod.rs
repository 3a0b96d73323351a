//! Sentence embeddings and the vector math the reward relies on.
//!
//! Two backends sit behind [`Embedder`]:
//!
//! - [`LocalEmbedder`]: character unigram + bigram feature hashing. Each
//!   token's UTF-8 bytes are hashed with 64-bit FNV-1a; the token adds `+1`
//!   to bucket `hash % dim` when bit 63 of the hash is clear and `-1`
//!   otherwise. The accumulated vector is L2-normalized. The empty string
//!   maps to the zero vector. Pure and platform independent.
//! - [`RemoteEmbedder`]: a JSON-over-HTTP client for an external model
//!   server.

mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::RemoteEmbedder;

pub const DEFAULT_DIM: usize = 256;
pub const EMBED_URL_ENV: &str = "CEC_EMBED_URL";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("embedding server unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("embedding server returned a malformed response: {0}")]
    RemoteShape(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("invalid embedding: {0}")]
    Invalid(String),
    #[error("invalid embedder configuration: {0}")]
    Config(String),
}

/// A finite, non-empty real vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::Invalid("zero-dimensional vector".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbedError::Invalid(format!("non-finite entry at {i}")));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0);
        EmbeddingVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

fn check_dims(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<(), EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    check_dims(a, b)?;
    let sq = |v: &EmbeddingVector| v.0.iter().map(|x| x * x).sum::<f64>();
    let (na2, nb2) = (sq(a), sq(b));
    if na2 == 0.0 || nb2 == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    // sqrt(x * x) == x in IEEE arithmetic, so cosine(u, u) is exactly 1
    Ok((dot / (na2 * nb2).sqrt()).clamp(-1.0, 1.0))
}

pub fn euclidean(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    check_dims(a, b)?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Local,
    Remote,
}

impl std::str::FromStr for Backend {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "local" => Ok(Backend::Local),
            "remote" => Ok(Backend::Remote),
            other => Err(EmbedError::Config(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderConfig {
    pub backend: Backend,
    pub dim: usize,
    pub remote_url: Option<String>,
    pub remote_timeout_ms: u64,
    pub remote_batch_size: usize,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig {
            backend: Backend::Local,
            dim: DEFAULT_DIM,
            remote_url: None,
            remote_timeout_ms: 10_000,
            remote_batch_size: 32,
        }
    }
}

impl EmbedderConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::Config("dim must be positive".into()));
        }
        if self.backend == Backend::Remote {
            if self.remote_url.as_deref().is_none_or(str::is_empty) {
                return Err(EmbedError::Config("remote backend requires remote_url".into()));
            }
            if self.remote_timeout_ms == 0 || self.remote_batch_size == 0 {
                return Err(EmbedError::Config("remote_timeout_ms and remote_batch_size must be positive".into()));
            }
        }
        Ok(())
    }

    /// Apply `CEC_EMBED_URL` if it is set.
    pub fn with_env_override(mut self) -> Self {
        if let Ok(url) = std::env::var(EMBED_URL_ENV) {
            if !url.is_empty() {
                self.remote_url = Some(url);
            }
        }
        self
    }

    pub fn build(&self) -> Result<Box<dyn Embedder>, EmbedError> {
        self.validate()?;
        Ok(match self.backend {
            Backend::Local => Box::new(LocalEmbedder::new(self.dim)),
            Backend::Remote => Box::new(RemoteEmbedder::new(self)?),
        })
    }
}

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    /// One vector per input, in input order, or an error for the whole batch.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

/// Embed `texts` with a backend built from `cfg`.
pub fn embed_batch(texts: &[&str], cfg: &EmbedderConfig) -> Result<Vec<EmbeddingVector>, EmbedError> {
    cfg.build()?.embed_batch(texts)
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalEmbedder {
    dim: usize,
}

impl LocalEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        LocalEmbedder { dim }
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let mut acc = vec![0.0f64; self.dim];
        let mut add = |token: &str| {
            let h = fnv1a64(token.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            acc[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        };

        let mut buf = [0u8; 8];
        let chars: Vec<char> = text.chars().collect();
        for c in &chars {
            add(c.encode_utf8(&mut buf));
        }
        for pair in chars.windows(2) {
            let mut bigram = String::with_capacity(8);
            bigram.push(pair[0]);
            bigram.push(pair[1]);
            add(&bigram);
        }

        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            acc.iter_mut().for_each(|v| *v /= norm);
        }
        EmbeddingVector(acc)
    }
}

impl Default for LocalEmbedder {
    fn default() -> Self {
        LocalEmbedder::new(DEFAULT_DIM)
    }
}

impl Embedder for LocalEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn fnv_reference_values() {
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn cosine_cases() {
        let u = v(&[0.3, -1.2, 2.0]);
        assert!((cosine(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(cosine(&u, &EmbeddingVector::zeros(3)).unwrap(), 0.0);
        assert_eq!(cosine(&u, &v(&[1.0])).unwrap_err(), EmbedError::DimMismatch { left: 3, right: 1 });
    }

    #[test]
    fn euclidean_cases() {
        let u = v(&[0.3, -1.2]);
        assert_eq!(euclidean(&u, &u).unwrap(), 0.0);
        assert_eq!(euclidean(&v(&[0.0, 0.0]), &v(&[3.0, 4.0])).unwrap(), 5.0);
        let w = v(&[-2.5, 7.0]);
        assert_eq!(euclidean(&u, &w).unwrap(), euclidean(&w, &u).unwrap());
        assert!(euclidean(&u, &v(&[1.0])).is_err());
    }

    #[test]
    fn vector_validation() {
        assert!(EmbeddingVector::new(vec![]).is_err());
        assert!(EmbeddingVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(EmbeddingVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn local_embedder_basics() {
        let e = LocalEmbedder::default();
        let out = e.embed_batch(&["你好", "你好", ""]).unwrap();
        assert_eq!(out[0], out[1]);
        assert_eq!(out[2], EmbeddingVector::zeros(DEFAULT_DIM));
        assert!((out[0].norm() - 1.0).abs() < 1e-9);

        let s = e.embed("预留紧急联系人");
        assert_eq!(cosine(&s, &s).unwrap(), 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(EmbedderConfig::default().validate().is_ok());
        let remote = EmbedderConfig { backend: Backend::Remote, ..Default::default() };
        assert!(remote.validate().is_err());
        let remote = EmbedderConfig { remote_url: Some("http://127.0.0.1:1/embed".into()), ..remote };
        assert!(remote.validate().is_ok());
        assert!(EmbedderConfig { dim: 0, ..Default::default() }.validate().is_err());
        assert_eq!("Remote".parse::<Backend>().unwrap(), Backend::Remote);
        assert!("gpu".parse::<Backend>().is_err());
    }
}
