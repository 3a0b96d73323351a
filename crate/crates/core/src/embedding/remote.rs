//! Client for an external embedding server.
//!
//! Wire format: `POST {url}` with `{"texts": [...]}`, answered by
//! `{"embeddings": [[...], ...]}` holding one `dim`-length row per text.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbedError, Embedder, EmbedderConfig, EmbeddingVector};

// concurrent sub-requests per batch
const MAX_IN_FLIGHT: usize = 4;

#[derive(Serialize)]
struct Request<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct Response {
    embeddings: Vec<Vec<f64>>,
}

pub struct RemoteEmbedder {
    agent: ureq::Agent,
    url: String,
    dim: usize,
    batch_size: usize,
}

impl RemoteEmbedder {
    pub fn new(cfg: &EmbedderConfig) -> Result<Self, EmbedError> {
        let url = cfg
            .remote_url
            .clone()
            .filter(|u| !u.is_empty())
            .ok_or_else(|| EmbedError::Config("remote backend requires remote_url".into()))?;
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.remote_timeout_ms)))
            .http_status_as_error(false)
            .build();
        Ok(RemoteEmbedder {
            agent: ureq::Agent::new_with_config(config),
            url,
            dim: cfg.dim,
            batch_size: cfg.remote_batch_size.max(1),
        })
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(Request { texts })
            .map_err(|e| EmbedError::RemoteUnavailable(e.to_string()))?;
        let status = resp.status();
        if status != 200 {
            return Err(EmbedError::RemoteUnavailable(format!("HTTP {status}")));
        }
        let body: Response = resp.body_mut().read_json().map_err(|e| EmbedError::RemoteShape(e.to_string()))?;
        if body.embeddings.len() != texts.len() {
            return Err(EmbedError::RemoteShape(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                body.embeddings.len()
            )));
        }
        body.embeddings
            .into_iter()
            .map(|row| {
                if row.len() != self.dim {
                    return Err(EmbedError::RemoteShape(format!("expected dimension {}, got {}", self.dim, row.len())));
                }
                EmbeddingVector::new(row).map_err(|e| EmbedError::RemoteShape(e.to_string()))
            })
            .collect()
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let chunks: Vec<&[&str]> = texts.chunks(self.batch_size).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in chunks.chunks(MAX_IN_FLIGHT) {
            let results: Vec<Result<Vec<EmbeddingVector>, EmbedError>> = if wave.len() == 1 {
                vec![self.request(wave[0])]
            } else {
                std::thread::scope(|s| {
                    let handles: Vec<_> = wave.iter().map(|chunk| s.spawn(move || self.request(chunk))).collect();
                    handles
                        .into_iter()
                        .map(|h| {
                            h.join().unwrap_or_else(|_| {
                                Err(EmbedError::RemoteUnavailable("request thread panicked".into()))
                            })
                        })
                        .collect()
                })
            };
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}
