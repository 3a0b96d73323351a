//! Reward for a batch of sampled corrections.
//!
//! Each candidate earns a reference-anchored score from its cosine
//! similarity to the reference, and a consensus score from its cosine
//! similarity to the centre of the tightest cluster among all candidates.
//! The two are mixed linearly:
//!
//! ```text
//! score1 = max(0, (cos1 - theta) / (1 - theta))
//! score2 = max(0, (cos2 - beta)  / (1 - beta))
//! total  = alpha * score1 + gamma * score2
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine, euclidean, EmbedError, Embedder, EmbeddingVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("at least one candidate is required")]
    EmptyInput,
    #[error("invalid reward parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    pub theta: f64,
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams { theta: 0.8, beta: 0.85, alpha: 0.5, gamma: 0.5 }
    }
}

impl RewardParams {
    /// The pseudo-label cluster must hold strictly more than this fraction
    /// of the candidates.
    pub const CLUSTER_MIN_FRACTION: f64 = 1.0 / 3.0;

    pub fn validate(&self) -> Result<(), RewardError> {
        let bad = |msg: String| Err(RewardError::InvalidParams(msg));
        for (name, v) in [("theta", self.theta), ("beta", self.beta), ("alpha", self.alpha), ("gamma", self.gamma)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if !(0.0..1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1), got {}", self.theta));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1), got {}", self.beta));
        }
        if self.alpha < 0.0 || self.gamma < 0.0 {
            return bad("alpha and gamma must be non-negative".into());
        }
        if self.alpha + self.gamma <= 0.0 {
            return bad("alpha + gamma must be positive".into());
        }
        Ok(())
    }
}

/// Piecewise-linear activation: 0 at or below `threshold`, 1 at `cos == 1`.
fn thresholded(cos: f64, threshold: f64) -> f64 {
    debug_assert!(threshold < 1.0);
    ((cos - threshold) / (1.0 - threshold)).clamp(0.0, 1.0)
}

pub fn rl_score1(cos1: f64, theta: f64) -> f64 {
    thresholded(cos1, theta)
}

pub fn rl_score2(cos2: f64, beta: f64) -> f64 {
    thresholded(cos2, beta)
}

/// Size of the pseudo-label cluster for `l` candidates: the smallest integer
/// strictly greater than `l / 3`.
pub fn cluster_size(l: usize) -> usize {
    l / 3 + 1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoLabel {
    /// Ascending candidate indices.
    pub member_indices: Vec<usize>,
    pub center: EmbeddingVector,
    pub mean_pairwise_distance: f64,
}

impl PseudoLabel {
    pub fn contains(&self, index: usize) -> bool {
        self.member_indices.binary_search(&index).is_ok()
    }
}

fn mean_pairwise(members: &[usize], dist: &[Vec<f64>]) -> f64 {
    let m = members.len();
    if m < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            sum += dist[i][j];
        }
    }
    sum / (m * (m - 1) / 2) as f64
}

/// Pick the tightest group of `floor(l/3) + 1` embeddings.
///
/// Every point seeds a neighbourhood made of itself plus its nearest
/// neighbours (ties to the lower index); the neighbourhood with the smallest
/// mean pairwise Euclidean distance wins, ties to the lower seed. The centre
/// is the plain component-wise mean of the winners.
pub fn select_pseudo_label(embeddings: &[EmbeddingVector]) -> Result<PseudoLabel, RewardError> {
    let l = embeddings.len();
    if l == 0 {
        return Err(RewardError::EmptyInput);
    }
    let dim = embeddings[0].dim();
    let mut dist = vec![vec![0.0; l]; l];
    for i in 0..l {
        for j in i + 1..l {
            let d = euclidean(&embeddings[i], &embeddings[j])?;
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }

    let m = cluster_size(l);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for seed in 0..l {
        let mut others: Vec<usize> = (0..l).filter(|&j| j != seed).collect();
        others.sort_by(|&a, &b| dist[seed][a].total_cmp(&dist[seed][b]).then(a.cmp(&b)));
        let mut members = Vec::with_capacity(m);
        members.push(seed);
        members.extend_from_slice(&others[..m - 1]);
        members.sort_unstable();

        let score = mean_pairwise(&members, &dist);
        if best.as_ref().is_none_or(|(_, s)| score < *s) {
            best = Some((members, score));
        }
    }
    let (member_indices, mean_pairwise_distance) = best.expect("l >= 1");

    // running mean: identical members reproduce their vector bit for bit
    let mut mean = vec![0.0; dim];
    for (k, &i) in member_indices.iter().enumerate() {
        let weight = (k + 1) as f64;
        for (acc, v) in mean.iter_mut().zip(embeddings[i].values()) {
            *acc += (v - *acc) / weight;
        }
    }
    let center = EmbeddingVector::new(mean)?;

    Ok(PseudoLabel { member_indices, center, mean_pairwise_distance })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub cos1: f64,
    pub score1: f64,
    pub cos2: f64,
    pub score2: f64,
    pub total: f64,
    pub in_pseudo_label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBatch {
    pub results: Vec<RewardBreakdown>,
    pub pseudo_label: PseudoLabel,
}

/// Score every candidate against the reference and the candidates' own
/// consensus. The reference does not take part in clustering.
pub fn score_candidates<S: AsRef<str>>(
    reference: &str,
    candidates: &[S],
    params: &RewardParams,
    embedder: &dyn Embedder,
) -> Result<ScoredBatch, RewardError> {
    params.validate()?;
    if candidates.is_empty() {
        return Err(RewardError::EmptyInput);
    }

    let texts: Vec<&str> = std::iter::once(reference).chain(candidates.iter().map(AsRef::as_ref)).collect();
    let mut vectors = embedder.embed_batch(&texts)?;
    if vectors.len() != texts.len() {
        return Err(
            EmbedError::RemoteShape(format!("expected {} embeddings, got {}", texts.len(), vectors.len())).into()
        );
    }
    let candidate_vecs = vectors.split_off(1);
    let reference_vec = vectors.pop().expect("reference embedding");

    let pseudo_label = select_pseudo_label(&candidate_vecs)?;
    let results = candidate_vecs
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let cos1 = cosine(e, &reference_vec)?;
            let cos2 = cosine(e, &pseudo_label.center)?;
            let score1 = rl_score1(cos1, params.theta);
            let score2 = rl_score2(cos2, params.beta);
            Ok(RewardBreakdown {
                cos1,
                score1,
                cos2,
                score2,
                total: params.alpha * score1 + params.gamma * score2,
                in_pseudo_label: pseudo_label.contains(i),
            })
        })
        .collect::<Result<Vec<_>, EmbedError>>()?;

    Ok(ScoredBatch { results, pseudo_label })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::LocalEmbedder;

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn score1_examples() {
        assert_eq!(rl_score1(1.0, 0.8), 1.0);
        assert_eq!(rl_score1(0.8, 0.8), 0.0);
        assert!((rl_score1(0.9, 0.8) - 0.5).abs() < 1e-12);
        assert_eq!(rl_score1(-1.0, 0.8), 0.0);
        assert_eq!(rl_score1(1.0 + 1e-15, 0.8), 1.0);
    }

    #[test]
    fn score2_examples() {
        assert_eq!(rl_score2(1.0, 0.85), 1.0);
        assert_eq!(rl_score2(0.85, 0.85), 0.0);
        assert!((rl_score2(0.925, 0.85) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(RewardParams::default().validate().is_ok());
        let p = RewardParams::default();
        assert!(RewardParams { theta: 1.0, ..p }.validate().is_err());
        assert!(RewardParams { beta: -0.1, ..p }.validate().is_err());
        assert!(RewardParams { alpha: -1.0, ..p }.validate().is_err());
        assert!(RewardParams { alpha: 0.0, gamma: 0.0, ..p }.validate().is_err());
        assert!(RewardParams { gamma: f64::NAN, ..p }.validate().is_err());
        assert!(RewardParams { alpha: 0.0, ..p }.validate().is_ok());
    }

    #[test]
    fn identical_points_dominate() {
        let u = v(&[1.0, 0.0]);
        let embeddings = vec![u.clone(), u.clone(), u.clone(), u.clone(), v(&[10.0, 0.0]), v(&[0.0, -10.0])];
        let pl = select_pseudo_label(&embeddings).unwrap();
        assert_eq!(pl.member_indices, vec![0, 1, 2]);
        assert_eq!(pl.center, u);
        assert_eq!(pl.mean_pairwise_distance, 0.0);
    }

    #[test]
    fn singleton() {
        let e = v(&[0.5, 0.25]);
        let pl = select_pseudo_label(std::slice::from_ref(&e)).unwrap();
        assert_eq!(pl.member_indices, vec![0]);
        assert_eq!(pl.center, e);
        assert_eq!(pl.mean_pairwise_distance, 0.0);
    }

    #[test]
    fn three_points_pick_close_pair() {
        // d(0,1) = 0.1, d(0,2) = d(1,2) = 5 (approximately)
        let embeddings = vec![v(&[0.0, 0.0]), v(&[0.1, 0.0]), v(&[0.05, 4.99975])];
        let pl = select_pseudo_label(&embeddings).unwrap();
        assert_eq!(pl.member_indices, vec![0, 1]);
        assert!((pl.mean_pairwise_distance - 0.1).abs() < 1e-12);
        assert_eq!(pl.center.values(), &[0.05, 0.0]);
    }

    #[test]
    fn empty_input() {
        assert_eq!(select_pseudo_label(&[]).unwrap_err(), RewardError::EmptyInput);
        let e = LocalEmbedder::default();
        let none: [&str; 0] = [];
        assert_eq!(score_candidates("x", &none, &RewardParams::default(), &e).unwrap_err(), RewardError::EmptyInput);
    }

    #[test]
    fn cluster_size_law() {
        assert_eq!(cluster_size(1), 1);
        assert_eq!(cluster_size(2), 1);
        assert_eq!(cluster_size(3), 2);
        assert_eq!(cluster_size(6), 3);
        assert_eq!(cluster_size(8), 3);
    }

    #[test]
    fn singleton_candidate_scores_one() {
        let e = LocalEmbedder::default();
        let y = "李先生你好，您的欠款已经逾期了，预留紧急联系人是否真实有效？";
        let batch = score_candidates(y, &[y], &RewardParams::default(), &e).unwrap();
        assert_eq!(batch.results.len(), 1);
        let r = batch.results[0];
        assert_eq!((r.cos1, r.score1, r.cos2, r.score2, r.total), (1.0, 1.0, 1.0, 1.0, 1.0));
        assert!(r.in_pseudo_label);
    }
}
