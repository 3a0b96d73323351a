//! JSON shapes shared by the HTTP service and the batch commands.

use cec_core::{
    Embedder, GenerateReport, PerturbKind, PerturbSpec, RawTriple, RewardBreakdown, RewardError, RewardParams,
    ScoredBatch, Sentence, TrainingPair,
};
use serde::{Deserialize, Serialize};

/// Reward parameters as they appear in a request; missing fields fall back
/// to the configured values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl ParamsPatch {
    pub fn apply(&self, base: &RewardParams) -> RewardParams {
        RewardParams {
            theta: self.theta.unwrap_or(base.theta),
            beta: self.beta.unwrap_or(base.beta),
            alpha: self.alpha.unwrap_or(base.alpha),
            gamma: self.gamma.unwrap_or(base.gamma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardRequest {
    pub reference: String,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsPatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelOut {
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardResponse {
    pub results: Vec<RewardBreakdown>,
    pub pseudo_label: PseudoLabelOut,
}

impl From<ScoredBatch> for RewardResponse {
    fn from(batch: ScoredBatch) -> Self {
        RewardResponse {
            results: batch.results,
            pseudo_label: PseudoLabelOut { members: batch.pseudo_label.member_indices },
        }
    }
}

impl RewardRequest {
    pub fn params(&self, base: &RewardParams) -> RewardParams {
        self.params.unwrap_or_default().apply(base)
    }

    pub fn score(&self, base: &RewardParams, embedder: &dyn Embedder) -> Result<RewardResponse, RewardError> {
        let params = self.params(base);
        cec_core::score_candidates(&self.reference, &self.candidates, &params, embedder).map(Into::into)
    }
}

pub const DEFAULT_OUTPUTS_PER_SENTENCE: usize = 1;
pub const DEFAULT_EDIT_RATE: f64 = 0.1;

fn default_outputs() -> usize {
    DEFAULT_OUTPUTS_PER_SENTENCE
}

fn default_edit_rate() -> f64 {
    DEFAULT_EDIT_RATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbRequest {
    pub sentences: Vec<String>,
    /// Operator names; all operators when empty or absent.
    #[serde(default)]
    pub ops: Vec<String>,
    #[serde(default = "default_outputs")]
    pub outputs_per_sentence: usize,
    #[serde(default = "default_edit_rate")]
    pub edit_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Parse operator names, keeping their order. An empty list means all
/// operators.
pub fn parse_ops<S: AsRef<str>>(names: &[S]) -> Result<Vec<PerturbKind>, String> {
    if names.is_empty() {
        return Ok(PerturbKind::ALL.to_vec());
    }
    names.iter().map(|n| n.as_ref().parse::<PerturbKind>().map_err(|e| e.to_string())).collect()
}

impl PerturbRequest {
    pub fn spec(&self) -> Result<PerturbSpec, String> {
        let spec = PerturbSpec {
            ops: parse_ops(&self.ops)?,
            per_sentence_outputs: self.outputs_per_sentence,
            edit_rate: self.edit_rate,
            seed: self.seed,
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }

    pub fn corpus(&self) -> Vec<Sentence> {
        self.sentences.iter().map(|s| Sentence::new(s.as_str())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbResponse {
    pub pairs: Vec<TrainingPair>,
    pub report: GenerateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub triples: Vec<RawTriple>,
}

/// Structured error body: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

impl ErrorBody {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        ErrorBody { error: ErrorDetail { code: code.to_string(), message: message.into() } }
    }
}
