//! Building blocks for training and evaluating Chinese spelling correctors
//! with reinforcement learning.
//!
//! - [`perturb`]: seeded, table-driven generation of `(erroneous, clean)`
//!   sentence pairs.
//! - [`embedding`] and [`reward`]: embedding-similarity rewards anchored on
//!   the reference and on the consensus of a batch of sampled outputs.
//! - [`align`] and [`metrics`]: edit alignment and sentence/character-level
//!   detection and correction scores.

pub mod align;
pub mod embedding;
pub mod metrics;
pub mod perturb;
pub mod reward;
pub mod rng;
pub mod text;

pub use align::{align, normalize_prediction, spans, Alignment, EditOp, EditSpan, OpKind};
pub use embedding::{
    cosine, embed_batch, euclidean, Backend, EmbedError, Embedder, EmbedderConfig, EmbeddingVector, LocalEmbedder,
    RemoteEmbedder,
};
pub use metrics::{evaluate_corpus, evaluate_triple, EvalTriple, MetricsReport, RawTriple};
pub use perturb::{
    apply_op, generate_pairs, replay, ConfusionTables, GenerateReport, InjectedEdit, PerturbKind, PerturbSpec,
    TablePaths, TrainingPair,
};
pub use reward::{
    rl_score1, rl_score2, score_candidates, select_pseudo_label, PseudoLabel, RewardBreakdown, RewardError,
    RewardParams, ScoredBatch,
};
pub use rng::SplitMix64;
pub use text::{change_positions, LengthMismatch, Sentence};
