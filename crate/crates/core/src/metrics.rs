//! Sentence- and character-level detection/correction metrics for spelling
//! check output.
//!
//! Predictions whose length differs from the source are first mapped back to
//! the source length with [`normalize_prediction`]. With `G` the positions
//! where the reference differs from the source and `P` the positions where
//! the normalized prediction differs from the source:
//!
//! | family              | tp                                  | fp                          | fn                               |
//! |---------------------|-------------------------------------|-----------------------------|----------------------------------|
//! | char detection      | `|G ∩ P|`                           | `|P \ G|`                   | `|G \ P|`                        |
//! | char correction     | `i ∈ G ∩ P` with `pred[i] == ref[i]` | `|P| - tp`                  | `i ∈ G` with `pred[i] != ref[i]` |
//! | sentence detection  | `P == G`, `G ≠ ∅`                   | `P ≠ ∅`, `P ≠ G`            | `G ≠ ∅`, `P ≠ G`                 |
//! | sentence correction | `P ≠ ∅`, `pred == ref`              | `P ≠ ∅`, `pred ≠ ref`       | `G ≠ ∅`, `pred ≠ ref`            |

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::align::normalize_prediction;
use crate::text::{change_positions, LengthMismatch, Sentence};

/// Raw `(source, reference, prediction)` strings, as read from disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTriple {
    pub source: String,
    pub reference: String,
    pub prediction: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalTriple {
    source: Sentence,
    reference: Sentence,
    prediction: Sentence,
    normalized_prediction: Sentence,
}

impl EvalTriple {
    /// Fails when source and reference differ in length.
    pub fn new(source: Sentence, reference: Sentence, prediction: Sentence) -> Result<Self, LengthMismatch> {
        if source.len() != reference.len() {
            return Err(LengthMismatch { left: source.len(), right: reference.len() });
        }
        let normalized_prediction = normalize_prediction(&source, &prediction);
        Ok(EvalTriple { source, reference, prediction, normalized_prediction })
    }

    pub fn source(&self) -> &Sentence {
        &self.source
    }

    pub fn reference(&self) -> &Sentence {
        &self.reference
    }

    pub fn prediction(&self) -> &Sentence {
        &self.prediction
    }

    pub fn normalized_prediction(&self) -> &Sentence {
        &self.normalized_prediction
    }
}

impl TryFrom<&RawTriple> for EvalTriple {
    type Error = LengthMismatch;

    fn try_from(t: &RawTriple) -> Result<Self, Self::Error> {
        EvalTriple::new(
            Sentence::new(t.source.as_str()),
            Sentence::new(t.reference.as_str()),
            Sentence::new(t.prediction.as_str()),
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        Counts { tp, fp, fn_ }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn score(&self) -> Score {
        Score {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
            precision: self.precision(),
            recall: self.recall(),
            f1: self.f1(),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

/// Per-triple (or summed) counts for the four metric families.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TripleCounts {
    pub char_detection: Counts,
    pub char_correction: Counts,
    pub sentence_detection: Counts,
    pub sentence_correction: Counts,
}

impl AddAssign for TripleCounts {
    fn add_assign(&mut self, o: TripleCounts) {
        self.char_detection += o.char_detection;
        self.char_correction += o.char_correction;
        self.sentence_detection += o.sentence_detection;
        self.sentence_correction += o.sentence_correction;
    }
}

pub fn evaluate_triple(t: &EvalTriple) -> TripleCounts {
    let src = &t.source;
    let reference = t.reference.chars();
    let pred = t.normalized_prediction.chars();
    let gold = change_positions(src, &t.reference).expect("source and reference lengths checked");
    let predicted = change_positions(src, &t.normalized_prediction).expect("normalized to source length");

    let hit = gold.intersection(&predicted).count() as u64;
    let char_detection =
        Counts::new(hit, predicted.difference(&gold).count() as u64, gold.difference(&predicted).count() as u64);

    let corrected = gold.intersection(&predicted).filter(|&&i| pred[i] == reference[i]).count() as u64;
    let char_correction = Counts::new(
        corrected,
        predicted.len() as u64 - corrected,
        gold.iter().filter(|&&i| pred[i] != reference[i]).count() as u64,
    );

    let flag = |b: bool| u64::from(b);
    let exact_positions = predicted == gold;
    let sentence_detection = Counts::new(
        flag(exact_positions && !gold.is_empty()),
        flag(!predicted.is_empty() && !exact_positions),
        flag(!gold.is_empty() && !exact_positions),
    );

    let fixed = t.normalized_prediction == t.reference;
    let sentence_correction = Counts::new(
        flag(!predicted.is_empty() && fixed),
        flag(!predicted.is_empty() && !fixed),
        flag(!gold.is_empty() && !fixed),
    );

    TripleCounts { char_detection, char_correction, sentence_detection, sentence_correction }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub size: usize,
    pub skipped: usize,
    pub char_detection: Score,
    pub char_correction: Score,
    pub sentence_detection: Score,
    pub sentence_correction: Score,
}

impl MetricsReport {
    pub fn from_counts(counts: &TripleCounts, size: usize, skipped: usize) -> Self {
        MetricsReport {
            size,
            skipped,
            char_detection: counts.char_detection.score(),
            char_correction: counts.char_correction.score(),
            sentence_detection: counts.sentence_detection.score(),
            sentence_correction: counts.sentence_correction.score(),
        }
    }

    pub fn families(&self) -> [(&'static str, &Score); 4] {
        [
            ("char detection", &self.char_detection),
            ("char correction", &self.char_correction),
            ("sentence detection", &self.sentence_detection),
            ("sentence correction", &self.sentence_correction),
        ]
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "triples: {}  skipped: {}", self.size, self.skipped)?;
        writeln!(
            f,
            "{:<20} {:>7} {:>7} {:>7} {:>9} {:>9} {:>9}",
            "metric", "tp", "fp", "fn", "precision", "recall", "f1"
        )?;
        for (name, s) in self.families() {
            writeln!(
                f,
                "{:<20} {:>7} {:>7} {:>7} {:>9.4} {:>9.4} {:>9.4}",
                name, s.tp, s.fp, s.fn_, s.precision, s.recall, s.f1
            )?;
        }
        Ok(())
    }
}

/// Sum counts over a corpus. Triples whose source and reference lengths
/// differ are skipped and counted in `skipped`; `size` counts the rest.
pub fn evaluate_corpus(triples: &[RawTriple]) -> MetricsReport {
    let mut counts = TripleCounts::default();
    let (mut size, mut skipped) = (0, 0);
    for raw in triples {
        match EvalTriple::try_from(raw) {
            Ok(t) => {
                counts += evaluate_triple(&t);
                size += 1;
            }
            Err(_) => skipped += 1,
        }
    }
    MetricsReport::from_counts(&counts, size, skipped)
}
