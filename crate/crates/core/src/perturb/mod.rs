//! Synthetic training-pair generation.
//!
//! A clean sentence Y is turned into one or more erroneous sources X by
//! table-driven operators (homophone and shape-similar substitution,
//! character splitting and merging, symbol insertion and substitution).
//! Every injected edit is recorded in Y's coordinates so the pair can be
//! replayed exactly.

mod tables;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::text::Sentence;

pub use tables::{ConfusionTables, TableError, TableKind, TablePaths};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbKind {
    Homophone,
    Visual,
    Merge,
    Split,
    SymbolInsert,
    SymbolSubstitute,
}

impl PerturbKind {
    pub const ALL: [PerturbKind; 6] = [
        PerturbKind::Homophone,
        PerturbKind::Visual,
        PerturbKind::Merge,
        PerturbKind::Split,
        PerturbKind::SymbolInsert,
        PerturbKind::SymbolSubstitute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PerturbKind::Homophone => "homophone",
            PerturbKind::Visual => "visual",
            PerturbKind::Merge => "merge",
            PerturbKind::Split => "split",
            PerturbKind::SymbolInsert => "symbol_insert",
            PerturbKind::SymbolSubstitute => "symbol_substitute",
        }
    }

    /// Kinds that replace one character with one character.
    pub fn preserves_length(self) -> bool {
        matches!(self, PerturbKind::Homophone | PerturbKind::Visual | PerturbKind::SymbolSubstitute)
    }
}

impl fmt::Display for PerturbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown perturbation kind {0:?}")]
pub struct UnknownKind(pub String);

impl FromStr for PerturbKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        PerturbKind::ALL.into_iter().find(|k| k.as_str() == norm).ok_or_else(|| UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("at least one perturbation kind is required")]
    NoOps,
    #[error("outputs per sentence must be at least 1")]
    NoOutputs,
    #[error("edit rate must lie in (0, 1], got {0}")]
    EditRate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub ops: Vec<PerturbKind>,
    pub per_sentence_outputs: usize,
    pub edit_rate: f64,
    pub seed: u64,
}

impl PerturbSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.ops.is_empty() {
            return Err(SpecError::NoOps);
        }
        if self.per_sentence_outputs == 0 {
            return Err(SpecError::NoOutputs);
        }
        if !(self.edit_rate > 0.0 && self.edit_rate <= 1.0) {
            return Err(SpecError::EditRate(self.edit_rate));
        }
        Ok(())
    }
}

/// One injected edit: `reference[ref_start..ref_end]` was replaced by
/// `replacement`. Insertions have `ref_start == ref_end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectedEdit {
    pub kind: PerturbKind,
    pub ref_start: usize,
    pub ref_end: usize,
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub source: Sentence,
    pub reference: Sentence,
    pub edits: Vec<InjectedEdit>,
    /// Starting state of the pair's random stream.
    pub seed: u64,
}

/// No position in the sentence admits the requested operator.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("no eligible site for {0}")]
pub struct NoEligibleSite(pub PerturbKind);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("edit {index} range {start}..{end} is out of bounds for length {len}")]
    OutOfBounds { index: usize, start: usize, end: usize, len: usize },
    #[error("edit {index} overlaps or precedes the previous edit")]
    Overlap { index: usize },
}

/// Apply recorded edits to `reference`. Edits must be sorted by position and
/// must not overlap; at most one insertion per point.
pub fn replay(reference: &Sentence, edits: &[InjectedEdit]) -> Result<Sentence, ReplayError> {
    let chars = reference.chars();
    let mut out = Vec::with_capacity(chars.len() + edits.len());
    let mut cursor = 0usize;
    let mut last_insert_at: Option<usize> = None;
    for (index, e) in edits.iter().enumerate() {
        if e.ref_start > e.ref_end || e.ref_end > chars.len() {
            return Err(ReplayError::OutOfBounds { index, start: e.ref_start, end: e.ref_end, len: chars.len() });
        }
        let is_insert = e.ref_start == e.ref_end;
        if e.ref_start < cursor || (is_insert && last_insert_at == Some(e.ref_start)) {
            return Err(ReplayError::Overlap { index });
        }
        out.extend_from_slice(&chars[cursor..e.ref_start]);
        out.extend(e.replacement.chars());
        cursor = e.ref_end;
        last_insert_at = is_insert.then_some(e.ref_start);
    }
    out.extend_from_slice(&chars[cursor..]);
    Ok(Sentence::from_chars(out))
}

/// Bookkeeping of which parts of the reference already carry an edit.
struct Occupancy {
    covered: Vec<bool>,
    // insertion points 0..=n
    inserted: Vec<bool>,
    // points strictly inside a multi-character edited range
    interior: Vec<bool>,
}

impl Occupancy {
    fn new(len: usize) -> Self {
        Occupancy { covered: vec![false; len], inserted: vec![false; len + 1], interior: vec![false; len + 1] }
    }

    fn range_free(&self, start: usize, end: usize) -> bool {
        !self.covered[start..end].iter().any(|&c| c) && !self.inserted[start + 1..end].iter().any(|&c| c)
    }

    fn point_free(&self, p: usize) -> bool {
        !self.inserted[p] && !self.interior[p]
    }

    fn claim(&mut self, start: usize, end: usize) {
        if start == end {
            self.inserted[start] = true;
        } else {
            self.covered[start..end].iter_mut().for_each(|c| *c = true);
            self.interior[start + 1..end].iter_mut().for_each(|c| *c = true);
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Site {
    start: usize,
    end: usize,
}

fn eligible_sites(chars: &[char], kind: PerturbKind, tables: &ConfusionTables, occ: &Occupancy) -> Vec<Site> {
    let n = chars.len();
    let single = |map: &std::collections::BTreeMap<char, Vec<char>>| -> Vec<Site> {
        (0..n)
            .filter(|&i| map.contains_key(&chars[i]) && occ.range_free(i, i + 1))
            .map(|i| Site { start: i, end: i + 1 })
            .collect()
    };
    match kind {
        PerturbKind::Homophone => single(tables.homophone()),
        PerturbKind::Visual => single(tables.visual()),
        PerturbKind::Split => single(tables.split()),
        PerturbKind::SymbolSubstitute => single(tables.symbol_substitute()),
        PerturbKind::Merge => {
            let mut sites = Vec::new();
            for i in 0..n {
                for key in tables.merge().keys() {
                    let end = i + key.len();
                    if end <= n && chars[i..end] == key[..] && occ.range_free(i, end) {
                        sites.push(Site { start: i, end });
                    }
                }
            }
            sites
        }
        PerturbKind::SymbolInsert => {
            if tables.symbol_insert().is_empty() {
                return Vec::new();
            }
            // after each character
            (1..=n).filter(|&p| occ.point_free(p)).map(|p| Site { start: p, end: p }).collect()
        }
    }
}

fn replacement_for(
    chars: &[char],
    kind: PerturbKind,
    site: Site,
    tables: &ConfusionTables,
    rng: &mut SplitMix64,
) -> String {
    let pick =
        |list: &[char], rng: &mut SplitMix64| -> String { rng.choose(list).map(|c| c.to_string()).unwrap_or_default() };
    match kind {
        PerturbKind::Homophone => pick(&tables.homophone()[&chars[site.start]], rng),
        PerturbKind::Visual => pick(&tables.visual()[&chars[site.start]], rng),
        PerturbKind::SymbolSubstitute => pick(&tables.symbol_substitute()[&chars[site.start]], rng),
        PerturbKind::SymbolInsert => pick(tables.symbol_insert(), rng),
        PerturbKind::Split => tables.split()[&chars[site.start]].iter().collect(),
        PerturbKind::Merge => tables.merge()[&chars[site.start..site.end]].to_string(),
    }
}

fn inject(
    chars: &[char],
    kind: PerturbKind,
    tables: &ConfusionTables,
    occ: &mut Occupancy,
    rng: &mut SplitMix64,
) -> Result<InjectedEdit, NoEligibleSite> {
    let sites = eligible_sites(chars, kind, tables, occ);
    let site = *rng.choose(&sites).ok_or(NoEligibleSite(kind))?;
    let replacement = replacement_for(chars, kind, site, tables, rng);
    occ.claim(site.start, site.end);
    Ok(InjectedEdit { kind, ref_start: site.start, ref_end: site.end, replacement })
}

/// Apply exactly one edit of `kind` at a uniformly chosen eligible site.
pub fn apply_op(
    y: &Sentence,
    kind: PerturbKind,
    tables: &ConfusionTables,
    rng: &mut SplitMix64,
) -> Result<(Sentence, InjectedEdit), NoEligibleSite> {
    let mut occ = Occupancy::new(y.len());
    let edit = inject(y.chars(), kind, tables, &mut occ, rng)?;
    let x = replay(y, std::slice::from_ref(&edit)).expect("single edit is in bounds");
    Ok((x, edit))
}

/// Number of character positions at which at least one of `ops` could act.
/// An insertion after character `i` counts toward position `i`.
pub fn eligible_position_count(y: &Sentence, ops: &[PerturbKind], tables: &ConfusionTables) -> usize {
    let occ = Occupancy::new(y.len());
    let mut hit = vec![false; y.len()];
    for &kind in ops {
        for site in eligible_sites(y.chars(), kind, tables, &occ) {
            let pos = if site.start == site.end { site.start - 1 } else { site.start };
            hit[pos] = true;
        }
    }
    hit.into_iter().filter(|&h| h).count()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateReport {
    pub sentences: usize,
    pub pairs: usize,
    /// Outputs skipped because no operator found an eligible site.
    pub skipped_no_site: usize,
    /// Outputs skipped because the edits happened to reproduce the reference.
    pub skipped_unchanged: usize,
}

impl GenerateReport {
    pub fn skipped(&self) -> usize {
        self.skipped_no_site + self.skipped_unchanged
    }
}

/// Build the `output_index`-th perturbed source for sentence
/// `sentence_index`. Returns `None` when the output has to be skipped.
fn generate_one(
    y: &Sentence,
    sentence_index: usize,
    output_index: usize,
    spec: &PerturbSpec,
    tables: &ConfusionTables,
    report: &mut GenerateReport,
) -> Option<TrainingPair> {
    let mut rng = SplitMix64::derive(spec.seed, &[sentence_index as u64, output_index as u64]);
    let stream_seed = rng.state();

    let eligible = eligible_position_count(y, &spec.ops, tables);
    if eligible == 0 {
        report.skipped_no_site += 1;
        return None;
    }
    let target = ((spec.edit_rate * eligible as f64).ceil() as usize).max(1);

    let chars = y.chars();
    let mut occ = Occupancy::new(chars.len());
    let mut edits = Vec::with_capacity(target);
    // successive outputs start the round-robin at successive kinds
    let mut cursor = output_index % spec.ops.len();
    let mut misses = 0;
    while edits.len() < target && misses < spec.ops.len() {
        let kind = spec.ops[cursor];
        cursor = (cursor + 1) % spec.ops.len();
        match inject(chars, kind, tables, &mut occ, &mut rng) {
            Ok(edit) => {
                edits.push(edit);
                misses = 0;
            }
            Err(NoEligibleSite(_)) => misses += 1,
        }
    }
    if edits.is_empty() {
        report.skipped_no_site += 1;
        return None;
    }

    edits.sort_by_key(|e| (e.ref_start, e.ref_end));
    let source = replay(y, &edits).expect("generated edits are disjoint");
    if source == *y {
        report.skipped_unchanged += 1;
        return None;
    }
    Some(TrainingPair { source, reference: y.clone(), edits, seed: stream_seed })
}

/// Generate up to `spec.per_sentence_outputs` pairs per corpus sentence.
///
/// Each output draws from its own stream keyed by `(seed, sentence index,
/// output index)`, so the result depends only on the inputs, never on
/// iteration order or parallelism.
pub fn generate_pairs(
    corpus: &[Sentence],
    spec: &PerturbSpec,
    tables: &ConfusionTables,
) -> Result<(Vec<TrainingPair>, GenerateReport), SpecError> {
    spec.validate()?;
    let mut report = GenerateReport { sentences: corpus.len(), ..Default::default() };
    let mut pairs = Vec::new();
    for (si, y) in corpus.iter().enumerate() {
        for oi in 0..spec.per_sentence_outputs {
            if let Some(pair) = generate_one(y, si, oi, spec, tables, &mut report) {
                pairs.push(pair);
            }
        }
    }
    report.pairs = pairs.len();
    Ok((pairs, report))
}
