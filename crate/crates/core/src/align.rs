//! Unit-cost edit alignment between a source sentence and a prediction,
//! grouping of edits into spans, and length-preserving normalization of
//! predictions that insert or delete characters.

use std::ops::Range;

use serde::Serialize;

use crate::text::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OpKind {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// One step of an alignment. Indices are 0-based character positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditOp {
    Match { src: usize, pred: usize, ch: char },
    Substitute { src: usize, pred: usize, from: char, to: char },
    Delete { src: usize, ch: char },
    Insert { pred: usize, ch: char },
}

impl EditOp {
    pub fn kind(&self) -> OpKind {
        match self {
            EditOp::Match { .. } => OpKind::Match,
            EditOp::Substitute { .. } => OpKind::Substitute,
            EditOp::Delete { .. } => OpKind::Delete,
            EditOp::Insert { .. } => OpKind::Insert,
        }
    }

    pub fn src_index(&self) -> Option<usize> {
        match *self {
            EditOp::Match { src, .. } | EditOp::Substitute { src, .. } | EditOp::Delete { src, .. } => Some(src),
            EditOp::Insert { .. } => None,
        }
    }

    pub fn pred_index(&self) -> Option<usize> {
        match *self {
            EditOp::Match { pred, .. } | EditOp::Substitute { pred, .. } | EditOp::Insert { pred, .. } => Some(pred),
            EditOp::Delete { .. } => None,
        }
    }

    pub fn src_char(&self) -> Option<char> {
        match *self {
            EditOp::Match { ch, .. } | EditOp::Delete { ch, .. } => Some(ch),
            EditOp::Substitute { from, .. } => Some(from),
            EditOp::Insert { .. } => None,
        }
    }

    pub fn pred_char(&self) -> Option<char> {
        match *self {
            EditOp::Match { ch, .. } | EditOp::Insert { ch, .. } => Some(ch),
            EditOp::Substitute { to, .. } => Some(to),
            EditOp::Delete { .. } => None,
        }
    }

    pub fn is_edit(&self) -> bool {
        !matches!(self, EditOp::Match { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub ops: Vec<EditOp>,
    pub cost: usize,
}

/// A maximal run of adjacent non-match operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditSpan {
    pub src_range: Range<usize>,
    pub pred_range: Range<usize>,
    pub equal_length: bool,
}

/// Minimal unit-cost alignment of `source` against `prediction`.
///
/// Among minimal alignments the traceback walks from the end of both
/// sequences and, at each cell, prefers Match, then Substitute, then Delete,
/// then Insert. Equal-length inputs with few differences therefore align
/// position by position.
pub fn align(source: &Sentence, prediction: &Sentence) -> Alignment {
    let s = source.chars();
    let p = prediction.chars();
    let (n, m) = (s.len(), p.len());
    let width = m + 1;

    let mut dp = vec![0u32; (n + 1) * width];
    for (j, cell) in dp[..width].iter_mut().enumerate() {
        *cell = j as u32;
    }
    for i in 1..=n {
        dp[i * width] = i as u32;
        for j in 1..=m {
            let diag = dp[(i - 1) * width + j - 1] + u32::from(s[i - 1] != p[j - 1]);
            let up = dp[(i - 1) * width + j] + 1;
            let left = dp[i * width + j - 1] + 1;
            dp[i * width + j] = diag.min(up).min(left);
        }
    }

    let at = |i: usize, j: usize| dp[i * width + j];
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = at(i, j);
        if i > 0 && j > 0 && s[i - 1] == p[j - 1] && at(i - 1, j - 1) == here {
            ops.push(EditOp::Match { src: i - 1, pred: j - 1, ch: s[i - 1] });
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && s[i - 1] != p[j - 1] && at(i - 1, j - 1) + 1 == here {
            ops.push(EditOp::Substitute { src: i - 1, pred: j - 1, from: s[i - 1], to: p[j - 1] });
            i -= 1;
            j -= 1;
        } else if i > 0 && at(i - 1, j) + 1 == here {
            ops.push(EditOp::Delete { src: i - 1, ch: s[i - 1] });
            i -= 1;
        } else {
            debug_assert!(j > 0 && at(i, j - 1) + 1 == here);
            ops.push(EditOp::Insert { pred: j - 1, ch: p[j - 1] });
            j -= 1;
        }
    }
    ops.reverse();

    Alignment { ops, cost: at(n, m) as usize }
}

impl Alignment {
    pub fn spans(&self) -> Vec<EditSpan> {
        spans(self)
    }
}

/// Group the non-match operations of an alignment into maximal spans, in
/// source order.
pub fn spans(alignment: &Alignment) -> Vec<EditSpan> {
    let mut out = Vec::new();
    let (mut src_pos, mut pred_pos) = (0usize, 0usize);
    let mut open: Option<(usize, usize)> = None;

    let close = |open: &mut Option<(usize, usize)>, out: &mut Vec<EditSpan>, src_pos, pred_pos| {
        if let Some((src_start, pred_start)) = open.take() {
            out.push(EditSpan {
                src_range: src_start..src_pos,
                pred_range: pred_start..pred_pos,
                equal_length: src_pos - src_start == pred_pos - pred_start,
            });
        }
    };

    for op in &alignment.ops {
        if op.is_edit() {
            open.get_or_insert((src_pos, pred_pos));
        } else {
            close(&mut open, &mut out, src_pos, pred_pos);
        }
        match op {
            EditOp::Match { .. } | EditOp::Substitute { .. } => {
                src_pos += 1;
                pred_pos += 1;
            }
            EditOp::Delete { .. } => src_pos += 1,
            EditOp::Insert { .. } => pred_pos += 1,
        }
    }
    close(&mut open, &mut out, src_pos, pred_pos);
    out
}

/// Map a prediction back onto the source's length.
///
/// A prediction that already has the source's length is compared position by
/// position and returned unchanged. Otherwise equal-length edit spans keep the
/// predicted characters and spans that change length are reverted to the
/// source characters they cover.
pub fn normalize_prediction(source: &Sentence, prediction: &Sentence) -> Sentence {
    if source.len() == prediction.len() {
        return prediction.clone();
    }
    let alignment = align(source, prediction);
    let src = source.chars();
    let pred = prediction.chars();

    let mut out = Vec::with_capacity(src.len());
    let mut cursor = 0;
    for span in alignment.spans() {
        out.extend_from_slice(&src[cursor..span.src_range.start]);
        if span.equal_length {
            out.extend_from_slice(&pred[span.pred_range.clone()]);
        } else {
            out.extend_from_slice(&src[span.src_range.clone()]);
        }
        cursor = span.src_range.end;
    }
    out.extend_from_slice(&src[cursor..]);
    Sentence::from_chars(out)
}
