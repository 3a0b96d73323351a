//! Character-level sentence representation.
//!
//! A [`Sentence`] is a sequence of Unicode scalar values. No normalization is
//! applied: `Sentence::new(s).as_str() == s` for every input.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("length mismatch: {left} vs {right} characters")]
pub struct LengthMismatch {
    pub left: usize,
    pub right: usize,
}

/// A sentence as both its raw text and its character sequence.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Sentence {
    raw: String,
    chars: Vec<char>,
}

impl Sentence {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let chars = raw.chars().collect();
        Sentence { raw, chars }
    }

    pub fn from_chars(chars: Vec<char>) -> Self {
        let raw = chars.iter().collect();
        Sentence { raw, chars }
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    /// Length in characters, not bytes.
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn into_string(self) -> String {
        self.raw
    }
}

impl fmt::Debug for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sentence({:?})", self.raw)
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl From<&str> for Sentence {
    fn from(s: &str) -> Self {
        Sentence::new(s)
    }
}

impl From<String> for Sentence {
    fn from(s: String) -> Self {
        Sentence::new(s)
    }
}

impl Serialize for Sentence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for Sentence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer).map(Sentence::new)
    }
}

/// Positions at which two equal-length sentences differ.
pub fn change_positions(a: &Sentence, b: &Sentence) -> Result<BTreeSet<usize>, LengthMismatch> {
    if a.len() != b.len() {
        return Err(LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(a.chars().iter().zip(b.chars()).enumerate().filter(|(_, (x, y))| x != y).map(|(i, _)| i).collect())
}
