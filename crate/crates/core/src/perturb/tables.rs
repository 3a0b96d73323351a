//! Confusion tables driving the perturbation operators.
//!
//! Every table is a UTF-8 TSV file with one entry per line,
//! `key<TAB>candidate1,candidate2,...`. Lines starting with `#` and blank
//! lines are ignored. Inside the candidate column `\,` is a literal comma and
//! `\\` a literal backslash. The symbol-insertion table has no candidate
//! column: each line holds one symbol.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{table} table, line {line}: {reason}")]
    Parse { table: TableKind, line: usize, reason: String },
    #[error("{table} table, line {line}: {ch:?} maps to itself")]
    SelfMapping { table: TableKind, line: usize, ch: char },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Homophone,
    Visual,
    Split,
    Merge,
    SymbolInsert,
    SymbolSubstitute,
}

impl TableKind {
    pub const ALL: [TableKind; 6] = [
        TableKind::Homophone,
        TableKind::Visual,
        TableKind::Split,
        TableKind::Merge,
        TableKind::SymbolInsert,
        TableKind::SymbolSubstitute,
    ];

    /// Conventional file name inside a tables directory.
    pub fn file_name(self) -> &'static str {
        match self {
            TableKind::Homophone => "homophone.tsv",
            TableKind::Visual => "visual.tsv",
            TableKind::Split => "split.tsv",
            TableKind::Merge => "merge.tsv",
            TableKind::SymbolInsert => "symbol_insert.tsv",
            TableKind::SymbolSubstitute => "symbol_substitute.tsv",
        }
    }
}

impl std::fmt::Display for TableKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = self.file_name().trim_end_matches(".tsv");
        f.write_str(name)
    }
}

/// Paths of the individual table files. Absent tables load as empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TablePaths {
    pub homophone: Option<PathBuf>,
    pub visual: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub merge: Option<PathBuf>,
    pub symbol_insert: Option<PathBuf>,
    pub symbol_substitute: Option<PathBuf>,
}

impl TablePaths {
    /// Pick up whichever conventionally named files exist in `dir`.
    pub fn from_dir(dir: &Path) -> Self {
        let find = |kind: TableKind| {
            let p = dir.join(kind.file_name());
            p.is_file().then_some(p)
        };
        TablePaths {
            homophone: find(TableKind::Homophone),
            visual: find(TableKind::Visual),
            split: find(TableKind::Split),
            merge: find(TableKind::Merge),
            symbol_insert: find(TableKind::SymbolInsert),
            symbol_substitute: find(TableKind::SymbolSubstitute),
        }
    }

    pub fn get(&self, kind: TableKind) -> Option<&Path> {
        match kind {
            TableKind::Homophone => self.homophone.as_deref(),
            TableKind::Visual => self.visual.as_deref(),
            TableKind::Split => self.split.as_deref(),
            TableKind::Merge => self.merge.as_deref(),
            TableKind::SymbolInsert => self.symbol_insert.as_deref(),
            TableKind::SymbolSubstitute => self.symbol_substitute.as_deref(),
        }
    }

    pub fn is_empty(&self) -> bool {
        TableKind::ALL.iter().all(|k| self.get(*k).is_none())
    }
}

/// Validated, immutable confusion tables.
///
/// Maps are ordered so that site enumeration is reproducible.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionTables {
    homophone: BTreeMap<char, Vec<char>>,
    visual: BTreeMap<char, Vec<char>>,
    split: BTreeMap<char, Vec<char>>,
    merge: BTreeMap<Vec<char>, char>,
    symbol_insert: Vec<char>,
    symbol_substitute: BTreeMap<char, Vec<char>>,
}

const BUILTIN: [(TableKind, &str); 6] = [
    (TableKind::Homophone, include_str!("../../data/homophone.tsv")),
    (TableKind::Visual, include_str!("../../data/visual.tsv")),
    (TableKind::Split, include_str!("../../data/split.tsv")),
    (TableKind::Merge, include_str!("../../data/merge.tsv")),
    (TableKind::SymbolInsert, include_str!("../../data/symbol_insert.tsv")),
    (TableKind::SymbolSubstitute, include_str!("../../data/symbol_substitute.tsv")),
];

impl ConfusionTables {
    /// The starter tables compiled into the crate.
    pub fn builtin() -> Self {
        let mut tables = ConfusionTables::default();
        for (kind, text) in BUILTIN {
            tables.extend_from_str(kind, text).expect("builtin tables are valid");
        }
        tables
    }

    /// Raw text of a builtin table, e.g. for writing it out to disk.
    pub fn builtin_source(kind: TableKind) -> &'static str {
        BUILTIN.iter().find(|(k, _)| *k == kind).map(|(_, text)| *text).unwrap_or_default()
    }

    pub fn load(paths: &TablePaths) -> Result<Self, TableError> {
        let mut tables = ConfusionTables::default();
        for kind in TableKind::ALL {
            if let Some(path) = paths.get(kind) {
                let text =
                    fs::read_to_string(path).map_err(|source| TableError::Io { path: path.to_path_buf(), source })?;
                tables.extend_from_str(kind, &text)?;
            }
        }
        Ok(tables)
    }

    /// Parse `text` as a table of the given kind and merge it in. Duplicate
    /// keys take the order-preserving union of their candidate lists.
    pub fn extend_from_str(&mut self, kind: TableKind, text: &str) -> Result<(), TableError> {
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |reason: &str| TableError::Parse { table: kind, line: line_no, reason: reason.to_string() };

            if kind == TableKind::SymbolInsert {
                if line.contains('\t') {
                    return Err(parse_err("symbol insertion lines hold a single symbol"));
                }
                let sym = single_char(line.trim()).ok_or_else(|| parse_err("expected one symbol"))?;
                push_unique(&mut self.symbol_insert, sym);
                continue;
            }

            let (key, rest) =
                line.split_once('\t').ok_or_else(|| parse_err("missing tab between key and candidates"))?;
            let key = key.trim();
            let candidates = split_candidates(rest);
            if candidates.is_empty() {
                return Err(parse_err("empty candidate list"));
            }

            match kind {
                TableKind::Homophone | TableKind::Visual | TableKind::SymbolSubstitute => {
                    let k = single_char(key).ok_or_else(|| parse_err("key must be one character"))?;
                    let mut chars = Vec::with_capacity(candidates.len());
                    for c in &candidates {
                        let c = single_char(c).ok_or_else(|| parse_err("candidates must be single characters"))?;
                        if c == k {
                            return Err(TableError::SelfMapping { table: kind, line: line_no, ch: k });
                        }
                        chars.push(c);
                    }
                    let map = match kind {
                        TableKind::Homophone => &mut self.homophone,
                        TableKind::Visual => &mut self.visual,
                        _ => &mut self.symbol_substitute,
                    };
                    let entry = map.entry(k).or_default();
                    for c in chars {
                        push_unique(entry, c);
                    }
                }
                TableKind::Split => {
                    let k = single_char(key).ok_or_else(|| parse_err("key must be one character"))?;
                    let [value] = candidates.as_slice() else {
                        return Err(parse_err("split entries take exactly one component sequence"));
                    };
                    let value: Vec<char> = value.chars().collect();
                    if value.len() < 2 {
                        return Err(parse_err("split value needs at least two characters"));
                    }
                    match self.split.get(&k) {
                        Some(existing) if *existing != value => {
                            return Err(parse_err("conflicting duplicate split entry"))
                        }
                        _ => {
                            self.split.insert(k, value);
                        }
                    }
                }
                TableKind::Merge => {
                    let k: Vec<char> = key.chars().collect();
                    if k.len() < 2 {
                        return Err(parse_err("merge key needs at least two characters"));
                    }
                    let [value] = candidates.as_slice() else {
                        return Err(parse_err("merge entries take exactly one character"));
                    };
                    let v = single_char(value).ok_or_else(|| parse_err("merge value must be one character"))?;
                    match self.merge.get(&k) {
                        Some(existing) if *existing != v => return Err(parse_err("conflicting duplicate merge entry")),
                        _ => {
                            self.merge.insert(k, v);
                        }
                    }
                }
                TableKind::SymbolInsert => unreachable!(),
            }
        }
        Ok(())
    }

    pub fn homophone(&self) -> &BTreeMap<char, Vec<char>> {
        &self.homophone
    }

    pub fn visual(&self) -> &BTreeMap<char, Vec<char>> {
        &self.visual
    }

    pub fn split(&self) -> &BTreeMap<char, Vec<char>> {
        &self.split
    }

    pub fn merge(&self) -> &BTreeMap<Vec<char>, char> {
        &self.merge
    }

    pub fn symbol_insert(&self) -> &[char] {
        &self.symbol_insert
    }

    pub fn symbol_substitute(&self) -> &BTreeMap<char, Vec<char>> {
        &self.symbol_substitute
    }

    pub fn len(&self, kind: TableKind) -> usize {
        match kind {
            TableKind::Homophone => self.homophone.len(),
            TableKind::Visual => self.visual.len(),
            TableKind::Split => self.split.len(),
            TableKind::Merge => self.merge.len(),
            TableKind::SymbolInsert => self.symbol_insert.len(),
            TableKind::SymbolSubstitute => self.symbol_substitute.len(),
        }
    }
}

fn single_char(s: &str) -> Option<char> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Some(c),
        _ => None,
    }
}

fn push_unique(list: &mut Vec<char>, c: char) {
    if !list.contains(&c) {
        list.push(c);
    }
}

/// Split a candidate column on unescaped commas, dropping empty items.
fn split_candidates(field: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(next) => cur.push(next),
                None => cur.push('\\'),
            },
            ',' => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}
