//! Ranked corpus vocabulary.
//!
//! Tokens are whitespace-separated and taken verbatim: no lowercasing and no
//! punctuation stripping. Corpora are expected to be cleaned beforehand.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Splits raw text into tokens on Unicode whitespace.
pub fn tokenize(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VocabEntry {
    pub token: String,
    pub count: u64,
}

impl VocabEntry {
    pub fn new(token: impl Into<String>, count: u64) -> Self {
        VocabEntry {
            token: token.into(),
            count,
        }
    }
}

/// Word list sorted by descending count. The rank of a word is its 1-based
/// position; its index (used by co-occurrence records) is the 0-based one.
#[derive(Clone, Debug, Default)]
pub struct VocabTable {
    entries: Vec<VocabEntry>,
    index: HashMap<String, u32>,
}

impl PartialEq for VocabTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl VocabTable {
    /// Builds a table from entries already in rank order.
    ///
    /// Fails if counts are zero or increase, or if a token repeats.
    pub fn from_entries(entries: Vec<VocabEntry>) -> Result<Self> {
        if entries.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "vocabulary of {} words exceeds u32 index range",
                entries.len()
            )));
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (pos, entry) in entries.iter().enumerate() {
            if entry.count == 0 {
                return Err(Error::parse(
                    pos + 1,
                    format!("zero count for `{}`", entry.token),
                ));
            }
            if entry.token.is_empty() || entry.token.chars().any(char::is_whitespace) {
                return Err(Error::parse(
                    pos + 1,
                    "token is empty or contains whitespace",
                ));
            }
            if pos > 0 && entries[pos - 1].count < entry.count {
                return Err(Error::parse(pos + 1, "counts are not in descending order"));
            }
            if index.insert(entry.token.clone(), pos as u32).is_some() {
                return Err(Error::parse(
                    pos + 1,
                    format!("duplicate token `{}`", entry.token),
                ));
            }
        }
        Ok(VocabTable { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    /// 0-based index of `token`, if present.
    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.entries[index].token
    }

    pub fn count(&self, index: usize) -> u64 {
        self.entries[index].count
    }

    pub fn counts(&self) -> impl ExactSizeIterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.count)
    }

    /// Count of the rank-1 word, or `None` for an empty table.
    pub fn max_count(&self) -> Option<u64> {
        self.entries.first().map(|e| e.count)
    }

    /// Maps each token to its vocabulary index, `None` for out-of-vocabulary
    /// tokens. Positions are preserved so windows still span OOV tokens.
    pub fn encode<'a, I, S>(&self, tokens: I) -> Vec<Option<u32>>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str> + 'a,
    {
        tokens
            .into_iter()
            .map(|t| self.index_of(t.as_ref()))
            .collect()
    }

    /// Writes one `token count` line per word in rank order.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for entry in &self.entries {
            writeln!(out, "{} {}", entry.token, entry.count)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let (token, count) = match (parts.next(), parts.next(), parts.next()) {
                (Some(t), Some(c), None) => (t, c),
                _ => return Err(Error::parse(lineno + 1, "expected `token count`")),
            };
            let count: u64 = count
                .parse()
                .map_err(|_| Error::parse(lineno + 1, format!("bad count `{count}`")))?;
            entries.push(VocabEntry::new(token, count));
        }
        VocabTable::from_entries(entries)
    }
}

/// Counts tokens and keeps those occurring at least `min_count` times, sorted
/// by descending count with ties in order of first appearance.
pub fn build_vocab<I, S>(tokens: I, min_count: u64) -> VocabTable
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    // first-appearance order is the insertion order of `seen`
    let mut seen: Vec<VocabEntry> = Vec::new();
    let mut slots: HashMap<String, usize> = HashMap::new();
    for token in tokens {
        let token = token.as_ref();
        match slots.get(token) {
            Some(&slot) => seen[slot].count += 1,
            None => {
                slots.insert(token.to_owned(), seen.len());
                seen.push(VocabEntry::new(token, 1));
            }
        }
    }
    seen.retain(|e| e.count >= min_count.max(1));
    // stable sort keeps first-appearance order among equal counts
    seen.sort_by_key(|e| std::cmp::Reverse(e.count));
    VocabTable::from_entries(seen).expect("counted vocabulary satisfies table invariants")
}
