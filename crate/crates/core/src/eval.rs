//! Word-analogy evaluation (3CosAdd).
//!
//! Question files use the `questions-words` layout: `: section-name` header
//! lines followed by `a b c d` lines meaning "a is to b as c is to d".
//! Sections whose name starts with `gram` are syntactic, the rest semantic.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::vectors::WordVectors;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalogySection {
    pub name: String,
    pub questions: Vec<[String; 4]>,
}

impl AnalogySection {
    pub fn is_syntactic(&self) -> bool {
        self.name.starts_with("gram")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnalogySet {
    pub sections: Vec<AnalogySection>,
}

impl AnalogySet {
    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut sections: Vec<AnalogySection> = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix(':') {
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::parse(lineno + 1, "section header without a name"));
                }
                sections.push(AnalogySection {
                    name: name.to_owned(),
                    questions: Vec::new(),
                });
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let [a, b, c, d] = words[..] else {
                return Err(Error::parse(
                    lineno + 1,
                    format!("expected 4 words, found {}", words.len()),
                ));
            };
            let Some(section) = sections.last_mut() else {
                return Err(Error::parse(
                    lineno + 1,
                    "question before any section header",
                ));
            };
            section
                .questions
                .push([a.to_owned(), b.to_owned(), c.to_owned(), d.to_owned()]);
        }
        Ok(AnalogySet { sections })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }

    pub fn question_count(&self) -> usize {
        self.sections.iter().map(|s| s.questions.len()).sum()
    }

    /// Copy with every question word lowercased, for corpora that were.
    pub fn lowercased(&self) -> Self {
        AnalogySet {
            sections: self
                .sections
                .iter()
                .map(|s| AnalogySection {
                    name: s.name.clone(),
                    questions: s
                        .questions
                        .iter()
                        .map(|q| q.clone().map(|w| w.to_lowercase()))
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Word vectors scaled to unit length, with a word index. Zero vectors stay zero.
#[derive(Clone, Debug)]
pub struct NormalizedVectors {
    words: Vec<String>,
    dim: usize,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl NormalizedVectors {
    pub fn new(vectors: WordVectors) -> Self {
        let (words, dim, mut data) = vectors.into_parts();
        if dim > 0 {
            for row in data.chunks_mut(dim) {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|v| *v /= norm);
                }
            }
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            // first occurrence wins if a file repeats a word
            index.entry(w.clone()).or_insert(i);
        }
        NormalizedVectors {
            words,
            dim,
            data,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn lookup(&self, word: &str) -> Result<usize> {
        self.index_of(word)
            .ok_or_else(|| Error::OovWord(word.to_owned()))
    }

    /// Index of the word closest to `b - a + c` by dot product, excluding the
    /// three query words; ties go to the lower index. `None` if no candidate
    /// is left after exclusion.
    pub fn answer_index(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        let target: Vec<f64> = (0..self.dim)
            .map(|k| self.vector(b)[k] - self.vector(a)[k] + self.vector(c)[k])
            .collect();
        let mut best: Option<(usize, f64)> = None;
        for (w, row) in self.data.chunks(self.dim.max(1)).enumerate() {
            if w == a || w == b || w == c {
                continue;
            }
            let score: f64 = row.iter().zip(&target).map(|(x, t)| x * t).sum();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((w, score));
            }
        }
        best.map(|(w, _)| w)
    }
}

/// Answers "a is to b as c is to ?" with 3CosAdd.
pub fn answer_analogy<'v>(
    vectors: &'v NormalizedVectors,
    a: &str,
    b: &str,
    c: &str,
) -> Result<&'v str> {
    let (ia, ib, ic) = (vectors.lookup(a)?, vectors.lookup(b)?, vectors.lookup(c)?);
    vectors
        .answer_index(ia, ib, ic)
        .map(|w| vectors.word(w))
        .ok_or_else(|| Error::InsufficientSample("no candidate words besides the query".into()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalReport {
    pub semantic_correct: usize,
    pub semantic_attempted: usize,
    pub syntactic_correct: usize,
    pub syntactic_attempted: usize,
    pub skipped: usize,
}

fn percent(correct: usize, attempted: usize) -> f64 {
    if attempted == 0 {
        0.0
    } else {
        100.0 * correct as f64 / attempted as f64
    }
}

impl EvalReport {
    pub fn total_correct(&self) -> usize {
        self.semantic_correct + self.syntactic_correct
    }

    pub fn total_attempted(&self) -> usize {
        self.semantic_attempted + self.syntactic_attempted
    }

    pub fn semantic_accuracy(&self) -> f64 {
        percent(self.semantic_correct, self.semantic_attempted)
    }

    pub fn syntactic_accuracy(&self) -> f64 {
        percent(self.syntactic_correct, self.syntactic_attempted)
    }

    pub fn total_accuracy(&self) -> f64 {
        percent(self.total_correct(), self.total_attempted())
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "semantic {:.2} ({}/{})",
            self.semantic_accuracy(),
            self.semantic_correct,
            self.semantic_attempted
        )?;
        writeln!(
            f,
            "syntactic {:.2} ({}/{})",
            self.syntactic_accuracy(),
            self.syntactic_correct,
            self.syntactic_attempted
        )?;
        writeln!(
            f,
            "total {:.2} ({}/{})",
            self.total_accuracy(),
            self.total_correct(),
            self.total_attempted()
        )?;
        write!(f, "skipped {}", self.skipped)
    }
}

/// Scores every question; those with any out-of-vocabulary word are skipped.
pub fn evaluate(vectors: &NormalizedVectors, analogies: &AnalogySet) -> EvalReport {
    let mut report = EvalReport::default();
    for section in &analogies.sections {
        let syntactic = section.is_syntactic();
        for q in &section.questions {
            let ids: Option<Vec<usize>> = q.iter().map(|w| vectors.index_of(w)).collect();
            let Some(ids) = ids else {
                report.skipped += 1;
                continue;
            };
            let correct = vectors.answer_index(ids[0], ids[1], ids[2]) == Some(ids[3]);
            let (hit, tried) = if syntactic {
                (
                    &mut report.syntactic_correct,
                    &mut report.syntactic_attempted,
                )
            } else {
                (&mut report.semantic_correct, &mut report.semantic_attempted)
            };
            *tried += 1;
            *hit += usize::from(correct);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vecs(rows: &[(&str, &[f64])]) -> NormalizedVectors {
        let dim = rows[0].1.len();
        let words = rows.iter().map(|(w, _)| w.to_string()).collect();
        let data = rows.iter().flat_map(|(_, v)| v.iter().copied()).collect();
        NormalizedVectors::new(WordVectors::new(words, dim, data).unwrap())
    }

    #[test]
    fn parses_sections_and_kinds() {
        let text = ": capital-common-countries\nathens greece baghdad iraq\n\n: gram1-adjective-to-adverb\ncalm calmly quick quickly\n";
        let set = AnalogySet::read_from(text.as_bytes()).unwrap();
        assert_eq!(set.sections.len(), 2);
        assert!(!set.sections[0].is_syntactic());
        assert!(set.sections[1].is_syntactic());
        assert_eq!(set.sections[0].questions[0][3], "iraq");
        assert_eq!(set.question_count(), 2);
    }

    #[test]
    fn malformed_lines_are_errors() {
        let err = AnalogySet::read_from(": s\na b c\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = AnalogySet::read_from("a b c d\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = AnalogySet::read_from(":\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn orthonormal_construction() {
        let s = 1.0 / 3f64.sqrt();
        let v = vecs(&[
            ("a", &[1.0, 0.0, 0.0, 0.0]),
            ("b", &[0.0, 1.0, 0.0, 0.0]),
            ("c", &[0.0, 0.0, 1.0, 0.0]),
            ("d", &[-s, s, s, 0.0]),
            ("x", &[0.0, 0.0, 0.0, 1.0]),
        ]);
        assert_eq!(answer_analogy(&v, "a", "b", "c").unwrap(), "d");
    }

    #[test]
    fn only_candidate_wins() {
        let v = vecs(&[
            ("a", &[1.0, 2.0]),
            ("b", &[-3.0, 0.5]),
            ("c", &[0.2, 0.1]),
            ("w", &[-1.0, -1.0]),
        ]);
        assert_eq!(answer_analogy(&v, "a", "b", "c").unwrap(), "w");
    }

    #[test]
    fn repeated_query_word_finds_neighbour() {
        let v = vecs(&[
            ("far", &[-1.0, 0.0]),
            ("c", &[1.0, 0.1]),
            ("near", &[1.0, 0.2]),
        ]);
        assert_eq!(answer_analogy(&v, "c", "c", "c").unwrap(), "near");
    }

    #[test]
    fn ties_break_by_rank() {
        let v = vecs(&[
            ("a", &[1.0, 0.0]),
            ("b", &[0.0, 1.0]),
            ("c", &[1.0, 0.0]),
            ("first", &[0.0, 1.0]),
            ("second", &[0.0, 1.0]),
        ]);
        assert_eq!(answer_analogy(&v, "a", "b", "c").unwrap(), "first");
    }

    #[test]
    fn oov_query() {
        let v = vecs(&[("a", &[1.0]), ("b", &[1.0])]);
        assert!(matches!(answer_analogy(&v, "a", "b", "zz"), Err(Error::OovWord(w)) if w == "zz"));
        assert!(answer_analogy(&v, "a", "b", "a").is_err());
    }

    #[test]
    fn all_oov_report() {
        let v = vecs(&[("a", &[1.0])]);
        let set = AnalogySet::read_from(": s\nq r s t\n: gram\nu v w x\n".as_bytes()).unwrap();
        let r = evaluate(&v, &set);
        assert_eq!(r.skipped, 2);
        assert_eq!(r.total_attempted(), 0);
        assert_eq!(
            (
                r.semantic_accuracy(),
                r.syntactic_accuracy(),
                r.total_accuracy()
            ),
            (0.0, 0.0, 0.0)
        );
        assert_eq!(
            r.to_string(),
            "semantic 0.00 (0/0)\nsyntactic 0.00 (0/0)\ntotal 0.00 (0/0)\nskipped 2"
        );
    }

    #[test]
    fn lowercasing_questions() {
        let set = AnalogySet::read_from(": s\nAthens Greece Baghdad Iraq\n".as_bytes()).unwrap();
        assert_eq!(set.lowercased().sections[0].questions[0][0], "athens");
    }
}
