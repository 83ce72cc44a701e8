//! Exported word vectors and their text format: one `token v_1 ... v_d` line
//! per word in vocabulary rank order. Values are written with 17 significant
//! digits, which round-trips every `f64` exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::trainer::EmbeddingModel;
use crate::vocab::VocabTable;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExportMode {
    /// `w_i + w̃_i`
    #[default]
    Sum,
    /// `w_i` only
    MainOnly,
    /// `w̃_i` only
    ContextOnly,
}

impl std::str::FromStr for ExportMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(ExportMode::Sum),
            "main" => Ok(ExportMode::MainOnly),
            "context" => Ok(ExportMode::ContextOnly),
            _ => Err(Error::InvalidParameter(format!(
                "unknown export mode `{s}`"
            ))),
        }
    }
}

impl ExportMode {
    pub fn name(self) -> &'static str {
        match self {
            ExportMode::Sum => "sum",
            ExportMode::MainOnly => "main",
            ExportMode::ContextOnly => "context",
        }
    }
}

/// Dense row-major word vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectors {
    words: Vec<String>,
    dim: usize,
    data: Vec<f64>,
}

impl WordVectors {
    pub fn new(words: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != words.len() * dim {
            return Err(Error::SizeMismatch {
                expected: words.len() * dim,
                found: data.len(),
            });
        }
        Ok(WordVectors { words, dim, data })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn into_parts(self) -> (Vec<String>, usize, Vec<f64>) {
        (self.words, self.dim, self.data)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, word) in self.words.iter().enumerate() {
            out.write_all(word.as_bytes())?;
            for v in self.vector(i) {
                write!(out, " {v:.16e}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the text format. All rows must share one dimension.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut words = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-blank line has a field");
            let start = data.len();
            for f in fields {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::parse(lineno + 1, format!("bad value `{f}`")))?;
                data.push(v);
            }
            let row_dim = data.len() - start;
            match dim {
                None if row_dim == 0 => {
                    return Err(Error::parse(lineno + 1, "vector has no values"))
                }
                None => dim = Some(row_dim),
                Some(d) if d != row_dim => {
                    return Err(Error::parse(
                        lineno + 1,
                        format!("expected {d} values, found {row_dim}"),
                    ))
                }
                _ => {}
            }
            words.push(word.to_owned());
        }
        WordVectors::new(words, dim.unwrap_or(0), data)
    }
}

/// Per-word vectors from a trained model, in vocabulary order.
pub fn export_vectors(
    model: &EmbeddingModel,
    vocab: &VocabTable,
    mode: ExportMode,
) -> Result<WordVectors> {
    if model.vocab_size() != vocab.len() {
        return Err(Error::SizeMismatch {
            expected: vocab.len(),
            found: model.vocab_size(),
        });
    }
    let mut data = Vec::with_capacity(vocab.len() * model.dim());
    for i in 0..vocab.len() {
        match mode {
            ExportMode::Sum => data.extend(
                model
                    .main_vector(i)
                    .iter()
                    .zip(model.context_vector(i))
                    .map(|(a, b)| a + b),
            ),
            ExportMode::MainOnly => data.extend_from_slice(model.main_vector(i)),
            ExportMode::ContextOnly => data.extend_from_slice(model.context_vector(i)),
        }
    }
    let words = vocab.entries().iter().map(|e| e.token.clone()).collect();
    WordVectors::new(words, model.dim(), data)
}
