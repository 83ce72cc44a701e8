//! End-to-end run: vocabulary, co-occurrence counting, shuffling, exponent
//! estimation, training and analogy evaluation.
//!
//! Every artifact lands in the output directory under a fixed name. A stage
//! whose artifact already exists is skipped and its file is loaded instead;
//! files are written under a `.partial` suffix and renamed once complete, so
//! an interrupted stage never looks finished.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;

use crate::cooccur::{count_encoded, read_records, shuffle_records, write_records, CoocRecord};
use crate::error::{Error, Result};
use crate::eval::{evaluate, AnalogySet, EvalReport, NormalizedVectors};
use crate::tail::{estimate_alpha, InputMode, TailEstimate, TailMethod};
use crate::trainer::{train_with_progress, TrainConfig};
use crate::vectors::{export_vectors, ExportMode, WordVectors};
use crate::vocab::{build_vocab, tokenize, VocabTable};
use crate::weighting::WeightingScheme;

pub const VOCAB_FILE: &str = "vocab.txt";
pub const COOCCUR_FILE: &str = "cooccurrence.bin";
pub const SHUFFLED_FILE: &str = "cooccurrence.shuf.bin";
pub const TAIL_FILE: &str = "tail_index.txt";
pub const TRAIN_LOG_FILE: &str = "train_log.txt";
pub const VECTORS_FILE: &str = "vectors.txt";
pub const EVAL_FILE: &str = "eval.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightingKind {
    Classic { x_max: f64 },
    Extremal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaSource {
    Fixed(f64),
    Estimated {
        method: TailMethod,
        k_fraction: f64,
        input_mode: InputMode,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    pub questions: PathBuf,
    pub window: usize,
    pub min_count: u64,
    pub weighting: WeightingKind,
    pub alpha: AlphaSource,
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub threads: usize,
    pub seed: u64,
    pub export_mode: ExportMode,
    pub lowercase_questions: bool,
}

impl PipelineConfig {
    /// Classic GloVe weighting (`x_max` 100, α 0.75) with default training settings.
    pub fn new(
        corpus: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        questions: impl Into<PathBuf>,
    ) -> Self {
        let train = TrainConfig::default();
        PipelineConfig {
            corpus: corpus.into(),
            output_dir: output_dir.into(),
            questions: questions.into(),
            window: 15,
            min_count: 5,
            weighting: WeightingKind::Classic { x_max: 100.0 },
            alpha: AlphaSource::Fixed(0.75),
            dim: train.dim,
            epochs: train.epochs,
            learning_rate: train.learning_rate,
            threads: train.threads,
            seed: train.seed,
            export_mode: ExportMode::Sum,
            lowercase_questions: false,
        }
    }

    /// Baseline reproduction: classic weighting, x_max 100, α 0.75, d 50, 15 epochs.
    pub fn paper_baseline(
        corpus: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        questions: impl Into<PathBuf>,
    ) -> Self {
        PipelineConfig {
            weighting: WeightingKind::Classic { x_max: 100.0 },
            alpha: AlphaSource::Fixed(0.75),
            dim: 50,
            epochs: 15,
            ..Self::new(corpus, output_dir, questions)
        }
    }

    /// Extremal weighting with α from the QQ estimator at k = V/5 over counts.
    pub fn paper_qq(
        corpus: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        questions: impl Into<PathBuf>,
    ) -> Self {
        PipelineConfig {
            weighting: WeightingKind::Extremal,
            alpha: AlphaSource::Estimated {
                method: TailMethod::Qq,
                k_fraction: 0.2,
                input_mode: InputMode::Counts,
            },
            dim: 50,
            epochs: 15,
            ..Self::new(corpus, output_dir, questions)
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            dim: self.dim,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed: self.seed,
            threads: self.threads,
        }
    }

    /// Flat `key=value` lines covering every setting.
    pub fn to_manifest(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: &dyn std::fmt::Display| {
            writeln!(out, "{k}={v}").expect("writing to a String");
        };
        put("corpus", &self.corpus.display());
        put("output_dir", &self.output_dir.display());
        put("questions", &self.questions.display());
        put("window", &self.window);
        put("min_count", &self.min_count);
        match self.weighting {
            WeightingKind::Classic { x_max } => {
                put("weighting", &"classic");
                put("x_max", &x_max);
            }
            WeightingKind::Extremal => put("weighting", &"extremal"),
        }
        match self.alpha {
            AlphaSource::Fixed(a) => {
                put("alpha_source", &"fixed");
                put("alpha", &a);
            }
            AlphaSource::Estimated {
                method,
                k_fraction,
                input_mode,
            } => {
                put("alpha_source", &"estimator");
                put("estimator", &method);
                put("k_fraction", &k_fraction);
                put("input_mode", &input_mode);
            }
        }
        put("dim", &self.dim);
        put("epochs", &self.epochs);
        put("learning_rate", &self.learning_rate);
        put("threads", &self.threads);
        put("seed", &self.seed);
        put("export_mode", &self.export_mode.name());
        put("lowercase_questions", &self.lowercase_questions);
        out
    }

    /// Parses a manifest written by [`to_manifest`](Self::to_manifest).
    /// Keys under `resolved.` record run outputs and are ignored.
    pub fn from_manifest(text: &str) -> Result<Self> {
        let mut map = std::collections::HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno + 1, "expected key=value"))?;
            if !k.starts_with("resolved.") {
                map.insert(k.to_owned(), (lineno + 1, v.to_owned()));
            }
        }
        let get = |k: &str| -> Result<&str> {
            map.get(k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::InvalidParameter(format!("manifest is missing `{k}`")))
        };
        fn num<T: std::str::FromStr>(
            map: &std::collections::HashMap<String, (usize, String)>,
            k: &str,
        ) -> Result<T> {
            let (line, v) = map
                .get(k)
                .ok_or_else(|| Error::InvalidParameter(format!("manifest is missing `{k}`")))?;
            v.parse()
                .map_err(|_| Error::parse(*line, format!("bad value `{v}` for `{k}`")))
        }
        let weighting = match get("weighting")? {
            "classic" => WeightingKind::Classic {
                x_max: num(&map, "x_max")?,
            },
            "extremal" => WeightingKind::Extremal,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown weighting `{other}`"
                )))
            }
        };
        let alpha = match get("alpha_source")? {
            "fixed" => AlphaSource::Fixed(num(&map, "alpha")?),
            "estimator" => AlphaSource::Estimated {
                method: get("estimator")?.parse()?,
                k_fraction: num(&map, "k_fraction")?,
                input_mode: get("input_mode")?.parse()?,
            },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown alpha source `{other}`"
                )))
            }
        };
        Ok(PipelineConfig {
            corpus: get("corpus")?.into(),
            output_dir: get("output_dir")?.into(),
            questions: get("questions")?.into(),
            window: num(&map, "window")?,
            min_count: num(&map, "min_count")?,
            weighting,
            alpha,
            dim: num(&map, "dim")?,
            epochs: num(&map, "epochs")?,
            learning_rate: num(&map, "learning_rate")?,
            threads: num(&map, "threads")?,
            seed: num(&map, "seed")?,
            export_mode: get("export_mode")?.parse()?,
            lowercase_questions: num(&map, "lowercase_questions")?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub report: EvalReport,
    pub vocab_size: usize,
    pub alpha: f64,
    pub tail: Option<TailEstimate>,
    /// Empty when training was skipped because vectors already existed.
    pub epoch_losses: Vec<f64>,
}

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

/// Writes through `write` into `path.partial`, then renames onto `path`.
fn write_atomically(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
) -> Result<()> {
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    let mut out = BufWriter::new(File::create(&partial)?);
    write(&mut out)?;
    out.flush()?;
    drop(out);
    fs::rename(&partial, path)?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

struct LazyCorpus<'a> {
    path: &'a Path,
    text: Option<String>,
}

impl LazyCorpus<'_> {
    fn text(&mut self) -> Result<&str> {
        if self.text.is_none() {
            self.text = Some(fs::read_to_string(self.path)?);
        }
        Ok(self.text.as_deref().unwrap())
    }
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    let dir = &config.output_dir;
    stage("setup", || Ok(fs::create_dir_all(dir)?))?;
    let path = |name: &str| dir.join(name);

    let mut corpus = LazyCorpus {
        path: &config.corpus,
        text: None,
    };

    let vocab = stage("vocab", || {
        let p = path(VOCAB_FILE);
        if p.exists() {
            info!("reusing {}", p.display());
            return VocabTable::read_from(open(&p)?);
        }
        let vocab = build_vocab(tokenize(corpus.text()?), config.min_count);
        info!(
            "vocabulary: {} words (min count {})",
            vocab.len(),
            config.min_count
        );
        write_atomically(&p, |w| vocab.write_to(w))?;
        Ok(vocab)
    })?;
    if vocab.is_empty() {
        return Err(Error::Stage {
            stage: "vocab",
            source: Box::new(Error::EmptyVocab),
        });
    }

    let shuffled_path = path(SHUFFLED_FILE);
    let records: Vec<CoocRecord> = if shuffled_path.exists() {
        stage("shuffle", || {
            info!("reusing {}", shuffled_path.display());
            read_records(open(&shuffled_path)?)
        })?
    } else {
        let counted = stage("cooccur", || {
            let p = path(COOCCUR_FILE);
            if p.exists() {
                info!("reusing {}", p.display());
                return read_records(open(&p)?);
            }
            let ids = vocab.encode(tokenize(corpus.text()?));
            let records = count_encoded(&ids, config.window, config.threads)?;
            info!(
                "co-occurrence: {} nonzero cells (window {})",
                records.len(),
                config.window
            );
            write_atomically(&p, |w| write_records(w, &records))?;
            Ok(records)
        })?;
        stage("shuffle", || {
            let shuffled = shuffle_records(counted, config.seed);
            write_atomically(&shuffled_path, |w| write_records(w, &shuffled))?;
            Ok(shuffled)
        })?
    };
    drop(corpus);

    let (alpha, tail) = stage("tail-index", || match config.alpha {
        AlphaSource::Fixed(a) => Ok((a, None)),
        AlphaSource::Estimated {
            method,
            k_fraction,
            input_mode,
        } => {
            let est = estimate_alpha(&vocab, method, k_fraction, input_mode)?;
            info!("tail index ({input_mode}): {est}");
            write_atomically(&path(TAIL_FILE), |w| Ok(writeln!(w, "{est}")?))?;
            Ok((est.p, Some(est)))
        }
    })?;

    let scheme = stage("train", || match config.weighting {
        WeightingKind::Classic { x_max } => WeightingScheme::classic(x_max, alpha),
        WeightingKind::Extremal => WeightingScheme::extremal_from_vocab(&vocab, alpha),
    })?;

    let mut manifest = config.to_manifest();
    writeln!(manifest, "resolved.vocab_size={}", vocab.len()).unwrap();
    writeln!(manifest, "resolved.records={}", records.len()).unwrap();
    writeln!(manifest, "resolved.alpha={alpha}").unwrap();
    if let Some(est) = &tail {
        writeln!(manifest, "resolved.tail={est}").unwrap();
    }
    writeln!(manifest, "resolved.weighting={scheme}").unwrap();
    stage("manifest", || {
        write_atomically(&path(MANIFEST_FILE), |w| {
            Ok(w.write_all(manifest.as_bytes())?)
        })
    })?;

    let vectors_path = path(VECTORS_FILE);
    let (vectors, epoch_losses) = stage("train", || {
        if vectors_path.exists() {
            info!("reusing {}", vectors_path.display());
            return Ok((WordVectors::read_from(open(&vectors_path)?)?, Vec::new()));
        }
        let mut log = String::new();
        let out = train_with_progress(
            &records,
            vocab.len(),
            &scheme,
            &config.train_config(),
            |e, loss| {
                info!("epoch {e} loss {loss}");
                writeln!(log, "epoch {e} loss {loss}").unwrap();
            },
        )?;
        write_atomically(&path(TRAIN_LOG_FILE), |w| Ok(w.write_all(log.as_bytes())?))?;
        let vectors = export_vectors(&out.model, &vocab, config.export_mode)?;
        write_atomically(&vectors_path, |w| vectors.write_to(w))?;
        Ok((vectors, out.epoch_losses))
    })?;

    let report = stage("evaluate", || {
        let mut questions = AnalogySet::load(&config.questions)?;
        if config.lowercase_questions {
            questions = questions.lowercased();
        }
        let report = evaluate(&NormalizedVectors::new(vectors), &questions);
        write_atomically(&path(EVAL_FILE), |w| Ok(writeln!(w, "{report}")?))?;
        Ok(report)
    })?;

    Ok(PipelineOutcome {
        report,
        vocab_size: vocab.len(),
        alpha,
        tail,
        epoch_losses,
    })
}
