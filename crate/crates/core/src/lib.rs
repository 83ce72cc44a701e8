//! GloVe word embeddings with a choice of record weighting: the classic
//! capped power of the co-occurrence mass, or a product of two Zipf terms
//! over unigram counts whose exponent is estimated from the vocabulary's
//! count distribution with one of six tail-index estimators.
//!
//! The crate covers the full path from raw text to analogy accuracy:
//!
//! - [`vocab`]: ranked vocabulary with deterministic tie-breaking
//! - [`cooccur`]: exact windowed co-occurrence counting and the binary record format
//! - [`tail`]: Pickands, Hill, adapted Hill, moment, QQ and Peng estimators
//! - [`weighting`]: classic and extremal product weights
//! - [`trainer`]: AdaGrad training, optionally Hogwild-parallel
//! - [`vectors`]: vector export and the text vector format
//! - [`eval`]: 3CosAdd analogy evaluation
//! - [`pipeline`]: the staged end-to-end run with its manifest

pub mod cooccur;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod tail;
pub mod trainer;
pub mod vectors;
pub mod vocab;
pub mod weighting;

pub use cooccur::{count_cooccurrences, shuffle_records, CoocRecord};
pub use error::{Error, Result};
pub use eval::{answer_analogy, evaluate, AnalogySet, EvalReport, NormalizedVectors};
pub use pipeline::{run_pipeline, AlphaSource, PipelineConfig, PipelineOutcome, WeightingKind};
pub use tail::{estimate_alpha, InputMode, TailEstimate, TailMethod, TailSample};
pub use trainer::{
    adagrad_step, loss_and_gradients, train, EmbeddingModel, TrainConfig, TrainOutput,
};
pub use vectors::{export_vectors, ExportMode, WordVectors};
pub use vocab::{build_vocab, VocabEntry, VocabTable};
pub use weighting::{classic_weight, extremal_weight, record_weight, WeightingScheme};
