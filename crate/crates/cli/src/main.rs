use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use extremal_glove::cooccur::{count_encoded, read_records, write_records, MAX_WINDOW};
use extremal_glove::trainer::train_with_progress;
use extremal_glove::vocab::tokenize;
use extremal_glove::{
    build_vocab, estimate_alpha, evaluate, export_vectors, run_pipeline, shuffle_records,
    AlphaSource, AnalogySet, Error, ExportMode, InputMode, NormalizedVectors, PipelineConfig,
    TailEstimate, TailMethod, TrainConfig, VocabTable, WeightingKind, WeightingScheme, WordVectors,
};
use log::info;

const THREADS_ENV: &str = "EXTREMAL_GLOVE_THREADS";

/// GloVe embeddings with classic or extremal (tail-index) weighting.
#[derive(Parser, Debug)]
#[command(name = "extremal-glove", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count tokens and write the ranked vocabulary
    VocabCount {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        min_count: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Count windowed co-occurrences into the binary record format
    Cooccur {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 15, value_parser = window_parser)]
        window: usize,
        #[arg(long, default_value_t = 1, value_parser = threads_parser)]
        threads: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Shuffle a binary record file
    Shuffle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Estimate the tail exponent from a vocabulary; prints `method k n p`
    TailIndex {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, default_value_t = 0.2)]
        k_fraction: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Counts)]
        input_mode: ModeArg,
        #[arg(long)]
        vocab: PathBuf,
    },
    /// Train embeddings; prints `epoch <e> loss <value>` per epoch
    Train(TrainArgs),
    /// Score vectors on an analogy question file
    Evaluate {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        questions: PathBuf,
        /// Lowercase question words before lookup
        #[arg(long)]
        lowercase: bool,
    },
    /// Run every stage, resuming from artifacts already in the output directory
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    cooccur: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    dim: u64,
    #[arg(long, default_value_t = 15)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 1, value_parser = threads_parser)]
    threads: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = WeightingArg::Classic)]
    weighting: WeightingArg,
    #[arg(long, conflicts_with = "alpha_from_estimator")]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    x_max: f64,
    /// Read α from a `method k n p` line in FILE, or stdin for `-`
    #[arg(long, value_name = "FILE")]
    alpha_from_estimator: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ExportArg::Sum)]
    export_mode: ExportArg,
    /// Vector file to write
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    questions: Option<PathBuf>,
    /// Classic weighting, x_max 100, α 0.75, d 50, 15 epochs
    #[arg(long, group = "preset")]
    reproduce_paper_baseline: bool,
    /// Extremal weighting with α from QQ at k = V/5, d 50, 15 epochs
    #[arg(long, group = "preset")]
    reproduce_paper_qq: bool,
    /// Start from a manifest written by an earlier run
    #[arg(long, group = "preset", value_name = "FILE")]
    manifest: Option<PathBuf>,
    #[arg(long, value_parser = window_parser)]
    window: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    min_count: Option<u64>,
    #[arg(long, value_enum)]
    weighting: Option<WeightingArg>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long, conflicts_with = "estimator")]
    alpha: Option<f64>,
    /// Take α from this estimator instead of a fixed value
    #[arg(long, value_enum)]
    estimator: Option<MethodArg>,
    #[arg(long)]
    k_fraction: Option<f64>,
    #[arg(long, value_enum)]
    input_mode: Option<ModeArg>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    dim: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, value_parser = threads_parser)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    export_mode: Option<ExportArg>,
    /// Lowercase question words before lookup
    #[arg(long)]
    lowercase_questions: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Pickands,
    Hill,
    AdaptedHill,
    Moment,
    Qq,
    Peng,
}

impl From<MethodArg> for TailMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pickands => TailMethod::Pickands,
            MethodArg::Hill => TailMethod::Hill,
            MethodArg::AdaptedHill => TailMethod::AdaptedHill,
            MethodArg::Moment => TailMethod::Moment,
            MethodArg::Qq => TailMethod::Qq,
            MethodArg::Peng => TailMethod::Peng,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Counts,
    Ranks,
}

impl From<ModeArg> for InputMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Counts => InputMode::Counts,
            ModeArg::Ranks => InputMode::Ranks,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WeightingArg {
    Classic,
    Extremal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExportArg {
    Sum,
    Main,
    Context,
}

impl From<ExportArg> for ExportMode {
    fn from(m: ExportArg) -> Self {
        match m {
            ExportArg::Sum => ExportMode::Sum,
            ExportArg::Main => ExportMode::MainOnly,
            ExportArg::Context => ExportMode::ContextOnly,
        }
    }
}

fn window_parser(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(w) if (1..=MAX_WINDOW).contains(&w) => Ok(w),
        _ => Err(format!("expected an integer in 1..={MAX_WINDOW}")),
    }
}

fn threads_parser(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(t) if t >= 1 => Ok(t),
        _ => Err("expected a positive integer".into()),
    }
}

enum Failure {
    Usage(String),
    Library(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Library(e.into())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Thread count from the environment, which takes precedence over `--threads`.
fn threads_override() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => threads_parser(v.trim())
            .map(Some)
            .map_err(|e| Failure::Usage(format!("{THREADS_ENV}={v}: {e}"))),
    }
}

fn resolve_threads(flag: usize) -> CliResult<usize> {
    Ok(threads_override()?.unwrap_or(flag))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        Failure::Library(Error::Io(io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        Failure::Library(Error::Io(io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })
}

fn read_text(path: &Path) -> CliResult<String> {
    let mut text = String::new();
    io::Read::read_to_string(&mut open(path)?, &mut text)?;
    Ok(text)
}

fn read_vocab(path: &Path) -> CliResult<VocabTable> {
    Ok(VocabTable::read_from(open(path)?)?)
}

fn read_estimate(path: &Path) -> CliResult<TailEstimate> {
    let mut line = String::new();
    if path == Path::new("-") {
        io::stdin().lock().read_line(&mut line)?;
    } else {
        open(path)?.read_line(&mut line)?;
    }
    Ok(line.trim().parse()?)
}

fn vocab_count(corpus: &Path, min_count: u64, output: &Path) -> CliResult {
    let text = read_text(corpus)?;
    let vocab = build_vocab(tokenize(&text), min_count);
    info!("vocabulary: {} words", vocab.len());
    vocab.write_to(create(output)?)?;
    Ok(())
}

fn cooccur(corpus: &Path, vocab: &Path, window: usize, threads: usize, output: &Path) -> CliResult {
    let vocab = read_vocab(vocab)?;
    let ids = vocab.encode(tokenize(&read_text(corpus)?));
    let records = count_encoded(&ids, window, resolve_threads(threads)?)?;
    info!("{} nonzero cells", records.len());
    write_records(create(output)?, &records)?;
    Ok(())
}

fn shuffle(input: &Path, output: &Path, seed: u64) -> CliResult {
    let records = read_records(open(input)?)?;
    write_records(create(output)?, &shuffle_records(records, seed))?;
    Ok(())
}

fn tail_index(method: MethodArg, k_fraction: f64, mode: ModeArg, vocab: &Path) -> CliResult {
    let vocab = read_vocab(vocab)?;
    let mode = InputMode::from(mode);
    let est = estimate_alpha(&vocab, method.into(), k_fraction, mode)?;
    eprintln!("input mode {mode}");
    println!("{est}");
    Ok(())
}

fn train_command(args: TrainArgs) -> CliResult {
    let vocab = read_vocab(&args.vocab)?;
    let records = read_records(open(&args.cooccur)?)?;
    let alpha = match (&args.alpha_from_estimator, args.alpha) {
        (Some(path), _) => {
            let est = read_estimate(path)?;
            info!("α from {est}");
            est.p
        }
        (None, Some(a)) => a,
        (None, None) => 0.75,
    };
    let scheme = match args.weighting {
        WeightingArg::Classic => WeightingScheme::classic(args.x_max, alpha)?,
        WeightingArg::Extremal => WeightingScheme::extremal_from_vocab(&vocab, alpha)?,
    };
    info!("weighting {scheme}");
    let config = TrainConfig {
        dim: args.dim as usize,
        epochs: args.epochs,
        learning_rate: args.lr,
        seed: args.seed,
        threads: resolve_threads(args.threads)?,
    };
    let mut stdout = io::stdout().lock();
    let out = train_with_progress(&records, vocab.len(), &scheme, &config, |e, loss| {
        let _ = writeln!(stdout, "epoch {e} loss {loss}");
    })?;
    let vectors = export_vectors(&out.model, &vocab, args.export_mode.into())?;
    vectors.write_to(create(&args.output)?)?;
    Ok(())
}

fn evaluate_command(vectors: &Path, questions: &Path, lowercase: bool) -> CliResult {
    let vectors = WordVectors::read_from(open(vectors)?)?;
    let mut set = AnalogySet::read_from(open(questions)?)?;
    if lowercase {
        set = set.lowercased();
    }
    println!("{}", evaluate(&NormalizedVectors::new(vectors), &set));
    Ok(())
}

fn run_config(args: RunArgs) -> CliResult<PipelineConfig> {
    let mut config = if let Some(manifest) = &args.manifest {
        PipelineConfig::from_manifest(&read_text(manifest)?)?
    } else {
        let missing =
            |what: &str| Failure::Usage(format!("--{what} is required unless --manifest is given"));
        let corpus = args.corpus.clone().ok_or_else(|| missing("corpus"))?;
        let output_dir = args
            .output_dir
            .clone()
            .ok_or_else(|| missing("output-dir"))?;
        let questions = args.questions.clone().ok_or_else(|| missing("questions"))?;
        if args.reproduce_paper_qq {
            PipelineConfig::paper_qq(corpus, output_dir, questions)
        } else if args.reproduce_paper_baseline {
            PipelineConfig::paper_baseline(corpus, output_dir, questions)
        } else {
            PipelineConfig::new(corpus, output_dir, questions)
        }
    };
    if args.manifest.is_some() {
        if let Some(c) = args.corpus {
            config.corpus = c;
        }
        if let Some(o) = args.output_dir {
            config.output_dir = o;
        }
        if let Some(q) = args.questions {
            config.questions = q;
        }
    }
    if let Some(w) = args.window {
        config.window = w;
    }
    if let Some(m) = args.min_count {
        config.min_count = m;
    }
    match (args.weighting, args.x_max) {
        (Some(WeightingArg::Extremal), Some(_)) => {
            return Err(Failure::Usage(
                "--x-max applies to classic weighting only".into(),
            ))
        }
        (Some(WeightingArg::Extremal), None) => config.weighting = WeightingKind::Extremal,
        (Some(WeightingArg::Classic), x_max) => {
            let current = match config.weighting {
                WeightingKind::Classic { x_max } => x_max,
                WeightingKind::Extremal => 100.0,
            };
            config.weighting = WeightingKind::Classic {
                x_max: x_max.unwrap_or(current),
            };
        }
        (None, Some(x_max)) => match config.weighting {
            WeightingKind::Classic { .. } => config.weighting = WeightingKind::Classic { x_max },
            WeightingKind::Extremal => {
                return Err(Failure::Usage(
                    "--x-max applies to classic weighting only".into(),
                ))
            }
        },
        (None, None) => {}
    }
    let (prev_fraction, prev_mode) = match config.alpha {
        AlphaSource::Estimated {
            k_fraction,
            input_mode,
            ..
        } => (k_fraction, input_mode),
        AlphaSource::Fixed(_) => (0.2, InputMode::Counts),
    };
    if let Some(a) = args.alpha {
        config.alpha = AlphaSource::Fixed(a);
    } else if let Some(m) = args.estimator {
        config.alpha = AlphaSource::Estimated {
            method: m.into(),
            k_fraction: prev_fraction,
            input_mode: prev_mode,
        };
    }
    if args.k_fraction.is_some() || args.input_mode.is_some() {
        let AlphaSource::Estimated {
            k_fraction,
            input_mode,
            ..
        } = &mut config.alpha
        else {
            return Err(Failure::Usage(
                "--k-fraction and --input-mode need an estimated α (--estimator)".into(),
            ));
        };
        if let Some(f) = args.k_fraction {
            *k_fraction = f;
        }
        if let Some(m) = args.input_mode {
            *input_mode = m.into();
        }
    }
    if let Some(d) = args.dim {
        config.dim = d as usize;
    }
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    if let Some(lr) = args.lr {
        config.learning_rate = lr;
    }
    if let Some(t) = args.threads {
        config.threads = t;
    }
    if let Some(t) = threads_override()? {
        config.threads = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(m) = args.export_mode {
        config.export_mode = m.into();
    }
    config.lowercase_questions |= args.lowercase_questions;
    Ok(config)
}

fn run_command(args: RunArgs) -> CliResult {
    let config = run_config(args)?;
    fs::create_dir_all(&config.output_dir)?;
    let outcome = run_pipeline(&config)?;
    if let (WeightingKind::Extremal, Some(est)) = (config.weighting, &outcome.tail) {
        if let AlphaSource::Estimated { input_mode, .. } = config.alpha {
            eprintln!("α {} from {} over {input_mode}", outcome.alpha, est.method);
        }
    }
    println!("{}", outcome.report);
    Ok(())
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::VocabCount {
            corpus,
            min_count,
            output,
        } => vocab_count(&corpus, min_count, &output),
        Command::Cooccur {
            corpus,
            vocab,
            window,
            threads,
            output,
        } => cooccur(&corpus, &vocab, window, threads, &output),
        Command::Shuffle {
            input,
            output,
            seed,
        } => shuffle(&input, &output, seed),
        Command::TailIndex {
            method,
            k_fraction,
            input_mode,
            vocab,
        } => tail_index(method, k_fraction, input_mode, &vocab),
        Command::Train(args) => train_command(args),
        Command::Evaluate {
            vectors,
            questions,
            lowercase,
        } => evaluate_command(&vectors, &questions, lowercase),
        Command::Run(args) => run_command(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Library(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
