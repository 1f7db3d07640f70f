//! Command-line interface.
//!
//! Exit codes: 0 success, 1 user error (bad arguments, missing or malformed
//! input), 2 internal failure. Errors go to standard error as
//! `error[code]: message`.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dblplink_core::embed::{self, grad_check, train_embeddings, EmbedTrainConfig, LossPoint};
use dblplink_core::eval::{EvalSettings, PredictionPolicy};
use dblplink_core::kg::{extract_entities, SchemaConfig};
use dblplink_core::ntriples::{format_triple, ErrorMode};
use dblplink_core::pipeline::LinkError;
use dblplink_core::rerank::{build_triplets, train_reranker, RerankTrainConfig, TripletSources};
use dblplink_core::span::LexiconDetector;
use dblplink_core::synth::{dblp_corpus, CorpusSpec};
use dblplink_core::{
    evaluate, index, link, EmbeddingKind, HashEncoder, KgEmbeddingSet, LinkMode, TextEncoder,
};

use crate::artifacts::{self, ArtifactError};
use crate::config::{ConfigError, ServiceConfig, ENV_CONFIG, ENV_ENCODER_URL};
use crate::dataset::{self, report_csv, report_table};
use crate::io::{read_ntriples, read_text, write_bytes, FileError, NtError};
use crate::remote::RemoteEncoder;
use crate::server::{self, ServeError};
use crate::stub::{self, EncoderStubMode, SpanStubMode};
use crate::wire;

#[derive(Debug, Parser)]
#[command(name = "dblplink", version, about = "Entity linking over the DBLP scholarly knowledge graph")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse N-Triples (plain or gzip) into an entity store.
    Ingest(IngestArgs),
    /// Label index commands.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Knowledge-graph embedding commands.
    #[command(subcommand)]
    Embed(EmbedCommand),
    /// Siamese re-ranker commands.
    #[command(subcommand)]
    Rerank(RerankCommand),
    /// Link the entities of one question and print the result as JSON.
    Link(LinkArgs),
    /// Score every detector, embedding and mode on a question set.
    Eval(EvalArgs),
    /// Run the HTTP API.
    Serve(ConfigArg),
    /// Print the text embedding of a string as JSON.
    Encode(EncodeArgs),
    /// Run a stand-in remote service.
    #[command(subcommand)]
    Stub(StubCommand),
    /// Write a seeded synthetic graph, question set and training file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    triples: PathBuf,
    /// key = value schema file; defaults to the DBLP predicates.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Skip malformed lines instead of stopping at the first one.
    #[arg(long)]
    skip_malformed: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum IndexCommand {
    /// Build the label index; the output also carries the store.
    Build {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Transe,
    Distmult,
    Complex,
}

impl From<KindArg> for EmbeddingKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Transe => EmbeddingKind::TransE,
            KindArg::Distmult => EmbeddingKind::DistMult,
            KindArg::Complex => EmbeddingKind::ComplEx,
        }
    }
}

#[derive(Debug, Subcommand)]
enum EmbedCommand {
    Train(EmbedTrainArgs),
    /// Compare analytic loss gradients with central differences.
    Check {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write vectors as `uri<TAB>v1 ... vdim` lines.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read vectors from the TSV export format.
    Import {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct EmbedTrainArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    triples: PathBuf,
    #[arg(long, default_value_t = embed::DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    #[arg(long, default_value_t = 1)]
    negatives: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep rdf:type triples (dropped by default).
    #[arg(long)]
    include_type: bool,
    #[arg(long)]
    skip_malformed: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum RerankCommand {
    Train(RerankTrainArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NegativeArg {
    Hard,
    Random,
}

#[derive(Debug, Args)]
struct RerankTrainArgs {
    /// TSV of `question<TAB>positive-uri[<TAB>negative-uri]`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    index: PathBuf,
    /// Embedding file supplying the KG slot of the features.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[command(flatten)]
    encoder: EncoderArgs,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, value_enum, default_value_t = NegativeArg::Hard)]
    negatives: NegativeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum BackendArg {
    Hash,
    Remote,
}

#[derive(Debug, Args)]
struct EncoderArgs {
    #[arg(long = "encoder", value_enum, default_value_t = BackendArg::Hash)]
    backend: BackendArg,
    #[arg(long = "encoder-url", env = ENV_ENCODER_URL)]
    url: Option<String>,
    #[arg(long = "encoder-timeout-ms", default_value_t = 10_000)]
    timeout_ms: u64,
}

impl EncoderArgs {
    fn build(&self) -> Result<Box<dyn TextEncoder>, CliError> {
        Ok(match self.backend {
            BackendArg::Hash => Box::new(HashEncoder),
            BackendArg::Remote => {
                let url = self.url.clone().ok_or_else(|| CliError::user("missing_endpoint", "--encoder-url is required for the remote encoder"))?;
                Box::new(RemoteEncoder::new(url, Duration::from_millis(self.timeout_ms)))
            }
        })
    }
}

#[derive(Debug, Args)]
struct ConfigArg {
    #[arg(long, env = ENV_CONFIG, default_value = "dblplink.toml")]
    config: PathBuf,
}

#[derive(Debug, Args)]
struct LinkArgs {
    #[arg(long)]
    question: String,
    #[arg(long)]
    model: String,
    #[arg(long)]
    embedding: String,
    #[arg(long)]
    mode: String,
    #[arg(long)]
    k: Option<usize>,
    /// Add `timing_ms` to the output.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// `all` or a comma-separated list of modes.
    #[arg(long, default_value = "all")]
    modes: String,
    #[arg(long)]
    k: Option<usize>,
    /// Also write the report as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    text: String,
    #[arg(long = "backend", value_enum, default_value_t = BackendArg::Hash)]
    backend: BackendArg,
    #[arg(long = "endpoint", env = ENV_ENCODER_URL)]
    url: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EncoderStubArg {
    Hash,
    Short,
    Fail,
}

#[derive(Debug, Subcommand)]
enum StubCommand {
    /// Answers encode requests with hash-encoder vectors.
    Encoder {
        #[arg(long, default_value = "127.0.0.1:7001")]
        listen: SocketAddr,
        #[arg(long, value_enum, default_value_t = EncoderStubArg::Hash)]
        mode: EncoderStubArg,
    },
    /// Answers span requests with a fixed string or lexicon spans.
    Span {
        #[arg(long, default_value = "127.0.0.1:7002")]
        listen: SocketAddr,
        /// Reply with this output for every question.
        #[arg(long, conflicts_with = "index")]
        fixed: Option<String>,
        /// Run the lexicon detector over this index.
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        delay_ms: u64,
    },
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 300)]
    persons: usize,
    #[arg(long, default_value_t = 400)]
    publications: usize,
    #[arg(long, default_value_t = 200)]
    questions: usize,
    #[arg(long, default_value_t = 300)]
    training: usize,
    /// Persons that get a second entity with the same name.
    #[arg(long, default_value_t = 0)]
    homonyms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A reportable failure with a machine code and an exit status.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("error[{code}]: {message}")]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit: i32,
}

impl CliError {
    fn user(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), exit: 1 }
    }

    fn internal(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), exit: 2 }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        let code = if e.source.kind() == std::io::ErrorKind::NotFound { "file_not_found" } else { "io_error" };
        CliError::user(code, e.to_string())
    }
}

impl From<ArtifactError> for CliError {
    fn from(e: ArtifactError) -> Self {
        match e {
            ArtifactError::File(f) => f.into(),
            other => CliError::user("bad_artifact", other.to_string()),
        }
    }
}

impl From<NtError> for CliError {
    fn from(e: NtError) -> Self {
        match e {
            NtError::File(f) => f.into(),
            other => CliError::user("parse_error", other.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::File(f) => f.into(),
            ConfigError::Artifact(a) => a.into(),
            ConfigError::MissingFile { .. } => CliError::user("file_not_found", e.to_string()),
            other => CliError::user("bad_config", other.to_string()),
        }
    }
}

impl From<LinkError> for CliError {
    fn from(e: LinkError) -> Self {
        let api = wire::link_error(&e);
        if api.status == 502 {
            CliError::internal(api.code, api.message)
        } else {
            CliError::user(api.code, api.message)
        }
    }
}

fn internal<E: std::fmt::Display>(code: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::internal(code, e.to_string())
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Index(IndexCommand::Build { store, out }) => {
            let store = artifacts::load_store(&store)?;
            let idx = index::build_index(&store).map_err(|e| CliError::user("empty_store", e.to_string()))?;
            artifacts::save_index(&store, &idx, &out)?;
            eprintln!("indexed {} labels of {} entities", idx.labels().len(), store.len());
            Ok(())
        }
        Command::Embed(c) => embed_cmd(c),
        Command::Rerank(RerankCommand::Train(a)) => rerank_train(a),
        Command::Link(a) => link_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Encode(a) => encode_cmd(a),
        Command::Stub(c) => stub_cmd(c),
        Command::Synth(a) => synth_cmd(a),
    }
}

fn error_mode(skip: bool) -> ErrorMode {
    if skip {
        ErrorMode::Skip
    } else {
        ErrorMode::Abort
    }
}

fn ingest(a: IngestArgs) -> Result<(), CliError> {
    let schema = match &a.schema {
        Some(p) => SchemaConfig::parse(&read_text(p)?).map_err(|e| CliError::user("bad_schema", format!("{}: {e}", p.display())))?,
        None => SchemaConfig::dblp(),
    };
    let doc = read_ntriples(&a.triples, error_mode(a.skip_malformed))?;
    let extraction = extract_entities(&doc.triples, &schema).map_err(|e| CliError::user("empty_store", e.to_string()))?;
    artifacts::save_store(&extraction.store, &a.out)?;
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "triples: {}", doc.triples.len());
    let _ = writeln!(err, "malformed lines skipped: {}", doc.skipped.len());
    let _ = writeln!(err, "subjects skipped: {}", extraction.skipped);
    for (etype, n) in extraction.store.stats() {
        let _ = writeln!(err, "{etype}: {n}");
    }
    Ok(())
}

fn embed_cmd(cmd: EmbedCommand) -> Result<(), CliError> {
    match cmd {
        EmbedCommand::Train(a) => {
            let kind = EmbeddingKind::from(a.kind);
            let mut triples = read_ntriples(&a.triples, error_mode(a.skip_malformed))?.triples;
            if !a.include_type {
                triples.retain(|t| t.predicate != dblplink_core::kg::RDF_TYPE);
            }
            let cfg = EmbedTrainConfig {
                epochs: a.epochs,
                learning_rate: a.learning_rate,
                margin: a.margin,
                negatives_per_positive: a.negatives,
                seed: a.seed,
                dim: a.dim,
            };
            let outcome = train_embeddings(&triples, &cfg, kind).map_err(|e| match e {
                embed::EmbedError::InvalidConfig(_) | embed::EmbedError::OddComplexDim(_) | embed::EmbedError::NoTrainableTriples => {
                    CliError::user("bad_training_input", e.to_string())
                }
                other => CliError::internal("training_failed", other.to_string()),
            })?;
            artifacts::save_embeddings(&outcome.embeddings, &a.out)?;
            let first = outcome.epoch_losses.first().copied().unwrap_or(0.0);
            let last = outcome.epoch_losses.last().copied().unwrap_or(0.0);
            eprintln!("{kind}: {} entities, loss {first:.6} -> {last:.6}", outcome.embeddings.entities().len());
            Ok(())
        }
        EmbedCommand::Check { kind, points, dim, step, tolerance, seed } => {
            let kind = EmbeddingKind::from(kind);
            if dim == 0 || (kind == EmbeddingKind::ComplEx && dim % 2 != 0) {
                return Err(CliError::user("bad_dim", format!("dimension {dim} is not valid for {kind}")));
            }
            let mut worst = 0.0f64;
            for i in 0..points as u64 {
                let point = LossPoint::random(kind, dim, seed.wrapping_add(i));
                worst = worst.max(grad_check(kind, &point, step).map_err(|e| CliError::user("bad_check", e.to_string()))?);
            }
            emit(&format!("{kind}: {points} points, max relative error {worst:.3e}\n"));
            if worst < tolerance {
                Ok(())
            } else {
                Err(CliError::internal("gradient_mismatch", format!("max relative error {worst:.3e} >= {tolerance:.1e}")))
            }
        }
        EmbedCommand::Export { input, out } => {
            let set = artifacts::load_embeddings(&input, None)?;
            Ok(write_bytes(&out, set.to_tsv().as_bytes())?)
        }
        EmbedCommand::Import { kind, input, out } => {
            let set = KgEmbeddingSet::from_tsv(&read_text(&input)?, kind.into())
                .map_err(|e| CliError::user("bad_tsv", format!("{}: {e}", input.display())))?;
            artifacts::save_embeddings(&set, &out)?;
            Ok(())
        }
    }
}

fn rerank_train(a: RerankTrainArgs) -> Result<(), CliError> {
    let examples = dataset::load_training_tsv(&a.data).map_err(|e| match e {
        dataset::TsvError::File(f) => f.into(),
        other => CliError::user("bad_training_data", format!("{}: {other}", a.data.display())),
    })?;
    let (store, idx) = artifacts::load_index(&a.index)?;
    let embeddings = a.embeddings.as_deref().map(|p| artifacts::load_embeddings(p, None)).transpose()?;
    let encoder = a.encoder.build()?;
    let cfg = RerankTrainConfig {
        margin: a.margin,
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        negatives: match a.negatives {
            NegativeArg::Hard => dblplink_core::rerank::NegativePolicy::Hard,
            NegativeArg::Random => dblplink_core::rerank::NegativePolicy::Random,
        },
        ..RerankTrainConfig::default()
    };
    let sources = TripletSources { store: &store, index: &idx, embeddings: embeddings.as_ref(), encoder: encoder.as_ref() };
    let triplets = build_triplets(&examples, &sources, &cfg).map_err(|e| match e {
        dblplink_core::rerank::RerankError::Encode(_) => CliError::internal("encoder_unavailable", e.to_string()),
        other => CliError::user("bad_training_data", other.to_string()),
    })?;
    let outcome = train_reranker(&triplets, &cfg).map_err(|e| match e {
        dblplink_core::rerank::RerankError::InvalidConfig(_) | dblplink_core::rerank::RerankError::EmptyDataset => {
            CliError::user("bad_training_input", e.to_string())
        }
        other => CliError::internal("training_failed", other.to_string()),
    })?;
    artifacts::save_params(&outcome.params, &a.out)?;
    let first = outcome.epoch_losses.first().copied().unwrap_or(0.0);
    let last = outcome.epoch_losses.last().copied().unwrap_or(0.0);
    eprintln!("{} triplets, loss {first:.6} -> {last:.6}", triplets.len());
    Ok(())
}

fn load_config(path: &Path) -> Result<ServiceConfig, CliError> {
    Ok(ServiceConfig::load(path)?)
}

fn link_cmd(a: LinkArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config.config)?;
    let resources = cfg.load_resources()?;
    let body = wire::LinkRequestBody { question: a.question, span_model: a.model, embedding: a.embedding, mode: a.mode, k: a.k };
    let req = body
        .resolve(&resources.detector_ids(), &resources.embedding_kinds(), cfg.default_k)
        .map_err(|e| CliError::user(e.code, e.message))?;
    let started = Instant::now();
    let mut result = link(&req, &resources)?;
    if a.timing {
        result.timing_ms = Some(started.elapsed().as_millis() as u64);
    }
    emit(&(wire::link_json_pretty(&result) + "\n"));
    match result.spans.iter().filter_map(|s| s.error.as_ref()).find(|e| e.is_remote()) {
        Some(f) => Err(CliError::internal(f.code, f.message.clone())),
        None => Ok(()),
    }
}

fn parse_modes(text: &str) -> Result<Vec<LinkMode>, CliError> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(LinkMode::ALL.to_vec());
    }
    let mut modes = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let mode: LinkMode = part.parse().map_err(|e: dblplink_core::pipeline::UnknownMode| CliError::user("unknown_mode", e.to_string()))?;
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    if modes.is_empty() {
        return Err(CliError::user("unknown_mode", "no modes given"));
    }
    Ok(modes)
}

fn eval_cmd(a: EvalArgs) -> Result<(), CliError> {
    let mut modes = parse_modes(&a.modes)?;
    let cfg = load_config(&a.config.config)?;
    let questions = dataset::load_dataset(&a.dataset, &cfg.dataset).map_err(|e| match e {
        dataset::LoadError::File(f) => f.into(),
        other => CliError::user("bad_dataset", format!("{}: {other}", a.dataset.display())),
    })?;
    let resources = cfg.load_resources()?;
    let mut combos = resources.available_combinations();
    if resources.embedding_kinds().is_empty() {
        // Only label sorting can run; it ignores the embedding named in the request.
        if modes.iter().any(|m| *m != LinkMode::LabelSorting) {
            eprintln!("note: no embeddings configured, only label-sorting rows are reported");
        }
        modes.retain(|m| *m == LinkMode::LabelSorting);
        combos = resources.detector_ids().into_iter().map(|d| (d, EmbeddingKind::TransE)).collect();
    }
    let settings = EvalSettings { k: a.k.unwrap_or(cfg.default_k), policy: PredictionPolicy::TopPerSpan };
    let report = evaluate(&questions, &combos, &modes, &resources, settings)?;
    emit(&report_table(&report));
    if let Some(out) = &a.out {
        write_bytes(out, report_csv(&report).as_bytes())?;
    }
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(internal("runtime"))
}

fn serve_cmd(a: ConfigArg) -> Result<(), CliError> {
    let cfg = load_config(&a.config)?;
    let listen = cfg.listen.clone();
    eprintln!("listening on {listen}");
    runtime()?.block_on(server::serve(cfg)).map_err(|e| match e {
        ServeError::Config(c) | ServeError::Load(c) => CliError::from(c),
        ServeError::Bind { .. } => CliError::internal("bind_failed", e.to_string()),
        ServeError::Io(_) => CliError::internal("server_error", e.to_string()),
    })
}

fn encode_cmd(a: EncodeArgs) -> Result<(), CliError> {
    let encoder = EncoderArgs { backend: a.backend, url: a.url, timeout_ms: a.timeout_ms }.build()?;
    let v = encoder.encode(&a.text).map_err(|e| match e {
        dblplink_core::encoder::EncodeError::EmptyText { .. } => CliError::user("empty_text", e.to_string()),
        other => CliError::internal("encoder_unavailable", other.to_string()),
    })?;
    emit(&(serde_json::to_string(v.as_slice()).map_err(internal("serialize"))? + "\n"));
    Ok(())
}

fn stub_cmd(cmd: StubCommand) -> Result<(), CliError> {
    let (router, listen) = match cmd {
        StubCommand::Encoder { listen, mode } => {
            let mode = match mode {
                EncoderStubArg::Hash => EncoderStubMode::Hash,
                EncoderStubArg::Short => EncoderStubMode::ShortVectors,
                EncoderStubArg::Fail => EncoderStubMode::Fail,
            };
            (stub::encoder_router(mode), listen)
        }
        StubCommand::Span { listen, fixed, index, delay_ms } => {
            let mode = match (fixed, index) {
                (Some(f), _) => SpanStubMode::Fixed(f),
                (None, Some(p)) => SpanStubMode::Lexicon(Arc::new(LexiconDetector::new(&artifacts::load_index(&p)?.1))),
                (None, None) => return Err(CliError::user("missing_argument", "give --fixed or --index")),
            };
            (stub::span_router(mode, Duration::from_millis(delay_ms)), listen)
        }
    };
    runtime()?.block_on(async move {
        let listener = tokio::net::TcpListener::bind(listen).await.map_err(|e| CliError::internal("bind_failed", format!("{listen}: {e}")))?;
        eprintln!("stub listening on http://{}{}", listener.local_addr().map_err(internal("bind_failed"))?, stub::STUB_PATH);
        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(internal("server_error"))
    })
}

fn synth_cmd(a: SynthArgs) -> Result<(), CliError> {
    let spec = CorpusSpec {
        persons: a.persons,
        publications: a.publications,
        questions: a.questions,
        training_examples: a.training,
        homonyms: a.homonyms,
        seed: a.seed,
    };
    let corpus = dblp_corpus(&spec);
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::from(FileError::new(&a.out_dir, e)))?;
    let mut nt = String::new();
    for t in &corpus.triples {
        nt.push_str(&format_triple(t));
        nt.push('\n');
    }
    write_bytes(&a.out_dir.join("triples.nt"), nt.as_bytes())?;
    write_bytes(&a.out_dir.join("dataset.json"), dataset::dataset_json(&corpus.questions).as_bytes())?;
    let tsv = dataset::training_tsv(&corpus.training).map_err(internal("synth"))?;
    write_bytes(&a.out_dir.join("training.tsv"), tsv.as_bytes())?;
    eprintln!(
        "{} triples, {} questions, {} training examples in {}",
        corpus.triples.len(),
        corpus.questions.len(),
        corpus.training.len(),
        a.out_dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_lists() {
        assert_eq!(parse_modes("all").unwrap(), LinkMode::ALL.to_vec());
        assert_eq!(parse_modes("hard, label-sorting,hard").unwrap(), vec![LinkMode::HardDisambiguation, LinkMode::LabelSorting]);
        assert_eq!(parse_modes("soft").unwrap_err().code, "unknown_mode");
        assert!(parse_modes(" , ").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["dblplink", "eval"]), 1);
        assert_eq!(run(["dblplink", "bogus"]), 1);
        assert_eq!(run(["dblplink", "--help"]), 0);
    }
}
