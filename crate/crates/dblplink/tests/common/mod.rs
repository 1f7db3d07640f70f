#![allow(dead_code)]

use std::collections::BTreeMap;

use dblplink::server::{router, AppState};
use dblplink::stub::{spawn_local, Spawned};
use dblplink_core::index::build_index;
use dblplink_core::pipeline::{Reranker, SharedEncoder};
use dblplink_core::span::LexiconDetector;
use dblplink_core::{
    EmbeddingKind, EntityRecord, EntityStore, EntityType, HashEncoder, KgEmbeddingSet, LabelIndex, Resources, SiameseParams,
    SpanModelId, KG_DIM,
};

pub const VASWANI: &str = "https://dblp.org/pid/v/AshishVaswani";
pub const ATTENTION: &str = "https://dblp.org/rec/conf/nips/VaswaniSPUJGKP17";
pub const COAUTHOR_QUESTION: &str = "Who were the co-authors of Ashish Vaswani in the paper 'Attention is all you need'?";

fn rec(uri: &str, label: &str, etype: EntityType) -> EntityRecord {
    EntityRecord { uri: uri.into(), label: label.into(), aliases: vec![], etype }
}

pub fn fixture_store() -> EntityStore {
    EntityStore::from_records([
        rec(VASWANI, "Ashish Vaswani", EntityType::Person),
        rec("https://dblp.org/pid/s/NoamShazeer", "Noam Shazeer", EntityType::Person),
        rec("https://dblp.org/pid/s/JohnSmith1", "John Smith", EntityType::Person),
        rec("https://dblp.org/pid/s/JohnSmith2", "John Smith", EntityType::Person),
        rec(ATTENTION, "Attention is All you Need", EntityType::Publication),
        rec("https://dblp.org/rec/journals/x/Attention", "Attention Models", EntityType::Publication),
        rec("https://dblp.org/streams/conf/nips", "NeurIPS", EntityType::Other("Stream".into())),
    ])
    .unwrap()
}

pub fn fixture_index() -> LabelIndex {
    build_index(&fixture_store()).unwrap()
}

/// Deterministic KG vectors for every fixture entity.
pub fn fixture_embeddings(kind: EmbeddingKind) -> KgEmbeddingSet {
    let entities = fixture_store()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.uri.clone(), (0..KG_DIM).map(|j| ((i * 7 + j * 3) % 13) as f64 / 13.0 - 0.5).collect()))
        .collect();
    KgEmbeddingSet::new(kind, KG_DIM, entities, BTreeMap::new()).unwrap()
}

pub fn fixture_resources_with(encoder: SharedEncoder, kinds: &[EmbeddingKind]) -> Resources {
    let index = fixture_index();
    let lexicon = LexiconDetector::new(&index);
    let mut res = Resources::new(index, encoder);
    res.add_detector(SpanModelId::new("lexicon"), Box::new(lexicon)).unwrap();
    for (i, &kind) in kinds.iter().enumerate() {
        res.add_reranker(Reranker { embeddings: fixture_embeddings(kind), params: SiameseParams::init(i as u64) }).unwrap();
    }
    res
}

pub fn fixture_resources() -> Resources {
    fixture_resources_with(Box::new(HashEncoder), &EmbeddingKind::ALL)
}

pub fn spawn_api(resources: Resources, samples: Vec<String>) -> Spawned {
    let state = std::sync::Arc::new(AppState::ready(resources, samples, 10));
    spawn_local(router(state, None)).unwrap()
}

/// An agent that hands back 4xx/5xx responses instead of erroring.
pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

pub struct Reply {
    pub status: u16,
    pub body: String,
    pub headers: ureq::http::HeaderMap,
}

pub fn get(base: &str, path: &str) -> Reply {
    let mut r = agent().get(format!("{base}{path}")).call().unwrap();
    Reply { status: r.status().as_u16(), headers: r.headers().clone(), body: r.body_mut().read_to_string().unwrap() }
}

pub fn post(base: &str, path: &str, body: &str) -> Reply {
    let mut r = agent().post(format!("{base}{path}")).content_type("application/json").send(body).unwrap();
    Reply { status: r.status().as_u16(), headers: r.headers().clone(), body: r.body_mut().read_to_string().unwrap() }
}

pub fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap_or_else(|e| panic!("not JSON ({e}): {s}"))
}

/// `http://addr` without the trailing slash.
pub fn base(s: &Spawned) -> String {
    format!("http://{}", s.addr())
}

pub struct CliRun {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn cli(args: &[&str]) -> CliRun {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_dblplink"))
        .args(args)
        .env_remove(dblplink::config::ENV_CONFIG)
        .env_remove(dblplink::config::ENV_ENCODER_URL)
        .env_remove(dblplink::config::ENV_SPAN_URL)
        .env_remove(dblplink::config::ENV_LISTEN)
        .output()
        .expect("binary runs");
    CliRun {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Run and require exit 0.
pub fn cli_ok(args: &[&str]) -> CliRun {
    let r = cli(args);
    assert_eq!(r.code, 0, "{args:?}\nstdout: {}\nstderr: {}", r.stdout, r.stderr);
    r
}

/// Build every artifact of a small synthetic corpus with the CLI and write a
/// service config next to them. Returns the config path.
pub fn build_pipeline(dir: &std::path::Path, seed: u64, size: usize) -> std::path::PathBuf {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let seed = seed.to_string();
    let (persons, pubs, qs) = ((size * 3 / 4).to_string(), size.to_string(), (size / 2).to_string());
    cli_ok(&["synth", "--out-dir", &p(""), "--persons", &persons, "--publications", &pubs, "--questions", &qs, "--training", &qs, "--seed", &seed]);
    cli_ok(&["ingest", "--triples", &p("triples.nt"), "--out", &p("store.bin")]);
    cli_ok(&["index", "build", "--store", &p("store.bin"), "--out", &p("index.bin")]);
    let mut toml = String::from("index = \"index.bin\"\nsample_questions = [\"Which papers did someone publish?\"]\n\n[[detectors]]\nid = \"lexicon\"\nbackend = \"lexicon\"\n");
    for kind in ["transe", "complex", "distmult"] {
        cli_ok(&["embed", "train", "--kind", kind, "--triples", &p("triples.nt"), "--epochs", "3", "--seed", &seed, "--out", &p(&format!("{kind}.emb"))]);
        cli_ok(&[
            "rerank", "train", "--data", &p("training.tsv"), "--index", &p("index.bin"), "--embeddings", &p(&format!("{kind}.emb")),
            "--epochs", "2", "--seed", &seed, "--out", &p(&format!("{kind}.params")),
        ]);
        toml.push_str(&format!("\n[[embeddings]]\nkind = \"{kind}\"\nvectors = \"{kind}.emb\"\nparams = \"{kind}.params\"\n"));
    }
    let cfg = dir.join("dblplink.toml");
    std::fs::write(&cfg, toml).unwrap();
    cfg
}
