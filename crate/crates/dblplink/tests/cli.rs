mod common;

use std::io::Write;

use common::*;

#[test]
fn eval_without_dataset_is_a_usage_error() {
    let r = cli(&["eval", "--modes", "all"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("--dataset") && r.stderr.contains("Usage"), "{}", r.stderr);
}

#[test]
fn pipeline_link_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = build_pipeline(dir.path(), 3, 40);
    let cfg = cfg.to_str().unwrap();
    let dataset: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("dataset.json")).unwrap()).unwrap();
    let question = dataset["questions"][0]["question"]["string"].as_str().unwrap().to_string();
    let gold = dataset["questions"][0]["entities"][0].as_str().unwrap().trim_matches(['<', '>']).to_string();

    let r = cli_ok(&["link", "--config", cfg, "--question", &question, "--model", "lexicon", "--embedding", "transe", "--mode", "conditional"]);
    let v = json(&r.stdout);
    assert_eq!(v["request"]["mode"], "conditional");
    assert!(v.get("timing_ms").is_none());
    let tops: Vec<&str> = v["spans"].as_array().unwrap().iter().filter_map(|s| s["top"]["uri"].as_str()).collect();
    assert!(tops.contains(&gold.as_str()), "{tops:?} vs {gold}");

    let r = cli_ok(&["link", "--config", cfg, "--question", &question, "--model", "lexicon", "--embedding", "complex", "--mode", "hard", "--timing"]);
    assert!(json(&r.stdout)["timing_ms"].is_u64());

    let r = cli(&["link", "--config", cfg, "--question", &question, "--model", "lexicon", "--embedding", "rotate", "--mode", "hard"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("error[unknown_embedding]"), "{}", r.stderr);

    let csv = dir.path().join("report.csv");
    let r = cli_ok(&["eval", "--config", cfg, "--dataset", dir.path().join("dataset.json").to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(r.stdout.starts_with("# 20 questions"), "{}", r.stdout);
    assert!(r.stdout.contains("macro-averaged"));
    let csv = std::fs::read_to_string(csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7);
    assert!(csv.starts_with("detector,embedding,mode,precision,recall,f1,"));

    let r = cli_ok(&["eval", "--config", cfg, "--dataset", dir.path().join("dataset.json").to_str().unwrap(), "--modes", "hard"]);
    assert_eq!(r.stdout.lines().count(), 2 + 3);
}

#[test]
fn serve_with_missing_embedding_file_names_it() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.bin"), b"").unwrap();
    let cfg = dir.path().join("svc.toml");
    std::fs::write(&cfg, "index = \"index.bin\"\nlisten = \"127.0.0.1:1\"\n[[embeddings]]\nkind = \"transe\"\nvectors = \"missing-transe.emb\"\nparams = \"index.bin\"\n").unwrap();
    let r = cli(&["serve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.code, 1, "{}", r.stderr);
    assert!(r.stderr.contains(&dir.path().join("missing-transe.emb").display().to_string()), "{}", r.stderr);
    assert!(r.stderr.contains("error[file_not_found]"));
}

#[test]
fn serve_exits_when_loading_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.bin"), b"not an index").unwrap();
    let cfg = dir.path().join("svc.toml");
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    std::fs::write(&cfg, format!("index = \"index.bin\"\nlisten = \"127.0.0.1:{port}\"\n")).unwrap();
    let r = cli(&["serve", "--config", cfg.to_str().unwrap()]);
    assert_ne!(r.code, 0);
    assert!(r.stderr.contains("error[bad_artifact]"), "{}", r.stderr);
}

#[test]
fn ingest_modes_and_gzip() {
    let dir = tempfile::tempdir().unwrap();
    let text = "<http://x/a> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <https://dblp.org/rdf/schema#Person> .\n\
                <http://x/a> <https://dblp.org/rdf/schema#primaryCreatorName> \"Ashish Vaswani\" .\n\
                <http://x/b> <http://p>\n";
    let nt = dir.path().join("in.nt");
    std::fs::write(&nt, text).unwrap();
    let store = dir.path().join("store.bin");
    let (nt_s, store_s) = (nt.to_str().unwrap(), store.to_str().unwrap());
    let r = cli(&["ingest", "--triples", nt_s, "--out", store_s]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("error[parse_error]") && r.stderr.contains("line 3"), "{}", r.stderr);

    let r = cli_ok(&["ingest", "--triples", nt_s, "--skip-malformed", "--out", store_s]);
    assert!(r.stderr.contains("person: 1"), "{}", r.stderr);

    let gz = dir.path().join("in.nt.gz");
    let mut enc = flate2::write::GzEncoder::new(std::fs::File::create(&gz).unwrap(), flate2::Compression::default());
    enc.write_all(text.lines().take(2).collect::<Vec<_>>().join("\n").as_bytes()).unwrap();
    enc.finish().unwrap();
    let store2 = dir.path().join("store2.bin");
    cli_ok(&["ingest", "--triples", gz.to_str().unwrap(), "--out", store2.to_str().unwrap()]);
    assert_eq!(std::fs::read(&store).unwrap(), std::fs::read(&store2).unwrap());

    let r = cli(&["ingest", "--triples", dir.path().join("nope.nt").to_str().unwrap(), "--out", store_s]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("error[file_not_found]"));
}

#[test]
fn embed_check_export_import() {
    let r = cli_ok(&["embed", "check", "--kind", "complex", "--points", "10"]);
    assert!(r.stdout.contains("max relative error"));
    assert_eq!(cli(&["embed", "check", "--kind", "complex", "--dim", "3"]).code, 1);

    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    cli_ok(&["synth", "--out-dir", &p(""), "--persons", "10", "--publications", "10", "--questions", "5", "--training", "5"]);
    cli_ok(&["embed", "train", "--kind", "distmult", "--triples", &p("triples.nt"), "--dim", "8", "--epochs", "2", "--out", &p("a.emb")]);
    cli_ok(&["embed", "export", "--input", &p("a.emb"), "--out", &p("a.tsv")]);
    cli_ok(&["embed", "import", "--kind", "distmult", "--input", &p("a.tsv"), "--out", &p("b.emb")]);
    assert_eq!(std::fs::read(p("a.emb")).unwrap(), std::fs::read(p("b.emb")).unwrap());
    let r = cli(&["embed", "import", "--kind", "distmult", "--input", &p("dataset.json"), "--out", &p("c.emb")]);
    assert_eq!(r.code, 1);
}

#[test]
fn encode_prints_a_unit_vector() {
    let r = cli_ok(&["encode", "--text", "Ashish Vaswani"]);
    let v: Vec<f64> = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v.len(), 768);
    assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(cli(&["encode", "--text", "   "]).code, 1);
    assert_eq!(cli(&["encode", "--backend", "remote", "--text", "x"]).code, 1);
    let r = cli(&["encode", "--backend", "remote", "--endpoint", "http://127.0.0.1:9/", "--text", "x"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("error[encoder_unavailable]"));
}
