//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Every check recomputes its expectation independently.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dblplink::artifacts::{save_embeddings, save_index, save_params};
use dblplink::config::ServiceConfig;
use dblplink::dataset::{dataset_json, load_dataset};
use dblplink::stub::{span_router, spawn_local, SpanStubMode};
use dblplink_core::embed::{filtered_hits_at_k, grad_check, score, train_embeddings, EmbedTrainConfig, LossPoint};
use dblplink_core::eval::{EvalSettings, PredictionPolicy};
use dblplink_core::index::build_index;
use dblplink_core::kg::{extract_entities, SchemaConfig, RDF_TYPE};
use dblplink_core::ntriples::format_triple;
use dblplink_core::pipeline::{Reranker, SpanLink};
use dblplink_core::rerank::{
    build_triplets, compose_entity, compose_question, rank, train_reranker, triplet_grad_check, triplet_loss,
    RerankTrainConfig, TripletSources, KG_SLOT, SIMILARITY_SLOT,
};
use dblplink_core::span::LexiconDetector;
use dblplink_core::synth::{dblp_corpus, label_store, perturbed_queries, separable_task, toy_kg, Corpus, CorpusSpec};
use dblplink_core::{
    evaluate, link, EmbeddingKind, EntityStore, EntityType, HashEncoder, LinkMode, LinkRequest, Resources,
    SiameseParams, SpanModelId, TextEmbedding, FEATURE_DIM, KG_DIM, TEXT_DIM,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- retrieval

fn oracle_normalize(s: &str) -> String {
    s.to_ascii_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

fn oracle_trigrams(s: &str) -> HashSet<String> {
    let padded: Vec<char> = format!("##{s}##").chars().collect();
    padded.windows(3).map(|w| w.iter().collect()).collect()
}

fn oracle_levenshtein(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// (0.75 J + 0.25 L, L)
fn oracle_score(query: &str, label: &str) -> (f64, f64) {
    let (q, l) = (oracle_normalize(query), oracle_normalize(label));
    let (tq, tl) = (oracle_trigrams(&q), oracle_trigrams(&l));
    let j = tq.intersection(&tl).count() as f64 / tq.union(&tl).count() as f64;
    let (qc, lc): (Vec<char>, Vec<char>) = (q.chars().collect(), l.chars().collect());
    let longest = qc.len().max(lc.len());
    let e = if longest == 0 { 1.0 } else { 1.0 - oracle_levenshtein(&qc, &lc) as f64 / longest as f64 };
    (0.75 * j + 0.25 * e, e)
}

fn linear_scan(store: &EntityStore, query: &str, filter: Option<&EntityType>, k: usize) -> Vec<(String, String, f64)> {
    let mut rows = Vec::new();
    for rec in store.iter().filter(|r| filter.is_none_or(|t| *t == r.etype)) {
        let mut best: Option<(String, f64, f64)> = None;
        for label in std::iter::once(&rec.label).chain(&rec.aliases) {
            let (s, e) = oracle_score(query, label);
            if best.as_ref().is_none_or(|(_, bs, be)| (s, e) > (*bs, *be)) {
                best = Some((label.clone(), s, e));
            }
        }
        let (label, s, e) = best.expect("every record has a label");
        rows.push((rec.uri.clone(), label, s, e));
    }
    rows.sort_by(|a, b| b.2.total_cmp(&a.2).then(b.3.total_cmp(&a.3)).then(a.0.cmp(&b.0)));
    rows.into_iter().take(k).map(|(u, l, s, _)| (u, l, s)).collect()
}

fn retrieval_oracle() -> Outcome {
    let store = label_store(1000, 101);
    ensure(store.len() == 1000, || format!("store has {} entities", store.len()))?;
    let index = build_index(&store).map_err(|e| e.to_string())?;
    let filters = [None, Some(EntityType::Person), Some(EntityType::Publication)];
    let queries = perturbed_queries(&store, 200, 102);
    for (i, q) in queries.iter().enumerate() {
        let filter = filters[i % filters.len()].as_ref();
        let got: Vec<(String, String, f64)> = index
            .search(q, filter, 10)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|c| (c.uri, c.matched_label, c.lexical_score))
            .collect();
        let want = linear_scan(&store, q, filter, 10);
        ensure(got == want, || format!("query {q:?} ({filter:?}) differs from the linear scan"))?;
    }
    Ok(format!("{} queries, top-10 identical to the linear scan (uris, scores, order)", queries.len()))
}

// --------------------------------------------------------------- embeddings

fn vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn embedding_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    let s = |kind, h: &[f64], r: &[f64], t: &[f64]| score(kind, h, r, t).expect("matching dims");
    let mut worst_complex = 0.0f64;
    for n in 0..1000 {
        let dim = 2 * rng.random_range(1..=100);
        let (h, r, t) = (vector(&mut rng, dim), vector(&mut rng, dim), vector(&mut rng, dim));
        ensure(s(EmbeddingKind::DistMult, &h, &r, &t) == s(EmbeddingKind::DistMult, &t, &r, &h), || {
            format!("DistMult swap not exact at triple {n}")
        })?;

        let half = dim / 2;
        let widen = |v: &[f64]| -> Vec<f64> { v[..half].iter().copied().chain(std::iter::repeat_n(0.0, half)).collect() };
        let cx = s(EmbeddingKind::ComplEx, &widen(&h), &widen(&r), &widen(&t));
        let dm = s(EmbeddingKind::DistMult, &h[..half], &r[..half], &t[..half]);
        worst_complex = worst_complex.max((cx - dm).abs());

        let sum: Vec<f64> = h.iter().zip(&r).map(|(a, b)| a + b).collect();
        ensure(s(EmbeddingKind::TransE, &h, &r, &sum) == 0.0, || format!("TransE(h, r, h + r) != 0 at triple {n}"))?;
        let st = s(EmbeddingKind::TransE, &h, &r, &t);
        ensure(st < 0.0 || sum == t, || format!("TransE score {st} at triple {n} with h + r != t"))?;
    }
    ensure(worst_complex <= 1e-12, || format!("ComplEx vs DistMult differ by {worst_complex:e}"))?;
    Ok(format!("1000 triples: DistMult swap exact, ComplEx-real vs DistMult max diff {worst_complex:.1e}, TransE zero iff h + r = t"))
}

fn random_fv(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn gradient_checks() -> Outcome {
    let mut embed_worst = 0.0f64;
    for kind in EmbeddingKind::ALL {
        for seed in 0..100 {
            let point = LossPoint::random(kind, 32, 3000 + seed);
            embed_worst = embed_worst.max(grad_check(kind, &point, 1e-5).map_err(|e| e.to_string())?);
        }
    }

    // Full-size network: 40 random coordinates plus the whole output bias.
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    let (mut full_worst, mut checked, mut seed) = (0.0f64, 0, 0u64);
    while checked < 100 {
        seed += 1;
        let params = SiameseParams::init(seed);
        let (a, p, n) = (random_fv(&mut rng, FEATURE_DIM), random_fv(&mut rng, FEATURE_DIM), random_fv(&mut rng, FEATURE_DIM));
        if triplet_loss(&params, &a, &p, &n, 1.0).map_err(|e| e.to_string())? <= 0.1 {
            continue;
        }
        let total = params.flat().len();
        let coords: Vec<usize> = (0..40).map(|_| rng.random_range(0..total)).chain(total - 128..total).collect();
        full_worst = full_worst.max(triplet_grad_check(&params, (&a, &p, &n), 1.0, 1e-5, Some(&coords)).map_err(|e| e.to_string())?);
        checked += 1;
    }
    // Narrow network: every coordinate.
    let mut narrow_worst = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        let params = SiameseParams::init_with_dims(16, 12, 6, rng.random());
        let (a, p, n) = (random_fv(&mut rng, 16), random_fv(&mut rng, 16), random_fv(&mut rng, 16));
        if triplet_loss(&params, &a, &p, &n, 2.0).map_err(|e| e.to_string())? <= 0.1 {
            continue;
        }
        narrow_worst = narrow_worst.max(triplet_grad_check(&params, (&a, &p, &n), 2.0, 1e-5, None).map_err(|e| e.to_string())?);
        checked += 1;
    }
    let worst = embed_worst.max(full_worst).max(narrow_worst);
    ensure(worst < 1e-4, || format!("max relative error {worst:.3e}"))?;
    Ok(format!(
        "embedding loss 3x100 points {embed_worst:.1e}; triplet loss 100 points at 969->256->128 {full_worst:.1e}, 100 points all coordinates at 16->12->6 {narrow_worst:.1e}"
    ))
}

fn toy_link_prediction() -> Outcome {
    let triples = toy_kg(401);
    let entities: BTreeSet<&str> = triples.iter().flat_map(|t| [t.subject.as_str(), t.object_iri().unwrap_or("")]).collect();
    let relations: BTreeSet<&str> = triples.iter().map(|t| t.predicate.as_str()).collect();
    ensure((triples.len(), entities.len(), relations.len()) == (200, 50, 5), || {
        format!("toy graph has {} triples, {} entities, {} relations", triples.len(), entities.len(), relations.len())
    })?;
    let cfg = EmbedTrainConfig { epochs: 200, dim: 32, seed: 7, ..EmbedTrainConfig::default() };
    let out = train_embeddings(&triples, &cfg, EmbeddingKind::TransE).map_err(|e| e.to_string())?;
    let test: Vec<(String, String, String)> =
        triples.iter().map(|t| (t.subject.clone(), t.predicate.clone(), t.object_iri().unwrap_or("").to_string())).collect();
    let known: BTreeSet<_> = test.iter().cloned().collect();
    let hits = filtered_hits_at_k(&out.embeddings, &test, &known, 1);
    ensure(hits >= 0.9, || format!("filtered hits@1 = {hits:.3}"))?;
    Ok(format!("TransE dim 32, 200 epochs: filtered hits@1 = {hits:.3}"))
}

// ----------------------------------------------------------------- reranker

fn reranker_learnability() -> Outcome {
    let task = separable_task(20, 2000, 200, 10, 501);
    let cfg = RerankTrainConfig { epochs: 5, seed: 5, ..RerankTrainConfig::default() };
    let out = train_reranker(&task.train, &cfg).map_err(|e| e.to_string())?;
    let mut first = 0;
    for q in &task.held_out {
        let ranked = rank(&out.params, &q.question, &q.candidates).map_err(|e| e.to_string())?;
        first += usize::from(ranked[0].uri == q.gold);
    }
    let n = task.held_out.len();
    ensure(n == 200 && first as f64 >= 0.95 * n as f64, || format!("gold ranked first for {first}/{n}"))?;
    Ok(format!("gold ranked first for {first}/{n} held-out questions"))
}

fn feature_layout() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(801);
    let text = |rng: &mut ChaCha8Rng| TextEmbedding::new(random_fv(rng, TEXT_DIM)).expect("768 finite values");
    for i in 0..10_000 {
        let e = text(&mut rng);
        let q = compose_question(&e);
        let v = q.as_slice();
        ensure(v.len() == FEATURE_DIM, || format!("question vector {i} has {} dims", v.len()))?;
        ensure(v[..TEXT_DIM] == *e.as_slice(), || format!("question vector {i}: text slot altered"))?;
        ensure(v[TEXT_DIM..].iter().all(|&x| x == 0.0), || format!("question vector {i}: dims 768..969 not zero"))?;
    }
    for i in 0..1000 {
        let e = text(&mut rng);
        let kg = random_fv(&mut rng, KG_DIM);
        let sim: f64 = rng.random_range(0.0..=1.0);
        let fv = compose_entity(&e, &kg, sim).map_err(|err| err.to_string())?;
        let v = fv.as_slice();
        ensure(v.len() == 969 && v[..768] == *e.as_slice() && v[768..968] == kg[..] && v[968] == sim, || {
            format!("entity vector {i}: slots misplaced")
        })?;
    }
    ensure(KG_SLOT == (768..968) && SIMILARITY_SLOT == 968, || "slot constants moved".into())?;
    Ok("10000 question vectors zero on 768..969; 1000 entity vectors with text 0..768, KG 768..968, similarity 968".into())
}

// ------------------------------------------------------------------ linking

fn corpus_resources(corpus: &Corpus, epochs: usize) -> Result<Resources, String> {
    let store = extract_entities(&corpus.triples, &SchemaConfig::dblp()).map_err(|e| e.to_string())?.store;
    let index = build_index(&store).map_err(|e| e.to_string())?;
    let lexicon = LexiconDetector::new(&index);
    let mut res = Resources::new(index, Box::new(HashEncoder));
    res.add_detector(SpanModelId::new("lexicon"), Box::new(lexicon)).map_err(|e| e.to_string())?;
    let graph: Vec<_> = corpus.triples.iter().filter(|t| t.predicate != RDF_TYPE).cloned().collect();
    for (i, kind) in EmbeddingKind::ALL.into_iter().enumerate() {
        let cfg = EmbedTrainConfig { epochs, seed: i as u64, ..EmbedTrainConfig::default() };
        let embeddings = train_embeddings(&graph, &cfg, kind).map_err(|e| e.to_string())?.embeddings;
        res.add_reranker(Reranker { embeddings, params: SiameseParams::init(60 + i as u64) }).map_err(|e| e.to_string())?;
    }
    Ok(res)
}

fn duplicate_labels(span: &SpanLink) -> (bool, bool) {
    let labels: Vec<String> = span.ranked.iter().map(|r| oracle_normalize(&r.matched_label)).collect();
    let any = labels.iter().collect::<HashSet<_>>().len() != labels.len();
    let top = labels.first().is_some_and(|t| labels[1..].contains(t));
    (any, top)
}

fn mode_equivalence() -> Outcome {
    let clean = dblp_corpus(&CorpusSpec { persons: 300, publications: 400, questions: 500, seed: 601, ..CorpusSpec::default() });
    let res = corpus_resources(&clean, 1)?;
    let mut spans = 0;
    for (i, q) in clean.questions.iter().enumerate() {
        let kind = EmbeddingKind::ALL[i % 3];
        let req = |mode| LinkRequest::new(q.question.clone(), SpanModelId::new("lexicon"), kind, mode);
        let sorted = link(&req(LinkMode::LabelSorting), &res).map_err(|e| e.to_string())?;
        let cond = link(&req(LinkMode::ConditionalDisambiguation), &res).map_err(|e| e.to_string())?;
        for s in &sorted.spans {
            ensure(!duplicate_labels(s).0, || format!("request {i}: candidate labels repeat"))?;
        }
        ensure(sorted.spans == cond.spans && sorted.timing_ms == cond.timing_ms, || {
            format!("request {i} ({}): conditional differs from label sorting", q.question)
        })?;
        spans += sorted.spans.len();
    }

    let dup = dblp_corpus(&CorpusSpec {
        persons: 200,
        publications: 150,
        questions: 500,
        homonyms: 200,
        seed: 602,
        ..CorpusSpec::default()
    });
    let res = corpus_resources(&dup, 1)?;
    let (mut triggered, mut permuted) = (0, 0);
    for (i, q) in dup.questions.iter().enumerate() {
        let kind = EmbeddingKind::ALL[i % 3];
        let req = |mode| LinkRequest::new(q.question.clone(), SpanModelId::new("lexicon"), kind, mode);
        let sorted = link(&req(LinkMode::LabelSorting), &res).map_err(|e| e.to_string())?;
        let cond = link(&req(LinkMode::ConditionalDisambiguation), &res).map_err(|e| e.to_string())?;
        let hard = link(&req(LinkMode::HardDisambiguation), &res).map_err(|e| e.to_string())?;
        for ((s, c), h) in sorted.spans.iter().zip(&cond.spans).zip(&hard.spans) {
            let (_, top_dup) = duplicate_labels(s);
            ensure(c.disambiguation_ran == top_dup, || format!("request {i}: trigger {} but top duplicate {top_dup}", c.disambiguation_ran))?;
            triggered += usize::from(top_dup);
            let mut a: Vec<&str> = s.ranked.iter().map(|r| r.uri.as_str()).collect();
            let mut b: Vec<&str> = h.ranked.iter().map(|r| r.uri.as_str()).collect();
            a.sort_unstable();
            b.sort_unstable();
            ensure(h.disambiguation_ran && a == b, || format!("request {i}: hard ranking is not a permutation of the candidates"))?;
            permuted += 1;
        }
    }
    ensure(triggered > 0, || "no span hit an injected duplicate".into())?;
    Ok(format!(
        "500 clean requests ({spans} spans) identical; 500 requests with duplicates: {triggered} triggered spans, {permuted} hard rankings are permutations"
    ))
}

fn end_to_end_eval(dir: &Path) -> Outcome {
    let spec = CorpusSpec { persons: 300, publications: 400, questions: 200, training_examples: 200, seed: 701, ..CorpusSpec::default() };
    let corpus = dblp_corpus(&spec);
    let dataset_path = dir.join("dataset.json");
    std::fs::write(&dataset_path, dataset_json(&corpus.questions)).map_err(|e| e.to_string())?;
    let nt: String = corpus.triples.iter().map(|t| format_triple(t) + "\n").collect();
    std::fs::write(dir.join("triples.nt"), nt).map_err(|e| e.to_string())?;

    let doc = dblplink::io::read_ntriples(&dir.join("triples.nt"), Default::default()).map_err(|e| e.to_string())?;
    let store = extract_entities(&doc.triples, &SchemaConfig::dblp()).map_err(|e| e.to_string())?.store;
    let index = build_index(&store).map_err(|e| e.to_string())?;
    save_index(&store, &index, &dir.join("index.bin")).map_err(|e| e.to_string())?;
    let graph: Vec<_> = doc.triples.iter().filter(|t| t.predicate != RDF_TYPE).cloned().collect();
    let mut toml = String::from("index = \"index.bin\"\n\n[[detectors]]\nid = \"lexicon\"\nbackend = \"lexicon\"\n\n[[detectors]]\nid = \"t5-small-remote\"\nbackend = \"remote\"\nendpoint = \"SPAN_URL\"\nmodel = \"t5-small\"\n");
    for (i, kind) in EmbeddingKind::ALL.into_iter().enumerate() {
        let emb = train_embeddings(&graph, &EmbedTrainConfig { epochs: 3, seed: i as u64, ..EmbedTrainConfig::default() }, kind)
            .map_err(|e| e.to_string())?
            .embeddings;
        let cfg = RerankTrainConfig { epochs: 2, seed: i as u64, ..RerankTrainConfig::default() };
        let sources = TripletSources { store: &store, index: &index, embeddings: Some(&emb), encoder: &HashEncoder };
        let triplets = build_triplets(&corpus.training, &sources, &cfg).map_err(|e| e.to_string())?;
        let params = train_reranker(&triplets, &cfg).map_err(|e| e.to_string())?.params;
        save_embeddings(&emb, &dir.join(format!("{kind}.emb"))).map_err(|e| e.to_string())?;
        save_params(&params, &dir.join(format!("{kind}.params"))).map_err(|e| e.to_string())?;
        toml.push_str(&format!("\n[[embeddings]]\nkind = \"{kind}\"\nvectors = \"{kind}.emb\"\nparams = \"{kind}.params\"\n"));
    }

    // The second detector is a remote service answering with lexicon spans.
    let stub = spawn_local(span_router(SpanStubMode::Lexicon(Arc::new(LexiconDetector::new(&index))), Duration::ZERO))
        .map_err(|e| e.to_string())?;
    std::fs::write(dir.join("svc.toml"), toml.replace("SPAN_URL", &stub.url())).map_err(|e| e.to_string())?;
    let cfg = ServiceConfig::load(&dir.join("svc.toml")).map_err(|e| e.to_string())?;
    let resources = cfg.load_resources().map_err(|e| e.to_string())?;
    let questions = load_dataset(&dataset_path, &cfg.dataset).map_err(|e| e.to_string())?;
    ensure(questions == corpus.questions, || "dataset file did not round-trip".into())?;

    let settings = EvalSettings { k: 10, policy: PredictionPolicy::TopPerSpan };
    let report = evaluate(&questions, &resources.available_combinations(), &LinkMode::ALL, &resources, settings)
        .map_err(|e| e.to_string())?;
    let mut shape: BTreeMap<(String, LinkMode), Vec<Option<EmbeddingKind>>> = BTreeMap::new();
    for row in &report.rows {
        shape.entry((row.detector.to_string(), row.mode)).or_default().push(row.embedding);
    }
    let all: Vec<Option<EmbeddingKind>> = EmbeddingKind::ALL.into_iter().map(Some).collect();
    for d in ["lexicon", "t5-small-remote"] {
        ensure(shape.get(&(d.into(), LinkMode::LabelSorting)) == Some(&vec![None]), || format!("{d}: label-sorting rows {shape:?}"))?;
        for m in [LinkMode::ConditionalDisambiguation, LinkMode::HardDisambiguation] {
            ensure(shape.get(&(d.into(), m)) == Some(&all), || format!("{d}: {m} rows {:?}", shape.get(&(d.into(), m))))?;
        }
    }
    ensure(report.rows.len() == 14 && report.dataset_size == 200, || format!("{} rows over {} questions", report.rows.len(), report.dataset_size))?;
    let lexicon = report
        .rows
        .iter()
        .find(|r| r.detector.as_str() == "lexicon" && r.mode == LinkMode::LabelSorting)
        .ok_or("no lexicon label-sorting row")?;
    let f1 = lexicon.macro_avg.f1;
    ensure(f1 >= 0.95, || format!("lexicon + label sorting macro-F1 = {f1:.4}"))?;
    let errors: usize = report.rows.iter().map(|r| r.errors).sum();
    ensure(errors == 0, || format!("{errors} questions recorded errors"))?;
    Ok(format!("200 questions, 14 rows (2 detectors x label-sorting + 2 x 3 conditional + 2 x 3 hard); lexicon label-sorting macro-F1 = {f1:.4}"))
}

fn cli_determinism(dir: &Path) -> Outcome {
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let d = dir.join(run);
        std::fs::create_dir_all(&d).map_err(|e| e.to_string())?;
        let cfg = common::build_pipeline(&d, 901, 120);
        let r = common::cli(&[
            "eval", "--config", cfg.to_str().unwrap(), "--dataset", d.join("dataset.json").to_str().unwrap(), "--modes", "all",
            "--out", d.join("report.csv").to_str().unwrap(),
        ]);
        ensure(r.code == 0, || format!("eval exited {}: {}", r.code, r.stderr))?;
        std::fs::write(d.join("report.txt"), &r.stdout).map_err(|e| e.to_string())?;
        let mut files = BTreeMap::new();
        for entry in std::fs::read_dir(&d).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        outputs.push(files);
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    ensure(a.keys().eq(b.keys()), || "runs produced different file sets".into())?;
    for (name, bytes) in a {
        ensure(&b[name] == bytes, || format!("{name} differs between runs"))?;
    }
    let expected = ["index.bin", "store.bin", "transe.emb", "transe.params", "report.csv", "report.txt"];
    ensure(expected.iter().all(|f| a.contains_key(*f)), || format!("missing artifacts in {:?}", a.keys()))?;
    Ok(format!("two seeded runs, {} files byte-identical (store, index, 3 embeddings, 3 re-rankers, report)", a.len()))
}

fn main() {
    let scratch = tempfile::tempdir().expect("temp dir");
    let e2e = scratch.path().join("e2e");
    let det = scratch.path().join("determinism");
    std::fs::create_dir_all(&e2e).expect("temp dir");
    type Check<'a> = (&'a str, Option<u64>, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        ("retrieval oracle", Some(10), Box::new(retrieval_oracle)),
        ("embedding identities", None, Box::new(embedding_identities)),
        ("gradient checks", Some(30), Box::new(gradient_checks)),
        ("toy link prediction", Some(60), Box::new(toy_link_prediction)),
        ("reranker learnability", Some(60), Box::new(reranker_learnability)),
        ("mode equivalence", None, Box::new(mode_equivalence)),
        ("end-to-end evaluation", Some(120), Box::new(|| end_to_end_eval(&e2e))),
        ("feature layout", None, Box::new(feature_layout)),
        ("pipeline determinism", None, Box::new(|| cli_determinism(&det))),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in checks.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let secs = started.elapsed().as_secs_f64();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if secs >= *l as f64 => Err(format!("took {secs:.1}s, limit {l}s")),
            (o, _) => o,
        };
        let budget = limit.map_or(String::new(), |l| format!(", limit {l}s"));
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.1}s{budget})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why} ({secs:.1}s{budget})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
