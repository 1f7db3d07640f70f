//! Seeded synthetic data for tests, demos and benchmarks: a toy link
//! prediction graph, label stores, perturbed queries, a separable re-ranking
//! task and a small DBLP-shaped corpus with questions.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::TEXT_DIM;
use crate::eval::GoldQuestion;
use crate::index::Candidate;
use crate::kg::{EntityRecord, EntityStore, EntityType, Literal, Object, Triple, RDF_TYPE};
use crate::rerank::{FeatureVector, Triplet, TrainingExample, FEATURE_DIM, KG_SLOT, SIMILARITY_SLOT};

const FIRST: [&str; 48] = [
    "Ada", "Alan", "Anna", "Ashish", "Barbara", "Bernd", "Carla", "Chen", "Dana", "David", "Elena", "Emil", "Fatima",
    "Felix", "Grace", "Hannah", "Hiro", "Ines", "Ivan", "Jakob", "Jana", "Jens", "Julia", "Kai", "Karin", "Lars",
    "Lena", "Luis", "Maria", "Mei", "Nadia", "Niklas", "Olga", "Omar", "Paula", "Pedro", "Priya", "Ricardo", "Rosa",
    "Sara", "Stefan", "Tariq", "Tomas", "Ulrike", "Vera", "Wei", "Yusuf", "Zoe",
];

const LAST: [&str; 48] = [
    "Abbott", "Banerjee", "Becker", "Brandt", "Castro", "Dietrich", "Eriksson", "Fischer", "Garcia", "Gupta", "Hansen",
    "Hoffmann", "Ito", "Jansen", "Kaur", "Keller", "Kowalski", "Krause", "Larsen", "Lehmann", "Li", "Lopez",
    "Meyer", "Moreau", "Nakamura", "Novak", "Okafor", "Olsen", "Petrov", "Quinn", "Richter", "Rossi", "Sato",
    "Schmidt", "Schulz", "Silva", "Singh", "Smith", "Suzuki", "Tanaka", "Usbeck", "Vaswani", "Wagner", "Wang",
    "Weber", "Xu", "Yilmaz", "Zhang",
];

const TITLE_WORDS: [&str; 40] = [
    "Adaptive", "Attention", "Bayesian", "Causal", "Contrastive", "Deep", "Dense", "Efficient", "Embeddings",
    "Entity", "Federated", "Few-Shot", "Graph", "Hierarchical", "Inference", "Knowledge", "Language", "Latent",
    "Learning", "Linking", "Models", "Multilingual", "Networks", "Neural", "Optimization", "Parsing", "Probabilistic",
    "Question", "Answering", "Reasoning", "Retrieval", "Robust", "Scalable", "Scholarly", "Semantic", "Sparse",
    "Structured", "Transformers", "Unsupervised", "Vectors",
];

const STREAMS: [(&str, &str); 6] = [
    ("conf/nips", "NeurIPS"),
    ("conf/acl", "ACL"),
    ("conf/semweb", "ISWC"),
    ("conf/esws", "ESWC"),
    ("journals/jmlr", "Journal of Machine Learning Research"),
    ("journals/tkde", "IEEE Transactions on Knowledge and Data Engineering"),
];

pub const DBLP_SCHEMA: &str = "https://dblp.org/rdf/schema#";
const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";

fn iri(s: impl Into<String>) -> Object {
    Object::Iri(s.into())
}

fn lit(s: impl Into<String>) -> Object {
    Object::Literal(Literal::plain(s))
}

fn triple(s: &str, p: &str, o: Object) -> Triple {
    Triple { subject: s.to_string(), predicate: p.to_string(), object: o }
}

fn person_name(rng: &mut ChaCha8Rng) -> String {
    format!("{} {}", FIRST.choose(rng).unwrap(), LAST.choose(rng).unwrap())
}

fn title(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(3..=6);
    let words: Vec<&str> = TITLE_WORDS.choose_multiple(rng, n).copied().collect();
    words.join(" ")
}

/// Toy link-prediction graph: 40 papers, each with one of two values for
/// five attribute relations (200 triples, 50 entities, 5 relations).
pub fn toy_kg(seed: u64) -> Vec<Triple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(200);
    for p in 0..40 {
        for k in 0..5 {
            let v = rng.random_range(0..2);
            out.push(triple(
                &format!("http://toy.example/paper{p}"),
                &format!("http://toy.example/attr{k}"),
                iri(format!("http://toy.example/value{k}_{v}")),
            ));
        }
    }
    out
}

/// Store of `n` entities: about 60% persons (a fifth with an initialed
/// alias), 35% publications and 5% venues. Labels may repeat across uris.
pub fn label_store(n: usize, seed: u64) -> EntityStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n).map(|i| {
        let roll = rng.random_range(0..100);
        if roll < 60 {
            let label = person_name(&mut rng);
            let aliases = if rng.random_range(0..5) == 0 {
                let (first, last) = label.split_once(' ').unwrap();
                alloc::vec![format!("{}. {last}", &first[..1])]
            } else {
                Vec::new()
            };
            EntityRecord { uri: format!("https://dblp.org/pid/{:02}/{i}", i % 97), label, aliases, etype: EntityType::Person }
        } else if roll < 95 {
            let label = title(&mut rng);
            EntityRecord { uri: format!("https://dblp.org/rec/conf/synth/{i}"), label, aliases: Vec::new(), etype: EntityType::Publication }
        } else {
            let (key, label) = STREAMS.choose(&mut rng).unwrap();
            EntityRecord {
                uri: format!("https://dblp.org/streams/{key}/{i}"),
                label: label.to_string(),
                aliases: Vec::new(),
                etype: EntityType::Other("Stream".into()),
            }
        }
    });
    EntityStore::from_records(records.collect::<Vec<_>>()).expect("generated records are valid")
}

/// Queries derived from store labels by dropping, swapping or inserting a
/// character, truncating, recasing or keeping one word; a few are unrelated.
pub fn perturbed_queries(store: &EntityStore, n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<&str> = store.iter().map(|r| r.label.as_str()).collect();
    (0..n)
        .map(|_| {
            let mut chars: Vec<char> = labels.choose(&mut rng).unwrap().chars().collect();
            let at = rng.random_range(0..chars.len());
            match rng.random_range(0..8) {
                0 => {}
                1 if chars.len() > 3 => {
                    chars.remove(at);
                }
                2 if at + 1 < chars.len() => chars.swap(at, at + 1),
                3 => chars.insert(at, (b'a' + rng.random_range(0..26u8)) as char),
                4 if chars.len() > 6 => chars.truncate(chars.len() * 2 / 3),
                5 => chars = chars.iter().flat_map(|c| c.to_uppercase()).collect(),
                6 => {
                    let s: String = chars.iter().collect();
                    let words: Vec<&str> = s.split(' ').collect();
                    chars = words.choose(&mut rng).unwrap().chars().collect();
                }
                _ => chars = (0..rng.random_range(3..12)).map(|_| (b'a' + rng.random_range(0..26u8)) as char).collect(),
            }
            let q: String = chars.into_iter().collect();
            if q.trim().is_empty() { "x".to_string() } else { q }
        })
        .collect()
}

/// A question of the separable re-ranking task and its candidate features.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOutQuestion {
    pub question: FeatureVector,
    pub candidates: Vec<(Candidate, FeatureVector)>,
    pub gold: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTask {
    pub train: Vec<Triplet>,
    pub held_out: Vec<HeldOutQuestion>,
}

/// Re-ranking task where every question and its gold entity share one of
/// `topics` random text directions, negatives come from other topics, and
/// the KG slot carries large topic-independent noise.
pub fn separable_task(topics: usize, train: usize, held_out: usize, candidates: usize, seed: u64) -> SeparableTask {
    assert!(topics >= 2 && candidates >= 1 && candidates <= topics);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let directions: Vec<Vec<f64>> = (0..topics).map(|_| unit(&mut rng, TEXT_DIM)).collect();
    let text = |rng: &mut ChaCha8Rng, topic: usize| -> Vec<f64> {
        let noise = unit(rng, TEXT_DIM);
        let mut v: Vec<f64> = directions[topic].iter().zip(&noise).map(|(d, n)| d + 0.6 * n).collect();
        crate::linalg::normalize_in_place(&mut v);
        v
    };
    let question = |rng: &mut ChaCha8Rng, topic: usize| -> FeatureVector {
        let mut v = text(rng, topic);
        v.resize(FEATURE_DIM, 0.0);
        FeatureVector::from_values(v).unwrap()
    };
    let entity = |rng: &mut ChaCha8Rng, topic: usize| -> FeatureVector {
        let mut v = text(rng, topic);
        v.resize(FEATURE_DIM, 0.0);
        for x in &mut v[KG_SLOT] {
            *x = rng.random_range(-0.25..0.25);
        }
        v[SIMILARITY_SLOT] = rng.random_range(0.0..1.0);
        FeatureVector::from_values(v).unwrap()
    };
    let other = |rng: &mut ChaCha8Rng, topic: usize| -> usize {
        let t = rng.random_range(0..topics - 1);
        if t >= topic { t + 1 } else { t }
    };
    let train = (0..train)
        .map(|_| {
            let t = rng.random_range(0..topics);
            let n = other(&mut rng, t);
            Triplet { anchor: question(&mut rng, t), positive: entity(&mut rng, t), negative: entity(&mut rng, n) }
        })
        .collect();
    let held_out = (0..held_out)
        .map(|q| {
            let t = rng.random_range(0..topics);
            let mut topics_used: Vec<usize> = (0..topics).filter(|&x| x != t).collect();
            topics_used.shuffle(&mut rng);
            topics_used.truncate(candidates - 1);
            topics_used.push(t);
            topics_used.shuffle(&mut rng);
            let gold = format!("https://synth.example/q{q}/topic{t}");
            let cands = topics_used
                .iter()
                .map(|&c| {
                    let uri = format!("https://synth.example/q{q}/topic{c}");
                    let cand = Candidate { uri, matched_label: format!("topic {c}"), etype: EntityType::Person, lexical_score: 1.0 };
                    (cand, entity(&mut rng, c))
                })
                .collect();
            HeldOutQuestion { question: question(&mut rng, t), candidates: cands, gold }
        })
        .collect();
    SeparableTask { train, held_out }
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    crate::linalg::normalize_in_place(&mut v);
    v
}

/// Shape of a generated corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusSpec {
    pub persons: usize,
    pub publications: usize,
    pub questions: usize,
    pub training_examples: usize,
    /// Persons that get a namesake with a different uri.
    pub homonyms: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self { persons: 300, publications: 400, questions: 200, training_examples: 300, homonyms: 0, seed: 0 }
    }
}

/// DBLP-shaped triples plus questions whose gold entities are named
/// verbatim (person names) or quoted (titles).
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub triples: Vec<Triple>,
    pub questions: Vec<GoldQuestion>,
    pub training: Vec<TrainingExample>,
}

struct Paper {
    uri: String,
    title: String,
    authors: Vec<usize>,
}

/// Generate a corpus. Person names and titles are unique except for the
/// requested homonyms.
pub fn dblp_corpus(spec: &CorpusSpec) -> Corpus {
    assert!(spec.persons >= 2 && spec.publications >= 1 && spec.homonyms <= spec.persons);
    assert!(spec.persons <= FIRST.len() * LAST.len());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let schema = |local: &str| format!("{DBLP_SCHEMA}{local}");
    let mut triples = Vec::new();

    let mut names = BTreeSet::new();
    let mut persons: Vec<(String, String)> = Vec::new();
    while persons.len() < spec.persons {
        let name = person_name(&mut rng);
        if names.insert(name.clone()) {
            let i = persons.len();
            persons.push((format!("https://dblp.org/pid/{:02}/{i}", i % 89), name));
        }
    }
    for h in 0..spec.homonyms {
        let name = persons[h].1.clone();
        let i = persons.len();
        persons.push((format!("https://dblp.org/pid/{:02}/{i}-h", i % 89), name));
    }
    for (uri, name) in &persons {
        triples.push(triple(uri, RDF_TYPE, iri(schema("Person"))));
        triples.push(triple(uri, &schema("primaryCreatorName"), lit(name.clone())));
    }

    for (key, label) in STREAMS {
        let uri = format!("https://dblp.org/streams/{key}");
        triples.push(triple(&uri, RDF_TYPE, iri(schema("Stream"))));
        triples.push(triple(&uri, RDFS_LABEL, lit(label)));
    }

    let mut titles = BTreeSet::new();
    let mut papers: Vec<Paper> = Vec::new();
    while papers.len() < spec.publications {
        let t = title(&mut rng);
        if !titles.insert(t.clone()) {
            continue;
        }
        let (stream, _) = STREAMS.choose(&mut rng).unwrap();
        let year = rng.random_range(2000..2024);
        let uri = format!("https://dblp.org/rec/{stream}/P{}-{year}", papers.len());
        let n_authors = rng.random_range(1..=3);
        let authors: Vec<usize> = rand::seq::index::sample(&mut rng, persons.len(), n_authors).into_vec();
        triples.push(triple(&uri, RDF_TYPE, iri(schema("Publication"))));
        triples.push(triple(&uri, &schema("title"), lit(t.clone())));
        for &a in &authors {
            triples.push(triple(&uri, &schema("authoredBy"), iri(persons[a].0.clone())));
        }
        triples.push(triple(&uri, &schema("publishedInStream"), iri(format!("https://dblp.org/streams/{stream}"))));
        triples.push(triple(
            &uri,
            &schema("yearOfPublication"),
            Object::Literal(Literal {
                value: year.to_string(),
                language: None,
                datatype: Some("http://www.w3.org/2001/XMLSchema#gYear".into()),
            }),
        ));
        papers.push(Paper { uri, title: t, authors });
    }

    let mut questions = Vec::with_capacity(spec.questions);
    for q in 0..spec.questions {
        let paper = papers.choose(&mut rng).unwrap();
        let a = &persons[paper.authors[0]];
        let (text, gold): (String, Vec<&str>) = match q % 4 {
            0 => (format!("Who were the co-authors of {} in the paper '{}'?", a.1, paper.title), alloc::vec![&a.0, &paper.uri]),
            1 => (format!("What are the papers written by {}?", a.1), alloc::vec![&a.0]),
            2 => (format!("In which venue was \"{}\" published?", paper.title), alloc::vec![&paper.uri]),
            _ => match paper.authors.get(1) {
                Some(&b) => {
                    let b = &persons[b];
                    (format!("Did {} and {} write '{}' together?", a.1, b.1, paper.title), alloc::vec![&a.0, &b.0, &paper.uri])
                }
                None => (format!("When was '{}' by {} published?", paper.title, a.1), alloc::vec![&paper.uri, &a.0]),
            },
        };
        questions.push(GoldQuestion {
            id: format!("Q{q:04}"),
            question: text,
            gold_entities: gold.into_iter().map(String::from).collect(),
        });
    }

    let training = (0..spec.training_examples)
        .map(|i| {
            let paper = papers.choose(&mut rng).unwrap();
            let a = &persons[paper.authors[0]];
            if i % 2 == 0 {
                TrainingExample { question: format!("Which papers did {} publish?", a.1), positive: a.0.clone(), negative: None }
            } else {
                TrainingExample {
                    question: format!("Who wrote the paper '{}'?", paper.title),
                    positive: paper.uri.clone(),
                    negative: None,
                }
            }
        })
        .collect();

    Corpus { triples, questions, training }
}
