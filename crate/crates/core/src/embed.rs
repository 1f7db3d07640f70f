//! Knowledge-graph embeddings: TransE, DistMult and ComplEx.
//!
//! Scores (higher is more plausible):
//!
//! | kind     | score                         |
//! |----------|-------------------------------|
//! | TransE   | `-‖h + r - t‖₂`               |
//! | DistMult | `Σ hᵢ rᵢ tᵢ`                  |
//! | ComplEx  | `Re(Σ hᵢ rᵢ conj(tᵢ))`        |
//!
//! ComplEx vectors of length `dim` hold `dim / 2` complex numbers: real parts
//! first, then imaginary parts.
//!
//! TransE trains with the margin ranking loss
//! `max(0, m - s(h, r, t) + s(h', r, t'))` and unit-norm entity vectors;
//! DistMult and ComplEx train with the logistic loss `log(1 + exp(-y s))`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{CodecError, Decoder, Encoder};
use crate::kg::Triple;
use crate::linalg;

pub const EMBEDDING_MAGIC: [u8; 4] = *b"DLEM";

/// Default embedding width, the size of the KG slot in the feature layout.
pub const DEFAULT_DIM: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmbeddingKind {
    TransE,
    DistMult,
    ComplEx,
}

impl EmbeddingKind {
    /// Display order used by configuration listings and reports.
    pub const ALL: [EmbeddingKind; 3] = [EmbeddingKind::TransE, EmbeddingKind::ComplEx, EmbeddingKind::DistMult];

    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::TransE => "transe",
            EmbeddingKind::DistMult => "distmult",
            EmbeddingKind::ComplEx => "complex",
        }
    }

    fn tag(self) -> u8 {
        match self {
            EmbeddingKind::TransE => 0,
            EmbeddingKind::DistMult => 1,
            EmbeddingKind::ComplEx => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(EmbeddingKind::TransE),
            1 => Some(EmbeddingKind::DistMult),
            2 => Some(EmbeddingKind::ComplEx),
            _ => None,
        }
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown embedding kind {0:?}")]
pub struct UnknownKind(pub String);

impl FromStr for EmbeddingKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "transe" => Ok(EmbeddingKind::TransE),
            "distmult" => Ok(EmbeddingKind::DistMult),
            "complex" => Ok(EmbeddingKind::ComplEx),
            _ => Err(UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ComplEx needs an even dimension, got {0}")]
    OddComplexDim(usize),
    #[error("no entity-to-entity triples to train on")]
    NoTrainableTriples,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("expected {expected} embeddings, found {found}")]
    KindMismatch { expected: EmbeddingKind, found: EmbeddingKind },
    #[error("non-finite component in vector for {0}")]
    NonFinite(String),
    #[error("{point} loss point cannot be checked against {kind}")]
    PointKindMismatch { kind: EmbeddingKind, point: &'static str },
    #[error("malformed TSV at line {line}: {reason}")]
    Tsv { line: usize, reason: String },
}

/// Entity and relation vectors of one embedding kind.
#[derive(Debug, Clone, PartialEq)]
pub struct KgEmbeddingSet {
    kind: EmbeddingKind,
    dim: usize,
    entities: BTreeMap<String, Vec<f64>>,
    relations: BTreeMap<String, Vec<f64>>,
}

impl KgEmbeddingSet {
    pub fn new(
        kind: EmbeddingKind,
        dim: usize,
        entities: BTreeMap<String, Vec<f64>>,
        relations: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::DimensionMismatch { expected: 1, found: 0 });
        }
        if kind == EmbeddingKind::ComplEx && dim % 2 != 0 {
            return Err(EmbedError::OddComplexDim(dim));
        }
        for (key, v) in entities.iter().chain(&relations) {
            if v.len() != dim {
                return Err(EmbedError::DimensionMismatch { expected: dim, found: v.len() });
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(EmbedError::NonFinite(key.clone()));
            }
        }
        Ok(Self { kind, dim, entities, relations })
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entity(&self, uri: &str) -> Option<&[f64]> {
        self.entities.get(uri).map(Vec::as_slice)
    }

    pub fn relation(&self, iri: &str) -> Option<&[f64]> {
        self.relations.get(iri).map(Vec::as_slice)
    }

    pub fn entities(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.entities
    }

    pub fn relations(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.relations
    }

    /// Score a triple by uri; `None` when any element has no vector.
    pub fn score_triple(&self, head: &str, relation: &str, tail: &str) -> Option<f64> {
        let (h, r, t) = (self.entity(head)?, self.relation(relation)?, self.entity(tail)?);
        Some(score_unchecked(self.kind, h, r, t))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new(EMBEDDING_MAGIC);
        enc.put_u8(self.kind.tag());
        enc.put_u32(self.dim as u32);
        enc.put_len(self.entities.len());
        enc.put_len(self.relations.len());
        for key in self.entities.keys().chain(self.relations.keys()) {
            enc.put_str(key);
        }
        for v in self.entities.values().chain(self.relations.values()) {
            enc.put_f64s(v);
        }
        enc.finish()
    }

    /// Decode an embedding file, optionally insisting on a kind.
    pub fn from_bytes(bytes: &[u8], expected: Option<EmbeddingKind>) -> Result<Self, LoadError> {
        let mut dec = Decoder::new(bytes, EMBEDDING_MAGIC)?;
        let tag = dec.u8()?;
        let kind = EmbeddingKind::from_tag(tag)
            .ok_or_else(|| CodecError::Invalid(format!("unknown embedding kind tag {tag}")))?;
        if let Some(expected) = expected {
            if expected != kind {
                return Err(EmbedError::KindMismatch { expected, found: kind }.into());
            }
        }
        let dim = dec.u32()? as usize;
        let n_entities = dec.len()?;
        let n_relations = dec.len()?;
        let mut keys = Vec::with_capacity((n_entities + n_relations).min(1 << 20));
        for _ in 0..n_entities.saturating_add(n_relations) {
            keys.push(dec.string()?);
        }
        let mut entities = BTreeMap::new();
        let mut relations = BTreeMap::new();
        for (i, key) in keys.into_iter().enumerate() {
            let v = dec.f64s(dim)?;
            let target = if i < n_entities { &mut entities } else { &mut relations };
            if target.insert(key, v).is_some() {
                return Err(CodecError::Invalid("duplicate key in embedding table".to_string()).into());
            }
        }
        dec.finish()?;
        Ok(Self::new(kind, dim, entities, relations)?)
    }

    /// Tab-separated export: `uri \t v1 \t ... \t vdim`. Relation rows follow
    /// a `# relations` marker line.
    pub fn to_tsv(&self) -> String {
        fn push_rows(out: &mut String, rows: &BTreeMap<String, Vec<f64>>) {
            for (key, v) in rows {
                out.push_str(key);
                for x in v {
                    out.push('\t');
                    out.push_str(&format!("{x:?}"));
                }
                out.push('\n');
            }
        }
        let mut out = format!("# kind={} dim={}\n", self.kind, self.dim);
        push_rows(&mut out, &self.entities);
        out.push_str("# relations\n");
        push_rows(&mut out, &self.relations);
        out
    }

    /// Inverse of [`to_tsv`](Self::to_tsv). Other `#` lines are ignored; the
    /// dimension is taken from the first row.
    pub fn from_tsv(text: &str, kind: EmbeddingKind) -> Result<Self, EmbedError> {
        let mut entities = BTreeMap::new();
        let mut relations = BTreeMap::new();
        let mut in_relations = false;
        let mut dim = None;
        for (i, line) in text.lines().enumerate() {
            let err = |reason: String| EmbedError::Tsv { line: i + 1, reason };
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                in_relations |= comment.trim() == "relations";
                continue;
            }
            let mut fields = line.split('\t');
            let key = fields.next().unwrap_or_default().to_string();
            if key.is_empty() {
                return Err(err("empty key".to_string()));
            }
            let v = fields
                .map(|f| f.trim().parse::<f64>().map_err(|_| err(format!("bad number {f:?}"))))
                .collect::<Result<Vec<f64>, _>>()?;
            let expected = *dim.get_or_insert(v.len());
            if v.len() != expected {
                return Err(err(format!("expected {expected} values, found {}", v.len())));
            }
            let target = if in_relations { &mut relations } else { &mut entities };
            if target.insert(key, v).is_some() {
                return Err(err("duplicate key".to_string()));
            }
        }
        Self::new(kind, dim.unwrap_or(DEFAULT_DIM), entities, relations)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Format(#[from] CodecError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Plausibility score of `(h, r, t)`.
pub fn score(kind: EmbeddingKind, h: &[f64], r: &[f64], t: &[f64]) -> Result<f64, EmbedError> {
    check_dims(kind, h, r, t)?;
    Ok(score_unchecked(kind, h, r, t))
}

fn check_dims(kind: EmbeddingKind, h: &[f64], r: &[f64], t: &[f64]) -> Result<(), EmbedError> {
    for v in [r, t] {
        if v.len() != h.len() {
            return Err(EmbedError::DimensionMismatch { expected: h.len(), found: v.len() });
        }
    }
    if kind == EmbeddingKind::ComplEx && h.len() % 2 != 0 {
        return Err(EmbedError::OddComplexDim(h.len()));
    }
    Ok(())
}

fn score_unchecked(kind: EmbeddingKind, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    match kind {
        EmbeddingKind::TransE => {
            let sq: f64 = h.iter().zip(r).zip(t).map(|((h, r), t)| (h + r - t) * (h + r - t)).sum();
            -libm::sqrt(sq)
        }
        // r * (h * t) keeps head/tail swaps bit-exact
        EmbeddingKind::DistMult => h.iter().zip(r).zip(t).map(|((h, r), t)| r * (h * t)).sum(),
        EmbeddingKind::ComplEx => {
            let n = h.len() / 2;
            (0..n)
                .map(|i| {
                    let (a, b) = (h[i], h[n + i]);
                    let (c, d) = (r[i], r[n + i]);
                    let (e, f) = (t[i], t[n + i]);
                    (a * c - b * d) * e + (a * d + b * c) * f
                })
                .sum()
        }
    }
}

/// Add `scale * ∂score/∂(h, r, t)` into the gradient buffers.
fn accumulate_score_grad(
    kind: EmbeddingKind,
    (h, r, t): (&[f64], &[f64], &[f64]),
    (gh, gr, gt): (&mut [f64], &mut [f64], &mut [f64]),
    scale: f64,
) {
    match kind {
        EmbeddingKind::TransE => {
            let diff: Vec<f64> = h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t).collect();
            let n = linalg::norm(&diff);
            if n == 0.0 {
                return;
            }
            for i in 0..diff.len() {
                let g = scale * diff[i] / n;
                gh[i] -= g;
                gr[i] -= g;
                gt[i] += g;
            }
        }
        EmbeddingKind::DistMult => {
            for i in 0..h.len() {
                gh[i] += scale * r[i] * t[i];
                gr[i] += scale * h[i] * t[i];
                gt[i] += scale * h[i] * r[i];
            }
        }
        EmbeddingKind::ComplEx => {
            let n = h.len() / 2;
            for i in 0..n {
                let (a, b) = (h[i], h[n + i]);
                let (c, d) = (r[i], r[n + i]);
                let (e, f) = (t[i], t[n + i]);
                gh[i] += scale * (c * e + d * f);
                gh[n + i] += scale * (c * f - d * e);
                gr[i] += scale * (a * e + b * f);
                gr[n + i] += scale * (a * f - b * e);
                gt[i] += scale * (a * c - b * d);
                gt[n + i] += scale * (a * d + b * c);
            }
        }
    }
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Parameters of one margin-ranking term: a positive triple and its
/// corruption sharing the relation.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginPoint {
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
    pub corrupt_head: Vec<f64>,
    pub corrupt_tail: Vec<f64>,
    pub margin: f64,
}

/// Parameters of one logistic term with label `y = ±1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticPoint {
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
    pub label: f64,
}

/// The parameters one training loss term depends on.
#[derive(Debug, Clone, PartialEq)]
pub enum LossPoint {
    Margin(MarginPoint),
    Logistic(LogisticPoint),
}

impl LossPoint {
    fn name(&self) -> &'static str {
        match self {
            LossPoint::Margin(_) => "margin",
            LossPoint::Logistic(_) => "logistic",
        }
    }

    fn blocks(&self) -> Vec<&[f64]> {
        match self {
            LossPoint::Margin(p) => vec![&p.head, &p.relation, &p.tail, &p.corrupt_head, &p.corrupt_tail],
            LossPoint::Logistic(p) => vec![&p.head, &p.relation, &p.tail],
        }
    }

    fn block_mut(&mut self, i: usize) -> &mut Vec<f64> {
        match self {
            LossPoint::Margin(p) => {
                [&mut p.head, &mut p.relation, &mut p.tail, &mut p.corrupt_head, &mut p.corrupt_tail][i]
            }
            LossPoint::Logistic(p) => [&mut p.head, &mut p.relation, &mut p.tail][i],
        }
    }

    fn check_kind(&self, kind: EmbeddingKind) -> Result<(), EmbedError> {
        let ok = matches!(
            (kind, self),
            (EmbeddingKind::TransE, LossPoint::Margin(_))
                | (EmbeddingKind::DistMult | EmbeddingKind::ComplEx, LossPoint::Logistic(_))
        );
        if ok {
            let b = self.blocks();
            check_dims(kind, b[0], b[1], b[2])?;
            for v in &b[3..] {
                if v.len() != b[0].len() {
                    return Err(EmbedError::DimensionMismatch { expected: b[0].len(), found: v.len() });
                }
            }
            Ok(())
        } else {
            Err(EmbedError::PointKindMismatch { kind, point: self.name() })
        }
    }

    /// Loss value and its gradient with respect to every block.
    pub fn loss_and_gradient(&self, kind: EmbeddingKind) -> Result<(f64, Vec<Vec<f64>>), EmbedError> {
        self.check_kind(kind)?;
        let mut grads: Vec<Vec<f64>> = self.blocks().iter().map(|b| vec![0.0; b.len()]).collect();
        let loss = match self {
            LossPoint::Margin(p) => {
                let pos = score_unchecked(kind, &p.head, &p.relation, &p.tail);
                let neg = score_unchecked(kind, &p.corrupt_head, &p.relation, &p.corrupt_tail);
                let hinge = p.margin - pos + neg;
                if hinge > 0.0 {
                    let [gh, gr, gt, gch, gct] = &mut grads[..] else { unreachable!() };
                    accumulate_score_grad(kind, (&p.head, &p.relation, &p.tail), (gh, gr, gt), -1.0);
                    accumulate_score_grad(
                        kind,
                        (&p.corrupt_head, &p.relation, &p.corrupt_tail),
                        (gch, gr, gct),
                        1.0,
                    );
                }
                hinge.max(0.0)
            }
            LossPoint::Logistic(p) => {
                let s = score_unchecked(kind, &p.head, &p.relation, &p.tail);
                let dloss_ds = -p.label * sigmoid(-p.label * s);
                let [gh, gr, gt] = &mut grads[..] else { unreachable!() };
                accumulate_score_grad(kind, (&p.head, &p.relation, &p.tail), (gh, gr, gt), dloss_ds);
                softplus(-p.label * s)
            }
        };
        if !grads.iter().flatten().all(|g| g.is_finite()) {
            return Err(EmbedError::NonFiniteGradient);
        }
        Ok((loss, grads))
    }

    /// A seeded random point. Margin points are resampled until the hinge is
    /// active by at least 0.1 so the loss is differentiable there.
    pub fn random(kind: EmbeddingKind, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vector = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect() };
        match kind {
            EmbeddingKind::TransE => loop {
                let p = MarginPoint {
                    head: vector(&mut rng),
                    relation: vector(&mut rng),
                    tail: vector(&mut rng),
                    corrupt_head: vector(&mut rng),
                    corrupt_tail: vector(&mut rng),
                    margin: rng.random_range(0.5..2.0),
                };
                let pos = score_unchecked(kind, &p.head, &p.relation, &p.tail);
                let neg = score_unchecked(kind, &p.corrupt_head, &p.relation, &p.corrupt_tail);
                if p.margin - pos + neg > 0.1 {
                    return LossPoint::Margin(p);
                }
            },
            _ => LossPoint::Logistic(LogisticPoint {
                head: vector(&mut rng),
                relation: vector(&mut rng),
                tail: vector(&mut rng),
                label: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            }),
        }
    }
}

/// Largest `|analytic - central difference| / max(1, |analytic|)` over all
/// parameters of `point`.
pub fn grad_check(kind: EmbeddingKind, point: &LossPoint, step: f64) -> Result<f64, EmbedError> {
    if !(step > 0.0) {
        return Err(EmbedError::InvalidConfig("finite-difference step must be positive"));
    }
    let (_, analytic) = point.loss_and_gradient(kind)?;
    let mut probe = point.clone();
    let mut worst = 0.0f64;
    for (b, grad) in analytic.iter().enumerate() {
        for i in 0..grad.len() {
            let orig = probe.block_mut(b)[i];
            probe.block_mut(b)[i] = orig + step;
            let plus = probe.loss_and_gradient(kind)?.0;
            probe.block_mut(b)[i] = orig - step;
            let minus = probe.loss_and_gradient(kind)?.0;
            probe.block_mut(b)[i] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            if !numeric.is_finite() {
                return Err(EmbedError::NonFiniteGradient);
            }
            worst = worst.max((grad[i] - numeric).abs() / grad[i].abs().max(1.0));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Margin of the TransE ranking loss.
    pub margin: f64,
    pub negatives_per_positive: usize,
    pub seed: u64,
    pub dim: usize,
}

impl Default for EmbedTrainConfig {
    fn default() -> Self {
        Self { epochs: 100, learning_rate: 0.01, margin: 1.0, negatives_per_positive: 1, seed: 0, dim: DEFAULT_DIM }
    }
}

impl EmbedTrainConfig {
    fn validate(&self, kind: EmbeddingKind) -> Result<(), EmbedError> {
        if self.epochs == 0 {
            return Err(EmbedError::InvalidConfig("epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(EmbedError::InvalidConfig("learning rate must be positive"));
        }
        if !(self.margin > 0.0) {
            return Err(EmbedError::InvalidConfig("margin must be positive"));
        }
        if self.negatives_per_positive == 0 {
            return Err(EmbedError::InvalidConfig("need at least one negative per positive"));
        }
        if self.dim == 0 {
            return Err(EmbedError::InvalidConfig("dim must be positive"));
        }
        if kind == EmbeddingKind::ComplEx && self.dim % 2 != 0 {
            return Err(EmbedError::OddComplexDim(self.dim));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub embeddings: KgEmbeddingSet,
    /// Mean loss of every epoch, in order.
    pub epoch_losses: Vec<f64>,
}

/// Entity/relation id tables over the IRI-object triples of a graph.
struct Graph {
    entities: Vec<String>,
    relations: Vec<String>,
    triples: Vec<(usize, usize, usize)>,
    known: BTreeSet<(usize, usize, usize)>,
}

impl Graph {
    fn new(triples: &[Triple]) -> Result<Self, EmbedError> {
        let iri_triples: Vec<(&str, &str, &str)> = triples
            .iter()
            .filter_map(|t| Some((t.subject.as_str(), t.predicate.as_str(), t.object_iri()?)))
            .collect();
        if iri_triples.is_empty() {
            return Err(EmbedError::NoTrainableTriples);
        }
        let entity_set: BTreeSet<&str> = iri_triples.iter().flat_map(|&(h, _, t)| [h, t]).collect();
        let relation_set: BTreeSet<&str> = iri_triples.iter().map(|&(_, r, _)| r).collect();
        let entities: Vec<String> = entity_set.iter().map(|s| s.to_string()).collect();
        let relations: Vec<String> = relation_set.iter().map(|s| s.to_string()).collect();
        let eid = |s: &str| entities.binary_search_by(|e| e.as_str().cmp(s)).unwrap();
        let rid = |s: &str| relations.binary_search_by(|e| e.as_str().cmp(s)).unwrap();
        let mut known = BTreeSet::new();
        let mut ids = Vec::new();
        for &(h, r, t) in &iri_triples {
            let triple = (eid(h), rid(r), eid(t));
            if known.insert(triple) {
                ids.push(triple);
            }
        }
        Ok(Graph { entities, relations, triples: ids, known })
    }
}

/// Train embeddings of `kind` on the entity-to-entity triples (literal
/// objects are ignored). Deterministic for fixed inputs.
pub fn train_embeddings(
    triples: &[Triple],
    cfg: &EmbedTrainConfig,
    kind: EmbeddingKind,
) -> Result<TrainOutcome, EmbedError> {
    cfg.validate(kind)?;
    let graph = Graph::new(triples)?;
    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 6.0 / libm::sqrt(dim as f64);
    let mut init = |n: usize| -> Vec<f64> { (0..n * dim).map(|_| rng.random_range(-bound..bound)).collect() };
    let mut ent = init(graph.entities.len());
    let mut rel = init(graph.relations.len());
    if kind == EmbeddingKind::TransE {
        rel.chunks_mut(dim).for_each(linalg::normalize_in_place);
        ent.chunks_mut(dim).for_each(linalg::normalize_in_place);
    }

    let n_entities = graph.entities.len();
    let mut order: Vec<usize> = (0..graph.triples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut terms = 0usize;
        for &ti in &order {
            let (h, r, t) = graph.triples[ti];
            let mut negatives = Vec::with_capacity(cfg.negatives_per_positive);
            for _ in 0..cfg.negatives_per_positive {
                if let Some(neg) = corrupt(&graph, (h, r, t), n_entities, &mut rng) {
                    negatives.push(neg);
                }
            }
            match kind {
                EmbeddingKind::TransE => {
                    for (nh, nt) in negatives {
                        let point = LossPoint::Margin(MarginPoint {
                            head: row(&ent, h, dim),
                            relation: row(&rel, r, dim),
                            tail: row(&ent, t, dim),
                            corrupt_head: row(&ent, nh, dim),
                            corrupt_tail: row(&ent, nt, dim),
                            margin: cfg.margin,
                        });
                        let (loss, grads) = point.loss_and_gradient(kind)?;
                        total += loss;
                        terms += 1;
                        if loss > 0.0 {
                            let lr = cfg.learning_rate;
                            for (e, g) in [(h, &grads[0]), (t, &grads[2]), (nh, &grads[3]), (nt, &grads[4])] {
                                step(&mut ent, e, dim, g, lr);
                            }
                            step(&mut rel, r, dim, &grads[1], lr);
                            for e in [h, t, nh, nt] {
                                linalg::normalize_in_place(&mut ent[e * dim..(e + 1) * dim]);
                            }
                        }
                    }
                }
                EmbeddingKind::DistMult | EmbeddingKind::ComplEx => {
                    let samples = core::iter::once((h, t, 1.0)).chain(negatives.into_iter().map(|(nh, nt)| (nh, nt, -1.0)));
                    for (sh, st, label) in samples {
                        let point = LossPoint::Logistic(LogisticPoint {
                            head: row(&ent, sh, dim),
                            relation: row(&rel, r, dim),
                            tail: row(&ent, st, dim),
                            label,
                        });
                        let (loss, grads) = point.loss_and_gradient(kind)?;
                        total += loss;
                        terms += 1;
                        let lr = cfg.learning_rate;
                        step(&mut ent, sh, dim, &grads[0], lr);
                        step(&mut rel, r, dim, &grads[1], lr);
                        step(&mut ent, st, dim, &grads[2], lr);
                    }
                }
            }
        }
        epoch_losses.push(if terms == 0 { 0.0 } else { total / terms as f64 });
    }

    let to_map = |names: &[String], flat: &[f64]| -> BTreeMap<String, Vec<f64>> {
        names.iter().cloned().zip(flat.chunks(dim).map(<[f64]>::to_vec)).collect()
    };
    let embeddings =
        KgEmbeddingSet::new(kind, dim, to_map(&graph.entities, &ent), to_map(&graph.relations, &rel))?;
    Ok(TrainOutcome { embeddings, epoch_losses })
}

fn row(flat: &[f64], i: usize, dim: usize) -> Vec<f64> {
    flat[i * dim..(i + 1) * dim].to_vec()
}

fn step(flat: &mut [f64], i: usize, dim: usize, grad: &[f64], lr: f64) {
    for (w, g) in flat[i * dim..(i + 1) * dim].iter_mut().zip(grad) {
        *w -= lr * g;
    }
}

/// Replace head or tail (fair coin) with a uniformly drawn entity, rejecting
/// corruptions that are known positives.
fn corrupt(
    graph: &Graph,
    (h, r, t): (usize, usize, usize),
    n_entities: usize,
    rng: &mut ChaCha8Rng,
) -> Option<(usize, usize)> {
    const ATTEMPTS: usize = 64;
    for _ in 0..ATTEMPTS {
        let replace_head = rng.random_bool(0.5);
        let e = rng.random_range(0..n_entities);
        let (nh, nt) = if replace_head { (e, t) } else { (h, e) };
        if !graph.known.contains(&(nh, r, nt)) {
            return Some((nh, nt));
        }
    }
    None
}

/// Filtered tail-prediction hits@k: for each test triple rank the true tail
/// against every entity, ignoring other tails known for `(h, r)`. Ties count
/// against the true tail.
pub fn filtered_hits_at_k(
    set: &KgEmbeddingSet,
    test: &[(String, String, String)],
    known: &BTreeSet<(String, String, String)>,
    k: usize,
) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let mut hits = 0usize;
    for (h, r, t) in test {
        let Some(true_score) = set.score_triple(h, r, t) else {
            continue;
        };
        let mut rank = 1usize;
        for candidate in set.entities().keys() {
            if candidate == t || known.contains(&(h.clone(), r.clone(), candidate.clone())) {
                continue;
            }
            if set.score_triple(h, r, candidate).is_some_and(|s| s >= true_score) {
                rank += 1;
            }
        }
        if rank <= k {
            hits += 1;
        }
    }
    hits as f64 / test.len() as f64
}
