//! Trigram label index for candidate generation.
//!
//! Every label of every entity (primary and aliases) is normalized and
//! indexed under its `##`-padded character trigrams. A query is scored as
//! `0.75 * J + 0.25 * L`, where `J` is the trigram Jaccard coefficient and
//! `L = 1 - levenshtein / max_len`. Each entity contributes its best label.
//! Results are ordered by score, then `L`, then uri.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::codec::{CodecError, Decoder, Encoder};
use crate::kg::{decode_etype, encode_etype, EntityStore, EntityType};
use crate::text::{jaccard, levenshtein_similarity, normalize, padded_trigrams, Trigram};

pub const INDEX_MAGIC: [u8; 4] = *b"DLIX";

/// Weight of the trigram Jaccard term; the edit-distance term gets the rest.
pub const JACCARD_WEIGHT: f64 = 0.75;

/// Upper bound of the score of a label sharing no trigram with the query.
const NO_OVERLAP_BOUND: f64 = 1.0 - JACCARD_WEIGHT;

pub fn lexical_score(jaccard: f64, edit_similarity: f64) -> f64 {
    JACCARD_WEIGHT * jaccard + (1.0 - JACCARD_WEIGHT) * edit_similarity
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedLabel {
    pub uri: String,
    pub etype: EntityType,
    /// Label as it appears in the store.
    pub label: String,
    pub normalized: String,
    trigram_count: usize,
}

/// A retrieval hit.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub uri: String,
    pub matched_label: String,
    pub etype: EntityType,
    pub lexical_score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("cannot index an empty store")]
    EmptyStore,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("query is empty after normalization")]
    EmptyQuery,
    #[error("k must be at least 1")]
    InvalidK,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelIndex {
    labels: Vec<IndexedLabel>,
    /// Label ids per trigram; ids follow store (uri) order, so lists are uri-sorted.
    postings: BTreeMap<Trigram, Vec<u32>>,
}

pub fn build_index(store: &EntityStore) -> Result<LabelIndex, IndexError> {
    if store.is_empty() {
        return Err(IndexError::EmptyStore);
    }
    let mut labels = Vec::new();
    for record in store.iter() {
        for label in core::iter::once(&record.label).chain(&record.aliases) {
            labels.push(indexed_label(record.uri.clone(), record.etype.clone(), label.clone()));
        }
    }
    let mut postings: BTreeMap<Trigram, Vec<u32>> = BTreeMap::new();
    for (id, l) in labels.iter().enumerate() {
        for tri in padded_trigrams(&l.normalized) {
            postings.entry(tri).or_default().push(id as u32);
        }
    }
    Ok(LabelIndex { labels, postings })
}

fn indexed_label(uri: String, etype: EntityType, label: String) -> IndexedLabel {
    let normalized = normalize(&label);
    let trigram_count = padded_trigrams(&normalized).len();
    IndexedLabel { uri, etype, label, normalized, trigram_count }
}

#[derive(Clone, Copy)]
struct Scored {
    id: u32,
    score: f64,
    edit: f64,
}

impl Scored {
    /// Better label for the same entity: higher score, then higher edit
    /// similarity, then earlier label.
    fn beats(&self, other: &Scored) -> bool {
        self.score
            .total_cmp(&other.score)
            .then(self.edit.total_cmp(&other.edit))
            .then(other.id.cmp(&self.id))
            .is_gt()
    }
}

impl LabelIndex {
    pub fn labels(&self) -> &[IndexedLabel] {
        &self.labels
    }

    pub fn postings(&self) -> &BTreeMap<Trigram, Vec<u32>> {
        &self.postings
    }

    /// Top-`k` candidates for `query`, one per entity, filtered by type before
    /// truncation.
    pub fn search<'a>(
        &'a self,
        query: &str,
        type_filter: Option<&EntityType>,
        k: usize,
    ) -> Result<Vec<Candidate>, SearchError> {
        if k == 0 {
            return Err(SearchError::InvalidK);
        }
        let query = normalize(query);
        if query.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        let query_chars: Vec<char> = query.chars().collect();
        let query_trigrams = padded_trigrams(&query);

        let mut overlap: BTreeMap<u32, usize> = BTreeMap::new();
        for tri in &query_trigrams {
            if let Some(ids) = self.postings.get(tri) {
                for &id in ids {
                    *overlap.entry(id).or_default() += 1;
                }
            }
        }

        let accepts = |id: u32| type_filter.is_none_or(|t| &self.labels[id as usize].etype == t);
        let score = |id: u32, shared: usize| {
            let label = &self.labels[id as usize];
            let j = jaccard(shared, query_trigrams.len(), label.trigram_count);
            let chars: Vec<char> = label.normalized.chars().collect();
            let edit = levenshtein_similarity(&query_chars, &chars);
            Scored { id, score: lexical_score(j, edit), edit }
        };

        let mut best: BTreeMap<&str, Scored> = BTreeMap::new();
        let offer = |best: &mut BTreeMap<&'a str, Scored>, s: Scored| {
            let uri = self.labels[s.id as usize].uri.as_str();
            match best.get_mut(uri) {
                Some(cur) if !s.beats(cur) => {}
                Some(cur) => *cur = s,
                None => {
                    best.insert(uri, s);
                }
            }
        };
        for (&id, &shared) in &overlap {
            if accepts(id) {
                offer(&mut best, score(id, shared));
            }
        }

        let mut ranked = self.order(&best);
        let settled = ranked.len() >= k && ranked[k - 1].score > NO_OVERLAP_BOUND;
        if !settled {
            // Labels without a shared trigram can still fill the list.
            for id in 0..self.labels.len() as u32 {
                if !overlap.contains_key(&id) && accepts(id) {
                    offer(&mut best, score(id, 0));
                }
            }
            ranked = self.order(&best);
        }
        ranked.truncate(k);
        Ok(ranked
            .into_iter()
            .map(|s| {
                let l = &self.labels[s.id as usize];
                Candidate {
                    uri: l.uri.clone(),
                    matched_label: l.label.clone(),
                    etype: l.etype.clone(),
                    lexical_score: s.score,
                }
            })
            .collect())
    }

    fn order(&self, best: &BTreeMap<&str, Scored>) -> Vec<Scored> {
        let mut ranked: Vec<Scored> = best.values().copied().collect();
        ranked.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(b.edit.total_cmp(&a.edit))
                .then_with(|| self.labels[a.id as usize].uri.cmp(&self.labels[b.id as usize].uri))
        });
        ranked
    }

    pub(crate) fn encode_into(&self, enc: &mut Encoder) {
        enc.put_len(self.labels.len());
        for l in &self.labels {
            enc.put_str(&l.uri);
            encode_etype(enc, &l.etype);
            enc.put_str(&l.label);
        }
        enc.put_len(self.postings.len());
        for (tri, ids) in &self.postings {
            for c in tri {
                enc.put_u32(*c as u32);
            }
            enc.put_len(ids.len());
            for &id in ids {
                enc.put_u32(id);
            }
        }
    }

    pub(crate) fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let n = dec.len()?;
        let mut labels = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let uri = dec.string()?;
            let etype = decode_etype(dec)?;
            let label = dec.string()?;
            labels.push(indexed_label(uri, etype, label));
        }
        let invalid = |what: &str| CodecError::Invalid(what.to_string());
        let mut postings = BTreeMap::new();
        for _ in 0..dec.len()? {
            let mut tri = ['\0'; 3];
            for c in &mut tri {
                *c = char::from_u32(dec.u32()?).ok_or_else(|| invalid("bad trigram char"))?;
            }
            let m = dec.len()?;
            let mut ids = Vec::with_capacity(m.min(1 << 20));
            for _ in 0..m {
                let id = dec.u32()?;
                if id as usize >= labels.len() || ids.last().is_some_and(|&prev| prev >= id) {
                    return Err(invalid("posting list out of range or unsorted"));
                }
                ids.push(id);
            }
            postings.insert(tri, ids);
        }
        Ok(LabelIndex { labels, postings })
    }
}

/// Serialize store and index into one container.
pub fn to_bytes(store: &EntityStore, index: &LabelIndex) -> Vec<u8> {
    let mut enc = Encoder::new(INDEX_MAGIC);
    store.encode_into(&mut enc);
    index.encode_into(&mut enc);
    enc.finish()
}

pub fn from_bytes(bytes: &[u8]) -> Result<(EntityStore, LabelIndex), CodecError> {
    let mut dec = Decoder::new(bytes, INDEX_MAGIC)?;
    let store = EntityStore::decode_from(&mut dec)?;
    let index = LabelIndex::decode_from(&mut dec)?;
    dec.finish()?;
    let consistent = index.labels.iter().all(|l| store.get(&l.uri).is_some_and(|r| r.etype == l.etype));
    if !consistent {
        return Err(CodecError::Invalid("index labels do not match the store".to_string()));
    }
    Ok((store, index))
}

/// True iff the top candidate's normalized label equals that of another
/// candidate with a different uri.
pub fn duplicate_label_exists(candidates: &[Candidate]) -> bool {
    let Some((top, rest)) = candidates.split_first() else {
        return false;
    };
    let label = normalize(&top.matched_label);
    rest.iter().any(|c| c.uri != top.uri && normalize(&c.matched_label) == label)
}

/// True iff any two candidates with different uris share a normalized label.
pub fn any_duplicate_label(candidates: &[Candidate]) -> bool {
    let mut seen: BTreeMap<String, &str> = BTreeMap::new();
    for c in candidates {
        match seen.insert(normalize(&c.matched_label), &c.uri) {
            Some(prev) if prev != c.uri => return true,
            _ => {}
        }
    }
    false
}
