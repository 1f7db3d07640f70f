//! Knowledge-graph triples, entity records and the entity store.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::codec::{CodecError, Decoder, Encoder};

/// Object position of a triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Object {
    Iri(String),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub value: String,
    pub language: Option<String>,
    pub datatype: Option<String>,
}

impl Literal {
    pub fn plain(value: impl Into<String>) -> Self {
        Self { value: value.into(), language: None, datatype: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Object,
}

impl Triple {
    /// The object IRI when the object is not a literal.
    pub fn object_iri(&self) -> Option<&str> {
        match &self.object {
            Object::Iri(iri) => Some(iri),
            Object::Literal(_) => None,
        }
    }
}

/// Coarse entity class. `Other` keeps the local name of the type IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityType {
    Person,
    Publication,
    Other(String),
}

impl EntityType {
    pub fn as_str(&self) -> &str {
        match self {
            EntityType::Person => "person",
            EntityType::Publication => "publication",
            EntityType::Other(name) => name,
        }
    }

    /// `person` / `publication` (any case), anything else is `Other`.
    pub fn from_name(name: &str) -> Self {
        if name.eq_ignore_ascii_case("person") {
            EntityType::Person
        } else if name.eq_ignore_ascii_case("publication") {
            EntityType::Publication
        } else {
            EntityType::Other(name.to_string())
        }
    }

    pub fn is_canonical(&self) -> bool {
        !matches!(self, EntityType::Other(_))
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Local name of an IRI: the part after the last `#` or `/`.
pub fn local_name(iri: &str) -> &str {
    iri.rsplit(['#', '/']).next().filter(|s| !s.is_empty()).unwrap_or(iri)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub uri: String,
    pub label: String,
    pub aliases: Vec<String>,
    pub etype: EntityType,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("no entities could be extracted")]
    EmptyStore,
    #[error("duplicate entity uri {0}")]
    DuplicateUri(String),
    #[error("entity record has an empty uri")]
    EmptyUri,
    #[error("entity {0} has an empty label")]
    EmptyLabel(String),
    #[error("entity {0} lists its label as an alias")]
    AliasRepeatsLabel(String),
}

/// Entities keyed by uri, iterated in uri order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntityStore {
    records: BTreeMap<String, EntityRecord>,
    stats: BTreeMap<EntityType, usize>,
}

impl EntityStore {
    pub fn from_records(records: impl IntoIterator<Item = EntityRecord>) -> Result<Self, StoreError> {
        let mut store = EntityStore::default();
        for record in records {
            if record.uri.is_empty() {
                return Err(StoreError::EmptyUri);
            }
            if record.label.trim().is_empty() {
                return Err(StoreError::EmptyLabel(record.uri));
            }
            if record.aliases.contains(&record.label) {
                return Err(StoreError::AliasRepeatsLabel(record.uri));
            }
            if store.records.contains_key(&record.uri) {
                return Err(StoreError::DuplicateUri(record.uri));
            }
            *store.stats.entry(record.etype.clone()).or_default() += 1;
            store.records.insert(record.uri.clone(), record);
        }
        Ok(store)
    }

    pub fn get(&self, uri: &str) -> Option<&EntityRecord> {
        self.records.get(uri)
    }

    pub fn iter(&self) -> impl Iterator<Item = &EntityRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record count per entity type.
    pub fn stats(&self) -> &BTreeMap<EntityType, usize> {
        &self.stats
    }

    pub fn count(&self, etype: &EntityType) -> usize {
        self.stats.get(etype).copied().unwrap_or(0)
    }

    pub(crate) fn encode_into(&self, enc: &mut Encoder) {
        enc.put_len(self.records.len());
        for r in self.records.values() {
            enc.put_str(&r.uri);
            enc.put_str(&r.label);
            enc.put_len(r.aliases.len());
            for a in &r.aliases {
                enc.put_str(a);
            }
            encode_etype(enc, &r.etype);
        }
    }

    pub(crate) fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let n = dec.len()?;
        let mut records = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let uri = dec.string()?;
            let label = dec.string()?;
            let k = dec.len()?;
            let mut aliases = Vec::with_capacity(k.min(1 << 16));
            for _ in 0..k {
                aliases.push(dec.string()?);
            }
            let etype = decode_etype(dec)?;
            records.push(EntityRecord { uri, label, aliases, etype });
        }
        EntityStore::from_records(records).map_err(|e| CodecError::Invalid(e.to_string()))
    }

    /// Serialized store file: magic, version, records in uri order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::new(STORE_MAGIC);
        self.encode_into(&mut enc);
        enc.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut dec = Decoder::new(bytes, STORE_MAGIC)?;
        let store = Self::decode_from(&mut dec)?;
        dec.finish()?;
        Ok(store)
    }
}

pub const STORE_MAGIC: [u8; 4] = *b"DLST";

pub(crate) fn encode_etype(enc: &mut Encoder, etype: &EntityType) {
    match etype {
        EntityType::Person => enc.put_u8(0),
        EntityType::Publication => enc.put_u8(1),
        EntityType::Other(name) => {
            enc.put_u8(2);
            enc.put_str(name);
        }
    }
}

pub(crate) fn decode_etype(dec: &mut Decoder<'_>) -> Result<EntityType, CodecError> {
    match dec.u8()? {
        0 => Ok(EntityType::Person),
        1 => Ok(EntityType::Publication),
        2 => Ok(EntityType::Other(dec.string()?)),
        t => Err(CodecError::Invalid(alloc::format!("unknown entity type tag {t}"))),
    }
}

/// Which predicates carry labels, aliases and types, and how type IRIs map
/// onto [`EntityType`]. Unmapped type IRIs become `Other(local name)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaConfig {
    pub label_predicates: Vec<String>,
    pub alias_predicates: Vec<String>,
    pub type_predicate: String,
    pub type_map: BTreeMap<String, EntityType>,
}

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("schema line {line}: {reason}")]
pub struct SchemaError {
    pub line: usize,
    pub reason: String,
}

impl SchemaConfig {
    /// Predicates used by the public DBLP RDF dump.
    pub fn dblp() -> Self {
        let schema = "https://dblp.org/rdf/schema#";
        let mut type_map = BTreeMap::new();
        type_map.insert(alloc::format!("{schema}Person"), EntityType::Person);
        type_map.insert(alloc::format!("{schema}Creator"), EntityType::Person);
        type_map.insert(alloc::format!("{schema}Publication"), EntityType::Publication);
        SchemaConfig {
            label_predicates: alloc::vec![
                alloc::format!("{schema}primaryCreatorName"),
                alloc::format!("{schema}title"),
                "http://www.w3.org/2000/01/rdf-schema#label".to_string(),
            ],
            alias_predicates: alloc::vec![alloc::format!("{schema}creatorName")],
            type_predicate: RDF_TYPE.to_string(),
            type_map,
        }
    }

    /// Parse `key = value` lines. Keys: `label`, `alias` (repeatable),
    /// `type` (once) and `person` / `publication` (repeatable, type IRIs).
    /// Lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let mut cfg = SchemaConfig {
            label_predicates: Vec::new(),
            alias_predicates: Vec::new(),
            type_predicate: String::new(),
            type_map: BTreeMap::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: &str| SchemaError { line: i + 1, reason: reason.to_string() };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim().trim_start_matches('<').trim_end_matches('>'));
            if value.is_empty() {
                return Err(err("empty value"));
            }
            match key {
                "label" => cfg.label_predicates.push(value.to_string()),
                "alias" => cfg.alias_predicates.push(value.to_string()),
                "type" if cfg.type_predicate.is_empty() => cfg.type_predicate = value.to_string(),
                "type" => return Err(err("type predicate given twice")),
                "person" => {
                    cfg.type_map.insert(value.to_string(), EntityType::Person);
                }
                "publication" => {
                    cfg.type_map.insert(value.to_string(), EntityType::Publication);
                }
                _ => return Err(err("unknown key")),
            }
        }
        if cfg.label_predicates.is_empty() {
            return Err(SchemaError { line: 0, reason: "no label predicate".to_string() });
        }
        if cfg.type_predicate.is_empty() {
            cfg.type_predicate = RDF_TYPE.to_string();
        }
        Ok(cfg)
    }

    fn etype_of(&self, type_iri: &str) -> EntityType {
        self.type_map
            .get(type_iri)
            .cloned()
            .unwrap_or_else(|| EntityType::Other(local_name(type_iri).to_string()))
    }
}

/// Result of [`extract_entities`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub store: EntityStore,
    /// Subjects that lacked a label or a type.
    pub skipped: usize,
}

#[derive(Default)]
struct Pending {
    labels: Vec<String>,
    aliases: Vec<String>,
    etype: Option<EntityType>,
}

/// Build entity records from triples. The first label seen becomes the
/// primary label; later labels and alias literals follow as aliases in
/// order of appearance. A canonical type beats an `Other` type; otherwise the
/// first type seen wins.
pub fn extract_entities(triples: &[Triple], schema: &SchemaConfig) -> Result<Extraction, StoreError> {
    let mut subjects: BTreeMap<&str, Pending> = BTreeMap::new();
    for t in triples {
        let entry = subjects.entry(t.subject.as_str()).or_default();
        let p = t.predicate.as_str();
        match &t.object {
            Object::Literal(lit) if schema.label_predicates.iter().any(|l| l == p) => {
                let value = lit.value.trim();
                if !value.is_empty() {
                    entry.labels.push(value.to_string());
                }
            }
            Object::Literal(lit) if schema.alias_predicates.iter().any(|l| l == p) => {
                let value = lit.value.trim();
                if !value.is_empty() {
                    entry.aliases.push(value.to_string());
                }
            }
            Object::Iri(type_iri) if p == schema.type_predicate => {
                let etype = schema.etype_of(type_iri);
                let replace = match &entry.etype {
                    None => true,
                    Some(current) => !current.is_canonical() && etype.is_canonical(),
                };
                if replace {
                    entry.etype = Some(etype);
                }
            }
            _ => {}
        }
    }

    let mut skipped = 0;
    let mut records = Vec::new();
    for (uri, pending) in subjects {
        let (Some(etype), Some((label, rest))) = (pending.etype, pending.labels.split_first()) else {
            skipped += 1;
            continue;
        };
        let mut aliases: Vec<String> = Vec::new();
        for alias in rest.iter().chain(&pending.aliases) {
            if alias != label && !aliases.contains(alias) {
                aliases.push(alias.clone());
            }
        }
        records.push(EntityRecord { uri: uri.to_string(), label: label.clone(), aliases, etype });
    }
    if records.is_empty() {
        return Err(StoreError::EmptyStore);
    }
    Ok(Extraction { store: EntityStore::from_records(records)?, skipped })
}
