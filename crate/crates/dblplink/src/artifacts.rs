//! Loading and saving the binary artifacts: entity store, label index,
//! embedding sets and re-ranker parameters.

use std::path::{Path, PathBuf};

use dblplink_core::codec::CodecError;
use dblplink_core::embed::{EmbedError, LoadError};
use dblplink_core::{index, EmbeddingKind, EntityStore, KgEmbeddingSet, LabelIndex, SiameseParams};

use crate::io::{read_bytes, write_bytes, FileError};

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: CodecError,
    },
    #[error("{}: {source}", path.display())]
    Embedding {
        path: PathBuf,
        #[source]
        source: EmbedError,
    },
}

impl ArtifactError {
    fn format(path: &Path, source: CodecError) -> Self {
        Self::Format { path: path.to_path_buf(), source }
    }

    pub fn path(&self) -> &Path {
        match self {
            ArtifactError::File(e) => &e.path,
            ArtifactError::Format { path, .. } | ArtifactError::Embedding { path, .. } => path,
        }
    }
}

pub fn save_store(store: &EntityStore, path: &Path) -> Result<(), ArtifactError> {
    Ok(write_bytes(path, &store.to_bytes())?)
}

pub fn load_store(path: &Path) -> Result<EntityStore, ArtifactError> {
    EntityStore::from_bytes(&read_bytes(path)?).map_err(|e| ArtifactError::format(path, e))
}

/// The index file carries its store, so one file serves both.
pub fn save_index(store: &EntityStore, index: &LabelIndex, path: &Path) -> Result<(), ArtifactError> {
    Ok(write_bytes(path, &index::to_bytes(store, index))?)
}

pub fn load_index(path: &Path) -> Result<(EntityStore, LabelIndex), ArtifactError> {
    index::from_bytes(&read_bytes(path)?).map_err(|e| ArtifactError::format(path, e))
}

pub fn save_embeddings(set: &KgEmbeddingSet, path: &Path) -> Result<(), ArtifactError> {
    Ok(write_bytes(path, &set.to_bytes())?)
}

pub fn load_embeddings(path: &Path, expected: Option<EmbeddingKind>) -> Result<KgEmbeddingSet, ArtifactError> {
    KgEmbeddingSet::from_bytes(&read_bytes(path)?, expected).map_err(|e| match e {
        LoadError::Format(source) => ArtifactError::format(path, source),
        LoadError::Embed(source) => ArtifactError::Embedding { path: path.to_path_buf(), source },
    })
}

pub fn save_params(params: &SiameseParams, path: &Path) -> Result<(), ArtifactError> {
    Ok(write_bytes(path, &params.to_bytes())?)
}

pub fn load_params(path: &Path) -> Result<SiameseParams, ArtifactError> {
    SiameseParams::from_bytes(&read_bytes(path)?).map_err(|e| ArtifactError::format(path, e))
}
