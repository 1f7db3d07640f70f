//! File access: transparent gzip, streaming N-Triples input.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use dblplink_core::ntriples::{parse_line, ErrorMode, ParseError, ParsedDocument};
use flate2::read::MultiGzDecoder;

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct FileError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

impl FileError {
    pub fn new(path: &Path, source: io::Error) -> Self {
        Self { path: path.to_path_buf(), source }
    }
}

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Open `path` for buffered reading, decompressing when it starts with the
/// gzip magic bytes.
pub fn open_reader(path: &Path) -> Result<Box<dyn BufRead>, FileError> {
    let err = |e| FileError::new(path, e);
    let mut reader = BufReader::new(File::open(path).map_err(err)?);
    let head = reader.fill_buf().map_err(err)?;
    if head.starts_with(&GZIP_MAGIC) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(reader))))
    } else {
        Ok(Box::new(reader))
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, FileError> {
    let mut buf = Vec::new();
    open_reader(path)?.read_to_end(&mut buf).map_err(|e| FileError::new(path, e))?;
    Ok(buf)
}

pub fn read_text(path: &Path) -> Result<String, FileError> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes).map_err(|e| FileError::new(path, io::Error::new(io::ErrorKind::InvalidData, e)))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), FileError> {
    std::fs::write(path, bytes).map_err(|e| FileError::new(path, e))
}

#[derive(Debug, thiserror::Error)]
pub enum NtError {
    #[error(transparent)]
    File(#[from] FileError),
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
}

/// Stream an N-Triples file (plain or gzip) line by line.
pub fn read_ntriples(path: &Path, mode: ErrorMode) -> Result<ParsedDocument, NtError> {
    let mut reader = open_reader(path)?;
    let mut doc = ParsedDocument::default();
    let mut buf = Vec::new();
    let mut line_number = 0;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(|e| FileError::new(path, e))?;
        if n == 0 {
            break;
        }
        line_number += 1;
        let parsed = match std::str::from_utf8(&buf) {
            Ok(line) => parse_line(line, line_number),
            Err(_) => Err(ParseError { line: line_number, reason: "invalid UTF-8".into() }),
        };
        match parsed {
            Ok(Some(t)) => doc.triples.push(t),
            Ok(None) => {}
            Err(e) if mode == ErrorMode::Skip => doc.skipped.push(e),
            Err(e) => return Err(NtError::Parse { path: path.to_path_buf(), source: e }),
        }
    }
    Ok(doc)
}
