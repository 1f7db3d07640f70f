//! Versioned little-endian binary container shared by every artifact file.
//!
//! Layout: 4-byte magic, 1-byte format version, then a payload of
//! length-prefixed fields. Decoding must consume the payload exactly, so a
//! truncated or padded file is rejected instead of yielding a partial value.

use alloc::string::String;
use alloc::vec::Vec;

pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("bad magic header: expected {expected:?}")]
    BadMagic { expected: [u8; 4] },
    #[error("unsupported format version {found} (expected {FORMAT_VERSION})")]
    UnsupportedVersion { found: u8 },
    #[error("truncated payload at byte {offset}")]
    Truncated { offset: usize },
    #[error("{count} trailing bytes after payload")]
    TrailingBytes { count: usize },
    #[error("invalid UTF-8 string at byte {offset}")]
    InvalidUtf8 { offset: usize },
    #[error("invalid payload: {0}")]
    Invalid(String),
}

pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new(magic: [u8; 4]) -> Self {
        let mut buf = Vec::with_capacity(1024);
        buf.extend_from_slice(&magic);
        buf.push(FORMAT_VERSION);
        Self { buf }
    }

    pub fn put_u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    pub fn put_len(&mut self, n: usize) {
        self.put_u64(n as u64);
    }

    pub fn put_str(&mut self, s: &str) {
        self.put_len(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn put_f64s(&mut self, values: &[f64]) {
        for &v in values {
            self.put_f64(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    /// Check magic and version and position the cursor on the payload.
    pub fn new(bytes: &'a [u8], magic: [u8; 4]) -> Result<Self, CodecError> {
        if bytes.len() < 4 || bytes[..4] != magic {
            return Err(CodecError::BadMagic { expected: magic });
        }
        let mut dec = Decoder { bytes, pos: 4 };
        let version = dec.u8()?;
        if version != FORMAT_VERSION {
            return Err(CodecError::UnsupportedVersion { found: version });
        }
        Ok(dec)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(CodecError::Truncated { offset: self.pos })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_bits(self.u64()?))
    }

    /// A length prefix, rejected early when it exceeds the remaining bytes.
    pub fn len(&mut self) -> Result<usize, CodecError> {
        let offset = self.pos;
        let n = self.u64()?;
        if n > (self.bytes.len() - self.pos) as u64 {
            return Err(CodecError::Truncated { offset });
        }
        Ok(n as usize)
    }

    pub fn string(&mut self) -> Result<String, CodecError> {
        let n = self.len()?;
        let offset = self.pos;
        let raw = self.take(n)?;
        core::str::from_utf8(raw)
            .map(String::from)
            .map_err(|_| CodecError::InvalidUtf8 { offset })
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CodecError> {
        if n.saturating_mul(8) > self.bytes.len() - self.pos {
            return Err(CodecError::Truncated { offset: self.pos });
        }
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn finish(self) -> Result<(), CodecError> {
        match self.bytes.len() - self.pos {
            0 => Ok(()),
            count => Err(CodecError::TrailingBytes { count }),
        }
    }
}
