//! Canonical byte encoding.
//!
//! Integers are big-endian and fixed width, hashes and addresses are raw
//! bytes, variable-length fields carry a `u32` length prefix. The full layout
//! of every encoded type is in `docs/wire-format.md`.

use thiserror::Error;

use crate::hash::{Address, ChainId, Hash256, Word};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unexpected end of input at offset {0}")]
    Truncated(usize),
    #[error("bad magic, expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("unsupported version {0}")]
    Version(u8),
    #[error("invalid tag {tag} for {what}")]
    BadTag { what: &'static str, tag: u8 },
    #[error("{0} trailing bytes")]
    Trailing(usize),
    #[error("invalid utf-8 string")]
    Utf8,
    #[error("length {0} exceeds limit")]
    TooLong(u64),
}

/// Upper bound on any length prefix, guards decoders against hostile input.
const MAX_LEN: u32 = 1 << 24;

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u128(&mut self, v: u128) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.u32(bytes.len() as u32);
        self.raw(bytes)
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.bytes(s.as_bytes())
    }

    pub fn hash(&mut self, h: &Hash256) -> &mut Self {
        self.raw(h.as_bytes())
    }

    pub fn address(&mut self, a: &Address) -> &mut Self {
        self.raw(a.as_bytes())
    }

    pub fn chain(&mut self, c: ChainId) -> &mut Self {
        self.u32(c.0)
    }

    pub fn bool(&mut self, b: bool) -> &mut Self {
        self.u8(b as u8)
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn finish(&self) -> Result<(), CodecError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(CodecError::Trailing(n)),
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.remaining() < n {
            return Err(CodecError::Truncated(self.pos));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        let mut out = [0u8; N];
        out.copy_from_slice(self.take(N)?);
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.array()?))
    }

    pub fn u128(&mut self) -> Result<u128, CodecError> {
        Ok(u128::from_be_bytes(self.array()?))
    }

    pub fn read_len(&mut self) -> Result<usize, CodecError> {
        let n = self.u32()?;
        if n > MAX_LEN {
            return Err(CodecError::TooLong(n as u64));
        }
        Ok(n as usize)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, CodecError> {
        let n = self.read_len()?;
        Ok(self.take(n)?.to_vec())
    }

    pub fn str(&mut self) -> Result<String, CodecError> {
        String::from_utf8(self.bytes()?).map_err(|_| CodecError::Utf8)
    }

    pub fn hash(&mut self) -> Result<Hash256, CodecError> {
        Ok(Hash256(self.array()?))
    }

    pub fn word(&mut self) -> Result<Word, CodecError> {
        self.array()
    }

    pub fn address(&mut self) -> Result<Address, CodecError> {
        Ok(Address(self.array()?))
    }

    pub fn chain(&mut self) -> Result<ChainId, CodecError> {
        Ok(ChainId(self.u32()?))
    }

    pub fn bool(&mut self) -> Result<bool, CodecError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            tag => Err(CodecError::BadTag { what: "bool", tag }),
        }
    }

    pub fn magic(&mut self, expected: &'static str) -> Result<(), CodecError> {
        if self.take(expected.len())? != expected.as_bytes() {
            return Err(CodecError::BadMagic { expected });
        }
        Ok(())
    }
}

/// Types with a canonical byte form.
pub trait Encode {
    fn encode_to(&self, w: &mut Writer);

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_to(&mut w);
        w.into_bytes()
    }
}

pub trait Decode: Sized {
    fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError>;

    /// Decodes and rejects trailing bytes.
    fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let v = Self::decode_from(&mut r)?;
        r.finish()?;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_are_big_endian() {
        let mut w = Writer::new();
        w.u32(1).u64(2).bytes(b"ab");
        assert_eq!(
            w.into_bytes(),
            vec![0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0, 0, 2, b'a', b'b']
        );
    }

    #[test]
    fn truncated_input_errors() {
        let mut r = Reader::new(&[0, 0, 0]);
        assert_eq!(r.u32(), Err(CodecError::Truncated(0)));
    }

    #[test]
    fn oversize_length_rejected() {
        let mut r = Reader::new(&[0xff, 0xff, 0xff, 0xff]);
        assert!(matches!(r.bytes(), Err(CodecError::TooLong(_))));
    }
}
