//! Little-endian binary encoding shared by the embedding and model file formats.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unexpected end of data at byte {0}")]
    UnexpectedEof(usize),
    #[error("bad magic bytes (expected {expected:?})")]
    BadMagic { expected: &'static [u8] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("invalid utf-8 string at byte {0}")]
    InvalidUtf8(usize),
    #[error("{0}")]
    Invalid(String),
    #[error("{0} trailing bytes after payload")]
    Trailing(usize),
}

#[derive(Debug, Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn len_u32(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("length exceeds u32"));
    }

    pub fn f32(&mut self, v: f32) {
        self.bytes(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }

    /// u32 byte length followed by the UTF-8 bytes.
    pub fn str(&mut self, s: &str) {
        self.len_u32(s.len());
        self.bytes(s.as_bytes());
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

pub struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        match end {
            Some(end) => {
                let s = &self.data[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(CodecError::UnexpectedEof(self.pos)),
        }
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("slice length"))
    }

    pub fn magic(&mut self, expected: &'static [u8]) -> Result<(), CodecError> {
        if self.take(expected.len()).ok() == Some(expected) {
            Ok(())
        } else {
            Err(CodecError::BadMagic { expected })
        }
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.array::<1>()?[0])
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn len_u32(&mut self) -> Result<usize, CodecError> {
        Ok(self.u32()? as usize)
    }

    pub fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub fn str(&mut self) -> Result<String, CodecError> {
        let at = self.pos;
        let n = self.len_u32()?;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| CodecError::InvalidUtf8(at))
    }

    /// `n` f32 values widened to f64.
    pub fn f32_vec(&mut self, n: usize) -> Result<Vec<f64>, CodecError> {
        let raw = self.take(n.checked_mul(4).ok_or(CodecError::UnexpectedEof(self.pos))?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect())
    }

    pub fn finish(&self) -> Result<(), CodecError> {
        match self.data.len() - self.pos {
            0 => Ok(()),
            n => Err(CodecError::Trailing(n)),
        }
    }
}

/// Round to the nearest f32 so in-memory values match what a 32-bit file stores.
pub fn round_f32(v: &mut [f64]) {
    for x in v {
        *x = *x as f32 as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_round_trip() {
        let mut w = ByteWriter::new();
        w.bytes(b"MAGC");
        w.u8(7);
        w.u32(0xdead_beef);
        w.f32(1.5);
        w.f64(-0.25);
        w.str("héllo");
        let data = w.into_inner();
        let mut r = ByteReader::new(&data);
        r.magic(b"MAGC").unwrap();
        assert_eq!(r.u8().unwrap(), 7);
        assert_eq!(r.u32().unwrap(), 0xdead_beef);
        assert_eq!(r.f32_vec(1).unwrap(), vec![1.5]);
        assert_eq!(r.f64().unwrap(), -0.25);
        assert_eq!(r.str().unwrap(), "héllo");
        r.finish().unwrap();
    }

    #[test]
    fn truncated_input() {
        let mut r = ByteReader::new(&[1, 2]);
        assert_eq!(r.u32(), Err(CodecError::UnexpectedEof(0)));
        let mut r = ByteReader::new(b"XXXX");
        assert!(matches!(r.magic(b"MAGC"), Err(CodecError::BadMagic { .. })));
    }
}
