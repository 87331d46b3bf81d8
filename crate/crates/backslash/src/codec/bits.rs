//! MSB-first bit writer/reader over byte buffers.

use crate::error::{Error, Result};

/// Accumulates bits most-significant-first into a byte buffer. Bytes are
/// zero-padded past the last written bit.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of bits written so far.
    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn push_bit(&mut self, bit: bool) {
        let byte = (self.bit_len / 8) as usize;
        if byte == self.bytes.len() {
            self.bytes.push(0);
        }
        if bit {
            self.bytes[byte] |= 1 << (7 - (self.bit_len % 8));
        }
        self.bit_len += 1;
    }

    /// Writes the low `count` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, count: u32) {
        debug_assert!(count <= 64);
        for i in (0..count).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    /// Consumes the writer, returning the padded byte buffer.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Reads bits most-significant-first from a byte slice. The reader knows the
/// number of valid bits and reports truncation past that point, so byte
/// padding never leaks into decoded values.
#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Result<Self> {
        if bit_len > bytes.len() as u64 * 8 {
            return Err(Error::Truncation(format!(
                "bit length {bit_len} exceeds the {} available bits",
                bytes.len() as u64 * 8
            )));
        }
        Ok(Self {
            bytes,
            bit_len,
            pos: 0,
        })
    }

    pub fn remaining(&self) -> u64 {
        self.bit_len - self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        if self.pos >= self.bit_len {
            return Err(Error::Truncation(
                "bit source exhausted mid-codeword".into(),
            ));
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = (byte >> (7 - (self.pos % 8))) & 1 == 1;
        self.pos += 1;
        Ok(bit)
    }

    /// Reads `count` bits, most significant first.
    pub fn read_bits(&mut self, count: u32) -> Result<u64> {
        debug_assert!(count <= 64);
        let mut out = 0u64;
        for _ in 0..count {
            out = (out << 1) | self.read_bit()? as u64;
        }
        Ok(out)
    }
}
