//! The self-describing compressed artifact: header, code table, exp-Golomb
//! payload.
//!
//! On-disk layout, all integers little-endian:
//! `magic "GGEG" | version u8 | eg_order u8 | quant_exponent i8 | reserved u8
//! | param_count u64 | table_len u32 | table entries i32 each | payload_bit_count u64
//! | payload bytes (bits MSB-first within each byte)`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::bits::{BitReader, BitWriter};
use super::{build_value_map, eg, CodeTable};
use crate::error::{Error, Result};
use crate::tensor;

const MAGIC: &[u8; 4] = b"GGEG";
const VERSION: u8 = 1;

/// A compressed parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBlob {
    pub eg_order: u8,
    pub quant_exponent: i8,
    pub param_count: u64,
    pub code_table: CodeTable,
    pub payload_bit_count: u64,
    pub payload: Vec<u8>,
}

impl EncodedBlob {
    /// Serialized size in bytes, header and table included.
    pub fn total_bytes(&self) -> usize {
        4 + 1 + 1 + 1 + 1 + 8 + 4 + 4 * self.code_table.len() + 8 + self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.total_bytes());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.eg_order);
        out.push(self.quant_exponent as u8);
        out.push(0); // reserved
        out.extend_from_slice(&self.param_count.to_le_bytes());
        out.extend_from_slice(&(self.code_table.len() as u32).to_le_bytes());
        for &v in self.code_table.ranked_values() {
            out.extend_from_slice(&(v as i32).to_le_bytes());
        }
        out.extend_from_slice(&self.payload_bit_count.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:02x?}, expected \"GGEG\"",
                magic
            )));
        }
        let version = cur.take(1, "version")?[0];
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let eg_order = cur.take(1, "code order")?[0];
        if eg_order > eg::MAX_EG_ORDER {
            return Err(Error::Format(format!("code order {eg_order} out of range")));
        }
        let quant_exponent = cur.take(1, "quantization exponent")?[0] as i8;
        cur.take(1, "reserved byte")?;
        let param_count = u64::from_le_bytes(cur.take(8, "parameter count")?.try_into().unwrap());
        let table_len = u32::from_le_bytes(cur.take(4, "table length")?.try_into().unwrap());
        let mut ranked = Vec::with_capacity(table_len.min(1 << 20) as usize);
        for _ in 0..table_len {
            let v = i32::from_le_bytes(cur.take(4, "table entry")?.try_into().unwrap());
            ranked.push(i64::from(v));
        }
        let code_table = CodeTable::from_ranked_values(ranked)?;
        let payload_bit_count =
            u64::from_le_bytes(cur.take(8, "payload bit count")?.try_into().unwrap());
        let payload_bytes = payload_bit_count.div_ceil(8);
        if payload_bytes > (bytes.len() - cur.pos) as u64 {
            return Err(Error::Truncation(format!(
                "payload needs {payload_bytes} bytes, {} remain",
                bytes.len() - cur.pos
            )));
        }
        let payload = cur.take(payload_bytes as usize, "payload")?.to_vec();
        if cur.pos != bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after payload",
                bytes.len() - cur.pos
            )));
        }
        Ok(Self {
            eg_order,
            quant_exponent,
            param_count,
            code_table,
            payload_bit_count,
            payload,
        })
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncation(format!("blob ends inside {what}")));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

/// Exp-Golomb payload over the rank indices of `quantized` under `table`.
pub(super) fn eg_payload(quantized: &[i64], table: &CodeTable, k: u8) -> Result<(Vec<u8>, u64)> {
    let mut w = BitWriter::new();
    for &q in quantized {
        let rank = table
            .rank_of(q)
            .ok_or_else(|| Error::Corruption(format!("value {q} missing from code table")))?;
        eg::eg_encode(u64::from(rank), k, &mut w)?;
    }
    let bit_len = w.bit_len();
    Ok((w.into_bytes(), bit_len))
}

/// Quantizes a tensor and entropy-codes it: quantize, rank values by
/// frequency, code the ranks.
pub fn encode_tensor(params: &[f64], quant_exponent: i8, eg_order: u8) -> Result<EncodedBlob> {
    if params.is_empty() {
        return Err(Error::Domain("cannot encode an empty tensor".into()));
    }
    if eg_order > eg::MAX_EG_ORDER {
        return Err(Error::Domain(format!(
            "exp-Golomb order must be <= {}, got {eg_order}",
            eg::MAX_EG_ORDER
        )));
    }
    let quantized = tensor::quantize(params, i32::from(quant_exponent))?;
    for &q in &quantized {
        if i32::try_from(q).is_err() {
            return Err(Error::Range(format!(
                "quantized value {q} does not fit the 32-bit code table entry"
            )));
        }
    }
    let code_table = build_value_map(&quantized)?;
    let (payload, payload_bit_count) = eg_payload(&quantized, &code_table, eg_order)?;
    Ok(EncodedBlob {
        eg_order,
        quant_exponent,
        param_count: params.len() as u64,
        code_table,
        payload_bit_count,
        payload,
    })
}

/// Decodes the quantized values of a blob, in their original order.
/// Mapping back to reals is [`tensor::dequantize`]'s job.
pub fn decode_tensor(blob: &EncodedBlob) -> Result<Vec<i64>> {
    let count = usize::try_from(blob.param_count)
        .map_err(|_| Error::Corruption("parameter count exceeds memory".into()))?;
    let mut reader = BitReader::new(&blob.payload, blob.payload_bit_count)?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = eg::eg_decode(&mut reader, blob.eg_order)?;
        let rank = u32::try_from(rank)
            .map_err(|_| Error::Corruption(format!("rank {rank} beyond any table")))?;
        let value = blob
            .code_table
            .value_at(rank)
            .ok_or_else(|| Error::Corruption(format!(
                "rank {rank} beyond the {}-entry code table",
                blob.code_table.len()
            )))?;
        out.push(value);
    }
    Ok(out)
}
