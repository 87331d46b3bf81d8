//! Entropy coding of quantized parameter tensors: frequency-rank value
//! mapping, exp-Golomb bitstreams, the self-describing blob container, and
//! Huffman / fixed-length / entropy baselines.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub mod bits;
mod blob;
mod eg;
mod huffman;
mod report;

pub use blob::{decode_tensor, encode_tensor, EncodedBlob};
pub use eg::{eg_codeword, eg_codeword_len, eg_decode, eg_encode, MAX_EG_ORDER};
pub use huffman::{empirical_entropy, fixed_length_bits, huffman_avg_bits, huffman_code_lengths};
pub use report::{rate_report, RateReport};

/// The value mapping: distinct quantized values ordered by frequency, so
/// that frequent values take the shortest codewords. Rank 0 is the most
/// frequent value; frequency ties break on smaller magnitude, then on the
/// smaller signed value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeTable {
    ranked: Vec<i64>,
    lookup: HashMap<i64, u32>,
}

impl CodeTable {
    /// Builds a table from an explicit rank ordering. Fails on duplicates.
    pub fn from_ranked_values(ranked: Vec<i64>) -> Result<Self> {
        if ranked.len() > u32::MAX as usize {
            return Err(Error::Range("code table exceeds 2^32 entries".into()));
        }
        let mut lookup = HashMap::with_capacity(ranked.len());
        for (rank, &value) in ranked.iter().enumerate() {
            if lookup.insert(value, rank as u32).is_some() {
                return Err(Error::Corruption(format!(
                    "duplicate value {value} in code table"
                )));
            }
        }
        Ok(Self { ranked, lookup })
    }

    pub fn ranked_values(&self) -> &[i64] {
        &self.ranked
    }

    pub fn rank_of(&self, value: i64) -> Option<u32> {
        self.lookup.get(&value).copied()
    }

    pub fn value_at(&self, rank: u32) -> Option<i64> {
        self.ranked.get(rank as usize).copied()
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

/// Ranks the distinct values of a quantized tensor by frequency.
pub fn build_value_map(quantized: &[i64]) -> Result<CodeTable> {
    if quantized.is_empty() {
        return Err(Error::Domain("cannot build a value map of nothing".into()));
    }
    let mut counts: HashMap<i64, u64> = HashMap::new();
    for &q in quantized {
        *counts.entry(q).or_insert(0) += 1;
    }
    let mut entries: Vec<(i64, u64)> = counts.into_iter().collect();
    entries.sort_by(|&(va, ca), &(vb, cb)| {
        cb.cmp(&ca)
            .then(va.unsigned_abs().cmp(&vb.unsigned_abs()))
            .then(va.cmp(&vb))
    });
    CodeTable::from_ranked_values(entries.into_iter().map(|(v, _)| v).collect())
}
