//! Baseline rates for comparison: Huffman average code length, empirical
//! entropy, and fixed-length bits.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};

/// Symbol counts sorted by symbol value, so downstream float accumulation
/// happens in a reproducible order.
fn count_symbols(quantized: &[i64]) -> Result<Vec<(i64, u64)>> {
    if quantized.is_empty() {
        return Err(Error::Domain("empty symbol sequence".into()));
    }
    let mut counts = HashMap::new();
    for &q in quantized {
        *counts.entry(q).or_insert(0u64) += 1;
    }
    let mut sorted: Vec<(i64, u64)> = counts.into_iter().collect();
    sorted.sort_by_key(|&(value, _)| value);
    Ok(sorted)
}

/// Optimal prefix-code lengths from the empirical frequencies, by the usual
/// sibling-merge construction. Returns `(symbol, frequency, length)` sorted
/// by symbol. A single-symbol alphabet is assigned 1 bit.
pub fn huffman_code_lengths(quantized: &[i64]) -> Result<Vec<(i64, u64, u32)>> {
    let symbols = count_symbols(quantized)?;
    if symbols.len() == 1 {
        let (value, freq) = symbols[0];
        return Ok(vec![(value, freq, 1)]);
    }

    // Leaves get ids 0..n, merge nodes follow. Ties in weight break on id so
    // the tree (and hence the length multiset) is deterministic.
    let n = symbols.len();
    let mut children: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = symbols
        .iter()
        .enumerate()
        .map(|(id, &(_, freq))| Reverse((freq, id)))
        .collect();
    while heap.len() > 1 {
        let Reverse((wa, a)) = heap.pop().unwrap();
        let Reverse((wb, b)) = heap.pop().unwrap();
        let id = children.len();
        children.push(Some((a, b)));
        heap.push(Reverse((wa + wb, id)));
    }
    let Reverse((_, root)) = heap.pop().unwrap();

    let mut depths = vec![0u32; children.len()];
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if let Some((a, b)) = children[node] {
            depths[a] = depths[node] + 1;
            depths[b] = depths[node] + 1;
            stack.push(a);
            stack.push(b);
        }
    }

    Ok(symbols
        .into_iter()
        .enumerate()
        .map(|(id, (value, freq))| (value, freq, depths[id]))
        .collect())
}

/// Average Huffman codeword length in bits per symbol.
pub fn huffman_avg_bits(quantized: &[i64]) -> Result<f64> {
    let lengths = huffman_code_lengths(quantized)?;
    let total: u64 = lengths.iter().map(|&(_, freq, _)| freq).sum();
    let weighted: u64 = lengths
        .iter()
        .map(|&(_, freq, len)| freq * u64::from(len))
        .sum();
    Ok(weighted as f64 / total as f64)
}

/// Shannon entropy of the empirical symbol distribution, in bits per symbol.
pub fn empirical_entropy(quantized: &[i64]) -> Result<f64> {
    let counts = count_symbols(quantized)?;
    let total = quantized.len() as f64;
    let mut h = 0.0;
    for &(_, freq) in &counts {
        let p = freq as f64 / total;
        h -= p * p.log2();
    }
    Ok(h)
}

/// Bits per symbol of a fixed-length code over the values actually present:
/// `ceil(log2(distinct))`, at least 1.
pub fn fixed_length_bits(quantized: &[i64]) -> Result<u32> {
    let distinct = count_symbols(quantized)?.len() as u64;
    if distinct <= 2 {
        return Ok(1);
    }
    Ok(64 - (distinct - 1).leading_zeros())
}
