//! Per-tensor rate comparison across fixed-length, exp-Golomb, and Huffman
//! coding.

use serde::{Deserialize, Serialize};

use super::blob::eg_payload;
use super::{build_value_map, empirical_entropy, fixed_length_bits, huffman_avg_bits};
use crate::error::{Error, Result};
use crate::tensor;

/// Orders included in every report.
pub const REPORT_EG_ORDERS: usize = 6;

/// Bits-per-parameter comparison of the coding baselines on one tensor.
///
/// Exp-Golomb averages are measured on actually encoded payloads and exclude
/// header/table overhead; `eg_total_bytes` carries the full container size.
/// Compression figures are fractions of the fixed-length size saved,
/// `1 - avg / fl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub param_count: usize,
    pub quant_exponent: i8,
    pub distinct_values: usize,
    pub fl_bits: u32,
    pub entropy_bits: f64,
    pub huffman_avg_bits: f64,
    pub huffman_compress: f64,
    pub eg_avg_bits: Vec<f64>,
    pub eg_compress: Vec<f64>,
    pub eg_total_bytes: Vec<u64>,
    pub eg_best_order: u8,
}

/// Quantizes the tensor once and reports the rate of every baseline coder,
/// with exp-Golomb measured for orders 0 through 5.
pub fn rate_report(params: &[f64], quant_exponent: i8) -> Result<RateReport> {
    if params.is_empty() {
        return Err(Error::Domain("cannot report on an empty tensor".into()));
    }
    let quantized = tensor::quantize(params, i32::from(quant_exponent))?;
    for &q in &quantized {
        if i32::try_from(q).is_err() {
            return Err(Error::Range(format!(
                "quantized value {q} does not fit the 32-bit code table entry"
            )));
        }
    }
    let table = build_value_map(&quantized)?;
    let fl_bits = fixed_length_bits(&quantized)?;
    let entropy_bits = empirical_entropy(&quantized)?;
    let hm_bits = huffman_avg_bits(&quantized)?;
    let n = params.len() as f64;
    let fl = f64::from(fl_bits);

    let mut eg_avg_bits = Vec::with_capacity(REPORT_EG_ORDERS);
    let mut eg_compress = Vec::with_capacity(REPORT_EG_ORDERS);
    let mut eg_total_bytes = Vec::with_capacity(REPORT_EG_ORDERS);
    let header_bytes = (4 + 1 + 1 + 1 + 1 + 8 + 4 + 4 * table.len() + 8) as u64;
    for k in 0..REPORT_EG_ORDERS as u8 {
        let (payload, bit_count) = eg_payload(&quantized, &table, k)?;
        let avg = bit_count as f64 / n;
        eg_avg_bits.push(avg);
        eg_compress.push(1.0 - avg / fl);
        eg_total_bytes.push(header_bytes + payload.len() as u64);
    }
    let eg_best_order = eg_avg_bits
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.total_cmp(b))
        .map(|(k, _)| k as u8)
        .unwrap();

    Ok(RateReport {
        param_count: params.len(),
        quant_exponent,
        distinct_values: table.len(),
        fl_bits,
        entropy_bits,
        huffman_avg_bits: hm_bits,
        huffman_compress: 1.0 - hm_bits / fl,
        eg_avg_bits,
        eg_compress,
        eg_total_bytes,
        eg_best_order,
    })
}
