//! Exp-Golomb codes of order `k`.
//!
//! A value `v` is coded through `m = v + 2^k`: first `bitlength(m) - k - 1`
//! zero bits, then `m` in binary. Order 0 is the classic Elias-gamma-style
//! code whose first codewords are `1, 010, 011, 00100, ...`; higher orders
//! trade a longer minimum codeword for slower growth.

use super::bits::{BitReader, BitWriter};
use crate::error::{Error, Result};

/// Largest supported code order.
pub const MAX_EG_ORDER: u8 = 31;

fn check_order(k: u8) -> Result<()> {
    if k > MAX_EG_ORDER {
        return Err(Error::Domain(format!(
            "exp-Golomb order must be <= {MAX_EG_ORDER}, got {k}"
        )));
    }
    Ok(())
}

/// Appends the order-`k` codeword for `value` to the writer.
pub fn eg_encode(value: u64, k: u8, writer: &mut BitWriter) -> Result<()> {
    check_order(k)?;
    let m = value
        .checked_add(1u64 << k)
        .filter(|m| *m < (1u64 << 63))
        .ok_or_else(|| {
            Error::Range(format!("value {value} too large for order-{k} exp-Golomb"))
        })?;
    let bits = 64 - m.leading_zeros();
    writer.push_bits(0, bits - u32::from(k) - 1);
    writer.push_bits(m, bits);
    Ok(())
}

/// Codeword length in bits: `2 * floor(log2(value + 2^k)) - k + 1`.
pub fn eg_codeword_len(value: u64, k: u8) -> Result<u32> {
    check_order(k)?;
    let m = value
        .checked_add(1u64 << k)
        .filter(|m| *m < (1u64 << 63))
        .ok_or_else(|| {
            Error::Range(format!("value {value} too large for order-{k} exp-Golomb"))
        })?;
    let bits = 64 - m.leading_zeros();
    Ok(2 * bits - u32::from(k) - 1)
}

/// Reads one order-`k` codeword from the bit source.
pub fn eg_decode(reader: &mut BitReader<'_>, k: u8) -> Result<u64> {
    check_order(k)?;
    let mut zeros = 0u32;
    while !reader.read_bit()? {
        zeros += 1;
        if zeros > 62 - u32::from(k) {
            return Err(Error::Corruption(
                "exp-Golomb prefix longer than any representable codeword".into(),
            ));
        }
    }
    let rest = reader.read_bits(zeros + u32::from(k))?;
    let m = (1u64 << (zeros + u32::from(k))) | rest;
    Ok(m - (1u64 << k))
}

/// Codeword rendered as a `'0'`/`'1'` string; handy for inspection.
pub fn eg_codeword(value: u64, k: u8) -> Result<String> {
    let mut w = BitWriter::new();
    eg_encode(value, k, &mut w)?;
    let bit_len = w.bit_len();
    let bytes = w.into_bytes();
    let mut s = String::with_capacity(bit_len as usize);
    for i in 0..bit_len {
        let bit = (bytes[(i / 8) as usize] >> (7 - (i % 8))) & 1;
        s.push(if bit == 1 { '1' } else { '0' });
    }
    Ok(s)
}
