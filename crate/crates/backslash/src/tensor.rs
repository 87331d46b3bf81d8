//! Parameter tensor container ("GGRT" files), quantization, and magnitude
//! pruning.
//!
//! A GGRT record is `magic "GGRT" | version u8 | dtype u8 (1 = f64 LE) |
//! name_len u16 LE | name | ndims u8 | dims u64 LE each | values f64 LE`.
//! Several records concatenated in one file form a multi-tensor archive,
//! which is how trained models are stored (one weight and one bias record
//! per layer).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GGRT";
const VERSION: u8 = 1;
const DTYPE_F64: u8 = 1;

/// A named tensor of finite values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterTensor {
    name: String,
    dims: Vec<u64>,
    values: Vec<f64>,
}

impl ParameterTensor {
    pub fn new(name: impl Into<String>, dims: Vec<u64>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if name.len() > u16::MAX as usize {
            return Err(Error::Domain("tensor name longer than 65535 bytes".into()));
        }
        if dims.is_empty() || dims.len() > u8::MAX as usize {
            return Err(Error::Shape(format!(
                "tensor needs 1..=255 dimensions, got {}",
                dims.len()
            )));
        }
        let mut product: u64 = 1;
        for &d in &dims {
            if d == 0 {
                return Err(Error::Shape("zero-length dimension".into()));
            }
            product = product
                .checked_mul(d)
                .ok_or_else(|| Error::Shape("dimension product overflows".into()))?;
        }
        if product != values.len() as u64 {
            return Err(Error::Shape(format!(
                "dims {:?} imply {} values, got {}",
                dims,
                product,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite tensor value {bad}")));
        }
        Ok(Self { name, dims, values })
    }

    /// One-dimensional tensor over the given values.
    pub fn flat(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let len = values.len() as u64;
        Self::new(name, vec![len], values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn param_count(&self) -> usize {
        self.values.len()
    }
}

fn write_record(w: &mut impl Write, t: &ParameterTensor) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION, DTYPE_F64])?;
    w.write_all(&(t.name.len() as u16).to_le_bytes())?;
    w.write_all(t.name.as_bytes())?;
    w.write_all(&[t.dims.len() as u8])?;
    for &d in &t.dims {
        w.write_all(&d.to_le_bytes())?;
    }
    for &v in &t.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact_or(r: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Truncation(format!("file ended inside {what}")))
}

/// Reads one GGRT record, or `None` on clean end-of-stream.
fn read_record(r: &mut impl Read) -> Result<Option<ParameterTensor>> {
    let mut magic = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        let n = r.read(&mut magic[got..])?;
        if n == 0 {
            if got == 0 {
                return Ok(None);
            }
            return Err(Error::Truncation("file ended inside record magic".into()));
        }
        got += n;
    }
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:02x?}, expected \"GGRT\"",
            magic
        )));
    }
    let mut header = [0u8; 2];
    read_exact_or(r, &mut header, "record header")?;
    if header[0] != VERSION {
        return Err(Error::Format(format!("unsupported version {}", header[0])));
    }
    if header[1] != DTYPE_F64 {
        return Err(Error::Format(format!("unsupported dtype {}", header[1])));
    }
    let mut len2 = [0u8; 2];
    read_exact_or(r, &mut len2, "name length")?;
    let name_len = u16::from_le_bytes(len2) as usize;
    let mut name_buf = vec![0u8; name_len];
    read_exact_or(r, &mut name_buf, "tensor name")?;
    let name = String::from_utf8(name_buf)
        .map_err(|_| Error::Format("tensor name is not valid UTF-8".into()))?;
    let mut ndims = [0u8; 1];
    read_exact_or(r, &mut ndims, "dimension count")?;
    if ndims[0] == 0 {
        return Err(Error::Format("record declares zero dimensions".into()));
    }
    let mut dims = Vec::with_capacity(ndims[0] as usize);
    let mut product: u64 = 1;
    for _ in 0..ndims[0] {
        let mut d = [0u8; 8];
        read_exact_or(r, &mut d, "dimension")?;
        let dim = u64::from_le_bytes(d);
        product = product
            .checked_mul(dim)
            .ok_or_else(|| Error::Format("dimension product overflows".into()))?;
        dims.push(dim);
    }
    let mut values = Vec::with_capacity(product.min(1 << 24) as usize);
    for _ in 0..product {
        let mut v = [0u8; 8];
        read_exact_or(r, &mut v, "tensor values")?;
        values.push(f64::from_le_bytes(v));
    }
    ParameterTensor::new(name, dims, values).map(Some).map_err(|e| match e {
        Error::Shape(msg) | Error::Domain(msg) => Error::Format(msg),
        other => other,
    })
}

/// Writes tensors as consecutive GGRT records.
pub fn save_tensors(path: impl AsRef<Path>, tensors: &[ParameterTensor]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in tensors {
        write_record(&mut w, t)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a single GGRT record.
pub fn save_tensor(path: impl AsRef<Path>, tensor: &ParameterTensor) -> Result<()> {
    save_tensors(path, std::slice::from_ref(tensor))
}

/// Reads every GGRT record in the file; errors if there are none.
pub fn load_tensors(path: impl AsRef<Path>) -> Result<Vec<ParameterTensor>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut tensors = Vec::new();
    while let Some(t) = read_record(&mut r)? {
        tensors.push(t);
    }
    if tensors.is_empty() {
        return Err(Error::Format("file holds no GGRT records".into()));
    }
    Ok(tensors)
}

/// Reads a file expected to hold exactly one GGRT record.
pub fn load_tensor(path: impl AsRef<Path>) -> Result<ParameterTensor> {
    let mut tensors = load_tensors(path)?;
    if tensors.len() != 1 {
        return Err(Error::Format(format!(
            "expected one GGRT record, found {}",
            tensors.len()
        )));
    }
    Ok(tensors.pop().unwrap())
}

/// Quantizes to integer grid indices: `round(2^n * value)`, rounding halves
/// away from zero.
pub fn quantize(params: &[f64], n: i32) -> Result<Vec<i64>> {
    let step_inv = (2.0f64).powi(n);
    params
        .iter()
        .map(|&p| {
            if !p.is_finite() {
                return Err(Error::Domain(format!("non-finite value {p}")));
            }
            let scaled = (p * step_inv).round();
            if scaled.abs() >= 9.223_372_036_854_776e18 {
                return Err(Error::Range(format!(
                    "quantized magnitude of {p} overflows 63 bits at exponent {n}"
                )));
            }
            Ok(scaled as i64)
        })
        .collect()
}

/// Maps grid indices back to reals: `q * 2^-n`.
pub fn dequantize(quantized: &[i64], n: i32) -> Vec<f64> {
    let step = (2.0f64).powi(-n);
    quantized.iter().map(|&q| q as f64 * step).collect()
}

/// Global magnitude pruning: zeroes the `floor(rate * n)` values of smallest
/// magnitude. Magnitude ties are pruned in index order.
pub fn prune(params: &[f64], rate: f64) -> Result<Vec<f64>> {
    if !rate.is_finite() || !(0.0..=1.0).contains(&rate) {
        return Err(Error::Domain(format!(
            "pruning rate must lie in [0, 1], got {rate}"
        )));
    }
    let n = params.len();
    let count = ((rate * n as f64).floor() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        params[a]
            .abs()
            .total_cmp(&params[b].abs())
            .then(a.cmp(&b))
    });
    let mut out = params.to_vec();
    for &i in &order[..count] {
        out[i] = 0.0;
    }
    Ok(out)
}
