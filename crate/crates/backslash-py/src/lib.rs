//! Python bindings over the core library: shape fitting, rate measures,
//! quantization/pruning, the entropy codec, and the desk-scale trainer.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict, PyList};

use backslash::codec;
use backslash::error::Error;
use backslash::gg;
use backslash::rate;
use backslash::tensor;
use backslash::trainer;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Estimated generalized-Gaussian parameters of a sample.
#[pyclass(name = "GGFit", frozen)]
struct PyGGFit {
    #[pyo3(get)]
    shape: f64,
    #[pyo3(get)]
    scale: f64,
    #[pyo3(get)]
    rho_hat: f64,
    #[pyo3(get)]
    sample_count: usize,
}

#[pymethods]
impl PyGGFit {
    fn __repr__(&self) -> String {
        format!(
            "GGFit(shape={}, scale={}, rho_hat={}, sample_count={})",
            self.shape, self.scale, self.rho_hat, self.sample_count
        )
    }
}

#[pyfunction]
fn log_gamma(x: f64) -> PyResult<f64> {
    gg::log_gamma(x).map_err(to_py_err)
}

#[pyfunction]
fn gg_pdf(x: f64, shape: f64, scale: f64) -> PyResult<f64> {
    gg::gg_pdf(x, shape, scale).map_err(to_py_err)
}

#[pyfunction]
fn rho(shape: f64) -> PyResult<f64> {
    gg::rho(shape).map_err(to_py_err)
}

#[pyfunction]
fn estimate_rho(params: Vec<f64>) -> PyResult<f64> {
    gg::estimate_rho(&params).map_err(to_py_err)
}

#[pyfunction]
fn solve_shape(rho_hat: f64) -> PyResult<f64> {
    gg::solve_shape(rho_hat).map_err(to_py_err)
}

#[pyfunction]
fn fit_gg(params: Vec<f64>) -> PyResult<PyGGFit> {
    let fit = gg::fit_gg(&params).map_err(to_py_err)?;
    Ok(PyGGFit {
        shape: fit.shape,
        scale: fit.scale,
        rho_hat: fit.rho_hat,
        sample_count: fit.sample_count,
    })
}

#[pyfunction]
fn dggr(params: Vec<f64>, shape: f64) -> PyResult<f64> {
    rate::dggr(&params, shape).map_err(to_py_err)
}

#[pyfunction]
fn soft_rate(params: Vec<f64>, shape: f64, epsilon: f64) -> PyResult<f64> {
    rate::soft_rate(&params, shape, epsilon).map_err(to_py_err)
}

#[pyfunction]
fn soft_rate_grad(params: Vec<f64>, shape: f64, epsilon: f64) -> PyResult<Vec<f64>> {
    rate::soft_rate_grad(&params, shape, epsilon).map_err(to_py_err)
}

#[pyfunction]
fn rd_cost(distortion: f64, rate_value: f64, lambda: f64) -> PyResult<f64> {
    rate::rd_cost(distortion, rate_value, lambda).map_err(to_py_err)
}

#[pyfunction]
fn quantize(params: Vec<f64>, n: i32) -> PyResult<Vec<i64>> {
    tensor::quantize(&params, n).map_err(to_py_err)
}

#[pyfunction]
fn dequantize(quantized: Vec<i64>, n: i32) -> Vec<f64> {
    tensor::dequantize(&quantized, n)
}

#[pyfunction]
fn prune(params: Vec<f64>, rate: f64) -> PyResult<Vec<f64>> {
    tensor::prune(&params, rate).map_err(to_py_err)
}

#[pyfunction]
fn eg_codeword(value: u64, k: u8) -> PyResult<String> {
    codec::eg_codeword(value, k).map_err(to_py_err)
}

#[pyfunction]
fn huffman_avg_bits(quantized: Vec<i64>) -> PyResult<f64> {
    codec::huffman_avg_bits(&quantized).map_err(to_py_err)
}

#[pyfunction]
fn empirical_entropy(quantized: Vec<i64>) -> PyResult<f64> {
    codec::empirical_entropy(&quantized).map_err(to_py_err)
}

#[pyfunction]
fn fixed_length_bits(quantized: Vec<i64>) -> PyResult<u32> {
    codec::fixed_length_bits(&quantized).map_err(to_py_err)
}

/// Serializes a tensor into the "GGEG" compressed-blob byte format.
#[pyfunction]
fn encode_tensor<'py>(
    py: Python<'py>,
    params: Vec<f64>,
    quant_exponent: i8,
    eg_order: u8,
) -> PyResult<Bound<'py, PyBytes>> {
    let blob = codec::encode_tensor(&params, quant_exponent, eg_order).map_err(to_py_err)?;
    Ok(PyBytes::new(py, &blob.to_bytes()))
}

/// Quantized values of a serialized blob, in their original order.
#[pyfunction]
fn decode_quantized(blob: Vec<u8>) -> PyResult<Vec<i64>> {
    let blob = codec::EncodedBlob::from_bytes(&blob).map_err(to_py_err)?;
    codec::decode_tensor(&blob).map_err(to_py_err)
}

/// Dequantized (real-valued) contents of a serialized blob.
#[pyfunction]
fn decode_tensor(blob: Vec<u8>) -> PyResult<Vec<f64>> {
    let blob = codec::EncodedBlob::from_bytes(&blob).map_err(to_py_err)?;
    let quantized = codec::decode_tensor(&blob).map_err(to_py_err)?;
    Ok(tensor::dequantize(&quantized, i32::from(blob.quant_exponent)))
}

#[pyfunction]
fn blob_info<'py>(py: Python<'py>, blob: Vec<u8>) -> PyResult<Bound<'py, PyDict>> {
    let blob = codec::EncodedBlob::from_bytes(&blob).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("eg_order", blob.eg_order)?;
    d.set_item("quant_exponent", blob.quant_exponent)?;
    d.set_item("param_count", blob.param_count)?;
    d.set_item("table_len", blob.code_table.len())?;
    d.set_item("payload_bit_count", blob.payload_bit_count)?;
    d.set_item("total_bytes", blob.total_bytes())?;
    Ok(d)
}

#[pyfunction]
fn rate_report<'py>(
    py: Python<'py>,
    params: Vec<f64>,
    quant_exponent: i8,
) -> PyResult<Bound<'py, PyDict>> {
    let report = codec::rate_report(&params, quant_exponent).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("param_count", report.param_count)?;
    d.set_item("quant_exponent", report.quant_exponent)?;
    d.set_item("distinct_values", report.distinct_values)?;
    d.set_item("fl_bits", report.fl_bits)?;
    d.set_item("entropy_bits", report.entropy_bits)?;
    d.set_item("huffman_avg_bits", report.huffman_avg_bits)?;
    d.set_item("huffman_compress", report.huffman_compress)?;
    d.set_item("eg_avg_bits", report.eg_avg_bits)?;
    d.set_item("eg_compress", report.eg_compress)?;
    d.set_item("eg_total_bytes", report.eg_total_bytes)?;
    d.set_item("eg_best_order", report.eg_best_order)?;
    Ok(d)
}

fn parse_shape_mode(s: &str) -> PyResult<rate::ShapeMode> {
    if s == "adaptive" {
        return Ok(rate::ShapeMode::Adaptive);
    }
    if let Some(rest) = s.strip_prefix("fixed:") {
        let nu: f64 = rest
            .parse()
            .map_err(|_| PyValueError::new_err(format!("'{rest}' is not a number")))?;
        return Ok(rate::ShapeMode::Fixed(nu));
    }
    Err(PyValueError::new_err(
        "shape_mode must be 'adaptive' or 'fixed:<shape>'",
    ))
}

/// Trains the built-in classifier on the synthetic blob task and returns the
/// per-epoch metric records. Optionally saves the trained model archive.
#[pyfunction]
#[pyo3(signature = (
    classes, per_class, dim, spread, hidden,
    lambda_ = 0.0, epsilon = 1e-3, learning_rate = 0.05, epochs = 40,
    batch_size = 32, seed = 7, shape_mode = "adaptive",
    include_biases = true, data_seed = None, model_out = None,
))]
#[allow(clippy::too_many_arguments)]
fn train_blobs<'py>(
    py: Python<'py>,
    classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
    hidden: Vec<usize>,
    lambda_: f64,
    epsilon: f64,
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    shape_mode: &str,
    include_biases: bool,
    data_seed: Option<u64>,
    model_out: Option<String>,
) -> PyResult<Bound<'py, PyList>> {
    let dataset = trainer::gen_blobs(classes, per_class, dim, spread, data_seed.unwrap_or(seed))
        .map_err(to_py_err)?;
    let cfg = trainer::TrainConfig {
        hidden_dims: hidden,
        lambda: lambda_,
        epsilon,
        learning_rate,
        epochs,
        batch_size,
        seed,
        shape_mode: parse_shape_mode(shape_mode)?,
        include_biases,
    };
    let (model, metrics) = trainer::train(&cfg, &dataset).map_err(to_py_err)?;
    if let Some(path) = model_out {
        tensor::save_tensors(path, &model.to_tensors()).map_err(to_py_err)?;
    }
    let records = PyList::empty(py);
    for rec in &metrics.records {
        let d = PyDict::new(py);
        d.set_item("epoch", rec.epoch)?;
        d.set_item("distortion", rec.distortion)?;
        d.set_item("rate", rec.rate)?;
        d.set_item("cost", rec.cost)?;
        d.set_item("log_cost", rec.log_cost)?;
        d.set_item("shape", rec.shape)?;
        d.set_item("train_accuracy", rec.train_accuracy)?;
        d.set_item("test_accuracy", rec.test_accuracy)?;
        d.set_item("eg0_avg_bits", rec.eg0_avg_bits)?;
        records.append(d)?;
    }
    Ok(records)
}

#[pymodule]
fn backslash_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGGFit>()?;
    m.add_function(wrap_pyfunction!(log_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(gg_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_rho, m)?)?;
    m.add_function(wrap_pyfunction!(solve_shape, m)?)?;
    m.add_function(wrap_pyfunction!(fit_gg, m)?)?;
    m.add_function(wrap_pyfunction!(dggr, m)?)?;
    m.add_function(wrap_pyfunction!(soft_rate, m)?)?;
    m.add_function(wrap_pyfunction!(soft_rate_grad, m)?)?;
    m.add_function(wrap_pyfunction!(rd_cost, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(dequantize, m)?)?;
    m.add_function(wrap_pyfunction!(prune, m)?)?;
    m.add_function(wrap_pyfunction!(eg_codeword, m)?)?;
    m.add_function(wrap_pyfunction!(huffman_avg_bits, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_length_bits, m)?)?;
    m.add_function(wrap_pyfunction!(encode_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(decode_quantized, m)?)?;
    m.add_function(wrap_pyfunction!(decode_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(blob_info, m)?)?;
    m.add_function(wrap_pyfunction!(rate_report, m)?)?;
    m.add_function(wrap_pyfunction!(train_blobs, m)?)?;
    Ok(())
}
