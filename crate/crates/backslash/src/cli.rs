//! Subcommand surface over the library: fit, train, encode, decode,
//! quantize, prune, evaluate, rate-report.
//!
//! Exit codes: 0 success, 1 usage error, 2 format/data error, 3 training
//! divergence.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use backslash::codec::{decode_tensor, encode_tensor, rate_report, EncodedBlob};
use backslash::error::Error;
use backslash::gg::fit_gg;
use backslash::rate::ShapeMode;
use backslash::tensor::{
    dequantize, load_tensors, prune, quantize, save_tensor, save_tensors, ParameterTensor,
};
use backslash::trainer::{evaluate, gen_blobs, train, Dataset, Model, TrainConfig};

#[derive(Parser)]
#[command(
    name = "backslash",
    version,
    about = "Rate-constrained training and parameter entropy coding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a generalized-Gaussian shape to a GGRT tensor file
    Fit {
        /// Tensor file; archives are fitted over all records jointly
        tensor: PathBuf,
        /// Emit one JSON record instead of human-readable lines
        #[arg(long)]
        json: bool,
    },
    /// Train the built-in classifier on the synthetic blob task
    Train(TrainArgs),
    /// Entropy-encode a tensor file into a compressed blob
    Encode {
        tensor: PathBuf,
        /// Quantization exponent n; the step is 2^-n
        #[arg(long, default_value_t = 8)]
        quant_exp: i8,
        /// Exp-Golomb code order k
        #[arg(long, default_value_t = 0)]
        eg_order: u8,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Decode a compressed blob into a GGRT tensor of dequantized values
    Decode {
        blob: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compare fixed-length, exp-Golomb, and Huffman rates on a tensor
    RateReport {
        tensor: PathBuf,
        /// Quantization exponent n; the step is 2^-n
        #[arg(long, default_value_t = 8)]
        quant_exp: i8,
        #[arg(long)]
        json: bool,
    },
    /// Snap tensor values to a quantization grid, or sweep steps vs accuracy
    Quantize(QuantizeArgs),
    /// Zero the smallest-magnitude fraction of values, or sweep rates vs accuracy
    Prune(PruneArgs),
    /// Accuracy of a trained model archive on a regenerated blob dataset
    Evaluate(EvaluateArgs),
}

/// Flags describing the synthetic blob dataset.
#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 500)]
    per_class: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    /// Dataset seed; defaults to --seed
    #[arg(long)]
    data_seed: Option<u64>,
}

impl DataArgs {
    fn build(&self, fallback_seed: u64) -> Result<Dataset, CliError> {
        gen_blobs(
            self.classes,
            self.per_class,
            self.dim,
            self.spread,
            self.data_seed.unwrap_or(fallback_seed),
        )
        .map_err(usage)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Hidden layer widths, comma separated
    #[arg(long, value_delimiter = ',', default_value = "32,16")]
    hidden: Vec<usize>,
    /// Lagrange multiplier weighting the rate term
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Soft-clipping constant in the rate term
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Master seed for initialization, shuffling, and (by default) the data
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// "adaptive" or "fixed:<shape>"
    #[arg(long, default_value = "adaptive", value_parser = parse_shape_mode)]
    shape_mode: ShapeMode,
    /// Exclude biases from the rate term
    #[arg(long)]
    no_bias_rate: bool,
    /// Write the trained model as a GGRT archive
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Write per-epoch metrics, one JSON record per line
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct QuantizeArgs {
    /// Tensor or model archive to transform
    tensor: PathBuf,
    /// Quantization exponent n for file mode; the step is 2^-n
    #[arg(long)]
    quant_exp: Option<i8>,
    /// Output file for file mode
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Sweep mode: comma list of exponents, evaluated against the dataset
    #[arg(long, value_delimiter = ',')]
    steps: Vec<i8>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PruneArgs {
    /// Tensor or model archive to transform
    tensor: PathBuf,
    /// Fraction of values to zero in file mode
    #[arg(long)]
    rate: Option<f64>,
    /// Output file for file mode
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Sweep mode: comma list of rates, evaluated against the dataset
    #[arg(long, value_delimiter = ',')]
    rates: Vec<f64>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Trained model archive
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
    split: SplitChoice,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SplitChoice {
    Train,
    Test,
    Both,
}

fn parse_shape_mode(s: &str) -> Result<ShapeMode, String> {
    if s == "adaptive" {
        return Ok(ShapeMode::Adaptive);
    }
    if let Some(rest) = s.strip_prefix("fixed:") {
        let nu: f64 = rest
            .parse()
            .map_err(|_| format!("'{rest}' is not a number"))?;
        return Ok(ShapeMode::Fixed(nu));
    }
    Err("expected 'adaptive' or 'fixed:<shape>'".into())
}

enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses arguments, runs the command, and returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence { .. } => 3,
                _ => 2,
            }
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fit { tensor, json } => cmd_fit(&tensor, json),
        Command::Train(args) => cmd_train(args),
        Command::Encode {
            tensor,
            quant_exp,
            eg_order,
            out,
            json,
        } => cmd_encode(&tensor, quant_exp, eg_order, &out, json),
        Command::Decode { blob, out, json } => cmd_decode(&blob, &out, json),
        Command::RateReport {
            tensor,
            quant_exp,
            json,
        } => cmd_rate_report(&tensor, quant_exp, json),
        Command::Quantize(args) => cmd_quantize(args),
        Command::Prune(args) => cmd_prune(args),
        Command::Evaluate(args) => cmd_evaluate(args),
    }
}

/// All values of an archive, flattened in record order.
fn load_flat_params(path: &Path) -> Result<Vec<f64>, CliError> {
    let tensors = load_tensors(path)?;
    let mut out = Vec::new();
    for t in &tensors {
        out.extend_from_slice(t.values());
    }
    Ok(out)
}

/// Applies a whole-model transform to the concatenated values of an archive
/// and splits the result back into identically shaped records.
fn transform_records(
    tensors: &[ParameterTensor],
    f: impl FnOnce(&[f64]) -> Result<Vec<f64>, Error>,
) -> Result<Vec<ParameterTensor>, CliError> {
    let mut flat = Vec::new();
    for t in tensors {
        flat.extend_from_slice(t.values());
    }
    let transformed = f(&flat)?;
    debug_assert_eq!(transformed.len(), flat.len());
    let mut out = Vec::with_capacity(tensors.len());
    let mut cursor = 0usize;
    for t in tensors {
        let n = t.param_count();
        out.push(ParameterTensor::new(
            t.name().to_string(),
            t.dims().to_vec(),
            transformed[cursor..cursor + n].to_vec(),
        )?);
        cursor += n;
    }
    Ok(out)
}

fn cmd_fit(tensor: &Path, json: bool) -> Result<(), CliError> {
    let params = load_flat_params(tensor)?;
    let fit = fit_gg(&params)?;
    if json {
        println!("{}", serde_json::to_string(&fit).expect("fit serializes"));
    } else {
        println!("shape:        {:.6}", fit.shape);
        println!("scale:        {:.6e}", fit.scale);
        println!("rho_hat:      {:.6}", fit.rho_hat);
        println!("sample_count: {}", fit.sample_count);
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let cfg = TrainConfig {
        hidden_dims: args.hidden,
        lambda: args.lambda,
        epsilon: args.epsilon,
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        shape_mode: args.shape_mode,
        include_biases: !args.no_bias_rate,
    };
    cfg.validate().map_err(usage)?;
    let dataset = args.data.build(args.seed)?;
    let (model, metrics) = train(&cfg, &dataset)?;
    if let Some(path) = &args.model_out {
        save_tensors(path, &model.to_tensors())?;
    }
    if let Some(path) = &args.metrics_out {
        std::fs::write(path, metrics.to_jsonl()).map_err(Error::from)?;
    }
    let last = metrics.final_record();
    if args.json {
        println!(
            "{}",
            serde_json::to_string(last).expect("record serializes")
        );
    } else {
        println!("epochs:         {}", metrics.records.len());
        println!("final cost:     {:.6}", last.cost);
        println!("final shape:    {:.4}", last.shape);
        println!("train accuracy: {:.4}", last.train_accuracy);
        println!("test accuracy:  {:.4}", last.test_accuracy);
        println!("EG k=0 bits:    {:.4}", last.eg0_avg_bits);
    }
    Ok(())
}

fn cmd_encode(
    tensor: &Path,
    quant_exp: i8,
    eg_order: u8,
    out: &Path,
    json: bool,
) -> Result<(), CliError> {
    let params = load_flat_params(tensor)?;
    let blob = encode_tensor(&params, quant_exp, eg_order)?;
    blob.write_to(out)?;
    let avg = blob.payload_bit_count as f64 / blob.param_count as f64;
    if json {
        println!(
            "{}",
            serde_json::json!({
                "param_count": blob.param_count,
                "quant_exp": quant_exp,
                "eg_order": eg_order,
                "payload_bits": blob.payload_bit_count,
                "avg_bits": avg,
                "total_bytes": blob.total_bytes(),
            })
        );
    } else {
        println!(
            "encoded {} params at step 2^-{quant_exp}, order {eg_order}: {:.4} bits/param, {} bytes total",
            blob.param_count,
            avg,
            blob.total_bytes()
        );
    }
    Ok(())
}

fn cmd_decode(blob_path: &Path, out: &Path, json: bool) -> Result<(), CliError> {
    let blob = EncodedBlob::read_from(blob_path)?;
    let quantized = decode_tensor(&blob)?;
    if quantized.is_empty() {
        return Err(CliError::Data(Error::Format(
            "blob holds no parameters; nothing to write".into(),
        )));
    }
    let values = dequantize(&quantized, i32::from(blob.quant_exponent));
    let tensor = ParameterTensor::flat("decoded", values)?;
    save_tensor(out, &tensor)?;
    if json {
        println!(
            "{}",
            serde_json::json!({
                "param_count": tensor.param_count(),
                "quant_exp": blob.quant_exponent,
            })
        );
    } else {
        println!(
            "decoded {} params at step 2^-{}",
            tensor.param_count(),
            blob.quant_exponent
        );
    }
    Ok(())
}

fn cmd_rate_report(tensor: &Path, quant_exp: i8, json: bool) -> Result<(), CliError> {
    let params = load_flat_params(tensor)?;
    let report = rate_report(&params, quant_exp)?;
    if json {
        println!(
            "{}",
            serde_json::to_string(&report).expect("report serializes")
        );
        return Ok(());
    }
    println!("params:          {}", report.param_count);
    println!("distinct values: {}", report.distinct_values);
    println!("FL bits/param:   {}", report.fl_bits);
    println!("entropy bits:    {:.4}", report.entropy_bits);
    println!(
        "Huffman bits:    {:.4}  ({:.1}% vs FL)",
        report.huffman_avg_bits,
        100.0 * report.huffman_compress
    );
    for k in 0..report.eg_avg_bits.len() {
        println!(
            "EG k={k} bits:     {:.4}  ({:.1}% vs FL, {} bytes total)",
            report.eg_avg_bits[k],
            100.0 * report.eg_compress[k],
            report.eg_total_bytes[k]
        );
    }
    println!("best EG order:   {}", report.eg_best_order);
    Ok(())
}

fn cmd_quantize(args: QuantizeArgs) -> Result<(), CliError> {
    if !args.steps.is_empty() {
        let model = Model::from_tensors(load_tensors(&args.tensor)?)?;
        let dataset = args.data.build(args.seed)?;
        for &n in &args.steps {
            let tensors = transform_records(&model.to_tensors(), |flat| {
                Ok(dequantize(&quantize(flat, i32::from(n))?, i32::from(n)))
            })?;
            let snapped = Model::from_tensors(tensors)?;
            let train_acc = evaluate(&snapped, &dataset.train)?;
            let test_acc = evaluate(&snapped, &dataset.test)?;
            if args.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "step_exp": n,
                        "step": (2.0f64).powi(-i32::from(n)),
                        "train_accuracy": train_acc,
                        "test_accuracy": test_acc,
                    })
                );
            } else {
                println!("step 2^-{n}: train {train_acc:.4}  test {test_acc:.4}");
            }
        }
        return Ok(());
    }
    let (Some(n), Some(out)) = (args.quant_exp, args.out.as_ref()) else {
        return Err(CliError::Usage(
            "file mode needs --quant-exp and --out; sweep mode needs --steps".into(),
        ));
    };
    let tensors = load_tensors(&args.tensor)?;
    let snapped = transform_records(&tensors, |flat| {
        Ok(dequantize(&quantize(flat, i32::from(n))?, i32::from(n)))
    })?;
    save_tensors(out, &snapped)?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "step_exp": n,
                "records": snapped.len(),
            })
        );
    } else {
        println!("quantized {} records to step 2^-{n}", snapped.len());
    }
    Ok(())
}

fn cmd_prune(args: PruneArgs) -> Result<(), CliError> {
    for &r in args.rates.iter().chain(args.rate.iter()) {
        if !r.is_finite() || !(0.0..=1.0).contains(&r) {
            return Err(CliError::Usage(format!(
                "pruning rate must lie in [0, 1], got {r}"
            )));
        }
    }
    if !args.rates.is_empty() {
        let model = Model::from_tensors(load_tensors(&args.tensor)?)?;
        let dataset = args.data.build(args.seed)?;
        for &rate in &args.rates {
            let tensors = transform_records(&model.to_tensors(), |flat| prune(flat, rate))?;
            let pruned = Model::from_tensors(tensors)?;
            let train_acc = evaluate(&pruned, &dataset.train)?;
            let test_acc = evaluate(&pruned, &dataset.test)?;
            if args.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "rate": rate,
                        "train_accuracy": train_acc,
                        "test_accuracy": test_acc,
                    })
                );
            } else {
                println!("rate {rate:.2}: train {train_acc:.4}  test {test_acc:.4}");
            }
        }
        return Ok(());
    }
    let (Some(rate), Some(out)) = (args.rate, args.out.as_ref()) else {
        return Err(CliError::Usage(
            "file mode needs --rate and --out; sweep mode needs --rates".into(),
        ));
    };
    let tensors = load_tensors(&args.tensor)?;
    let pruned = transform_records(&tensors, |flat| prune(flat, rate))?;
    save_tensors(out, &pruned)?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "rate": rate,
                "records": pruned.len(),
            })
        );
    } else {
        println!("pruned {} records at rate {rate}", pruned.len());
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let model = Model::from_tensors(load_tensors(&args.model)?)?;
    let dataset = args.data.build(args.seed)?;
    let train_acc = (args.split != SplitChoice::Test)
        .then(|| evaluate(&model, &dataset.train))
        .transpose()?;
    let test_acc = (args.split != SplitChoice::Train)
        .then(|| evaluate(&model, &dataset.test))
        .transpose()?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "train_accuracy": train_acc,
                "test_accuracy": test_acc,
            })
        );
    } else {
        if let Some(acc) = train_acc {
            println!("train accuracy: {acc:.4}");
        }
        if let Some(acc) = test_acc {
            println!("test accuracy:  {acc:.4}");
        }
    }
    Ok(())
}
