//! Acceptance suite. Each test covers one criterion and prints a pass/fail
//! line; run with `cargo test --test acceptance -- --nocapture` to see them.

mod common;

use std::process::Command;
use std::sync::OnceLock;

use backslash::codec::{
    decode_tensor, eg_codeword, empirical_entropy, encode_tensor, fixed_length_bits,
    huffman_avg_bits, huffman_code_lengths,
};
use backslash::gg::fit_gg;
use backslash::rate::{soft_rate, soft_rate_grad, ShapeMode};
use backslash::tensor::{dequantize, prune, quantize, ParameterTensor};
use backslash::trainer::{evaluate, gen_blobs, loss_and_grad, train, Dataset, Model, TrainConfig};
use common::{brute_force_optimal_avg_bits, relative_error, sample_gg};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "[acceptance] {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion} failed: {detail}");
}

// ---------------------------------------------------------------------------
// Criterion 1: exp-Golomb codewords for values 0-9, orders 0-5, match the
// published code table exactly.
// ---------------------------------------------------------------------------

const EG_GOLDEN: [[&str; 10]; 6] = [
    [
        "1", "010", "011", "00100", "00101", "00110", "00111", "0001000", "0001001", "0001010",
    ],
    [
        "10", "11", "0100", "0101", "0110", "0111", "001000", "001001", "001010", "001011",
    ],
    [
        "100", "101", "110", "111", "01000", "01001", "01010", "01011", "01100", "01101",
    ],
    [
        "1000", "1001", "1010", "1011", "1100", "1101", "1110", "1111", "010000", "010001",
    ],
    [
        "10000", "10001", "10010", "10011", "10100", "10101", "10110", "10111", "11000", "11001",
    ],
    [
        "100000", "100001", "100010", "100011", "100100", "100101", "100110", "100111", "101000",
        "101001",
    ],
];

#[test]
fn criterion_01_eg_golden_table() {
    let mut checked = 0;
    for (k, row) in EG_GOLDEN.iter().enumerate() {
        for (v, &expected) in row.iter().enumerate() {
            let got = eg_codeword(v as u64, k as u8).unwrap();
            assert_eq!(
                got, expected,
                "codeword mismatch at k={k}, value={v}: got {got}, want {expected}"
            );
            checked += 1;
        }
    }
    report(
        "criterion 1 (EG golden table)",
        checked == 60,
        &format!("{checked} codeword equalities"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: 1000 seeded random tensors round-trip exactly and re-encode
// byte-identically.
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_codec_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut count = 0;
    for case in 0..1000u64 {
        let len = rng.random_range(1..=10_000usize);
        let params: Vec<f64> = match case % 5 {
            0 => (0..len).map(|_| rng.random_range(-2.0..2.0)).collect(),
            1 => sample_gg(0.3, 0.03, len, 9000 + case),
            2 => sample_gg(2.0, 0.4, len, 9000 + case),
            3 => vec![rng.random_range(-1.0..1.0); len],
            _ => (0..len)
                .map(|i| if i % 2 == 0 { 0.125 } else { -0.25 })
                .collect(),
        };
        let n = [4i8, 8, 10][(case % 3) as usize];
        let k = (case % 6) as u8;
        let blob = encode_tensor(&params, n, k).unwrap();
        let decoded = decode_tensor(&blob).unwrap();
        assert_eq!(
            decoded,
            quantize(&params, i32::from(n)).unwrap(),
            "decode mismatch on case {case}"
        );
        let restored = dequantize(&decoded, i32::from(n));
        let blob2 = encode_tensor(&restored, n, k).unwrap();
        assert_eq!(
            blob.to_bytes(),
            blob2.to_bytes(),
            "re-encode not byte-identical on case {case}"
        );
        count += 1;
    }
    report(
        "criterion 2 (codec roundtrip)",
        count == 1000,
        &format!("{count} tensors round-tripped"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: Monte-Carlo shape recovery within 0.05 on a million samples,
// for the shapes reported for real models plus the family ends.
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_shape_estimator() {
    let mut detail: Vec<String> = Vec::new();
    let mut pass = true;
    for (i, &nu) in [0.5f64, 0.85, 1.26, 1.36, 1.54, 2.0].iter().enumerate() {
        let sample = sample_gg(nu, 0.05, 1_000_000, 300 + i as u64);
        let fit = fit_gg(&sample).unwrap();
        let ok = (fit.shape - nu).abs() <= 0.05;
        pass &= ok;
        detail.push(format!("{nu}->{:.3}", fit.shape));
    }
    report("criterion 3 (shape estimator)", pass, &detail.join(", "));
}

// ---------------------------------------------------------------------------
// Criterion 4: analytic gradient of the full cost (distortion plus weighted
// soft rate, shape frozen) matches central finite differences.
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_gradient_correctness() {
    let data = gen_blobs(4, 30, 6, 0.8, 404).unwrap();
    let features = &data.train.features[..6 * 8];
    let labels = &data.train.labels[..8];
    let eps = 1e-3;
    let mut worst: f64 = 0.0;
    for &nu in &[0.3, 1.0, 2.0] {
        for &lambda in &[0.0, 10.0] {
            // Three weight layers.
            let model = Model::init(&[6, 8, 7, 4], 41).unwrap();
            let (_, grads) = loss_and_grad(&model, features, labels).unwrap();
            let params = model.collect_params(true);
            let rate_grad = soft_rate_grad(&params, nu, eps).unwrap();

            let cost = |m: &Model| {
                let p = m.collect_params(true);
                loss_and_grad(m, features, labels).unwrap().0
                    + lambda * soft_rate(&p, nu, eps).unwrap()
            };

            // Walk every parameter in canonical order: weights then bias per
            // layer.
            let mut cursor = 0usize;
            for l in 0..model.layer_count() {
                for idx in 0..model.weight_values(l).len() {
                    let analytic = grads.weights[l][idx] + lambda * rate_grad[cursor];
                    let mut plus = model.clone();
                    plus.weight_values_mut(l)[idx] += 1e-6;
                    let mut minus = model.clone();
                    minus.weight_values_mut(l)[idx] -= 1e-6;
                    let numeric = (cost(&plus) - cost(&minus)) / 2e-6;
                    if numeric.abs() > 1e-9 || analytic.abs() > 1e-9 {
                        worst = worst.max(relative_error(analytic, numeric));
                    }
                    cursor += 1;
                }
                for idx in 0..model.bias_values(l).len() {
                    let analytic = grads.biases[l][idx] + lambda * rate_grad[cursor];
                    let mut plus = model.clone();
                    plus.bias_values_mut(l)[idx] += 1e-6;
                    let mut minus = model.clone();
                    minus.bias_values_mut(l)[idx] -= 1e-6;
                    let numeric = (cost(&plus) - cost(&minus)) / 2e-6;
                    if numeric.abs() > 1e-9 || analytic.abs() > 1e-9 {
                        worst = worst.max(relative_error(analytic, numeric));
                    }
                    cursor += 1;
                }
            }
        }
    }
    report(
        "criterion 4 (gradient correctness)",
        worst <= 1e-5,
        &format!("worst relative error {worst:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// Shared desk-task sweep for criteria 5-8 and 10.
// ---------------------------------------------------------------------------

const DESK_CLASSES: usize = 12;
const DESK_PER_CLASS: usize = 240;
const DESK_DIM: usize = 8;
const DESK_SPREAD: f64 = 3.0;
const DESK_HIDDEN: [usize; 2] = [256, 256];
const DESK_LEARNING_RATE: f64 = 0.002;
const DESK_EPSILON: f64 = 0.05;
const DESK_EPOCHS: usize = 60;
const DESK_BATCH: usize = 32;
const SWEEP_LAMBDAS: [f64; 4] = [0.0, 100.0, 1000.0, 10_000.0];
const SWEEP_SEEDS: [u64; 4] = [1, 2, 3, 4];
/// The accuracy-preserving multiplier used for the prune/quantize/ablation
/// model pair.
const DESK_LAMBDA_STAR: f64 = 1000.0;

fn desk_config(lambda: f64, seed: u64, shape_mode: ShapeMode) -> TrainConfig {
    TrainConfig {
        hidden_dims: DESK_HIDDEN.to_vec(),
        lambda,
        epsilon: DESK_EPSILON,
        learning_rate: DESK_LEARNING_RATE,
        epochs: DESK_EPOCHS,
        batch_size: DESK_BATCH,
        seed,
        shape_mode,
        include_biases: true,
    }
}

fn desk_dataset(seed: u64) -> Dataset {
    gen_blobs(DESK_CLASSES, DESK_PER_CLASS, DESK_DIM, DESK_SPREAD, seed).unwrap()
}

struct SweepRun {
    bits: f64,
    test_accuracy: f64,
    model: Model,
}

struct Sweep {
    /// runs[lambda_index][seed_index]
    runs: Vec<Vec<SweepRun>>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl Sweep {
    fn median_bits(&self, lambda_idx: usize) -> f64 {
        let mut v: Vec<f64> = self.runs[lambda_idx].iter().map(|r| r.bits).collect();
        median(&mut v)
    }

    fn median_accuracy(&self, lambda_idx: usize) -> f64 {
        let mut v: Vec<f64> = self.runs[lambda_idx]
            .iter()
            .map(|r| r.test_accuracy)
            .collect();
        median(&mut v)
    }
}

fn sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let mut handles = Vec::new();
        for (li, &lambda) in SWEEP_LAMBDAS.iter().enumerate() {
            for (si, &seed) in SWEEP_SEEDS.iter().enumerate() {
                handles.push(std::thread::spawn(move || {
                    let data = desk_dataset(seed);
                    let cfg = desk_config(lambda, seed, ShapeMode::Adaptive);
                    let (model, metrics) = train(&cfg, &data).expect("sweep run trains");
                    let rec = metrics.final_record();
                    (li, si, SweepRun {
                        bits: rec.eg0_avg_bits,
                        test_accuracy: rec.test_accuracy,
                        model,
                    })
                }));
            }
        }
        let mut runs: Vec<Vec<Option<SweepRun>>> = (0..SWEEP_LAMBDAS.len())
            .map(|_| (0..SWEEP_SEEDS.len()).map(|_| None).collect())
            .collect();
        for h in handles {
            let (li, si, run) = h.join().expect("sweep thread");
            runs[li][si] = Some(run);
        }
        Sweep {
            runs: runs
                .into_iter()
                .map(|row| row.into_iter().map(Option::unwrap).collect())
                .collect(),
        }
    })
}

/// Applies a whole-model value transform, preserving tensor shapes.
fn transform_model(model: &Model, f: impl Fn(&[f64]) -> Vec<f64>) -> Model {
    let tensors = model.to_tensors();
    let mut flat = Vec::new();
    for t in &tensors {
        flat.extend_from_slice(t.values());
    }
    let out = f(&flat);
    let mut rebuilt = Vec::new();
    let mut cursor = 0;
    for t in &tensors {
        let n = t.param_count();
        rebuilt.push(
            ParameterTensor::new(
                t.name().to_string(),
                t.dims().to_vec(),
                out[cursor..cursor + n].to_vec(),
            )
            .unwrap(),
        );
        cursor += n;
    }
    Model::from_tensors(rebuilt).unwrap()
}

#[test]
fn criterion_05_rate_vs_lambda_trend() {
    let sweep = sweep();
    let medians: Vec<f64> = (0..SWEEP_LAMBDAS.len()).map(|i| sweep.median_bits(i)).collect();
    let strictly_decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let half = medians[SWEEP_LAMBDAS.len() - 1] <= 0.5 * medians[0];
    report(
        "criterion 5 (rate vs lambda trend)",
        strictly_decreasing && half,
        &format!("median EG0 bits across lambda sweep: {medians:.3?}"),
    );
}

#[test]
fn criterion_06_accuracy_preservation() {
    let sweep = sweep();
    let base_bits = sweep.median_bits(0);
    let base_acc = sweep.median_accuracy(0);
    let mut witness = None;
    for li in 1..SWEEP_LAMBDAS.len() {
        let bits = sweep.median_bits(li);
        let acc = sweep.median_accuracy(li);
        if bits <= 0.7 * base_bits && acc >= base_acc - 0.03 {
            witness = Some((SWEEP_LAMBDAS[li], bits, acc));
            break;
        }
    }
    report(
        "criterion 6 (accuracy preservation)",
        witness.is_some(),
        &format!(
            "baseline {base_bits:.3} bits / {base_acc:.3} acc; witness {witness:?}"
        ),
    );
}

/// Largest pruning rate in {0, 0.1, .., 0.9} keeping test accuracy within 5
/// points of the unpruned model.
fn max_safe_prune_rate(model: &Model, data: &Dataset) -> f64 {
    let base = evaluate(model, &data.test).unwrap();
    let mut best = 0.0;
    for i in 0..=9 {
        let rate = i as f64 / 10.0;
        let pruned = transform_model(model, |flat| prune(flat, rate).unwrap());
        if evaluate(&pruned, &data.test).unwrap() >= base - 0.05 {
            best = rate;
        }
    }
    best
}

#[test]
fn criterion_07_pruning_robustness() {
    let sweep = sweep();
    let star_idx = SWEEP_LAMBDAS
        .iter()
        .position(|&l| l == DESK_LAMBDA_STAR)
        .unwrap();
    let data = desk_dataset(SWEEP_SEEDS[0]);
    let base_rate = max_safe_prune_rate(&sweep.runs[0][0].model, &data);
    let star_rate = max_safe_prune_rate(&sweep.runs[star_idx][0].model, &data);
    report(
        "criterion 7 (pruning robustness)",
        star_rate >= base_rate + 0.2,
        &format!("baseline safe to {base_rate:.1}, rate-constrained safe to {star_rate:.1}"),
    );
}

fn quantized_accuracy(model: &Model, data: &Dataset, n: i32) -> f64 {
    let snapped = transform_model(model, |flat| {
        dequantize(&quantize(flat, n).unwrap(), n)
    });
    evaluate(&snapped, &data.test).unwrap()
}

#[test]
fn criterion_08_quantization_parity() {
    let sweep = sweep();
    let star_idx = SWEEP_LAMBDAS
        .iter()
        .position(|&l| l == DESK_LAMBDA_STAR)
        .unwrap();
    let data = desk_dataset(SWEEP_SEEDS[0]);
    let chance = 1.0 / DESK_CLASSES as f64;
    let mut detail = Vec::new();
    let mut pass = true;
    for (name, run) in [
        ("baseline", &sweep.runs[0][0]),
        ("rate-constrained", &sweep.runs[star_idx][0]),
    ] {
        let unquantized = evaluate(&run.model, &data.test).unwrap();
        let fine = quantized_accuracy(&run.model, &data, 8);
        let coarse = quantized_accuracy(&run.model, &data, 4);
        let fine_ok = fine >= unquantized - 0.02;
        let coarse_ok = coarse <= chance + 0.10;
        pass &= fine_ok && coarse_ok;
        detail.push(format!(
            "{name}: raw {unquantized:.3}, 2^-8 {fine:.3}, 2^-4 {coarse:.3} (chance {chance:.3})"
        ));
    }
    report(
        "criterion 8 (quantization parity)",
        pass,
        &detail.join("; "),
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: Huffman and fixed-length baselines behave like the textbook
// says they must.
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_baseline_sanity() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    // Huffman inside [entropy, entropy + 1) on 100 seeded distributions.
    for case in 0..100 {
        let alphabet = rng.random_range(2..=4096i64);
        let n = rng.random_range(100..5000usize);
        let skew = rng.random_range(1..5);
        let data: Vec<i64> = (0..n)
            .map(|_| {
                let r: f64 = rng.random();
                (r.powi(skew) * alphabet as f64) as i64
            })
            .collect();
        let h = empirical_entropy(&data).unwrap();
        let avg = huffman_avg_bits(&data).unwrap();
        assert!(
            avg + 1e-12 >= h && avg < h + 1.0,
            "case {case}: avg {avg} vs entropy {h}"
        );
    }
    // Exact optimality against brute force for every alphabet size <= 8.
    for alphabet in 1..=8usize {
        for trial in 0..25 {
            let mut data = Vec::new();
            for s in 0..alphabet as i64 {
                let reps = rng.random_range(1..60u64) + if trial == 0 { s as u64 * s as u64 } else { 0 };
                data.extend(std::iter::repeat_n(s - 4, reps as usize));
            }
            let lengths = huffman_code_lengths(&data).unwrap();
            let freqs: Vec<u64> = lengths.iter().map(|&(_, f, _)| f).collect();
            let ours = huffman_avg_bits(&data).unwrap();
            let best = brute_force_optimal_avg_bits(&freqs);
            assert!(
                (ours - best).abs() <= 1e-12,
                "alphabet {alphabet} trial {trial}: {ours} vs brute-force {best}"
            );
        }
    }
    // Fixed-length code width reproduces the published 641-value example.
    let values_641: Vec<i64> = (0..641).collect();
    let fl = fixed_length_bits(&values_641).unwrap();
    report(
        "criterion 9 (baseline sanity)",
        fl == 10,
        &format!("100 entropy bounds, 200 brute-force equalities, FL(641) = {fl}"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: adaptive shape vs fixed-shape regularizers; the adaptive
// point must not be strictly dominated on (accuracy, bits).
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_ablation() {
    let sweep = sweep();
    let star_idx = SWEEP_LAMBDAS
        .iter()
        .position(|&l| l == DESK_LAMBDA_STAR)
        .unwrap();
    let adaptive = &sweep.runs[star_idx][0];
    let (a_bits, a_acc) = (adaptive.bits, adaptive.test_accuracy);

    let data = desk_dataset(SWEEP_SEEDS[0]);
    let mut detail = vec![format!("adaptive: {a_bits:.2} bits / {a_acc:.3} acc")];
    let mut pass = true;
    for &nu in &[0.5, 1.0, 2.0] {
        let cfg = desk_config(DESK_LAMBDA_STAR, SWEEP_SEEDS[0], ShapeMode::Fixed(nu));
        let (_, metrics) = train(&cfg, &data).expect("fixed-shape run trains");
        let rec = metrics.final_record();
        let dominated = rec.test_accuracy > a_acc && rec.eg0_avg_bits < a_bits;
        pass &= !dominated;
        detail.push(format!(
            "fixed {nu}: {:.2} bits / {:.3} acc{}",
            rec.eg0_avg_bits,
            rec.test_accuracy,
            if dominated { " DOMINATES" } else { "" }
        ));
    }
    report("criterion 10 (ablation)", pass, &detail.join("; "));
}

// ---------------------------------------------------------------------------
// Criterion 11: CLI reruns are byte-identical.
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap().to_string();
    let bin = env!("CARGO_BIN_EXE_backslash");

    let run = |args: &[String]| {
        let out = Command::new(bin).args(args).output().expect("cli runs");
        assert!(
            out.status.success(),
            "command {:?} failed: {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };

    let train_args = |model: &str, metrics: &str| -> Vec<String> {
        [
            "train", "--classes", "3", "--per-class", "60", "--dim", "6",
            "--spread", "0.8", "--hidden", "10", "--epochs", "5",
            "--batch-size", "16", "--lambda", "200", "--epsilon", "0.02",
            "--learning-rate", "0.01", "--seed", "11", "--json",
        ]
        .iter()
        .map(|s| s.to_string())
        .chain([
            "--model-out".into(),
            format!("{d}/{model}"),
            "--metrics-out".into(),
            format!("{d}/{metrics}"),
        ])
        .collect()
    };

    // train twice
    let t1 = run(&train_args("m1.ggrt", "j1.jsonl"));
    let t2 = run(&train_args("m2.ggrt", "j2.jsonl"));
    let model_bytes = std::fs::read(format!("{d}/m1.ggrt")).unwrap();
    let identical_train = t1 == t2
        && model_bytes == std::fs::read(format!("{d}/m2.ggrt")).unwrap()
        && std::fs::read(format!("{d}/j1.jsonl")).unwrap()
            == std::fs::read(format!("{d}/j2.jsonl")).unwrap();

    // fit / rate-report / encode / decode / prune / quantize / evaluate twice each
    let model = format!("{d}/m1.ggrt");
    let pairs: Vec<Vec<String>> = vec![
        vec!["fit".into(), model.clone(), "--json".into()],
        vec!["rate-report".into(), model.clone(), "--json".into()],
        vec![
            "encode".into(), model.clone(),
            "--quant-exp".into(), "8".into(), "--eg-order".into(), "0".into(),
            "--out".into(), format!("{d}/b.ggeg"), "--json".into(),
        ],
        vec![
            "decode".into(), format!("{d}/b.ggeg"),
            "--out".into(), format!("{d}/dec.ggrt"), "--json".into(),
        ],
        vec![
            "prune".into(), model.clone(), "--rate".into(), "0.4".into(),
            "--out".into(), format!("{d}/p.ggrt"), "--json".into(),
        ],
        vec![
            "quantize".into(), model.clone(), "--quant-exp".into(), "6".into(),
            "--out".into(), format!("{d}/q.ggrt"), "--json".into(),
        ],
        vec![
            "evaluate".into(), model.clone(), "--classes".into(), "3".into(),
            "--per-class".into(), "60".into(), "--dim".into(), "6".into(),
            "--spread".into(), "0.8".into(), "--seed".into(), "11".into(),
            "--split".into(), "both".into(), "--json".into(),
        ],
    ];
    let mut identical_rest = true;
    for args in &pairs {
        let first = run(args);
        let artifacts: Vec<(String, Vec<u8>)> = ["b.ggeg", "dec.ggrt", "p.ggrt", "q.ggrt"]
            .iter()
            .filter_map(|f| {
                let p = format!("{d}/{f}");
                std::fs::read(&p).ok().map(|b| (p, b))
            })
            .collect();
        let second = run(args);
        identical_rest &= first == second;
        for (path, before) in artifacts {
            identical_rest &= std::fs::read(&path).unwrap() == before;
        }
    }

    report(
        "criterion 11 (CLI determinism)",
        identical_train && identical_rest,
        "train/fit/rate-report/encode/decode/prune/quantize/evaluate reruns byte-identical",
    );
}
