//! Test oracles, deliberately independent of the library code they check.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

/// Draws from a generalized Gaussian with shape `nu` and standard deviation
/// `sigma` by the Gamma-variate method: if `W ~ Gamma(1/nu, 1)` then
/// `X = sign * W^(1/nu) / g` with `g = sqrt(Gamma(3/nu)/Gamma(1/nu)) / sigma`
/// has the target density.
pub fn sample_gg(nu: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
    let g = (0.5 * (ln_gamma(3.0 / nu) - ln_gamma(1.0 / nu))).exp() / sigma;
    let gamma = Gamma::new(1.0 / nu, 1.0).expect("valid gamma parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let w: f64 = gamma.sample(&mut rng);
            let magnitude = w.powf(1.0 / nu) / g;
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect()
}

/// Recursive adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Central finite difference of a scalar function along coordinate `i`.
pub fn central_diff(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = x.to_vec();
    plus[i] += h;
    let mut minus = x.to_vec();
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

/// Minimal average length over every prefix-code length assignment (Kraft
/// sum <= 1, lengths <= alphabet - 1), by exhaustive search. Feasible for
/// alphabets up to ~8 symbols.
pub fn brute_force_optimal_avg_bits(freqs: &[u64]) -> f64 {
    assert!(!freqs.is_empty() && freqs.len() <= 8);
    if freqs.len() == 1 {
        return 1.0;
    }
    let max_len = (freqs.len() - 1) as u32;
    // Kraft budget in units of 2^-max_len.
    let budget = 1u64 << max_len;
    let mut best = u64::MAX;
    let mut lengths = vec![0u32; freqs.len()];
    fn search(
        freqs: &[u64],
        max_len: u32,
        idx: usize,
        budget_left: u64,
        cost_so_far: u64,
        lengths: &mut [u32],
        best: &mut u64,
    ) {
        if cost_so_far >= *best {
            return;
        }
        if idx == freqs.len() {
            *best = cost_so_far;
            return;
        }
        for len in 1..=max_len {
            let kraft = 1u64 << (max_len - len);
            if kraft > budget_left {
                continue;
            }
            lengths[idx] = len;
            search(
                freqs,
                max_len,
                idx + 1,
                budget_left - kraft,
                cost_so_far + freqs[idx] * u64::from(len),
                lengths,
                best,
            );
        }
    }
    search(freqs, max_len, 0, budget, 0, &mut lengths, &mut best);
    let total: u64 = freqs.iter().sum();
    best as f64 / total as f64
}

/// Shannon entropy of a symbol sequence, computed directly from a histogram.
pub fn histogram_entropy(symbols: &[i64]) -> f64 {
    let mut counts = std::collections::HashMap::new();
    for &s in symbols {
        *counts.entry(s).or_insert(0u64) += 1;
    }
    let n = symbols.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Uniform draw in [lo, hi) from a seeded stream.
pub fn uniform_vec(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}
