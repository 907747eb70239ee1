//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the closed-form machinery of the library. The
//! objective oracle integrates `exp φ` numerically with adaptive
//! Gauss–Kronrod quadrature, interpolating `φ` pointwise.

#![allow(dead_code)]

use logconcave::{ConcaveParams, WeightedSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = KRONROD_WEIGHTS[7] * fc;
    let mut g = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        k += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            g += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature to relative tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn go(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, whole: (f64, f64), depth: u32) -> f64 {
        let (v, err) = whole;
        if err <= tol * v.abs().max(1e-300) || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        let left = kronrod15(f, a, m);
        let right = kronrod15(f, m, b);
        go(f, a, m, tol, left, depth - 1) + go(f, m, b, tol, right, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    go(f, a, b, tol, kronrod15(f, a, b), 40)
}

/// `φ(x_i)` by accumulating `φ₁` and the chord slopes.
pub fn knot_values(params: &ConcaveParams, x: &[f64]) -> Vec<f64> {
    let mut phi = vec![params.phi1];
    for (i, s) in params.slopes.iter().enumerate() {
        phi.push(phi[i] + s * (x[i + 1] - x[i]));
    }
    phi
}

/// `∫ exp φ` over the support by quadrature on every segment.
pub fn integral_of_exp(phi: &[f64], x: &[f64]) -> f64 {
    (0..x.len() - 1)
        .map(|j| {
            let (a, b, pa, pb) = (x[j], x[j + 1], phi[j], phi[j + 1]);
            let f = move |t: f64| (pa + (pb - pa) * (t - a) / (b - a)).exp();
            integrate(&f, a, b, 1e-14)
        })
        .sum()
}

/// `Σ w_i φ(x_i) − W ∫ exp φ` computed by quadrature.
pub fn oracle_objective(params: &ConcaveParams, sample: &WeightedSample) -> f64 {
    let x = sample.points();
    let phi = knot_values(params, x);
    let data: f64 = phi.iter().zip(sample.weights()).map(|(p, w)| p * w).sum();
    data - sample.total_weight() * integral_of_exp(&phi, x)
}

/// Empirical CDF of a weighted sample at its own points.
pub fn empirical_cdf(sample: &WeightedSample) -> Vec<f64> {
    let w = sample.total_weight();
    let mut acc = 0.0;
    sample
        .weights()
        .iter()
        .map(|v| {
            acc += v;
            acc / w
        })
        .collect()
}

/// One-sample Kolmogorov–Smirnov statistic of `draws` against `cdf`.
pub fn ks_statistic(mut draws: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let m = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}
