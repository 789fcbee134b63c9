//! Floating-point references used when reporting approximation error.

use std::f64::consts::PI;

use super::FixedPointParams;

/// `(1 + x/2^n)^{2^n}` on `[T, 0]`, zero below `T` (both in real units).
pub fn exp_approx(x: f64, params: &FixedPointParams) -> f64 {
    if x * params.scale() < params.threshold as f64 {
        return 0.0;
    }
    let n = (1u64 << params.exp_iters) as f64;
    (1.0 + x / n).powf(n)
}

pub fn gelu_tanh(x: f64) -> f64 {
    0.5 * x * (1.0 + ((2.0 / PI).sqrt() * (x + 0.044715 * x.powi(3))).tanh())
}

pub fn gelu_quadratic(x: f64) -> f64 {
    x * x / 8.0 + x / 4.0 + 0.5
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}
