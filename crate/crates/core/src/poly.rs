//! Dense real polynomials in ascending-power order and their roots.

use nalgebra::{Complex, DMatrix};

/// `Σ c[i] xⁱ` evaluated by Horner's rule.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
    a.iter().map(|&c| c * k).collect()
}

/// All complex roots via the eigenvalues of the companion matrix.
///
/// Trailing zero high-order coefficients are dropped first. Returns an empty
/// vector for constant polynomials.
pub fn roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let mut deg = coeffs.len();
    while deg > 0 && coeffs[deg - 1] == 0.0 {
        deg -= 1;
    }
    if deg <= 1 {
        return Vec::new();
    }
    let n = deg - 1;
    let lead = coeffs[n];
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        companion[(i, n - 1)] = -coeffs[i] / lead;
    }
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Newton iterations on a real root estimate; stops when the step stalls.
pub fn polish_root(coeffs: &[f64], mut x: f64, max_iter: usize) -> f64 {
    let d = derivative(coeffs);
    for _ in 0..max_iter {
        let f = eval(coeffs, x);
        let fp = eval(&d, x);
        if fp == 0.0 || !fp.is_finite() {
            break;
        }
        let step = f / fp;
        let next = x - step;
        // keep the better of the two; Newton may wander near a double root
        if eval(coeffs, next).abs() > f.abs() {
            break;
        }
        x = next;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            break;
        }
    }
    x
}

/// Real roots of `c2 x² + c1 x + c0` in ascending order, computed without
/// cancellation. Degenerates to the linear case when `c2 == 0`.
pub fn quadratic_roots(c2: f64, c1: f64, c0: f64) -> Option<(f64, f64)> {
    if c2 == 0.0 {
        if c1 == 0.0 {
            return None;
        }
        let r = -c0 / c1;
        return Some((r, r));
    }
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (c1 + c1.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        (q / c2, c0 / q)
    };
    Some(if r1 <= r2 { (r1, r2) } else { (r2, r1) })
}
