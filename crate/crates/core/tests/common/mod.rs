#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// `f(s)` in its unexpanded form; vanishes on every superradiant state.
pub fn f_unexpanded(s: f64, kappa: f64, lambda: f64, beta: f64, u: f64) -> f64 {
    let t = 1.0 + s;
    let l2 = lambda * lambda;
    let tk = t * t + kappa * kappa;
    tk * (s * t * t / u + beta * beta / (16.0 * l2) * tk) - l2 * t * t
}

/// Radius of convergence estimate for the small-`n` series of `δ(n)`.
pub fn series_radius(beta: f64, u: f64) -> f64 {
    let mut r = (0.5 * beta).min(1.0);
    if u != 0.0 {
        r = r.min(1.0 / u.abs()).min((beta / (2.0 * u.abs())).sqrt());
    }
    r
}

/// Least-squares polynomial fit of `δ(n)/n` on `(0, h]`, returning the
/// first three Taylor coefficients of `δ`.
pub fn fit_cubic<F: Fn(f64) -> f64>(delta: F, h: f64) -> (f64, f64, f64) {
    let nodes = 80;
    let degree = 10;
    let mut m = DMatrix::<f64>::zeros(nodes, degree);
    let mut rhs = DVector::<f64>::zeros(nodes);
    for i in 0..nodes {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / nodes as f64;
        let x = 0.5 * (1.0 - theta.cos());
        let n = h * x;
        for k in 0..degree {
            m[(i, k)] = x.powi(k as i32);
        }
        rhs[i] = delta(n) / n;
    }
    let sol = m.svd(true, true).solve(&rhs, 1e-15).unwrap();
    (sol[0], sol[1] / h, sol[2] / (h * h))
}

pub fn rel_err(got: f64, expect: f64) -> f64 {
    (got - expect).abs() / expect.abs()
}
