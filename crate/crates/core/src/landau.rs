//! Equation of state near threshold and its Landau expansion.
//!
//! Measuring the coupling by `δ = 4λ² − β(1+κ²)`, the superradiant branch
//! obeys an exact relation `δ(n)` whose small-`n` expansion
//! `δ ≈ A n + B n² + C n³` controls the order of the transition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::poly;

/// Tolerance on `A`, `B` when classifying the transition.
pub const ORDER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LandauCoefficients {
    /// Truncated equation of state `A n + B n² + C n³`.
    pub fn delta(&self, n: f64) -> f64 {
        n * (self.a + n * (self.b + n * self.c))
    }

    pub fn delta_prime(&self, n: f64) -> f64 {
        self.a + n * (2.0 * self.b + 3.0 * self.c * n)
    }
}

pub fn landau_coefficients(kappa: f64, beta: f64, u: f64) -> LandauCoefficients {
    let k2 = kappa * kappa;
    LandauCoefficients {
        a: 2.0 * (1.0 + k2) - beta * u * (k2 - 1.0),
        b: beta * k2 * u * u + 4.0 * u + 2.0 * (1.0 + k2) / beta,
        c: (u / beta) * (-beta * beta * k2 * u * u + 2.0 * beta * u + 2.0 * k2 + 6.0),
    }
}

/// Kerr strength at which `A` changes sign, on resonance. `None` at `κ = 1`.
pub fn critical_kerr(kappa: f64) -> Option<f64> {
    critical_kerr_beta(kappa, 1.0)
}

pub fn critical_kerr_beta(kappa: f64, beta: f64) -> Option<f64> {
    let k2 = kappa * kappa;
    if k2 == 1.0 {
        None
    } else {
        Some(2.0 * (k2 + 1.0) / (beta * (k2 - 1.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionOrder {
    SecondOrder,
    FirstOrder,
    Tricritical,
    Marginal,
}

pub fn classify_order(coeffs: &LandauCoefficients, tol: f64) -> TransitionOrder {
    if coeffs.a > tol {
        TransitionOrder::SecondOrder
    } else if coeffs.a < -tol {
        TransitionOrder::FirstOrder
    } else if coeffs.b.abs() < tol && coeffs.c > 0.0 {
        TransitionOrder::Tricritical
    } else {
        TransitionOrder::Marginal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauData {
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
    pub u_c: Option<f64>,
    pub order: TransitionOrder,
}

pub fn landau_data(kappa: f64, beta: f64, u: f64) -> LandauData {
    let c = landau_coefficients(kappa, beta, u);
    LandauData {
        a_coef: c.a,
        b_coef: c.b,
        c_coef: c.c,
        u_c: critical_kerr_beta(kappa, beta),
        order: classify_order(&c, ORDER_TOL),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TricriticalPoint {
    pub kappa_t: f64,
    pub u_t: f64,
    pub c_at_tcp: f64,
}

/// `κ_t²` on resonance: positive root of `3κ⁴ + 4κ² − 3`.
pub fn tricritical_kappa_sq() -> f64 {
    (13f64.sqrt() - 2.0) / 3.0
}

/// Simultaneous zero of `A` and `B` in the `(κ, U)` plane.
///
/// On resonance the answer is closed form; for other `β` it is found by
/// damped Newton iteration started from the resonant point.
pub fn tricritical_point(beta: f64) -> Result<TricriticalPoint> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::NoTricriticalPoint {
            beta,
            detail: "beta must be positive and finite".into(),
        });
    }
    let k2 = tricritical_kappa_sq();
    let kappa0 = k2.sqrt();
    let u0 = 2.0 * (k2 + 1.0) / (k2 - 1.0);
    if beta == 1.0 {
        let c = landau_coefficients(kappa0, 1.0, u0).c;
        return Ok(TricriticalPoint {
            kappa_t: kappa0,
            u_t: u0,
            c_at_tcp: c,
        });
    }

    let residual = |k: f64, u: f64| {
        let c = landau_coefficients(k, beta, u);
        (c.a, c.b * beta)
    };
    let (mut k, mut u) = (kappa0, u0);
    let mut converged = false;
    for _ in 0..200 {
        let (fa, fb) = residual(k, u);
        if fa.abs() < 1e-13 && fb.abs() < 1e-13 {
            converged = true;
            break;
        }
        let Some((dk, du)) = tricritical_newton_step(k, beta, u) else {
            break;
        };
        let norm0 = fa.hypot(fb);
        let mut step = 1.0;
        loop {
            let (kn, un) = (k + step * dk, u + step * du);
            let (ga, gb) = residual(kn, un);
            if kn > 0.0 && ga.hypot(gb) < norm0 {
                k = kn;
                u = un;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                return Err(Error::NoTricriticalPoint {
                    beta,
                    detail: format!("line search stalled at kappa = {k}, u = {u}"),
                });
            }
        }
    }
    let (fa, fb) = residual(k, u);
    if !converged && (fa.abs() > 1e-12 || fb.abs() > 1e-12) {
        return Err(Error::NoTricriticalPoint {
            beta,
            detail: format!(
                "Newton did not converge: |A| = {fa:e}, |B| = {:e}",
                fb / beta
            ),
        });
    }
    let c = landau_coefficients(k, beta, u).c;
    if !(c > 0.0) {
        return Err(Error::NoTricriticalPoint {
            beta,
            detail: format!("C = {c} is not positive at the A = B = 0 point"),
        });
    }
    Ok(TricriticalPoint {
        kappa_t: k,
        u_t: u,
        c_at_tcp: c,
    })
}

/// Newton correction `(Δκ, ΔU)` towards the nearest zero of `(A, B)`.
///
/// `B` is scaled by `β` so both residuals stay O(1). `None` where the
/// Jacobian is singular.
pub fn tricritical_newton_step(kappa: f64, beta: f64, u: f64) -> Option<(f64, f64)> {
    let c = landau_coefficients(kappa, beta, u);
    let (fa, fb) = (c.a, c.b * beta);
    let (k, b) = (kappa, beta);
    let ja_k = -2.0 * b * u * k + 4.0 * k;
    let ja_u = -b * (k * k - 1.0);
    let jb_k = b * (2.0 * b * k * u * u + 4.0 * k / b);
    let jb_u = b * (2.0 * b * k * k * u + 4.0);
    let det = ja_k * jb_u - ja_u * jb_k;
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some((
        -(fa * jb_u - fb * ja_u) / det,
        -(ja_k * fb - jb_k * fa) / det,
    ))
}

/// Exact `δ(n) = 4λ²(n) − β(1+κ²)` along the superradiant branch.
///
/// Written so that the `n → 0` cancellation happens analytically:
/// `δ = 2Tn + (βT/t)·w/(1+√(1+w)) + β(t−1)(t−κ²)/t` with `t = 1+Un`,
/// `T = t² + κ²` and `w = (2nt/β)²`.
pub fn delta_exact(n: f64, params: &ModelParams) -> Result<f64> {
    delta_exact_raw(n, params.kappa(), params.beta(), params.u())
}

pub fn delta_exact_raw(n: f64, kappa: f64, beta: f64, u: f64) -> Result<f64> {
    if n < 0.0 || n.is_nan() {
        return Err(Error::Domain(format!(
            "photon number must be nonnegative, got {n}"
        )));
    }
    let un = u * n;
    let t = 1.0 + un;
    if t <= 0.0 {
        return Err(Error::Domain(format!("1 + U n = {t} must be positive")));
    }
    let k2 = kappa * kappa;
    let big_t = t * t + k2;
    let r = 2.0 * n * t / beta;
    let w = r * r;
    Ok(
        2.0 * big_t * n
            + beta * big_t / t * w / (1.0 + (1.0 + w).sqrt())
            + beta * un * (t - k2) / t,
    )
}

/// `4λ²` at which a superradiant state with photon number `n` exists.
pub fn coupling_sq_for(n: f64, params: &ModelParams) -> Result<f64> {
    let k2 = params.kappa() * params.kappa();
    Ok(delta_exact(n, params)? + params.beta() * (1.0 + k2))
}

/// `Φ(n) = (A/2)n² + (B/3)n³ + (C/4)n⁴ − δ_ext n`.
pub fn effective_potential(n: f64, delta_ext: f64, coeffs: &LandauCoefficients) -> f64 {
    let LandauCoefficients { a, b, c } = *coeffs;
    n * n * (a / 2.0 + n * (b / 3.0 + n * c / 4.0)) - delta_ext * n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spinodals {
    /// Local minimum of the cubic `δ(n)` (`δ'' > 0`): the lower turning
    /// point of the superradiant branch.
    pub n_minus: f64,
    /// The other stationary point.
    pub n_plus: f64,
    /// `δ(n_minus)`, lower edge of the bistable window.
    pub delta_down: f64,
}

impl Spinodals {
    /// True when the lower turning point lies at positive photon number.
    pub fn is_physical(&self) -> bool {
        self.n_minus > 0.0
    }
}

/// Stationary points of the cubic equation of state.
pub fn spinodal_points(coeffs: &LandauCoefficients) -> Result<Spinodals> {
    let LandauCoefficients { a, b, c } = *coeffs;
    let disc = b * b - 3.0 * a * c;
    if !(disc > 0.0) {
        return Err(Error::NoSpinodals { discriminant: disc });
    }
    let (r1, r2) = poly::quadratic_roots(3.0 * c, 2.0 * b, a)
        .ok_or(Error::NoSpinodals { discriminant: disc })?;
    let curvature = |n: f64| 2.0 * b + 6.0 * c * n;
    let (n_minus, n_plus) = if curvature(r2) > curvature(r1) {
        (r2, r1)
    } else {
        (r1, r2)
    };
    Ok(Spinodals {
        n_minus,
        n_plus,
        delta_down: coeffs.delta(n_minus),
    })
}

/// Maxwell point where `Φ(n_coex) = Φ(0)` at the stationary drive.
pub fn coexistence_point(coeffs: &LandauCoefficients) -> Result<(f64, f64)> {
    let LandauCoefficients { a, b, c } = *coeffs;
    if !(a < 0.0 && c > 0.0) {
        return Err(Error::NotFirstOrder { a, c });
    }
    let (_, hi) = poly::quadratic_roots(0.75 * c, 2.0 * b / 3.0, a / 2.0)
        .ok_or(Error::NotFirstOrder { a, c })?;
    if !(hi > 0.0) {
        return Err(Error::NotFirstOrder { a, c });
    }
    Ok((hi, coeffs.delta(hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderGeometry {
    pub n_minus: f64,
    pub n_plus: f64,
    pub delta_down: f64,
    pub n_coex: f64,
    pub delta_coex: f64,
}

pub fn first_order_geometry(coeffs: &LandauCoefficients) -> Result<FirstOrderGeometry> {
    let sp = spinodal_points(coeffs)?;
    let (n_coex, delta_coex) = coexistence_point(coeffs)?;
    Ok(FirstOrderGeometry {
        n_minus: sp.n_minus,
        n_plus: sp.n_plus,
        delta_down: sp.delta_down,
        n_coex,
        delta_coex,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Slope of `log |α|` against `log δ`.
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of the fitted line.
    pub residual: f64,
}

/// Photon number on the small-`n` branch with `δ(n) = target`.
///
/// Brackets outward from `n = 0` and bisects; fails if `δ` turns down before
/// reaching the target by more than a small fraction of it.
pub fn invert_branch<F>(delta: F, target: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(target > 0.0) {
        return Err(Error::Domain(format!(
            "target delta must be positive, got {target}"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1e-12;
    let mut prev = 0.0;
    loop {
        let d = delta(hi)?;
        if d >= target {
            break;
        }
        // below the target's noise floor the sign of δ carries no information
        if d <= prev && (d.abs() > 1e-3 * target || prev.abs() > 1e-3 * target) {
            return Err(Error::NonMonotonicBranch(format!(
                "delta({hi:e}) = {d:e} does not exceed delta at smaller n ({prev:e})"
            )));
        }
        prev = d;
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NonMonotonicBranch(format!(
                "delta never reaches {target:e}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if delta(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Log–log fit of `|α| = √n` against `δ` for `points` log-spaced targets.
pub fn fit_scaling_exponent_with<F>(
    delta: F,
    window: (f64, f64),
    points: usize,
) -> Result<ScalingFit>
where
    F: Fn(f64) -> Result<f64>,
{
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(Error::InvalidGrid(format!(
            "need 0 < lo < hi and at least two points, got ({lo}, {hi}) with {points}"
        )));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    let mut last_n = 0.0;
    for i in 0..points {
        let ld = llo + (lhi - llo) * i as f64 / (points - 1) as f64;
        let n = invert_branch(&delta, ld.exp())?;
        if n <= last_n {
            return Err(Error::NonMonotonicBranch(format!(
                "photon number {n:e} at delta = {:e} is not above the previous point",
                ld.exp()
            )));
        }
        last_n = n;
        xs.push(ld);
        ys.push(0.5 * n.ln());
    }
    let m = points as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(ScalingFit {
        exponent: slope,
        intercept,
        residual: (rss / m).sqrt(),
    })
}

pub fn fit_scaling_exponent(
    params: &ModelParams,
    delta_window: (f64, f64),
    points: usize,
) -> Result<ScalingFit> {
    fit_scaling_exponent_with(|n| delta_exact(n, params), delta_window, points)
}

/// Resonant closed-system mean-field energy per atom, `E(n) = n + (U/2)n² − ½√(1+16λ²n)`.
pub fn equilibrium_energy(n: f64, lambda: f64, u: f64) -> f64 {
    n + 0.5 * u * n * n - 0.5 * (1.0 + 16.0 * lambda * lambda * n).sqrt()
}

/// `dE/dn = 1 + Un − 4λ²/√(1+16λ²n)`; zero on equilibrium states.
pub fn equilibrium_eos_residual(n: f64, lambda: f64, u: f64) -> f64 {
    let l2 = lambda * lambda;
    1.0 + u * n - 4.0 * l2 / (1.0 + 16.0 * l2 * n).sqrt()
}
