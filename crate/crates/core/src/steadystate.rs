//! Enumeration of mean-field steady states.
//!
//! With `s = U |α|²` and `t = 1 + s`, nontrivial steady states satisfy
//!
//! ```text
//! Z(s) = −(β / 8λ²) · (t² + κ²) / t
//! f(s) = (t² + κ²) [ s t² / U + β² (t² + κ²) / (16 λ²) ] − λ² t² = 0
//! ```
//!
//! `U f(s)` is a monic quintic, solved here through its companion matrix.
//! At `U = 0` the quintic degenerates and the branch has the closed form
//! `Z = −β(1+κ²)/(8λ²)`.

use serde::{Deserialize, Serialize};

use crate::dynamics::rhs_norm;
use crate::error::{Error, Result};
use crate::model::{MeanFieldState, ModelParams, SPIN_NORM_TOL};
use crate::poly;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// A root is real when `|Im| < REAL_ROOT_TOL · max(1, |Re|)`.
pub const REAL_ROOT_TOL: f64 = 1e-9;
/// Roots closer than this in `s` are the same branch.
pub const ROOT_DEDUP_TOL: f64 = 1e-10;
/// Roots with `|s|` below this coincide with the normal phase.
const ZERO_ROOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Normal,
    Superradiant,
}

/// Which member of a Z₂ pair `(Q, X) → (−Q, −X)` is materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Z2Branch {
    /// Invariant under the symmetry (normal phase).
    Symmetric,
    /// `Q > 0` representative; the partner has `Q < 0`.
    PositiveQ,
    NegativeQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyBranch {
    /// `s = U n`; zero on the normal phase and whenever `U = 0`.
    pub s: f64,
    /// Photon number `|α|²`.
    pub n: f64,
    pub state: MeanFieldState,
    pub phase: Phase,
    pub z2: Z2Branch,
}

impl SteadyBranch {
    pub fn normal() -> Self {
        Self {
            s: 0.0,
            n: 0.0,
            state: MeanFieldState::NORMAL,
            phase: Phase::Normal,
            z2: Z2Branch::Symmetric,
        }
    }

    pub fn z2_partner(&self) -> Self {
        Self {
            state: self.state.z2_partner(),
            z2: match self.z2 {
                Z2Branch::Symmetric => Z2Branch::Symmetric,
                Z2Branch::PositiveQ => Z2Branch::NegativeQ,
                Z2Branch::NegativeQ => Z2Branch::PositiveQ,
            },
            ..*self
        }
    }
}

/// Coupling at which the normal phase loses stability: `4 λ_c² = β (1 + κ²)`.
pub fn lambda_c_threshold(kappa: f64, beta: f64) -> f64 {
    0.5 * (beta * (1.0 + kappa * kappa)).sqrt()
}

/// Minimum of `t + κ²/t` over `t ≥ 1`: the smallest `4λ²/β` admitting a
/// physical (`|Z| ≤ 1/2`) solution when `U > 0`.
pub fn existence_min_coupling(kappa: f64) -> f64 {
    if kappa <= 1.0 {
        1.0 + kappa * kappa
    } else {
        2.0 * kappa
    }
}

/// `U · f(s)` in ascending powers of `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quintic {
    pub coeffs: [f64; 6],
    /// Factor applied to `f` to clear the `1/U`; does not move the roots.
    pub multiplier: f64,
}

impl Quintic {
    pub fn eval(&self, s: f64) -> f64 {
        poly::eval(&self.coeffs, s)
    }
}

pub fn quintic_coefficients(params: &ModelParams) -> Result<Quintic> {
    let u = params.u();
    let lambda = params.lambda();
    if u == 0.0 {
        return Err(Error::ZeroKerr);
    }
    if lambda == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let k2 = params.kappa() * params.kappa();
    let l2 = lambda * lambda;
    let b2 = params.beta() * params.beta();

    let t2 = [1.0, 2.0, 1.0]; // (s+1)²
    let tk = [1.0 + k2, 2.0, 1.0]; // (s+1)² + κ²
                                   // U · [ s t² / U + β² T / (16λ²) ] = s t² + U β² T / (16 λ²)
    let bracket = poly::add(
        &poly::mul(&[0.0, 1.0], &t2),
        &poly::scale(&tk, u * b2 / (16.0 * l2)),
    );
    let full = poly::add(&poly::mul(&tk, &bracket), &poly::scale(&t2, -u * l2));
    let mut coeffs = [0.0; 6];
    coeffs.copy_from_slice(&full[..6]);
    Ok(Quintic {
        coeffs,
        multiplier: u,
    })
}

/// Rebuild the full state from a value of `s`.
///
/// For `u = 0` only `s = 0` is meaningful and the closed form is used. The
/// returned state is the `Q ≥ 0` member of its Z₂ pair; an `s` that is not a
/// root of the quintic fails the spin-length check and is rejected.
pub fn reconstruct_observables(s: f64, params: &ModelParams) -> Result<SteadyBranch> {
    if 1.0 + s <= 0.0 || !s.is_finite() {
        return Err(Error::Domain(format!("need 1 + s > 0, got s = {s}")));
    }
    let lambda = params.lambda();
    if lambda == 0.0 {
        return Err(Error::ZeroCoupling);
    }
    let u = params.u();
    let kappa = params.kappa();
    let beta = params.beta();
    let k2 = kappa * kappa;

    let n_kerr = if u == 0.0 {
        if s != 0.0 {
            return Err(Error::Domain(format!(
                "s = U n must vanish for U = 0, got {s}"
            )));
        }
        None
    } else {
        let n = s / u;
        if n < 0.0 {
            return Err(Error::Domain(format!("n = s/U = {n} is negative")));
        }
        Some(n)
    };
    // keep s = U n exact in floating point
    let s = n_kerr.map_or(0.0, |n| u * n);
    let t = 1.0 + s;
    let tk = t * t + k2;
    let z = -beta / (8.0 * lambda * lambda) * tk / t;
    if z.abs() > 0.5 + 1e-12 {
        return Err(Error::UnphysicalBranch { z_abs: z.abs() });
    }

    let (q, p, x, n) = match n_kerr {
        None => {
            let x = -(0.25 - z * z).max(0.0).sqrt();
            let q = if x == 0.0 {
                0.0
            } else {
                x * beta / (2.0 * SQRT2 * lambda * z)
            };
            let p = kappa * q;
            (q, p, x, 0.5 * (q * q + p * p))
        }
        Some(n) => {
            let q = (2.0 * s * t * t / (u * tk)).max(0.0).sqrt();
            let p = kappa * q / t;
            let x = 2.0 * SQRT2 * (lambda / beta) * z * q;
            (q, p, x, n)
        }
    };

    let state = MeanFieldState { q, p, x, y: 0.0, z };
    let defect = state.spin_norm_defect();
    if defect.abs() > SPIN_NORM_TOL {
        return Err(Error::Domain(format!(
            "s = {s} is not a steady state (spin length off by {defect:e})"
        )));
    }
    if q == 0.0 {
        return Ok(SteadyBranch::normal());
    }
    Ok(SteadyBranch {
        s,
        n,
        state,
        phase: Phase::Superradiant,
        z2: Z2Branch::PositiveQ,
    })
}

/// `U f(s)` and its derivative evaluated in factored form, which keeps full
/// relative accuracy near both `s = 0` and `t = 1 + s = 0`.
fn quintic_factored(s: f64, params: &ModelParams) -> (f64, f64) {
    let u = params.u();
    let l2 = params.lambda() * params.lambda();
    let k2 = params.kappa() * params.kappa();
    let c = u * params.beta() * params.beta() / (16.0 * l2);
    let t = 1.0 + s;
    let big_t = t * t + k2;
    let inner = s * t * t + c * big_t;
    let f = big_t * inner - u * l2 * t * t;
    let df = 2.0 * t * inner + big_t * (t * t + 2.0 * s * t + 2.0 * c * t) - 2.0 * u * l2 * t;
    (f, df)
}

fn polish_factored(mut s: f64, params: &ModelParams) -> f64 {
    let (mut f, mut df) = quintic_factored(s, params);
    for _ in 0..12 {
        if df == 0.0 || !df.is_finite() {
            break;
        }
        let next = s - f / df;
        let (fn_, dfn) = quintic_factored(next, params);
        if !(fn_.abs() < f.abs()) {
            break;
        }
        s = next;
        f = fn_;
        df = dfn;
    }
    s
}

/// Largest `s` worth searching: beyond it `|Z(s)| > 1/2`.
pub fn s_search_limit(params: &ModelParams) -> f64 {
    let l2 = params.lambda() * params.lambda();
    (4.0 * l2 / params.beta() - 1.0).max(0.0)
}

/// All mean-field steady states, normal branch first, sorted by `n`.
///
/// Superradiant branches are reported once per Z₂ pair.
pub fn solve_steady_states(params: &ModelParams) -> Result<Vec<SteadyBranch>> {
    let mut out = vec![SteadyBranch::normal()];
    if params.lambda() == 0.0 {
        return Ok(out);
    }
    if params.u() == 0.0 {
        let lc = lambda_c_threshold(params.kappa(), params.beta());
        if params.lambda() > lc {
            let b = reconstruct_observables(0.0, params)?;
            if b.phase == Phase::Superradiant {
                out.push(b);
            }
        }
        return Ok(out);
    }

    let quintic = quintic_coefficients(params)?;
    let u = params.u();
    let mut roots: Vec<f64> = poly::roots(&quintic.coeffs)
        .into_iter()
        .filter(|z| z.im.abs() < REAL_ROOT_TOL * z.re.abs().max(1.0))
        .map(|z| polish_factored(z.re, params))
        .filter(|&s| {
            let in_domain = if u > 0.0 {
                s > 0.0
            } else {
                s > -1.0 && s < 0.0
            };
            in_domain && s.abs() > ZERO_ROOT_TOL
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < ROOT_DEDUP_TOL);

    for s in roots {
        match reconstruct_observables(s, params) {
            Ok(b) if b.phase == Phase::Superradiant => {
                debug_assert!(rhs_norm(&b.state, params) < 1e-9);
                out.push(b);
            }
            _ => {}
        }
    }
    out.sort_by(|a, b| a.n.total_cmp(&b.n));
    Ok(out)
}
