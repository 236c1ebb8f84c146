//! Gaussian fluctuations about the normal phase.
//!
//! Linearizing around `Q = P = 0`, `Z = −1/2` gives a four-dimensional
//! Ornstein–Uhlenbeck process for `(δQ, δP, δX, δY)` in which only the cavity
//! quadratures feel vacuum noise. The Kerr term is quartic in the field and
//! drops out entirely.

use nalgebra::{Matrix4, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `β(1+κ²) − 4λ²`; positive strictly below threshold.
pub fn threshold_margin(params: &ModelParams) -> f64 {
    let k2 = params.kappa() * params.kappa();
    params.beta() * (1.0 + k2) - 4.0 * params.lambda() * params.lambda()
}

/// Closed-form photon-number fluctuation `⟨δα†δα⟩` in the normal phase.
pub fn np_fluctuations_analytic(params: &ModelParams) -> Result<f64> {
    let margin = threshold_margin(params);
    if !(margin > 0.0) {
        return Err(Error::AboveThreshold { margin });
    }
    let k2 = params.kappa() * params.kappa();
    let l2 = params.lambda() * params.lambda();
    // λ² / (β − 4λ²/(1+κ²)) written as λ²(1+κ²)/margin
    Ok(l2 * (1.0 + k2) / margin / (2.0 * params.n_atoms()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedNP {
    pub drift: Matrix4<f64>,
    pub diffusion: Matrix4<f64>,
}

impl LinearizedNP {
    pub fn new(params: &ModelParams) -> Self {
        let (k, b) = (params.kappa(), params.beta());
        let g = SQRT2 * params.lambda();
        #[rustfmt::skip]
        let drift = Matrix4::new(
            -k,   1.0,  0.0, 0.0,
            -1.0, -k,   -2.0 * g, 0.0,
            0.0,  0.0,  0.0, -b,
            g,    0.0,  b,   0.0,
        );
        let noise = k / params.n_atoms();
        let diffusion = Matrix4::from_diagonal(&nalgebra::Vector4::new(noise, noise, 0.0, 0.0));
        Self { drift, diffusion }
    }

    pub fn max_real_eigenvalue(&self) -> f64 {
        self.drift
            .complex_eigenvalues()
            .iter()
            .map(|e| e.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Steady-state covariance of `(δQ, δP, δX, δY)` with its block entries
/// named: cavity `[[r, s], [s, u]]`, cross `[[a, b], [c, d]]`, spin
/// `[[η, χ], [χ, ξ]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceNP {
    pub v: Matrix4<f64>,
    pub r: f64,
    pub s: f64,
    pub u: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub eta: f64,
    pub chi: f64,
    pub xi: f64,
    /// `(r + u)/2 − 1/(2N)`.
    pub fluctuation: f64,
    /// `max |A V + V Aᵀ + D|`.
    pub residual: f64,
}

/// Solve `A V + V Aᵀ = −D` by vectorization: `(I ⊗ A + A ⊗ I) vec V = −vec D`.
pub fn solve_lyapunov(drift: &Matrix4<f64>, diffusion: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let eye = Matrix4::<f64>::identity();
    let op: SMatrix<f64, 16, 16> = eye.kronecker(drift) + drift.kronecker(&eye);
    let rhs = SVector::<f64, 16>::from_iterator(diffusion.iter().map(|x| -x));
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Domain("Lyapunov operator is singular".into()))?;
    Ok(Matrix4::from_iterator(sol.iter().copied()))
}

pub fn lyapunov_numeric(params: &ModelParams) -> Result<CovarianceNP> {
    let lin = LinearizedNP::new(params);
    let max_re = lin.max_real_eigenvalue();
    if !(max_re < 0.0) {
        return Err(Error::NotHurwitz { max_re });
    }
    let raw = solve_lyapunov(&lin.drift, &lin.diffusion)?;
    let v = 0.5 * (raw + raw.transpose());
    let res = lin.drift * v + v * lin.drift.transpose() + lin.diffusion;
    let residual = res.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (r, u) = (v[(0, 0)], v[(1, 1)]);
    Ok(CovarianceNP {
        v,
        r,
        s: v[(0, 1)],
        u,
        a: v[(0, 2)],
        b: v[(0, 3)],
        c: v[(1, 2)],
        d: v[(1, 3)],
        eta: v[(2, 2)],
        chi: v[(2, 3)],
        xi: v[(3, 3)],
        fluctuation: 0.5 * (r + u) - 0.5 / params.n_atoms(),
        residual,
    })
}
