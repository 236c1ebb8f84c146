//! Linear stability of steady states.
//!
//! The linearization about a steady state is 5×5; spin-length conservation
//! contributes an exact zero mode and the remaining quartic
//! `η⁴ + aη³ + bη² + cη + d` is built in closed form. Routh–Hurwitz on the
//! quartic and a direct eigensolve of the 5×5 matrix are two independent
//! routes to the same verdict.

use nalgebra::{Complex, Matrix5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MeanFieldState, ModelParams};

const SQRT2: f64 = std::f64::consts::SQRT_2;

pub const DEFAULT_MARGINAL_TOL: f64 = 1e-8;

/// `∂(dQ, dP, dX, dY, dZ)/∂(Q, P, X, Y, Z)` at `state`.
pub fn jacobian_5x5(state: &MeanFieldState, params: &ModelParams) -> Matrix5<f64> {
    let kn = params.kerr_kn();
    let (k, l, b) = (params.kappa(), params.lambda(), params.beta());
    let MeanFieldState { q, p, y, z, .. } = *state;
    let g = 2.0 * SQRT2 * l;
    #[rustfmt::skip]
    let m = Matrix5::new(
        -k + 2.0 * kn * p * q,              1.0 + kn * (q * q + 3.0 * p * p), 0.0, 0.0, 0.0,
        -1.0 - kn * (p * p + 3.0 * q * q), -k - 2.0 * kn * p * q,            -g,  0.0, 0.0,
        0.0,                                0.0,                              0.0, -b,  0.0,
        -g * z,                             0.0,                              b,   0.0, -g * q,
        g * y,                              0.0,                              0.0, g * q, 0.0,
    );
    m
}

/// Coefficients of the reduced quartic `η⁴ + aη³ + bη² + cη + d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharPoly {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CharPoly {
    pub fn eval(&self, eta: Complex<f64>) -> Complex<f64> {
        (((eta + self.a) * eta + self.b) * eta + self.c) * eta + self.d
    }

    /// Third Hurwitz determinant `a(bc − ad) − c²`.
    pub fn hurwitz3(&self) -> f64 {
        self.a * (self.b * self.c - self.a * self.d) - self.c * self.c
    }
}

/// Closed-form quartic for a steady state with `Y = 0`.
///
/// `det(J − η I) = −η · quartic(η)` holds on any steady state.
pub fn charpoly_coefficients(state: &MeanFieldState, params: &ModelParams) -> CharPoly {
    let kn = params.kerr_kn();
    let (k, l, beta) = (params.kappa(), params.lambda(), params.beta());
    let (q, p, z) = (state.q, state.p, state.z);
    let l2 = l * l;
    let rho = q * q + p * p;
    let m = beta * beta + 8.0 * q * q * l2;
    let g = (3.0 * kn * rho + 1.0) * (kn * rho + 1.0) + k * k;
    CharPoly {
        a: 2.0 * k,
        b: g + m,
        c: 2.0 * k * m,
        d: g * m + 8.0 * (kn * (q * q + 3.0 * p * p) + 1.0) * l2 * beta * z,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouthVerdict {
    pub stable: bool,
    pub d: f64,
    pub hurwitz3: f64,
}

/// Routh–Hurwitz for a quartic with `a > 0`: stable iff `d > 0` and
/// `a(bc − ad) − c² > 0`.
pub fn routh_classify(cp: &CharPoly) -> Result<RouthVerdict> {
    if cp.a <= 0.0 || cp.a.is_nan() {
        return Err(Error::RouthInapplicable { a: cp.a });
    }
    let h3 = cp.hurwitz3();
    Ok(RouthVerdict {
        stable: cp.d > 0.0 && h3 > 0.0,
        d: cp.d,
        hurwitz3: h3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub charpoly: CharPoly,
    /// `(d, a(bc − ad) − c²)`.
    pub routh_terms: (f64, f64),
    /// `None` when the Routh test does not apply (`κ = 0`).
    pub routh_stable: Option<bool>,
    /// Largest real part among the four non-zero modes.
    pub eigen_max_re: f64,
    pub eigen_stable: bool,
    pub marginal: bool,
    /// The excluded spin-conservation mode.
    pub zero_mode: Complex<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
}

impl StabilityReport {
    pub fn verdict(&self) -> Verdict {
        if self.marginal {
            Verdict::Marginal
        } else if self.eigen_stable {
            Verdict::Stable
        } else {
            Verdict::Unstable
        }
    }
}

/// Full report: quartic, Routh terms and the 5×5 spectrum with the
/// smallest-modulus eigenvalue removed.
pub fn eigen_classify(
    state: &MeanFieldState,
    params: &ModelParams,
    marginal_tol: f64,
) -> StabilityReport {
    let jac = jacobian_5x5(state, params);
    let mut eig: Vec<Complex<f64>> = jac.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    let zero_mode = eig.remove(0);
    eig.sort_by(|x, y| y.re.total_cmp(&x.re).then(x.im.total_cmp(&y.im)));
    let eigen_max_re = eig.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let charpoly = charpoly_coefficients(state, params);
    let routh = routh_classify(&charpoly).ok();
    StabilityReport {
        charpoly,
        routh_terms: (charpoly.d, charpoly.hurwitz3()),
        routh_stable: routh.map(|r| r.stable),
        eigen_max_re,
        eigen_stable: eigen_max_re < 0.0,
        marginal: eigen_max_re.abs() < marginal_tol,
        zero_mode,
        eigenvalues: eig,
    }
}

pub fn classify(state: &MeanFieldState, params: &ModelParams) -> StabilityReport {
    eigen_classify(state, params, DEFAULT_MARGINAL_TOL)
}

/// True when the normal phase is unstable at `params`.
///
/// Uses the Routh constant term when `κ > 0` and the 5×5 spectrum otherwise;
/// marginal spectra count as not unstable.
pub fn normal_phase_unstable(params: &ModelParams) -> bool {
    let state = MeanFieldState::NORMAL;
    if params.kappa() > 0.0 {
        let cp = charpoly_coefficients(&state, params);
        if let Ok(r) = routh_classify(&cp) {
            return !r.stable;
        }
    }
    classify(&state, params).verdict() == Verdict::Unstable
}

/// Coupling at which the normal phase first becomes unstable, by bisection
/// on the stability verdict inside `bracket`.
pub fn normal_phase_threshold(base: &ModelParams, bracket: (f64, f64), tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let at = |l: f64| base.with_lambda(l).map(|p| normal_phase_unstable(&p));
    if at(lo)? || !at(hi)? {
        return Err(Error::Domain(format!(
            "bracket ({lo}, {hi}) does not straddle the normal-phase instability"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::mean_field_rhs;
    use crate::steadystate::{lambda_c_threshold, solve_steady_states, Phase};
    use nalgebra::Matrix5;

    fn params(kappa: f64, lambda: f64, beta: f64, u: f64) -> ModelParams {
        ModelParams::new(kappa, lambda, beta, u, 1.0).unwrap()
    }

    fn sr_state(p: &ModelParams) -> MeanFieldState {
        solve_steady_states(p)
            .unwrap()
            .into_iter()
            .find(|b| b.phase == Phase::Superradiant)
            .unwrap()
            .state
    }

    fn det_complex(m: &Matrix5<f64>, eta: Complex<f64>) -> Complex<f64> {
        let mut c = m.map(|x| Complex::new(x, 0.0));
        for i in 0..5 {
            c[(i, i)] -= eta;
        }
        c.determinant()
    }

    #[test]
    fn normal_phase_jacobian_structure() {
        let p = params(0.3, 0.2, 1.0, 0.0);
        let j = jacobian_5x5(&MeanFieldState::NORMAL, &p);
        assert_eq!(j[(0, 0)], -0.3);
        assert_eq!(j[(0, 1)], 1.0);
        assert_eq!(j[(1, 0)], -1.0);
        assert_eq!(j[(1, 1)], -0.3);
        for r in 0..5 {
            if r != 3 {
                assert_eq!(j[(r, 4)], 0.0);
            }
        }
        assert_eq!(j[(3, 4)], 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = params(0.5, 0.9, 1.0, 1.0);
        let s = sr_state(&p);
        let j = jacobian_5x5(&s, &p);
        let h = 1e-6;
        for col in 0..5 {
            let mut up = s.to_array();
            let mut dn = s.to_array();
            up[col] += h;
            dn[col] -= h;
            let fu = mean_field_rhs(&MeanFieldState::from_array(up), &p);
            let fd = mean_field_rhs(&MeanFieldState::from_array(dn), &p);
            for row in 0..5 {
                let fdj = (fu[row] - fd[row]) / (2.0 * h);
                assert!((fdj - j[(row, col)]).abs() < 1e-6, "({row},{col})");
            }
        }
    }

    #[test]
    fn quartic_reproduces_determinant() {
        let p = params(0.5, 0.9, 1.0, 1.0);
        let s = sr_state(&p);
        let j = jacobian_5x5(&s, &p);
        let cp = charpoly_coefficients(&s, &p);
        for eta in [
            Complex::new(0.3, 0.1),
            Complex::new(-1.2, 0.7),
            Complex::new(2.0, -0.4),
            Complex::new(0.05, 1.9),
            Complex::new(-0.6, -1.3),
        ] {
            let det = det_complex(&j, eta);
            let quart = -eta * cp.eval(eta);
            assert!((det - quart).norm() <= 1e-8 * det.norm().max(1.0));
        }
    }

    #[test]
    fn normal_phase_constant_term() {
        let p = params(0.3, 0.2, 1.0, 4.0);
        let cp = charpoly_coefficients(&MeanFieldState::NORMAL, &p);
        let expect = 1.0 * (1.0 + 0.09) + 8.0 * 0.04 * 1.0 * -0.5;
        assert!((cp.d - expect).abs() < 1e-15);
        assert_eq!(cp.a, 0.6);
        let r = routh_classify(&cp).unwrap();
        assert!(r.stable);
    }

    #[test]
    fn inverted_normal_phase_is_unstable() {
        let p = params(0.3, 0.2, 1.0, 0.0);
        let r = routh_classify(&charpoly_coefficients(&MeanFieldState::INVERTED, &p)).unwrap();
        assert!(!r.stable);
        let rep = classify(&MeanFieldState::INVERTED, &p);
        assert_eq!(rep.verdict(), Verdict::Unstable);
    }

    #[test]
    fn routh_rejects_lossless() {
        let p = params(0.0, 0.2, 1.0, 0.0);
        let cp = charpoly_coefficients(&MeanFieldState::NORMAL, &p);
        assert!(matches!(
            routh_classify(&cp),
            Err(Error::RouthInapplicable { .. })
        ));
        let rep = classify(&MeanFieldState::NORMAL, &p);
        assert_eq!(rep.routh_stable, None);
        assert_eq!(rep.verdict(), Verdict::Marginal);
    }

    #[test]
    fn small_superradiant_branch_unstable_when_first_order() {
        // with A < 0 the small-n branch lives on the δ < 0 side of threshold
        let lc = lambda_c_threshold(0.9, 1.0);
        let p = params(0.9, lc - 1e-4, 1.0, -30.0);
        let branches = solve_steady_states(&p).unwrap();
        let small = branches
            .iter()
            .filter(|b| b.phase == Phase::Superradiant)
            .min_by(|x, y| x.n.total_cmp(&y.n))
            .unwrap();
        let rep = classify(&small.state, &p);
        assert_eq!(rep.routh_stable, Some(false));
        assert_eq!(rep.verdict(), Verdict::Unstable);
        assert!(rep.routh_terms.0 < 0.0);
        assert!(small.n < 1e-3);
    }

    #[test]
    fn threshold_is_marginal() {
        let lc = lambda_c_threshold(0.4, 1.0);
        let rep = classify(&MeanFieldState::NORMAL, &params(0.4, lc, 1.0, 2.0));
        assert!(rep.marginal);
        assert_eq!(rep.verdict(), Verdict::Marginal);
    }

    #[test]
    fn hurwitz3_closed_form() {
        let p = params(0.7, 1.1, 1.3, -2.0);
        for b in solve_steady_states(&p).unwrap() {
            let cp = charpoly_coefficients(&b.state, &p);
            let s = b.state;
            let expect = -32.0
                * 0.49
                * 1.3
                * 1.21
                * s.z
                * (1.0 + p.kerr_kn() * (s.q * s.q + 3.0 * s.p * s.p));
            assert!((cp.hurwitz3() - expect).abs() < 1e-10 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn threshold_bisection_is_kerr_independent() {
        for kappa in [0.0, 0.5, 2.0] {
            let lc = lambda_c_threshold(kappa, 1.0);
            for u in [-5.0, 0.0, 5.0] {
                let base = params(kappa, 0.1, 1.0, u);
                let found = normal_phase_threshold(&base, (0.01, 3.0), 1e-13).unwrap();
                assert!(
                    (found - lc).abs() < 1e-10,
                    "kappa={kappa} u={u}: {found} vs {lc}"
                );
            }
        }
        assert!(normal_phase_threshold(&params(0.5, 0.1, 1.0, 0.0), (0.8, 3.0), 1e-9).is_err());
    }

    #[test]
    fn zero_mode_is_excluded() {
        let p = params(0.5, 0.9, 1.0, 1.0);
        for b in solve_steady_states(&p).unwrap() {
            let rep = classify(&b.state, &p);
            assert!(rep.zero_mode.norm() < 1e-8);
            assert_eq!(rep.eigenvalues.len(), 4);
        }
    }
}
