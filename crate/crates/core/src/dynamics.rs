//! Mean-field equations of motion, relaxation to a fixed point, and
//! quasi-static hysteresis sweeps in the coupling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MeanFieldState, ModelParams, SPIN_NORM_TOL};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Time derivative `(dQ, dP, dX, dY, dZ)/dt` in units of ω_c.
pub fn mean_field_rhs(s: &MeanFieldState, params: &ModelParams) -> [f64; 5] {
    let kappa = params.kappa();
    let lambda = params.lambda();
    let beta = params.beta();
    let kn = params.kerr_kn();
    let rho = s.q * s.q + s.p * s.p;
    [
        s.p - kappa * s.q + kn * s.p * rho,
        -s.q - kappa * s.p - 2.0 * SQRT2 * lambda * s.x - kn * s.q * rho,
        -beta * s.y,
        beta * s.x - 2.0 * SQRT2 * lambda * s.z * s.q,
        2.0 * SQRT2 * lambda * s.y * s.q,
    ]
}

/// Max-norm of the right-hand side; zero exactly at fixed points.
pub fn rhs_norm(s: &MeanFieldState, params: &ModelParams) -> f64 {
    mean_field_rhs(s, params)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Integration and settling controls for [`evolve_to_steady`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveConfig {
    pub rtol: f64,
    pub atol: f64,
    pub t_max: f64,
    /// Converged once the RHS max-norm drops below this.
    pub settle_tol: f64,
    /// Spin-length drift that triggers a projection back onto the sphere.
    pub projection_threshold: f64,
    pub h_max: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            t_max: 2e5,
            settle_tol: 1e-9,
            projection_threshold: 1e-10,
            h_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOutcome {
    pub state: MeanFieldState,
    pub converged: bool,
    pub time: f64,
    pub steps: usize,
    pub projections: usize,
    /// Largest `|X²+Y²+Z²−1/4|` seen on any accepted step, before projection.
    pub max_norm_drift: f64,
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

type Vec5 = [f64; 5];

/// Integrate the mean-field equations until the RHS max-norm falls below
/// `config.settle_tol` or `config.t_max` is reached.
///
/// The spin is projected back onto `|S| = 1/2` whenever its length drifts by
/// more than `config.projection_threshold`.
pub fn evolve_to_steady(
    initial: MeanFieldState,
    params: &ModelParams,
    config: &EvolveConfig,
) -> Result<EvolveOutcome> {
    let defect = initial.spin_norm_defect().abs();
    if defect > SPIN_NORM_TOL {
        return Err(Error::Domain(format!(
            "initial spin length off the sphere by {defect:e}"
        )));
    }
    let f = |y: &Vec5| mean_field_rhs(&MeanFieldState::from_array(*y), params);
    let norm_inf = |v: &Vec5| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut y = initial.to_array();
    let mut k1 = f(&y);
    let mut out = EvolveOutcome {
        state: initial,
        converged: norm_inf(&k1) < config.settle_tol,
        time: 0.0,
        steps: 0,
        projections: 0,
        max_norm_drift: defect,
    };
    if out.converged {
        return Ok(out);
    }

    let mut t = 0.0;
    let mut h = 0.01f64.min(config.h_max);
    while t < config.t_max {
        h = h.min(config.t_max - t);
        let mut k = [[0.0; 5]; 7];
        k[0] = k1;
        // the last stage is evaluated at the fifth-order solution (FSAL)
        let mut y_new = y;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..5 {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = f(&ys);
            y_new = ys;
        }

        let mut err = 0.0;
        for i in 0..5 {
            let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
            let sc = config.atol + config.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc) * (e / sc);
        }
        let err = (err / 5.0).sqrt();

        if err <= 1.0 || h < 1e-14 {
            t += h;
            y = y_new;
            k1 = k[6];
            out.steps += 1;

            let mut st = MeanFieldState::from_array(y);
            let drift = st.spin_norm_defect().abs();
            out.max_norm_drift = out.max_norm_drift.max(drift);
            if drift > config.projection_threshold {
                st.project_spin();
                y = st.to_array();
                k1 = f(&y);
                out.projections += 1;
            }
            if norm_inf(&k1) < config.settle_tol {
                out.converged = true;
                break;
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).min(config.h_max);
    }
    out.state = MeanFieldState::from_array(y);
    out.time = t;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub settled: MeanFieldState,
    pub n: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub direction: SweepDirection,
    pub records: Vec<SweepRecord>,
    pub projections: usize,
    pub max_norm_drift: f64,
}

/// The single largest change in photon number between neighbouring records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    /// Index of the record just before the jump.
    pub index: usize,
    pub lambda_before: f64,
    pub lambda_after: f64,
    pub n_before: f64,
    pub n_after: f64,
}

impl SweepTrace {
    pub fn largest_jump(&self) -> Option<Jump> {
        self.records
            .windows(2)
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                let da = (a[1].n - a[0].n).abs();
                let db = (b[1].n - b[0].n).abs();
                da.total_cmp(&db)
            })
            .map(|(i, w)| Jump {
                index: i,
                lambda_before: w[0].lambda,
                lambda_after: w[1].lambda,
                n_before: w[0].n,
                n_after: w[1].n,
            })
    }

    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    /// Symmetry-breaking displacement added to `Q`.
    pub kick: f64,
    pub evolve: EvolveConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kick: 1e-3,
            evolve: EvolveConfig::default(),
        }
    }
}

/// Quasi-static sweep: settle at each coupling in `lambda_grid`, starting
/// each step from the previous settled state.
///
/// The first step starts from the normal phase displaced by `kick` in `Q`.
/// Later steps re-apply the kick only when the carried state sits on the
/// symmetric manifold (`|Q|, |P| < kick`), so an unstable normal phase
/// always departs while a settled superradiant state is left untouched.
pub fn hysteresis_sweep(
    base: &ModelParams,
    lambda_grid: &[f64],
    direction: SweepDirection,
    config: &SweepConfig,
) -> Result<SweepTrace> {
    if base.kappa() <= 0.0 {
        return Err(Error::Domain("hysteresis sweep needs kappa > 0".into()));
    }
    let monotone = lambda_grid.windows(2).all(|w| match direction {
        SweepDirection::Up => w[1] > w[0],
        SweepDirection::Down => w[1] < w[0],
    });
    if !monotone {
        return Err(Error::InvalidGrid(format!(
            "lambda grid must be strictly {} for a {:?} sweep",
            match direction {
                SweepDirection::Up => "increasing",
                SweepDirection::Down => "decreasing",
            },
            direction
        )));
    }

    let mut trace = SweepTrace {
        direction,
        records: Vec::with_capacity(lambda_grid.len()),
        projections: 0,
        max_norm_drift: 0.0,
    };
    let mut state = MeanFieldState::NORMAL;
    for &lambda in lambda_grid {
        let params = base.with_lambda(lambda)?;
        if state.q.abs() < config.kick && state.p.abs() < config.kick {
            state.q += config.kick;
        }
        let out = evolve_to_steady(state, &params, &config.evolve)?;
        trace.projections += out.projections;
        trace.max_norm_drift = trace.max_norm_drift.max(out.max_norm_drift);
        state = out.state;
        trace.records.push(SweepRecord {
            lambda,
            settled: state,
            n: state.photon_number(),
            converged: out.converged,
        });
    }
    Ok(trace)
}

/// `∫ |n_up − n_down| dλ` (trapezoid) over the common grid of an up and a
/// down sweep.
pub fn hysteresis_area(up: &SweepTrace, down: &SweepTrace) -> Result<f64> {
    if up.direction != SweepDirection::Up || down.direction != SweepDirection::Down {
        return Err(Error::InvalidGrid("expected an up and a down sweep".into()));
    }
    let n = up.records.len();
    if n != down.records.len() {
        return Err(Error::InvalidGrid("sweeps have different lengths".into()));
    }
    let mut diffs = Vec::with_capacity(n);
    for (u, d) in up.records.iter().zip(down.records.iter().rev()) {
        if (u.lambda - d.lambda).abs() > 1e-12 * u.lambda.abs().max(1.0) {
            return Err(Error::InvalidGrid(
                "sweeps use different lambda grids".into(),
            ));
        }
        diffs.push((u.lambda, (u.n - d.n).abs()));
    }
    Ok(diffs
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum())
}
