//! Fixed-grid parameter scans and bifurcation traces.
//!
//! Every cell is evaluated independently and results are merged in
//! row-major order, so output is identical for any worker count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fluct::np_fluctuations_analytic;
use crate::landau::{
    classify_order, landau_coefficients, tricritical_newton_step, LandauCoefficients,
    TransitionOrder, ORDER_TOL,
};
use crate::model::ModelParams;
use crate::stability::{classify, Verdict};
use crate::steadystate::solve_steady_states;

pub const PHASE_CSV_HEADER: &str = "axis1,axis2,lambda,order,A,B,C,n_max_stable,fluct,flags";
pub const BIFURCATION_CSV_HEADER: &str = "lambda,n,stable";

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 points, got {count}"
        )));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidGrid(format!("non-finite range ({lo}, {hi})")));
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Kappa,
    U,
    Lambda,
    Beta,
}

impl Axis {
    pub fn apply(self, params: &ModelParams, value: f64) -> Result<ModelParams> {
        match self {
            Axis::Kappa => params.with_kappa(value),
            Axis::U => params.with_u(value),
            Axis::Lambda => params.with_lambda(value),
            Axis::Beta => params.with_beta(value),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kappa" => Ok(Axis::Kappa),
            "u" => Ok(Axis::U),
            "lambda" => Ok(Axis::Lambda),
            "beta" => Ok(Axis::Beta),
            other => Err(Error::InvalidGrid(format!(
                "unknown axis `{other}` (expected kappa, u, lambda or beta)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn new(axis: Axis, lo: f64, hi: f64, count: usize) -> Self {
        Self {
            axis,
            lo,
            hi,
            count,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        linspace(self.lo, self.hi, self.count)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.count.max(2) - 1) as f64
    }
}

/// Which columns to compute; the rest are left empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quantities {
    pub order: bool,
    pub landau: bool,
    pub steady: bool,
    pub fluct: bool,
}

impl Default for Quantities {
    fn default() -> Self {
        Self {
            order: true,
            landau: true,
            steady: true,
            fluct: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub axis1: AxisRange,
    pub axis2: AxisRange,
    /// Values of the parameters not swept.
    pub fixed: ModelParams,
    pub quantities: Quantities,
    /// Worker count; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Fluctuation values above this are clipped and flagged.
    pub fluct_ceiling: Option<f64>,
}

impl GridSpec {
    pub fn new(axis1: AxisRange, axis2: AxisRange, fixed: ModelParams) -> Self {
        Self {
            axis1,
            axis2,
            fixed,
            quantities: Quantities::default(),
            threads: None,
            fluct_ceiling: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellFlag {
    InvalidParams,
    SolveFailed,
    NoStableBranch,
    Marginal,
    FluctDivergent,
    FluctCapped,
}

impl CellFlag {
    pub fn token(self) -> &'static str {
        match self {
            CellFlag::InvalidParams => "invalid_params",
            CellFlag::SolveFailed => "solve_failed",
            CellFlag::NoStableBranch => "no_stable_branch",
            CellFlag::Marginal => "marginal",
            CellFlag::FluctDivergent => "fluct_divergent",
            CellFlag::FluctCapped => "fluct_capped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FluctValue {
    Finite(f64),
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub axis1: f64,
    pub axis2: f64,
    pub kappa: f64,
    pub u: f64,
    pub lambda: f64,
    pub beta: f64,
    pub order: Option<TransitionOrder>,
    pub landau: Option<LandauCoefficients>,
    /// `(n, verdict)` for each steady branch, one per Z₂ pair.
    pub n_values: Option<Vec<(f64, Verdict)>>,
    /// Largest `n` among branches that are not unstable.
    pub n_max_stable: Option<f64>,
    pub fluct: Option<FluctValue>,
    pub flags: Vec<CellFlag>,
}

/// True when the `(κ, U)` node's half-open cell `[−h/2, h/2)` contains the
/// zero of `(A, B)` reached by one Newton step.
pub fn contains_tricritical(kappa: f64, u: f64, beta: f64, h_kappa: f64, h_u: f64) -> bool {
    let Some((dk, du)) = tricritical_newton_step(kappa, beta, u) else {
        return false;
    };
    let inside = |d: f64, h: f64| {
        let half = 0.5 * h.abs();
        d >= -half && d < half
    };
    inside(dk, h_kappa) && inside(du, h_u)
}

fn evaluate_cell(spec: &GridSpec, v1: f64, v2: f64) -> PhaseCell {
    let mut flags = Vec::new();
    let params = spec
        .axis1
        .axis
        .apply(&spec.fixed, v1)
        .and_then(|p| spec.axis2.axis.apply(&p, v2));
    let base = params.as_ref().unwrap_or(&spec.fixed);
    let mut cell = PhaseCell {
        axis1: v1,
        axis2: v2,
        kappa: base.kappa(),
        u: base.u(),
        lambda: base.lambda(),
        beta: base.beta(),
        order: None,
        landau: None,
        n_values: None,
        n_max_stable: None,
        fluct: None,
        flags: Vec::new(),
    };
    let params = match params {
        Ok(p) => p,
        Err(_) => {
            cell.flags.push(CellFlag::InvalidParams);
            return cell;
        }
    };

    let q = spec.quantities;
    if q.order || q.landau {
        let coeffs = landau_coefficients(params.kappa(), params.beta(), params.u());
        if q.landau {
            cell.landau = Some(coeffs);
        }
        if q.order {
            let mut order = classify_order(&coeffs, ORDER_TOL);
            if let Some((hk, hu)) = kappa_u_steps(spec) {
                if contains_tricritical(params.kappa(), params.u(), params.beta(), hk, hu) {
                    order = TransitionOrder::Tricritical;
                }
            }
            cell.order = Some(order);
        }
    }

    if q.steady {
        match solve_steady_states(&params) {
            Ok(branches) => {
                let labelled: Vec<(f64, Verdict)> = branches
                    .iter()
                    .map(|b| (b.n, classify(&b.state, &params).verdict()))
                    .collect();
                let best = labelled
                    .iter()
                    .filter(|(_, v)| *v != Verdict::Unstable)
                    .max_by(|x, y| x.0.total_cmp(&y.0));
                match best {
                    Some(&(n, v)) => {
                        cell.n_max_stable = Some(n);
                        if v == Verdict::Marginal {
                            flags.push(CellFlag::Marginal);
                        }
                    }
                    None => flags.push(CellFlag::NoStableBranch),
                }
                cell.n_values = Some(labelled);
            }
            Err(_) => flags.push(CellFlag::SolveFailed),
        }
    }

    if q.fluct {
        cell.fluct = Some(match np_fluctuations_analytic(&params) {
            Ok(v) => match spec.fluct_ceiling {
                Some(cap) if v > cap => {
                    flags.push(CellFlag::FluctCapped);
                    FluctValue::Finite(cap)
                }
                _ => FluctValue::Finite(v),
            },
            Err(_) => {
                flags.push(CellFlag::FluctDivergent);
                FluctValue::Divergent
            }
        });
    }
    flags.sort();
    flags.dedup();
    cell.flags = flags;
    cell
}

fn kappa_u_steps(spec: &GridSpec) -> Option<(f64, f64)> {
    match (spec.axis1.axis, spec.axis2.axis) {
        (Axis::Kappa, Axis::U) => Some((spec.axis1.step(), spec.axis2.step())),
        (Axis::U, Axis::Kappa) => Some((spec.axis2.step(), spec.axis1.step())),
        _ => None,
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidGrid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Evaluate every grid cell; axis 1 is the slow (row) index.
pub fn phase_diagram_scan(spec: &GridSpec) -> Result<Vec<PhaseCell>> {
    if spec.axis1.axis == spec.axis2.axis {
        return Err(Error::InvalidGrid("the two axes must differ".into()));
    }
    let xs = spec.axis1.points()?;
    let ys = spec.axis2.points()?;
    let nodes: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
        .collect();
    with_pool(spec.threads, || {
        nodes
            .par_iter()
            .map(|&(x, y)| evaluate_cell(spec, x, y))
            .collect()
    })
}

/// Full-precision float formatting used by the CSV writers.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn order_token(o: TransitionOrder) -> &'static str {
    match o {
        TransitionOrder::SecondOrder => "SecondOrder",
        TransitionOrder::FirstOrder => "FirstOrder",
        TransitionOrder::Tricritical => "Tricritical",
        TransitionOrder::Marginal => "Marginal",
    }
}

fn flags_token(flags: &[CellFlag]) -> String {
    flags
        .iter()
        .map(|f| f.token())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn phase_cells_to_csv(cells: &[PhaseCell]) -> String {
    let mut out = String::with_capacity(cells.len() * 160);
    out.push_str(PHASE_CSV_HEADER);
    out.push('\n');
    for c in cells {
        let fluct = match c.fluct {
            Some(FluctValue::Finite(v)) => fmt_f64(v),
            Some(FluctValue::Divergent) => "inf".into(),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(c.axis1),
            fmt_f64(c.axis2),
            fmt_f64(c.lambda),
            c.order.map(order_token).unwrap_or(""),
            opt_f64(c.landau.map(|l| l.a)),
            opt_f64(c.landau.map(|l| l.b)),
            opt_f64(c.landau.map(|l| l.c)),
            opt_f64(c.n_max_stable),
            fluct,
            flags_token(&c.flags),
        );
    }
    out
}

fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(fmt_f64(x))
    }
}

/// JSON rows with the same field names as the CSV columns.
pub fn phase_cells_to_json(cells: &[PhaseCell]) -> Value {
    Value::Array(
        cells
            .iter()
            .map(|c| {
                let fluct = match c.fluct {
                    Some(FluctValue::Finite(v)) => json_f64(v),
                    Some(FluctValue::Divergent) => json!("inf"),
                    None => Value::Null,
                };
                json!({
                    "axis1": c.axis1,
                    "axis2": c.axis2,
                    "lambda": c.lambda,
                    "order": c.order.map(order_token),
                    "A": c.landau.map(|l| l.a),
                    "B": c.landau.map(|l| l.b),
                    "C": c.landau.map(|l| l.c),
                    "n_max_stable": c.n_max_stable,
                    "fluct": fluct,
                    "flags": c.flags.iter().map(|f| f.token()).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub lambda: f64,
    /// `(n, verdict)` per branch; empty if the solve failed.
    pub branches: Vec<(f64, Verdict)>,
    pub failed: bool,
}

/// All steady branches with stability labels along a λ line.
pub fn bifurcation_trace(
    base: &ModelParams,
    lambda_range: (f64, f64),
    count: usize,
) -> Result<Vec<BifurcationPoint>> {
    let grid = linspace(lambda_range.0, lambda_range.1, count)?;
    Ok(grid
        .par_iter()
        .map(|&lambda| {
            let solved = base
                .with_lambda(lambda)
                .and_then(|p| solve_steady_states(&p).map(|b| (p, b)));
            match solved {
                Ok((p, branches)) => BifurcationPoint {
                    lambda,
                    branches: branches
                        .iter()
                        .map(|b| (b.n, classify(&b.state, &p).verdict()))
                        .collect(),
                    failed: false,
                },
                Err(_) => BifurcationPoint {
                    lambda,
                    branches: Vec::new(),
                    failed: true,
                },
            }
        })
        .collect())
}

pub fn bifurcation_to_csv(points: &[BifurcationPoint]) -> String {
    let mut out = String::new();
    out.push_str(BIFURCATION_CSV_HEADER);
    out.push('\n');
    for p in points {
        for &(n, v) in &p.branches {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_f64(p.lambda),
                fmt_f64(n),
                v == Verdict::Stable
            );
        }
    }
    out
}

pub fn bifurcation_to_json(points: &[BifurcationPoint]) -> Value {
    Value::Array(
        points
            .iter()
            .flat_map(|p| {
                p.branches.iter().map(move |&(n, v)| {
                    json!({ "lambda": p.lambda, "n": n, "stable": v == Verdict::Stable })
                })
            })
            .collect(),
    )
}
