use std::fmt::Write as _;
use std::path::PathBuf;

use kerrqrm::dynamics::{hysteresis_sweep, SweepConfig, SweepDirection, SweepTrace};
use kerrqrm::fluct::{lyapunov_numeric, np_fluctuations_analytic};
use kerrqrm::landau::{
    first_order_geometry, landau_coefficients, landau_data, tricritical_point, TransitionOrder,
};
use kerrqrm::scan::{
    bifurcation_to_csv, bifurcation_to_json, bifurcation_trace, fmt_f64, linspace,
    phase_cells_to_csv, phase_cells_to_json, phase_diagram_scan, Axis, AxisRange, GridSpec,
    Quantities,
};
use kerrqrm::stability::classify;
use kerrqrm::steadystate::{solve_steady_states, Phase};
use kerrqrm::{ModelParams, NormalizedRecord, ParamsPatch};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::args::{Cli, Command, CommonArgs, Direction, Format, LineOpts, ScanOpts, SweepOpts};

const DEFAULTS: NormalizedRecord = NormalizedRecord {
    kappa: 0.0,
    lambda: 0.0,
    beta: 1.0,
    u: 0.0,
    n_atoms: 1.0,
};

const THREADS_ENV: &str = "KERRQRM_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] kerrqrm::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use kerrqrm::Error as E;
        match self {
            CliError::Config(_) | CliError::Read { .. } | CliError::Write { .. } => 2,
            CliError::Model(
                E::InvalidParameter { .. }
                | E::NonzeroGamma(_)
                | E::InvalidGrid(_)
                | E::Record(_)
                | E::Json(_)
                | E::Io(_),
            ) => 2,
            CliError::Model(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Parameters and subcommand options after merging file and flags.
struct Inputs {
    params: ModelParams,
    file_options: Option<Value>,
}

fn load_inputs(common: &CommonArgs) -> Result<Inputs> {
    let (file_patch, file_options) = match &common.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (
                ParamsPatch::from_json(&value)?,
                value.get("options").cloned(),
            )
        }
        None => (ParamsPatch::default(), None),
    };
    let flags = ParamsPatch {
        kappa: common.kappa,
        lambda: common.lambda,
        beta: common.beta,
        u: common.u,
        n_atoms: common.n_atoms,
    };
    let params = file_patch.overridden_by(flags).resolve(&DEFAULTS)?;
    Ok(Inputs {
        params,
        file_options,
    })
}

fn file_opts<T: DeserializeOwned + Default>(value: &Option<Value>) -> Result<T> {
    match value {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| CliError::Config(format!("bad `options` in parameter file: {e}"))),
        None => Ok(T::default()),
    }
}

/// Result of one subcommand in both output formats.
struct Output {
    csv: String,
    json: Map<String, Value>,
}

pub fn run(cli: &Cli) -> Result<()> {
    let inputs = load_inputs(&cli.common)?;
    let p = &inputs.params;
    let (output, options) = match &cli.command {
        Command::Steady => (steady(p)?, None),
        Command::Stability => (stability(p)?, None),
        Command::Landau => (landau(p), None),
        Command::Tcp => (tcp(p)?, None),
        Command::Fluct => (fluct(p)?, None),
        Command::Sweep(o) => {
            let o = o.merged(&file_opts(&inputs.file_options)?);
            (sweep(p, &o)?, Some(to_value(&o)))
        }
        Command::Scan(o) => {
            let o = o.merged(&file_opts(&inputs.file_options)?);
            (scan(p, &o)?, Some(to_value(&o)))
        }
        Command::Bifurcation(o) => {
            let o = o.merged(&file_opts(&inputs.file_options)?);
            (bifurcation(p, &o)?, Some(to_value(&o)))
        }
    };
    let text = match cli.common.format {
        Format::Csv => output.csv,
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("command".into(), cli.command.name().into());
            if let Value::Object(rec) = to_value(&p.to_record()) {
                doc.extend(rec);
            }
            if let Some(o) = options {
                doc.insert("options".into(), o);
            }
            doc.extend(output.json);
            let mut s = serde_json::to_string_pretty(&Value::Object(doc))
                .map_err(|e| CliError::Config(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    emit(&text, cli.common.out.as_ref())
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn phase_name(phase: Phase) -> &'static str {
    match phase {
        Phase::Normal => "normal",
        Phase::Superradiant => "superradiant",
    }
}

fn single(json: Value) -> Map<String, Value> {
    match json {
        Value::Object(m) => m,
        _ => unreachable!("json! object literal"),
    }
}

fn csv_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn steady(p: &ModelParams) -> Result<Output> {
    let branches = solve_steady_states(p)?;
    let mut csv = String::from("n,s,phase,q,p,x,y,z\n");
    let mut rows = Vec::new();
    for b in &branches {
        let st = &b.state;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(b.n),
            fmt_f64(b.s),
            phase_name(b.phase),
            fmt_f64(st.q),
            fmt_f64(st.p),
            fmt_f64(st.x),
            fmt_f64(st.y),
            fmt_f64(st.z)
        );
        rows.push(json!({
            "n": b.n, "s": b.s, "phase": phase_name(b.phase),
            "q": st.q, "p": st.p, "x": st.x, "y": st.y, "z": st.z,
        }));
    }
    Ok(Output {
        csv,
        json: single(json!({ "branches": rows })),
    })
}

fn stability(p: &ModelParams) -> Result<Output> {
    let branches = solve_steady_states(p)?;
    let mut csv = String::from("n,phase,verdict,a,b,c,d,hurwitz3,routh_stable,eigen_max_re\n");
    let mut rows = Vec::new();
    for b in &branches {
        let rep = classify(&b.state, p);
        let verdict = to_value(&rep.verdict());
        let cp = rep.charpoly;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(b.n),
            phase_name(b.phase),
            verdict.as_str().unwrap_or_default(),
            fmt_f64(cp.a),
            fmt_f64(cp.b),
            fmt_f64(cp.c),
            fmt_f64(cp.d),
            fmt_f64(rep.routh_terms.1),
            rep.routh_stable.map(|s| s.to_string()).unwrap_or_default(),
            fmt_f64(rep.eigen_max_re)
        );
        rows.push(json!({
            "n": b.n,
            "phase": phase_name(b.phase),
            "verdict": verdict,
            "report": to_value(&rep),
        }));
    }
    Ok(Output {
        csv,
        json: single(json!({ "branches": rows })),
    })
}

fn landau(p: &ModelParams) -> Output {
    let data = landau_data(p.kappa(), p.beta(), p.u());
    let geometry = (data.order == TransitionOrder::FirstOrder)
        .then(|| first_order_geometry(&landau_coefficients(p.kappa(), p.beta(), p.u())).ok())
        .flatten();
    let mut csv = String::from("A,B,C,u_c,order,n_minus,delta_down,n_coex,delta_coex\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{:?},{},{},{},{}",
        fmt_f64(data.a_coef),
        fmt_f64(data.b_coef),
        fmt_f64(data.c_coef),
        csv_opt(data.u_c),
        data.order,
        csv_opt(geometry.map(|g| g.n_minus)),
        csv_opt(geometry.map(|g| g.delta_down)),
        csv_opt(geometry.map(|g| g.n_coex)),
        csv_opt(geometry.map(|g| g.delta_coex))
    );
    Output {
        csv,
        json: single(json!({
            "A": data.a_coef,
            "B": data.b_coef,
            "C": data.c_coef,
            "u_c": data.u_c,
            "order": to_value(&data.order),
            "first_order": geometry.map(|g| to_value(&g)),
        })),
    }
}

fn tcp(p: &ModelParams) -> Result<Output> {
    let t = tricritical_point(p.beta())?;
    let csv = format!(
        "beta,kappa_t,u_t,C\n{},{},{},{}\n",
        fmt_f64(p.beta()),
        fmt_f64(t.kappa_t),
        fmt_f64(t.u_t),
        fmt_f64(t.c_at_tcp)
    );
    Ok(Output {
        csv,
        json: single(json!({ "kappa_t": t.kappa_t, "u_t": t.u_t, "C": t.c_at_tcp })),
    })
}

fn fluct(p: &ModelParams) -> Result<Output> {
    let value = np_fluctuations_analytic(p)?;
    // the Lyapunov cross-check needs a strictly damped cavity
    let numeric = lyapunov_numeric(p).ok().map(|c| c.fluctuation);
    let scaled = value * p.n_atoms();
    let csv = format!(
        "fluct,n_fluct,lyapunov\n{},{},{}\n",
        fmt_f64(value),
        fmt_f64(scaled),
        csv_opt(numeric)
    );
    Ok(Output {
        csv,
        json: single(json!({ "fluct": value, "n_fluct": scaled, "lyapunov": numeric })),
    })
}

fn grid(line: &LineOpts, default: (f64, f64, usize)) -> Result<Vec<f64>> {
    let from = line.from.unwrap_or(default.0);
    let to = line.to.unwrap_or(default.1);
    let points = line.points.unwrap_or(default.2);
    Ok(linspace(from, to, points)?)
}

fn sweep(p: &ModelParams, o: &SweepOpts) -> Result<Output> {
    let up = grid(&o.line, (0.3, 0.8, 200))?;
    let mut cfg = SweepConfig::default();
    if let Some(k) = o.kick {
        if !(k.is_finite() && k > 0.0) {
            return Err(CliError::Config(format!(
                "--kick must be positive (got {k})"
            )));
        }
        cfg.kick = k;
    }
    let mut traces: Vec<SweepTrace> = Vec::new();
    let direction = o.direction.unwrap_or(Direction::Both);
    if matches!(direction, Direction::Up | Direction::Both) {
        traces.push(hysteresis_sweep(p, &up, SweepDirection::Up, &cfg)?);
    }
    if matches!(direction, Direction::Down | Direction::Both) {
        let down: Vec<f64> = up.iter().rev().copied().collect();
        traces.push(hysteresis_sweep(p, &down, SweepDirection::Down, &cfg)?);
    }
    let mut csv = String::from("direction,lambda,n,converged\n");
    for t in &traces {
        let dir = to_value(&t.direction);
        for r in &t.records {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                dir.as_str().unwrap_or_default(),
                fmt_f64(r.lambda),
                fmt_f64(r.n),
                r.converged
            );
        }
    }
    let json_traces: Vec<Value> = traces
        .iter()
        .map(|t| {
            json!({
                "direction": to_value(&t.direction),
                "projections": t.projections,
                "max_norm_drift": t.max_norm_drift,
                "records": t.records.iter().map(|r| json!({
                    "lambda": r.lambda, "n": r.n, "converged": r.converged,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Output {
        csv,
        json: single(json!({ "traces": json_traces })),
    })
}

fn parse_axis(spec: &str) -> Result<AxisRange> {
    let bad = || CliError::Config(format!("axis `{spec}` is not NAME:LO:HI:COUNT"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [name, lo, hi, count] = parts.as_slice() else {
        return Err(bad());
    };
    let axis: Axis = name.parse()?;
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    Ok(AxisRange::new(axis, lo, hi, count))
}

fn parse_quantities(list: &str) -> Result<Quantities> {
    let mut q = Quantities {
        order: false,
        landau: false,
        steady: false,
        fluct: false,
    };
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "order" => q.order = true,
            "landau" => q.landau = true,
            "steady" => q.steady = true,
            "fluct" => q.fluct = true,
            other => return Err(CliError::Config(format!("unknown quantity `{other}`"))),
        }
    }
    Ok(q)
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{THREADS_ENV} must be a positive integer (got `{v}`)"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn scan(p: &ModelParams, o: &ScanOpts) -> Result<Output> {
    let axis1 = parse_axis(o.axis1.as_deref().unwrap_or("kappa:0.05:2:40"))?;
    let axis2 = parse_axis(o.axis2.as_deref().unwrap_or("u:-10:10:40"))?;
    let mut spec = GridSpec::new(axis1, axis2, *p);
    if let Some(q) = &o.quantities {
        spec.quantities = parse_quantities(q)?;
    }
    spec.fluct_ceiling = o.fluct_ceiling;
    spec.threads = threads_from_env()?;
    let cells = phase_diagram_scan(&spec)?;
    Ok(Output {
        csv: phase_cells_to_csv(&cells),
        json: single(json!({ "cells": phase_cells_to_json(&cells) })),
    })
}

fn bifurcation(p: &ModelParams, o: &LineOpts) -> Result<Output> {
    let from = o.from.unwrap_or(0.3);
    let to = o.to.unwrap_or(0.9);
    let points = o.points.unwrap_or(200);
    let trace = bifurcation_trace(p, (from, to), points)?;
    Ok(Output {
        csv: bifurcation_to_csv(&trace),
        json: single(json!({ "points": bifurcation_to_json(&trace) })),
    })
}
