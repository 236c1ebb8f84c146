//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{fit_cubic, rel_err, series_radius};
use kerrqrm::dynamics::{
    hysteresis_area, hysteresis_sweep, SweepConfig, SweepDirection, SweepTrace,
};
use kerrqrm::fluct::{lyapunov_numeric, np_fluctuations_analytic};
use kerrqrm::landau::{
    classify_order, delta_exact_raw, fit_scaling_exponent, landau_coefficients, spinodal_points,
    tricritical_point, TransitionOrder, ORDER_TOL,
};
use kerrqrm::scan::linspace;
use kerrqrm::stability::{classify, normal_phase_threshold};
use kerrqrm::steadystate::{lambda_c_threshold, solve_steady_states};
use kerrqrm::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn params(kappa: f64, lambda: f64, beta: f64, u: f64) -> ModelParams {
    ModelParams::new(kappa, lambda, beta, u, 1.0).unwrap()
}

fn within_budget(elapsed: Duration, budget: Option<f64>) -> Option<String> {
    let b = budget?;
    let secs = elapsed.as_secs_f64();
    (secs > b).then(|| format!("runtime {secs:.3} s exceeds {b} s"))
}

fn run(name: &str, budget: Option<f64>, check: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = check();
    let elapsed = start.elapsed();
    let (ok, detail) = match (result, within_budget(elapsed, budget)) {
        (Ok(d), None) => (true, d),
        (Ok(d), Some(slow)) => (false, format!("{d}; {slow}")),
        (Err(e), _) => (false, e),
    };
    println!(
        "{} {name} ({:.3} s): {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok
}

fn threshold_universality() -> Check {
    let mut worst = 0.0f64;
    for kappa in [0.0, 0.5, 1.0, 2.0] {
        let lc = lambda_c_threshold(kappa, 1.0);
        for u in [-5.0, -2.0, 0.0, 1.0, 5.0] {
            let found = normal_phase_threshold(&params(kappa, 0.1, 1.0, u), (0.01, 3.0), 1e-13)
                .map_err(|e| e.to_string())?;
            let err = (found - lc).abs();
            if err >= 1e-8 {
                return Err(format!("kappa={kappa} u={u}: found {found}, expected {lc}"));
            }
            worst = worst.max(err);
        }
    }
    Ok(format!(
        "20 (kappa, u) pairs, max |lambda - lambda_c| = {worst:.1e}"
    ))
}

fn exact_tcp() -> Check {
    let t = tricritical_point(1.0).map_err(|e| e.to_string())?;
    let k2 = t.kappa_t * t.kappa_t;
    let quartic = (3.0 * k2 * k2 + 4.0 * k2 - 3.0).abs();
    let uc = (t.u_t - 2.0 * (k2 + 1.0) / (k2 - 1.0)).abs();
    let exact = (k2 - (13f64.sqrt() - 2.0) / 3.0).abs();
    let printed = (format!("{:.3}", t.kappa_t), format!("{:.2}", t.u_t));
    if quartic >= 1e-12 || uc >= 1e-12 || exact >= 1e-12 {
        return Err(format!(
            "residuals: quartic {quartic:e}, U_c {uc:e}, kappa_t^2 {exact:e}"
        ));
    }
    if printed != ("0.732".into(), "-6.61".into()) {
        return Err(format!("printed values {printed:?}"));
    }
    Ok(format!(
        "kappa_t = {} u_t = {} (|3k^4+4k^2-3| = {quartic:.1e})",
        t.kappa_t, t.u_t
    ))
}

fn landau_c_at_tcp() -> Check {
    let t = tricritical_point(1.0).map_err(|e| e.to_string())?;
    let c = landau_coefficients(t.kappa_t, 1.0, t.u_t).c;
    if (190.0..=200.0).contains(&c) && rel_err(c, 195.0) <= 0.03 {
        Ok(format!("C = {c:.4}"))
    } else {
        Err(format!("C = {c}"))
    }
}

fn fluctuation_duality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let kappa = rng.random_range(0.05..2.0);
        let beta = rng.random_range(0.5..2.0);
        let lambda = rng.random_range(0.01..0.98) * lambda_c_threshold(kappa, beta);
        let n_atoms = rng.random_range(1.0..1000.0);
        let at = |u: f64| ModelParams::new(kappa, lambda, beta, u, n_atoms).unwrap();
        let exact = np_fluctuations_analytic(&at(0.0)).map_err(|e| e.to_string())?;
        let num = lyapunov_numeric(&at(0.0))
            .map_err(|e| e.to_string())?
            .fluctuation;
        worst = worst.max(rel_err(num, exact));
        for u in [-5.0, 5.0] {
            let other = lyapunov_numeric(&at(u))
                .map_err(|e| e.to_string())?
                .fluctuation;
            let other_exact = np_fluctuations_analytic(&at(u)).map_err(|e| e.to_string())?;
            if other.to_bits() != num.to_bits() || other_exact.to_bits() != exact.to_bits() {
                return Err(format!(
                    "Kerr dependence at kappa={kappa} lambda={lambda} u={u}"
                ));
            }
        }
    }
    if worst < 1e-10 {
        Ok(format!(
            "200 points, max relative deviation {worst:.1e}, Kerr-independent"
        ))
    } else {
        Err(format!("max relative deviation {worst:e}"))
    }
}

fn routh_eigen_agreement() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut total, mut marginal, mut disagree) = (0usize, 0usize, 0usize);
    while total < 10_000 {
        let kappa = 2.0 * (1.0 - rng.random::<f64>());
        let lambda = 2.0 * (1.0 - rng.random::<f64>());
        let beta = rng.random_range(0.5..=2.0);
        let u = rng.random_range(-10.0..=10.0);
        let p = params(kappa, lambda, beta, u);
        for b in solve_steady_states(&p).map_err(|e| e.to_string())? {
            let rep = classify(&b.state, &p);
            total += 1;
            if rep.marginal {
                marginal += 1;
            } else if rep.routh_stable != Some(rep.eigen_stable) {
                disagree += 1;
            }
        }
    }
    if disagree == 0 {
        Ok(format!(
            "{total} branches, {marginal} marginal, 0 disagreements"
        ))
    } else {
        Err(format!("{disagree} disagreements among {total} branches"))
    }
}

fn scaling_exponents() -> Check {
    let second = fit_scaling_exponent(&params(0.5, 0.6, 1.0, 0.0), (1e-8, 1e-6), 20)
        .map_err(|e| e.to_string())?;
    let t = tricritical_point(1.0).map_err(|e| e.to_string())?;
    let tcp = fit_scaling_exponent(&params(t.kappa_t, 0.6, 1.0, t.u_t), (1e-10, 1e-7), 20)
        .map_err(|e| e.to_string())?;
    let msg = format!(
        "second order {:.4} (resid {:.1e}), tricritical {:.4} (resid {:.1e})",
        second.exponent, second.residual, tcp.exponent, tcp.residual
    );
    if (second.exponent - 0.5).abs() <= 0.02 && (tcp.exponent - 1.0 / 6.0).abs() <= 0.02 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn landau_vs_exact() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut done, mut skipped) = (0, 0);
    let mut worst = 0.0f64;
    while done < 100 {
        let kappa = rng.random_range(0.0..2.0);
        let beta = rng.random_range(0.5..2.0);
        let u = rng.random_range(-10.0..10.0);
        let exact = landau_coefficients(kappa, beta, u);
        // relative error is undefined next to an accidental zero
        if exact.a.abs() < 1e-2 || exact.b.abs() < 1e-2 || exact.c.abs() < 1e-2 {
            skipped += 1;
            continue;
        }
        let h = 0.1 * series_radius(beta, u);
        let (a, b, c) = fit_cubic(|n| delta_exact_raw(n, kappa, beta, u).unwrap(), h);
        let err = rel_err(a, exact.a)
            .max(rel_err(b, exact.b))
            .max(rel_err(c, exact.c));
        if err >= 1e-5 {
            return Err(format!(
                "({kappa}, {beta}, {u}): fitted ({a}, {b}, {c}) vs {exact:?}"
            ));
        }
        worst = worst.max(err);
        done += 1;
    }
    Ok(format!(
        "100 triples ({skipped} resampled near a coefficient zero), max relative error {worst:.1e}"
    ))
}

struct HysteresisRun {
    first_up: SweepTrace,
    first_down: SweepTrace,
    second_up: SweepTrace,
    second_down: SweepTrace,
}

fn run_sweeps() -> std::result::Result<HysteresisRun, String> {
    let kt = tricritical_point(1.0).map_err(|e| e.to_string())?.kappa_t;
    let first = params(kt, 0.6, 1.0, -8.0);
    let second = params(0.5, 0.6, 1.0, 0.0);
    let grid_first = linspace(0.58, 0.633, 400).map_err(|e| e.to_string())?;
    let grid_second = linspace(0.40, 0.80, 400).map_err(|e| e.to_string())?;
    let rev = |g: &[f64]| g.iter().rev().copied().collect::<Vec<_>>();
    let cfg = SweepConfig::default();
    let sweep =
        |p: &ModelParams, g: &[f64], d| hysteresis_sweep(p, g, d, &cfg).map_err(|e| e.to_string());
    std::thread::scope(|s| {
        let a = s.spawn(|| sweep(&first, &grid_first, SweepDirection::Up));
        let b = s.spawn(|| sweep(&first, &rev(&grid_first), SweepDirection::Down));
        let c = s.spawn(|| sweep(&second, &grid_second, SweepDirection::Up));
        let d = s.spawn(|| sweep(&second, &rev(&grid_second), SweepDirection::Down));
        Ok(HysteresisRun {
            first_up: a.join().unwrap()?,
            first_down: b.join().unwrap()?,
            second_up: c.join().unwrap()?,
            second_down: d.join().unwrap()?,
        })
    })
}

fn hysteresis_geometry(run: &HysteresisRun) -> Check {
    let kt = tricritical_point(1.0).map_err(|e| e.to_string())?.kappa_t;
    let coeffs = landau_coefficients(kt, 1.0, -8.0);
    let dl = (0.633 - 0.58) / 399.0;

    let lc = lambda_c_threshold(kt, 1.0);
    let up = run.first_up.largest_jump().ok_or("empty up sweep")?;
    let up_ok = lc >= up.lambda_before - dl && lc <= up.lambda_after + dl;

    let delta_down = spinodal_points(&coeffs)
        .map_err(|e| e.to_string())?
        .delta_down;
    let l_down = (0.25 * (1.0 + kt * kt + delta_down)).sqrt();
    let down = run.first_down.largest_jump().ok_or("empty down sweep")?;
    let down_ok = l_down >= down.lambda_after - dl && l_down <= down.lambda_before + dl;

    let area_first = hysteresis_area(&run.first_up, &run.first_down).map_err(|e| e.to_string())?;
    let gap_second = run
        .second_up
        .records
        .iter()
        .zip(run.second_down.records.iter().rev())
        .map(|(u, d)| (u.n - d.n).abs())
        .fold(0.0f64, f64::max);
    let area_second =
        hysteresis_area(&run.second_up, &run.second_down).map_err(|e| e.to_string())?;
    let second_is_second_order = classify_order(&landau_coefficients(0.5, 1.0, 0.0), ORDER_TOL)
        == TransitionOrder::SecondOrder;
    let first_is_first_order = classify_order(&coeffs, ORDER_TOL) == TransitionOrder::FirstOrder;
    let flat_ok = gap_second < 1e-6 && second_is_second_order;
    let loop_ok = area_first > 0.0 && first_is_first_order;
    let unconverged = [
        &run.first_up,
        &run.first_down,
        &run.second_up,
        &run.second_down,
    ]
    .iter()
    .map(|t| t.records.iter().filter(|r| !r.converged).count())
    .sum::<usize>();

    let msg = format!(
        "up jump in [{:.5}, {:.5}] vs lambda_c {lc:.5}; down jump in [{:.5}, {:.5}] vs {l_down:.5}; \
         step {dl:.2e}; first-order area {area_first:.2e}; second-order max gap {gap_second:.1e} \
         (area {area_second:.1e}); unconverged steps {unconverged}",
        up.lambda_before, up.lambda_after, down.lambda_after, down.lambda_before
    );
    if up_ok && down_ok && flat_ok && loop_ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn conservation(run: &HysteresisRun) -> Check {
    let traces = [
        &run.first_up,
        &run.first_down,
        &run.second_up,
        &run.second_down,
    ];
    let drift = traces
        .iter()
        .map(|t| t.max_norm_drift)
        .fold(0.0f64, f64::max);
    let projections: usize = traces.iter().map(|t| t.projections).sum();
    let msg = format!("max spin-norm drift {drift:.1e} over 4 sweeps, {projections} projections");
    if drift < 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run("threshold_universality", Some(1.0), threshold_universality);
    ok &= run("exact_tricritical_point", Some(0.1), exact_tcp);
    ok &= run("landau_c_at_tricritical_point", None, landau_c_at_tcp);
    ok &= run("fluctuation_duality", Some(1.0), fluctuation_duality);
    ok &= run("routh_eigen_agreement", Some(30.0), routh_eigen_agreement);
    ok &= run("scaling_exponents", Some(5.0), scaling_exponents);
    ok &= run("landau_vs_exact_eos", None, landau_vs_exact);

    let start = Instant::now();
    let sweeps = run_sweeps();
    let sweep_time = start.elapsed().as_secs_f64();
    match &sweeps {
        Ok(r) => {
            ok &= run("hysteresis_geometry", None, || {
                let res = hysteresis_geometry(r);
                if sweep_time > 60.0 {
                    return Err(format!("sweeps took {sweep_time:.1} s (budget 60 s)"));
                }
                res.map(|m| format!("{m}; sweeps {sweep_time:.1} s"))
            });
            ok &= run("spin_norm_conservation", None, || conservation(r));
        }
        Err(e) => {
            println!("FAIL hysteresis_geometry: {e}");
            println!("FAIL spin_norm_conservation: {e}");
            ok = false;
        }
    }

    if ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
