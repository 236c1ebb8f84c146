use kerrqrm::dynamics::{
    evolve_to_steady, hysteresis_area, hysteresis_sweep, rhs_norm, EvolveConfig, SweepConfig,
    SweepDirection,
};
use kerrqrm::scan::linspace;
use kerrqrm::stability::{classify, Verdict};
use kerrqrm::steadystate::solve_steady_states;
use kerrqrm::{MeanFieldState, ModelParams};
use proptest::prelude::*;

fn kicked(q: f64, p: f64, theta: f64, phi: f64) -> MeanFieldState {
    let r = 0.5;
    MeanFieldState::from_array([
        q,
        p,
        r * theta.sin() * phi.cos(),
        r * theta.sin() * phi.sin(),
        r * theta.cos(),
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn settled_states_are_stable_branches(
        kappa in 0.3f64..1.5,
        lambda in 0.1f64..1.2,
        u in -3.0f64..3.0,
        q in -0.5f64..0.5,
        p0 in -0.5f64..0.5,
        theta in 2.5f64..3.1,
        phi in 0.0f64..std::f64::consts::TAU,
    ) {
        let params = ModelParams::new(kappa, lambda, 1.0, u, 1.0).unwrap();
        let out = evolve_to_steady(kicked(q, p0, theta, phi), &params, &EvolveConfig::default()).unwrap();
        prop_assert!(out.max_norm_drift < 1e-8, "drift {}", out.max_norm_drift);
        prop_assert!(out.state.spin_norm_defect().abs() < 1e-8);
        prop_assume!(out.converged);
        prop_assert!(rhs_norm(&out.state, &params) < 1e-6);
        if 1.0 + u * out.state.photon_number() <= 0.0 {
            // outside the enumerated root domain; such fixed points have Z > 0
            prop_assert!(u < 0.0 && out.state.z > 0.0);
            return Ok(());
        }
        let branches = solve_steady_states(&params).unwrap();
        let matched = branches.iter().flat_map(|b| [*b, b.z2_partner()]).find(|b| {
            let a = b.state.to_array();
            let s = out.state.to_array();
            a.iter().zip(s).all(|(x, y)| (x - y).abs() < 1e-6)
        });
        let matched = matched.ok_or_else(|| TestCaseError::fail(format!("{:?} matches no branch", out.state)))?;
        prop_assert_ne!(classify(&matched.state, &params).verdict(), Verdict::Unstable);
    }
}

#[test]
fn second_order_sweeps_coincide() {
    let base = ModelParams::new(0.5, 0.5, 1.0, 0.0, 1.0).unwrap();
    let grid = linspace(0.40, 0.80, 120).unwrap();
    let down_grid: Vec<f64> = grid.iter().rev().copied().collect();
    let cfg = SweepConfig::default();
    let up = hysteresis_sweep(&base, &grid, SweepDirection::Up, &cfg).unwrap();
    let down = hysteresis_sweep(&base, &down_grid, SweepDirection::Down, &cfg).unwrap();
    assert!(up.all_converged() && down.all_converged());
    for (a, b) in up.records.iter().zip(down.records.iter().rev()) {
        assert_eq!(a.lambda, b.lambda);
        assert!(
            (a.n - b.n).abs() < 1e-6,
            "lambda {}: {} vs {}",
            a.lambda,
            a.n,
            b.n
        );
    }
    assert!(hysteresis_area(&up, &down).unwrap() < 1e-8);
    assert!(up.max_norm_drift < 1e-8 && down.max_norm_drift < 1e-8);
}

#[test]
fn first_order_sweeps_open_a_loop() {
    let base = ModelParams::new(0.731_562_545_848_266_1, 0.6, 1.0, -8.0, 1.0).unwrap();
    let grid = linspace(0.60, 0.63, 120).unwrap();
    let down_grid: Vec<f64> = grid.iter().rev().copied().collect();
    let cfg = SweepConfig::default();
    let up = hysteresis_sweep(&base, &grid, SweepDirection::Up, &cfg).unwrap();
    let down = hysteresis_sweep(&base, &down_grid, SweepDirection::Down, &cfg).unwrap();
    let ju = up.largest_jump().unwrap();
    let jd = down.largest_jump().unwrap();
    assert!(ju.lambda_before > jd.lambda_before, "{ju:?} {jd:?}");
    assert!(hysteresis_area(&up, &down).unwrap() > 0.0);
}
