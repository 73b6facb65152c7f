mod common;

use common::{scenario_spec, solve, solve_scenario, ACCEPTANCE};
use linesol::exact::Coupling;
use linesol::profiles::Profile;
use linesol::residual::{
    equations, flip_gauge_sign, residual, residual_entropy, residual_mass, residual_momentum, residual_poisson,
    residual_sweep, Corrupted, Corruption, Equation, FlowField, Mode, ResidualError, SweepGrid,
};
use proptest::prelude::*;

const TIMES: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.0];

fn grid(solution: &linesol::exact::SolvedSolution, n: usize, h: f64) -> SweepGrid {
    SweepGrid::interior(solution, TIMES.to_vec(), n, h).unwrap()
}

#[test]
fn analytic_residuals_vanish_on_every_scenario() {
    for name in ACCEPTANCE {
        let sol = solve_scenario(name);
        let report = residual_sweep(&sol, &grid(&sol, 101, 1e-3), Mode::Analytic).unwrap();
        assert_eq!(report.n_times, 5);
        assert_eq!(report.n_points, 101);
        for n in &report.norms {
            let tol = match n.equation {
                Equation::Mass | Equation::Entropy => 1e-12,
                Equation::Momentum(_) | Equation::Poisson => 1e-9,
            };
            assert!(n.max_abs <= tol, "{name}: {} = {:e}", n.equation, n.max_abs);
        }
    }
}

#[test]
fn finite_difference_residuals_converge_at_second_order() {
    for name in ACCEPTANCE {
        let sol = solve_scenario(name);
        let g = grid(&sol, 41, 1e-2);
        let steps = [1e-2, 5e-3, 2.5e-3];
        let reports: Vec<_> = steps
            .iter()
            .map(|&h| residual_sweep(&sol, &g, Mode::FiniteDifference { h }).unwrap())
            .collect();
        for eq in equations(&sol) {
            let norms: Vec<f64> = reports.iter().map(|r| r.max_norm(eq).unwrap()).collect();
            if norms[0] < 1e-10 {
                continue;
            }
            for w in norms.windows(2) {
                let ratio = w[0] / w[1];
                assert!((3.5..=4.5).contains(&ratio), "{name}: {eq} ratio {ratio}");
            }
        }
    }
}

#[test]
fn scaled_entropy_factor_breaks_only_momentum() {
    let sol = solve_scenario("euler_gauss_g2");
    let bad = Corrupted::new(&sol, Corruption::ScaleEntropyFactor(1.1));
    let report = residual_sweep(&bad, &grid(&sol, 101, 1e-3), Mode::Analytic).unwrap();
    assert!(report.max_momentum() > 1e-3);
    assert!(report.max_norm(Equation::Mass).unwrap() <= 1e-12);
    assert!(report.max_norm(Equation::Entropy).unwrap() <= 1e-12);
}

#[test]
fn scaled_entropy_defect_is_bounded_below_by_xi() {
    for name in ["euler_gauss_g2", "forced", "euler_isothermal"] {
        let sol = solve_scenario(name);
        let spec = sol.spec().clone();
        let bad = Corrupted::new(&sol, Corruption::ScaleEntropyFactor(1.1));
        let g = grid(&sol, 51, 1e-3);
        let mut hit = false;
        for &t in &g.times {
            for &z in &g.phases {
                let x = sol.point_at_phase(t, z).unwrap();
                let rho = sol.state(t, &x).unwrap().rho;
                for (i, c) in spec.coefficients.iter().enumerate() {
                    let r = residual_momentum(&bad, i, t, &x, Mode::Analytic).unwrap();
                    hit |= r.abs() >= 0.01 * spec.xi.abs() * rho * c.abs();
                }
            }
        }
        assert!(hit, "{name}");
    }
}

#[test]
fn doubled_density_leaves_poisson_defect_of_alpha_rho() {
    let sol = solve_scenario("ep_repulsive");
    let bad = Corrupted::new(&sol, Corruption::ScaleDensity(2.0));
    let g = grid(&sol, 11, 1e-3);
    for &t in &g.times {
        for &z in &g.phases {
            let x = sol.point_at_phase(t, z).unwrap();
            let rho = sol.state(t, &x).unwrap().rho;
            let r = residual_poisson(&bad, t, &x, Mode::Analytic).unwrap();
            assert!(
                (r + sol.alpha() * rho).abs() <= 1e-9 * (1.0 + rho),
                "r = {r}, rho = {rho}"
            );
        }
    }
}

#[test]
fn velocity_offset_breaks_transport_but_not_momentum() {
    let sol = solve_scenario("euler_isothermal");
    let bad = Corrupted::new(&sol, Corruption::VelocityOffset(vec![0.1, -0.05]));
    let report = residual_sweep(&bad, &grid(&sol, 101, 1e-3), Mode::Analytic).unwrap();
    assert!(report.max_norm(Equation::Mass).unwrap() > 1e-3);
    assert!(report.max_norm(Equation::Entropy).unwrap() > 1e-3);
    assert!(report.max_momentum() <= 1e-9);
}

#[test]
fn flipped_gauge_sign_is_detected() {
    let sol = solve_scenario("gauged");
    let flipped = flip_gauge_sign(&sol).unwrap();
    let g = SweepGrid::interior(&flipped, vec![0.5, 1.0, 1.5], 51, 1e-3).unwrap();
    let report = residual_sweep(&flipped, &g, Mode::Analytic).unwrap();
    assert!(report.max_momentum() > 1e-3);
    assert!(report.max_norm(Equation::Mass).unwrap() <= 1e-12);
    assert!(report.max_norm(Equation::Poisson).unwrap() <= 1e-9);
}

#[test]
fn quadratic_potential_poisson_stencil_is_exact() {
    let mut spec = scenario_spec("ep_attractive");
    spec.profile = Profile::Polynomial {
        coefficients: vec![0.0, 0.0, 0.5],
    };
    let sol = solve(spec);
    let g = grid(&sol, 21, 1e-2);
    for &t in &g.times {
        for &z in &g.phases {
            let x = sol.point_at_phase(t, z).unwrap();
            let r = residual_poisson(&sol, t, &x, Mode::FiniteDifference { h: 1e-3 }).unwrap();
            assert!(r.abs() <= 1e-5, "r = {r}");
            let r = residual_poisson(&sol, t, &x, Mode::FiniteDifference { h: 1e-2 }).unwrap();
            assert!(r.abs() <= 1e-10, "r = {r}");
        }
    }
}

#[test]
fn spatially_constant_entropy_has_zero_residual() {
    let mut spec = scenario_spec("constant_profile");
    spec.xi = 0.0;
    let sol = solve(spec);
    for t in [0.0, 0.7, 1.3] {
        for z in [-1.0, 0.0, 1.2] {
            let x = sol.point_at_phase(t, z).unwrap();
            for mode in [Mode::Analytic, Mode::FiniteDifference { h: 1e-3 }] {
                assert!(residual_entropy(&sol, t, &x, mode).unwrap().abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn damped_solution_satisfies_drag_momentum() {
    let sol = linesol::exact::SolvedSolution::solve(
        scenario_spec("linear_damping"),
        &linesol::exact::SolveOptions {
            damping: vec![linesol::exact::DampingTerm { beta: 1.0, p: 1.0 }],
            ..Default::default()
        },
    )
    .unwrap();
    let report = residual_sweep(&sol, &grid(&sol, 41, 1e-3), Mode::Analytic).unwrap();
    assert!(report.max_momentum() <= 1e-9);
}

#[test]
fn empty_sample_set_gives_empty_report() {
    let sol = solve_scenario("ep_attractive");
    let report = residual_sweep(&sol, &SweepGrid::new(Vec::new(), vec![0.0]), Mode::Analytic).unwrap();
    assert_eq!(report.n_times, 0);
    assert!(report.worst.is_none());
    assert!(report.norms.iter().all(|n| n.max_abs == 0.0 && n.l2 == 0.0));
}

#[test]
fn poisson_is_not_applicable_to_euler() {
    let sol = solve_scenario("euler_gauss_g2");
    assert_eq!(sol.spec().delta, Coupling::Euler);
    let err = residual_poisson(&sol, 0.0, &[0.0], Mode::Analytic).unwrap_err();
    assert_eq!(err, ResidualError::NotApplicable);
    assert!(!equations(&sol).contains(&Equation::Poisson));
}

#[test]
fn bad_axis_step_and_dimension_are_errors() {
    let sol = solve_scenario("euler_isothermal");
    assert!(matches!(
        residual_momentum(&sol, 2, 0.0, &[0.0, 0.0], Mode::Analytic),
        Err(ResidualError::BadAxis { axis: 2, dim: 2 })
    ));
    assert!(matches!(
        residual_mass(&sol, 0.0, &[0.0, 0.0], Mode::FiniteDifference { h: 0.0 }),
        Err(ResidualError::BadStep(_))
    ));
    assert!(residual_mass(&sol, 0.0, &[0.0], Mode::Analytic).is_err());
}

#[test]
fn out_of_domain_point_reports_location() {
    let sol = solve_scenario("ep_attractive");
    let g = SweepGrid::new(vec![0.0], vec![0.0, 5.0]);
    match residual_sweep(&sol, &g, Mode::Analytic).unwrap_err() {
        ResidualError::AtPoint { t, .. } => assert_eq!(t, 0.0),
        ResidualError::Exact(_) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn report_csv_lists_every_norm() {
    let sol = solve_scenario("ep_repulsive");
    let report = residual_sweep(&sol, &grid(&sol, 11, 1e-3), Mode::Analytic).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "equation,norm,value");
    assert_eq!(lines.len(), 1 + 2 * equations(&sol).len());
    assert!(lines[1].starts_with("mass,max,"));
    assert!(text.contains("poisson,l2,"));
}

#[test]
fn sweep_is_deterministic() {
    let sol = solve_scenario("gauged");
    let g = grid(&sol, 31, 1e-3);
    let a = residual_sweep(&sol, &g, Mode::FiniteDifference { h: 1e-3 }).unwrap();
    let b = residual_sweep(&sol, &g, Mode::FiniteDifference { h: 1e-3 }).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_identities_hold_pointwise(t in 0.0f64..2.0, z in -1.5f64..1.5) {
        let sol = solve_scenario("ep_repulsive");
        let x = sol.point_at_phase(t, z).unwrap();
        for eq in equations(&sol) {
            let r = residual(&sol, eq, t, &x, Mode::Analytic).unwrap();
            let tol = match eq {
                Equation::Mass | Equation::Entropy => 1e-12,
                _ => 1e-9,
            };
            prop_assert!(r.abs() <= tol, "{} = {}", eq, r);
        }
    }
}
