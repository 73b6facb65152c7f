mod common;

use common::{scenario_spec, solve, solve_scenario};
use linesol::exact::{DampingTerm, SolveOptions, SolvedSolution};
use linesol::fvsolver::{
    compare_l1, errors_csv, init_from_exact, refinement_study, run, stable_dt, step, step_with_dt, FVState, FvError,
    Grid1D, Section, SolverConfig,
};
use proptest::prelude::*;

fn config(t_end: f64) -> SolverConfig {
    SolverConfig {
        t_end,
        ..SolverConfig::default()
    }
}

fn l1_rho_series(solution: &SolvedSolution, lo: f64, hi: f64, t_end: f64) -> Vec<f64> {
    let grids: Vec<Grid1D> = [200, 400, 800]
        .iter()
        .map(|&n| Grid1D::new(n, lo, hi).unwrap())
        .collect();
    refinement_study(solution, &grids, &config(t_end))
        .unwrap()
        .iter()
        .map(|r| r.errors.last().unwrap().rho)
        .collect()
}

#[test]
fn constant_state_is_bitwise_steady() {
    let mut spec = scenario_spec("constant_profile");
    spec.xi = 0.0;
    let sol = solve(spec);
    let section = Section::new(&sol).unwrap();
    let grid = Grid1D::new(64, -1.0, 1.0).unwrap();
    let initial = init_from_exact(&section, &grid).unwrap();
    assert!(initial.rho.iter().all(|&r| r == initial.rho[0]));
    let mut state = initial.clone();
    for _ in 0..50 {
        step(&mut state, &section, &grid, &config(10.0), 10.0).unwrap();
    }
    assert_eq!(state.rho, initial.rho);
    assert_eq!(state.momentum, initial.momentum);
    assert_eq!(state.entropy, initial.entropy);
}

#[test]
fn initial_data_samples_the_exact_solution() {
    let sol = solve_scenario("euler_gauss_g2");
    let section = Section::new(&sol).unwrap();
    let grid = Grid1D::new(201, -1.5, 1.5).unwrap();
    let state = init_from_exact(&section, &grid).unwrap();
    let peak = state
        .rho
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert_eq!(peak, 100);
    assert!(state.velocity().iter().all(|u| (u - 0.5).abs() <= 1e-15));
}

#[test]
fn mass_changes_only_through_boundary_fluxes() {
    for name in ["euler_gauss_g2", "ep_attractive", "forced"] {
        let sol = solve_scenario(name);
        let section = Section::new(&sol).unwrap();
        let grid = Grid1D::new(200, -1.0, 1.0).unwrap();
        let mut state = init_from_exact(&section, &grid).unwrap();
        for _ in 0..40 {
            let before = state.mass(&grid);
            let info = step(&mut state, &section, &grid, &config(1.0), 1.0).unwrap();
            let balance = state.mass(&grid) - before + info.dt * (info.mass_flux_hi - info.mass_flux_lo);
            assert!(balance.abs() <= 1e-12 * before.max(1.0), "{name}: {balance:e}");
        }
    }
}

#[test]
fn oversized_steps_are_caught() {
    let sol = solve_scenario("euler_gauss_g2");
    let section = Section::new(&sol).unwrap();
    let grid = Grid1D::new(200, -1.5, 1.5).unwrap();
    let mut state = init_from_exact(&section, &grid).unwrap();
    let dt = 10.0 * stable_dt(&state, &sol.spec().law, &grid, 0.5).unwrap();
    let mut failure = None;
    for _ in 0..200 {
        if let Err(e) = step_with_dt(&mut state, &section, &grid, dt) {
            failure = Some(e);
            break;
        }
    }
    assert!(matches!(
        failure,
        Some(FvError::NegativeDensity { .. } | FvError::NonFinite { .. })
    ));

    let blown = run(
        &sol,
        &grid,
        &SolverConfig {
            cfl: 5.0,
            ..config(0.2)
        },
    );
    assert!(matches!(
        blown,
        Err(FvError::NegativeDensity { .. } | FvError::NonFinite { .. })
    ));
}

#[test]
fn euler_gaussian_converges_at_first_order() {
    let sol = solve_scenario("euler_gauss_g2");
    let e = l1_rho_series(&sol, -1.5, 1.5, 0.2);
    for w in e.windows(2) {
        assert!(w[0] / w[1] >= 1.5, "{e:?}");
    }
}

#[test]
fn attractive_poisson_converges_at_first_order() {
    let sol = solve_scenario("ep_attractive");
    let e = l1_rho_series(&sol, -1.2, 1.2, 0.2);
    for w in e.windows(2) {
        assert!(w[0] / w[1] >= 1.5, "{e:?}");
    }
}

#[test]
fn multidimensional_sections_converge() {
    for (name, lo, hi) in [
        ("ep_repulsive", -1.2, 1.2),
        ("forced", -1.2, 1.2),
        ("gauged", -1.0, 1.0),
    ] {
        let e = l1_rho_series(&solve_scenario(name), lo, hi, 0.2);
        for w in e.windows(2) {
            assert!(w[0] / w[1] >= 1.5, "{name}: {e:?}");
        }
    }
}

#[test]
fn zero_end_time_gives_second_order_projection_error() {
    let sol = solve_scenario("euler_gauss_g2");
    let mut errs = Vec::new();
    for n in [100, 200] {
        let result = run(&sol, &Grid1D::new(n, -1.5, 1.5).unwrap(), &config(0.0)).unwrap();
        assert_eq!(result.steps, 0);
        assert_eq!(result.errors.len(), 1);
        errs.push(result.errors[0].rho);
    }
    let ratio = errs[0] / errs[1];
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn wrong_time_label_increases_error() {
    let sol = solve_scenario("euler_gauss_g2");
    let section = Section::new(&sol).unwrap();
    let grid = Grid1D::new(200, -1.5, 1.5).unwrap();
    let mut state = init_from_exact(&section, &grid).unwrap();
    let right = compare_l1(&state, &section, &grid).unwrap();
    state.t = 0.1;
    let wrong = compare_l1(&state, &section, &grid).unwrap();
    assert!(wrong.rho > 10.0 * right.rho);
}

#[test]
fn vacuum_state_error_is_the_exact_mass() {
    let sol = solve_scenario("euler_gauss_g2");
    let section = Section::new(&sol).unwrap();
    let grid = Grid1D::new(400, -7.0, 7.0).unwrap();
    let state = FVState {
        t: 0.0,
        rho: vec![0.0; grid.n_cells],
        momentum: vec![0.0; grid.n_cells],
        entropy: vec![0.0; grid.n_cells],
    };
    let e = compare_l1(&state, &section, &grid).unwrap();
    assert!((e.rho - std::f64::consts::PI.sqrt()).abs() <= 1e-10, "{}", e.rho);
}

#[test]
fn output_times_are_recorded_in_order() {
    let sol = solve_scenario("ep_attractive");
    let cfg = SolverConfig {
        output_times: vec![0.1, 0.05],
        ..config(0.2)
    };
    let result = run(&sol, &Grid1D::new(100, -1.2, 1.2).unwrap(), &cfg).unwrap();
    let times: Vec<f64> = result.errors.iter().map(|e| e.t).collect();
    assert_eq!(times, vec![0.0, 0.05, 0.1, 0.2]);
    let csv = errors_csv(&result.errors);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,l1_rho,l1_u,l1_S"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn refinement_study_matches_sequential_runs() {
    let sol = solve_scenario("ep_repulsive");
    let grids: Vec<Grid1D> = [50, 100].iter().map(|&n| Grid1D::new(n, -1.0, 1.0).unwrap()).collect();
    let parallel = refinement_study(&sol, &grids, &config(0.1)).unwrap();
    for (g, r) in grids.iter().zip(&parallel) {
        assert_eq!(&run(&sol, g, &config(0.1)).unwrap(), r);
    }
}

#[test]
fn invalid_grids_and_configs_are_rejected() {
    assert!(matches!(Grid1D::new(3, 0.0, 1.0), Err(FvError::InvalidGrid { .. })));
    assert!(matches!(Grid1D::new(10, 1.0, 1.0), Err(FvError::InvalidGrid { .. })));
    let sol = solve_scenario("euler_gauss_g2");
    let grid = Grid1D::new(10, -1.0, 1.0).unwrap();
    for cfg in [
        SolverConfig {
            cfl: 0.0,
            ..config(0.1)
        },
        SolverConfig {
            cfl: f64::NAN,
            ..config(0.1)
        },
        config(-1.0),
        SolverConfig {
            output_times: vec![0.5],
            ..config(0.1)
        },
    ] {
        assert!(matches!(run(&sol, &grid, &cfg), Err(FvError::InvalidConfig(_))));
    }
}

#[test]
fn section_leaving_the_domain_is_an_error() {
    let sol = solve_scenario("ep_attractive");
    let grid = Grid1D::new(50, -3.0, 3.0).unwrap();
    assert!(matches!(run(&sol, &grid, &config(0.1)), Err(FvError::Exact(_))));
}

#[test]
fn damped_solutions_are_rejected() {
    let sol = SolvedSolution::solve(
        scenario_spec("linear_damping"),
        &SolveOptions {
            damping: vec![DampingTerm { beta: 1.0, p: 1.0 }],
            ..Default::default()
        },
    )
    .unwrap();
    assert!(matches!(Section::new(&sol), Err(FvError::InvalidConfig(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mass_balance_holds_for_any_cfl(cfl in 0.05f64..0.95, n in 20usize..120) {
        let sol = solve_scenario("forced");
        let section = Section::new(&sol).unwrap();
        let grid = Grid1D::new(n, -1.0, 1.0).unwrap();
        let mut state = init_from_exact(&section, &grid).unwrap();
        let cfg = SolverConfig { cfl, ..config(1.0) };
        for _ in 0..10 {
            let before = state.mass(&grid);
            let info = step(&mut state, &section, &grid, &cfg, 1.0).unwrap();
            let balance = state.mass(&grid) - before + info.dt * (info.mass_flux_hi - info.mass_flux_lo);
            prop_assert!(balance.abs() <= 1e-12 * before.max(1.0));
        }
    }
}
