use std::path::Path;

use adr_split::config::{load_config, RunConfig};
use adr_split::driver;
use adr_split::expr::parse;
use adr_split::field::Family;
use adr_split::reference::{compare, solve_stationary_2d, StructuredTriMesh};
use adr_split::stepper::{Discretization, Mode, SchemeParams, SplitSolver};
use adr_split::transfer::{GridGeometry, SolutionGrid};
use adr_split::Error;

fn small(mut config: RunConfig) -> RunConfig {
    config.disc = Discretization {
        beta_curves: 33,
        gamma_curves: 33,
        h_trace: None,
        h_fem: 0.02,
        kx: 16,
        ky: 16,
    };
    config
}

fn experiment() -> RunConfig {
    small(load_config(Path::new("paper_experiment")).unwrap())
}

fn solver(config: &RunConfig) -> SplitSolver {
    driver::with_workers(1, || SplitSolver::new(config.problem.clone(), config.disc)).unwrap()
}

fn boundary_max(grid: &SolutionGrid) -> f64 {
    let g = grid.geometry;
    let mut m: f64 = 0.0;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            if g.is_boundary_node(i, j) {
                m = m.max(grid.value(i, j).abs());
            }
        }
    }
    m
}

#[test]
fn zero_data_stays_zero_every_step() {
    let mut config = experiment();
    config.problem.source = parse("0").unwrap();
    let s = solver(&config);
    let mut seen = 0;
    let out = s
        .run(&config.params, Mode::Transient, |state| {
            seen += 1;
            assert!(state.grid.values.iter().all(|&v| v == 0.0));
            assert!(state.beta.iter().all(|c| c.values.iter().all(|&v| v == 0.0)));
            Ok(())
        })
        .unwrap();
    assert_eq!(seen, config.params.steps);
    assert!(out.bootstrap.values.iter().all(|&v| v == 0.0));
}

#[test]
fn zero_initial_expression_matches_zero_source_bootstrap() {
    let mut config = experiment();
    config.problem.source = parse("0").unwrap();
    let a = solver(&config).bootstrap().unwrap();
    config.problem.source = parse("5").unwrap();
    config.problem.initial = Some(parse("0").unwrap());
    let b = solver(&config).bootstrap().unwrap();
    assert_eq!(a.grid.values, b.grid.values);
    assert!(b.grid.values.iter().all(|&v| v == 0.0));
}

#[test]
fn bootstrap_is_nonzero_and_near_reference_scale() {
    let config = experiment();
    let boot = solver(&config).bootstrap().unwrap();
    assert!(boot.grid.max_abs() > 0.0);
    let mesh = StructuredTriMesh::new(GridGeometry::new(config.problem.domain, 15, 15).unwrap());
    let r = solve_stationary_2d(&config.problem, &mesh).unwrap();
    let err = compare(&boot.grid.resample(r.geometry).unwrap(), &r).unwrap();
    // same order of magnitude as the solution, not a sharp bound
    assert!(err.linf < 10.0, "{err:?}");
}

#[test]
fn no_diffusion_leaves_cross_flow_values_unchanged() {
    let mut config = experiment();
    config.problem.mu = parse("0").unwrap();
    let s = solver(&config);
    let state = s.bootstrap().unwrap();
    let on_gamma = s.restrict(Family::Gamma, &state.grid).unwrap();
    let after = s.substep_b(&on_gamma, &config.params).unwrap();
    assert_eq!(on_gamma, after);
    assert!(on_gamma.iter().any(|c| c.values.iter().any(|&v| v != 0.0)));
}

#[test]
fn no_steps_returns_bootstrap() {
    let config = experiment();
    let s = solver(&config);
    let params = SchemeParams {
        steps: 0,
        ..config.params
    };
    let out = s.run(&params, Mode::Transient, |_| Ok(())).unwrap();
    assert_eq!(out.grid, out.bootstrap);
    assert_eq!(out.grid, s.bootstrap().unwrap().grid);
    assert_eq!(out.report.steps, 0);
    assert!(out.report.rates.is_empty());
}

#[test]
fn single_step_is_finite_with_zero_boundary() {
    let config = experiment();
    let s = solver(&config);
    let params = SchemeParams {
        steps: 1,
        ..config.params
    };
    let out = s.run(&params, Mode::Transient, |_| Ok(())).unwrap();
    assert!(out.grid.all_finite());
    assert!(boundary_max(&out.grid) <= 1e-10);
    assert!(boundary_max(&out.bootstrap) <= 1e-10);
    assert!(out.grid.max_abs() > 0.0);
}

#[test]
fn every_emitted_grid_has_zero_boundary() {
    let config = experiment();
    let s = solver(&config);
    s.run(&config.params, Mode::Transient, |state| {
        assert!(boundary_max(&state.grid) <= 1e-10, "step {}", state.step);
        Ok(())
    })
    .unwrap();
}

#[test]
fn stationary_mode_stops_at_tolerance() {
    let config = experiment();
    let s = solver(&config);
    let params = SchemeParams {
        steps: 5000,
        eps_stat: 1e-2,
        ..config.params
    };
    let out = s.run(&params, Mode::Stationary, |_| Ok(())).unwrap();
    assert_eq!(out.report.converged, Some(true));
    assert!(out.report.steps < 5000);
    assert!(*out.report.rates.last().unwrap() < 1e-2);
    assert!(out.report.rates[..out.report.rates.len() - 1]
        .iter()
        .all(|&r| r >= 1e-2));

    let capped = SchemeParams { steps: 3, ..params };
    let out = s.run(&capped, Mode::Stationary, |_| Ok(())).unwrap();
    assert_eq!(out.report.converged, Some(false));
    assert_eq!(out.report.steps, 3);
}

#[test]
fn observer_errors_abort_the_run() {
    let config = experiment();
    let s = solver(&config);
    let err = s
        .run(&config.params, Mode::Transient, |state| {
            if state.step == 2 {
                Err(Error::Validation("stop".into()))
            } else {
                Ok(())
            }
        })
        .unwrap_err();
    assert!(err.is_validation());
}

#[test]
fn worker_count_does_not_change_results() {
    let config = experiment();
    let run = |workers| {
        driver::with_workers(workers, || {
            let s = SplitSolver::new(config.problem.clone(), config.disc)?;
            s.run(&config.params, Mode::Transient, |_| Ok(()))
        })
        .unwrap()
        .grid
    };
    let one = run(1);
    for w in [2, 3, 8] {
        assert_eq!(run(w).values, one.values, "{w} workers");
    }
}

#[test]
fn report_lists_steps_and_rates() {
    let config = experiment();
    let out = solver(&config)
        .run(&config.params, Mode::Transient, |_| Ok(()))
        .unwrap();
    let text = out.report.to_string();
    assert!(text.contains("mode: transient"));
    assert!(text.contains(&format!("steps: {}", config.params.steps)));
    assert_eq!(out.report.rates.len(), config.params.steps);
    assert!(text.contains("transfer fallbacks"));
}

#[test]
fn variable_coefficients_are_flagged() {
    let mut config = experiment();
    config.problem.mu = parse("1 + x").unwrap();
    let s = solver(&config);
    assert!(s.warnings.iter().any(|w| w.contains("varies")));
}

#[test]
fn non_divergence_free_field_warns_but_runs() {
    let mut config = experiment();
    config.problem.field.beta1 = parse("1 + x").unwrap();
    config.problem.field.beta2 = parse("1").unwrap();
    config.params.steps = 2;
    let out = driver::solve(&config, |_| Ok(())).unwrap();
    assert!(out.report.warnings.iter().any(|w| w.contains("divergence")));
    assert!(out.grid.all_finite());
}

#[test]
fn source_field_has_no_inflow() {
    let mut config = experiment();
    config.problem.field.beta1 = parse("x - 0.5").unwrap();
    config.problem.field.beta2 = parse("y - 0.5").unwrap();
    let err = driver::with_workers(1, || SplitSolver::new(config.problem.clone(), config.disc))
        .err()
        .unwrap();
    assert!(matches!(err, Error::EmptyInflow), "{err}");
}

#[test]
fn stagnation_line_is_a_numerical_error() {
    let mut config = experiment();
    config.problem.field.beta1 = parse("0.5 - x").unwrap();
    config.problem.field.beta2 = parse("0").unwrap();
    let err = driver::with_workers(1, || SplitSolver::new(config.problem.clone(), config.disc))
        .err()
        .unwrap();
    assert!(matches!(err, Error::DegenerateField { .. }), "{err}");
}
