//! Run orchestration shared by the command line tool and the C interface.

use log::{info, warn};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::check_divergence_free;
use crate::reference::{compare, solve_stationary_2d, RelativeErrors, StructuredTriMesh};
use crate::stepper::{RunOutcome, SplitSolver, SplitState};
use crate::transfer::{GridGeometry, SolutionGrid};

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("cannot start {workers} workers: {e}")))?;
    pool.install(f)
}

/// Traces both families and checks the field. A nonzero divergence is
/// reported as a warning only.
pub fn prepare(config: &RunConfig) -> Result<SplitSolver> {
    let mut solver = SplitSolver::new(config.problem.clone(), config.disc)?;
    let div = check_divergence_free(&config.problem.field, &config.problem.domain, config.div_tol)?;
    if !div.passed {
        let msg = format!(
            "advection field is not divergence free: |div beta| = {:.3e} at ({:.3}, {:.3})",
            div.max_abs, div.at.x, div.at.y
        );
        warn!("{msg}");
        solver.warnings.push(msg);
    }
    Ok(solver)
}

/// Split solve on the configured worker pool.
pub fn solve(
    config: &RunConfig,
    observer: impl FnMut(&SplitState) -> Result<()> + Send,
) -> Result<RunOutcome> {
    with_workers(config.workers, || {
        let solver = prepare(config)?;
        let out = solver.run(&config.params, config.mode, observer)?;
        info!("split solve finished after {} steps", out.report.steps);
        Ok(out)
    })
}

/// Stationary reference solve on the configured triangle mesh.
pub fn reference(config: &RunConfig) -> Result<SolutionGrid> {
    let (kx, ky) = config.reference_cells;
    let mesh = StructuredTriMesh::new(GridGeometry::new(config.problem.domain, kx, ky)?);
    info!("reference solve on {} triangles", mesh.triangle_count());
    solve_stationary_2d(&config.problem, &mesh)
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub split: RunOutcome,
    pub reference: SolutionGrid,
    pub errors: RelativeErrors,
    pub passed: bool,
}

/// Split solution sampled bilinearly at the reference nodes, compared
/// against the reference.
pub fn compare_run(config: &RunConfig) -> Result<Comparison> {
    let split = solve(config, |_| Ok(()))?;
    let reference = reference(config)?;
    let errors = compare(&split.grid.resample(reference.geometry)?, &reference)?;
    let passed = errors.linf <= config.tol_linf && errors.l1 <= config.tol_l1;
    Ok(Comparison {
        split,
        reference,
        errors,
        passed,
    })
}
