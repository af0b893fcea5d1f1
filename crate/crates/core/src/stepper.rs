//! The splitting loop.
//!
//! Each time step runs two substeps. Substep A advances every advection
//! curve with the along-flow form and the source load. The result is moved
//! to the orthogonal curves through a transfer grid, where substep B
//! applies cross-flow diffusion. A second transfer brings the values back to
//! the advection curves, which carry the state between steps.
//!
//! Curves, meshes, matrices and grid crossings depend only on the geometry
//! and are built once. Per-curve work runs on the current rayon pool; every
//! transfer is an ordered, single-writer reduction, so results do not depend
//! on the number of workers.

use std::fmt;
use std::time::{Duration, Instant};

use log::{debug, info};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem1d::{
    assemble, stationary_solve, theta_step, CurveSolution, FormKind, Mesh1D, Tridiagonal1DSystem,
};
use crate::field::{inflow_boundary, Family};
use crate::geom::Point;
use crate::problem::Problem;
use crate::tracer::{seed_points, trace_family, IntegralCurve, TraceOptions};
use crate::transfer::{
    find_crossings, restrict_to_curve, Crossing, FallbackCounts, GridGeometry, RecordKey, SolutionGrid,
    TransferGrid,
};

/// Discretization knobs of the splitting method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    /// Curves in the advection family.
    pub beta_curves: usize,
    /// Curves in the orthogonal family.
    pub gamma_curves: usize,
    /// Tracing step; `None` uses a thousandth of the smaller domain side.
    pub h_trace: Option<f64>,
    /// Target 1D element size.
    pub h_fem: f64,
    pub kx: usize,
    pub ky: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            beta_curves: 129,
            gamma_curves: 129,
            h_trace: None,
            h_fem: 0.01,
            kx: 64,
            ky: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub theta: f64,
    pub dt: f64,
    /// Step count (the cap in stationary mode).
    pub steps: usize,
    /// Stationary mode stops once `max |u_{j+1} - u_j| / dt` drops below this.
    pub eps_stat: f64,
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.theta) {
            return Err(Error::Validation(format!(
                "theta must lie in [0, 1), got {}",
                self.theta
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation(format!("dt must be positive, got {}", self.dt)));
        }
        if self.eps_stat.is_nan() || self.eps_stat <= 0.0 {
            return Err(Error::Validation(format!(
                "eps_stat must be positive, got {}",
                self.eps_stat
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Transient,
    Stationary,
}

/// One curve with its 1D problem and cached grid crossings.
#[derive(Debug, Clone)]
pub struct CurveProblem {
    pub curve: IntegralCurve,
    pub mesh: Mesh1D,
    pub system: Tridiagonal1DSystem,
    crossings: Vec<CachedCrossing>,
}

#[derive(Debug, Clone, Copy)]
struct CachedCrossing {
    crossing: Crossing,
    key: RecordKey,
    /// FE location of the polyline edge's two end points.
    ends: [(usize, f64); 2],
}

impl CurveProblem {
    fn build(
        curve: IntegralCurve,
        problem: &Problem,
        disc: &Discretization,
        geometry: &GridGeometry,
        kind: FormKind,
    ) -> Result<Self> {
        let mesh = Mesh1D::uniform(curve.length(), disc.h_fem);
        let system = assemble(&curve, &mesh, problem, kind)?;
        let crossings = find_crossings(geometry, &curve.nodes)
            .into_iter()
            .map(|c| {
                let (s0, s1) = (curve.arclen[c.edge], curve.arclen[c.edge + 1]);
                CachedCrossing {
                    crossing: c,
                    key: RecordKey {
                        seed_param: curve.seed_param,
                        arclen: s0 + c.t * (s1 - s0),
                    },
                    ends: [mesh.locate(s0), mesh.locate(s1)],
                }
            })
            .collect();
        Ok(CurveProblem {
            curve,
            mesh,
            system,
            crossings,
        })
    }

    /// Curve values at every cached crossing, linear along the polyline edge.
    fn crossing_values(&self, sol: &CurveSolution) -> Vec<f64> {
        let v = &sol.values;
        let at = |(e, lam): (usize, f64)| v[e] + lam * (v[e + 1] - v[e]);
        self.crossings
            .iter()
            .map(|c| {
                let (a, b) = (at(c.ends[0]), at(c.ends[1]));
                a + c.crossing.t * (b - a)
            })
            .collect()
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }
}

/// Wall time spent per phase.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    pub setup: Duration,
    pub bootstrap: Duration,
    pub substep_a: Duration,
    pub substep_b: Duration,
    pub transfer: Duration,
}

/// State between time steps.
#[derive(Debug, Clone)]
pub struct SplitState {
    pub step: usize,
    /// Values on the advection curves.
    pub beta: Vec<CurveSolution>,
    /// The same time level on the transfer grid.
    pub grid: SolutionGrid,
    pub fallbacks: FallbackCounts,
    pub timings: PhaseTimings,
}

/// Everything the splitting method needs that does not change in time.
pub struct SplitSolver {
    pub problem: Problem,
    pub disc: Discretization,
    pub geometry: GridGeometry,
    pub beta: Vec<CurveProblem>,
    pub gamma: Vec<CurveProblem>,
    pub discarded: [usize; 2],
    pub warnings: Vec<String>,
    setup_time: Duration,
}

impl SplitSolver {
    /// Traces both families and prepares their 1D problems. Runs on the
    /// current rayon pool.
    pub fn new(problem: Problem, disc: Discretization) -> Result<Self> {
        let started = Instant::now();
        let domain = problem.domain;
        let geometry = GridGeometry::new(domain, disc.kx, disc.ky)?;
        let mut opts = TraceOptions::for_domain(&domain);
        if let Some(h) = disc.h_trace {
            opts = opts.with_step(h);
        }
        if disc.h_fem.is_nan() || disc.h_fem <= 0.0 {
            return Err(Error::Validation(format!(
                "h_fem must be positive, got {}",
                disc.h_fem
            )));
        }

        let mut warnings = Vec::new();
        if problem.has_variable_mu_or_sigma() {
            warnings.push(
                "mu or sigma varies in space; beyond the constant-coefficient assumptions of the method"
                    .to_string(),
            );
        }

        let mut families = Vec::with_capacity(2);
        let mut discarded = [0; 2];
        for (slot, (family, count, kind)) in [
            (Family::Beta, disc.beta_curves, FormKind::AlongFlow),
            (Family::Gamma, disc.gamma_curves, FormKind::CrossFlow),
        ]
        .into_iter()
        .enumerate()
        {
            let inflow = inflow_boundary(&problem.field, &domain, family)?;
            let seeds = seed_points(&inflow, &domain, count)?;
            let traced = trace_family(&problem.field, &domain, family, &seeds, &opts)?;
            if !traced.discarded.is_empty() {
                warnings.push(format!(
                    "{} {} curve(s) discarded as too short",
                    traced.discarded.len(),
                    family.name()
                ));
            }
            discarded[slot] = traced.discarded.len();
            if traced.curves.is_empty() {
                return Err(Error::EmptyInflow);
            }
            let curves: Vec<CurveProblem> = traced
                .curves
                .into_par_iter()
                .map(|c| CurveProblem::build(c, &problem, &disc, &geometry, kind))
                .collect::<Result<_>>()?;
            families.push(curves);
        }
        let gamma = families.pop().unwrap_or_default();
        let beta = families.pop().unwrap_or_default();
        info!(
            "traced {} beta and {} gamma curves in {:.3?}",
            beta.len(),
            gamma.len(),
            started.elapsed()
        );
        Ok(SplitSolver {
            problem,
            disc,
            geometry,
            beta,
            gamma,
            discarded,
            warnings,
            setup_time: started.elapsed(),
        })
    }

    fn curves(&self, family: Family) -> &[CurveProblem] {
        match family {
            Family::Beta => &self.beta,
            Family::Gamma => &self.gamma,
        }
    }

    /// Records one family's values into a fresh transfer grid and returns
    /// node values with the boundary condition applied.
    pub fn to_grid(
        &self,
        family: Family,
        values: &[CurveSolution],
    ) -> Result<(SolutionGrid, FallbackCounts)> {
        let curves = self.curves(family);
        let per_curve: Vec<Vec<f64>> = curves
            .par_iter()
            .zip(values.par_iter())
            .map(|(cp, sol)| cp.crossing_values(sol))
            .collect();
        let mut grid = TransferGrid::new(self.geometry);
        for (cp, vals) in curves.iter().zip(&per_curve) {
            for (c, &v) in cp.crossings.iter().zip(vals) {
                grid.record(&c.crossing, v, c.key);
            }
        }
        let (mut nodes, counts) = grid.to_grid_nodes()?;
        nodes.zero_boundary();
        Ok((nodes, counts))
    }

    /// Samples a node grid onto every curve of a family.
    pub fn restrict(&self, family: Family, grid: &SolutionGrid) -> Result<Vec<CurveSolution>> {
        self.curves(family)
            .par_iter()
            .map(|cp| restrict_to_curve(grid, &cp.curve, &cp.mesh))
            .collect()
    }

    /// Initial state: either the given initial expression sampled onto the
    /// advection curves, or the stationary along-flow solution per curve.
    pub fn bootstrap(&self) -> Result<SplitState> {
        let started = Instant::now();
        let beta: Vec<CurveSolution> = match &self.problem.initial {
            Some(u0) => self
                .beta
                .par_iter()
                .map(|cp| {
                    let n = cp.mesh.nodes.len();
                    let mut values = Vec::with_capacity(n);
                    for (k, &s) in cp.mesh.nodes.iter().enumerate() {
                        if k == 0 || k == n - 1 {
                            values.push(0.0);
                        } else {
                            let p: Point = cp.curve.point_at(s);
                            values.push(u0.evaluate(p.x, p.y)?);
                        }
                    }
                    Ok(CurveSolution { values })
                })
                .collect::<Result<_>>()?,
            None => self
                .beta
                .par_iter()
                .map(|cp| stationary_solve(&cp.system))
                .collect::<Result<_>>()?,
        };
        check_finite(&beta, 0, Family::Beta)?;
        let (grid, fallbacks) = self.to_grid(Family::Beta, &beta)?;
        let timings = PhaseTimings {
            setup: self.setup_time,
            bootstrap: started.elapsed(),
            ..Default::default()
        };
        Ok(SplitState {
            step: 0,
            beta,
            grid,
            fallbacks,
            timings,
        })
    }

    /// Along-flow theta step on every advection curve.
    pub fn substep_a(&self, values: &[CurveSolution], params: &SchemeParams) -> Result<Vec<CurveSolution>> {
        self.beta
            .par_iter()
            .zip(values.par_iter())
            .map(|(cp, u)| theta_step(&cp.system, u, params.theta, params.dt))
            .collect()
    }

    /// Cross-flow theta step (zero load) on every orthogonal curve.
    pub fn substep_b(&self, values: &[CurveSolution], params: &SchemeParams) -> Result<Vec<CurveSolution>> {
        self.gamma
            .par_iter()
            .zip(values.par_iter())
            .map(|(cp, u)| theta_step(&cp.system, u, params.theta, params.dt))
            .collect()
    }

    pub fn split_step(&self, state: SplitState, params: &SchemeParams) -> Result<SplitState> {
        let step = state.step + 1;
        let mut timings = state.timings;
        let mut fallbacks = state.fallbacks;

        let t = Instant::now();
        let half = self.substep_a(&state.beta, params)?;
        check_finite(&half, step, Family::Beta)?;
        timings.substep_a += t.elapsed();

        let t = Instant::now();
        let (grid_half, fb) = self.to_grid(Family::Beta, &half)?;
        fallbacks += fb;
        let on_gamma = self.restrict(Family::Gamma, &grid_half)?;
        timings.transfer += t.elapsed();

        let t = Instant::now();
        let full = self.substep_b(&on_gamma, params)?;
        check_finite(&full, step, Family::Gamma)?;
        timings.substep_b += t.elapsed();

        let t = Instant::now();
        let (grid, fb) = self.to_grid(Family::Gamma, &full)?;
        fallbacks += fb;
        let beta = self.restrict(Family::Beta, &grid)?;
        timings.transfer += t.elapsed();

        Ok(SplitState {
            step,
            beta,
            grid,
            fallbacks,
            timings,
        })
    }

    /// Runs the loop. `observer` sees every state after its step.
    pub fn run(
        &self,
        params: &SchemeParams,
        mode: Mode,
        mut observer: impl FnMut(&SplitState) -> Result<()>,
    ) -> Result<RunOutcome> {
        params.validate()?;
        let mut state = self.bootstrap()?;
        let bootstrap_grid = state.grid.clone();
        let mut rates = Vec::with_capacity(params.steps);
        let mut converged = None;
        for _ in 0..params.steps {
            let prev = state.grid.clone();
            state = self.split_step(state, params)?;
            let rate = prev
                .values
                .iter()
                .zip(&state.grid.values)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / params.dt;
            rates.push(rate);
            debug!("step {}: max |du/dt| = {rate:.6e}", state.step);
            observer(&state)?;
            if mode == Mode::Stationary && rate < params.eps_stat {
                converged = Some(true);
                break;
            }
        }
        if mode == Mode::Stationary && converged.is_none() {
            converged = Some(false);
        }
        let report = RunReport {
            mode,
            steps: state.step,
            converged,
            rates,
            fallbacks: state.fallbacks,
            timings: state.timings,
            beta_curves: self.beta.len(),
            gamma_curves: self.gamma.len(),
            discarded: self.discarded,
            warnings: self.warnings.clone(),
        };
        Ok(RunOutcome {
            grid: state.grid,
            bootstrap: bootstrap_grid,
            report,
        })
    }
}

fn check_finite(values: &[CurveSolution], step: usize, family: Family) -> Result<()> {
    match values
        .iter()
        .position(|s| !s.values.iter().all(|v| v.is_finite()))
    {
        Some(curve) => Err(Error::NonFinite {
            step,
            family: family.name(),
            curve,
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub grid: SolutionGrid,
    pub bootstrap: SolutionGrid,
    pub report: RunReport,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub mode: Mode,
    pub steps: usize,
    /// Stationary mode only: whether the rate fell below the tolerance.
    pub converged: Option<bool>,
    /// `max |u_{j+1} - u_j| / dt` per step.
    pub rates: Vec<f64>,
    pub fallbacks: FallbackCounts,
    pub timings: PhaseTimings,
    pub beta_curves: usize,
    pub gamma_curves: usize,
    pub discarded: [usize; 2],
    pub warnings: Vec<String>,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            Mode::Transient => "transient",
            Mode::Stationary => "stationary",
        };
        writeln!(f, "mode: {mode}")?;
        writeln!(f, "steps: {}", self.steps)?;
        if let Some(c) = self.converged {
            writeln!(f, "converged: {c}")?;
        }
        writeln!(
            f,
            "curves: {} beta, {} gamma ({} and {} discarded)",
            self.beta_curves, self.gamma_curves, self.discarded[0], self.discarded[1]
        )?;
        writeln!(
            f,
            "transfer fallbacks: {} single-line, {} nearest-point",
            self.fallbacks.single_line, self.fallbacks.nearest_point
        )?;
        let t = &self.timings;
        writeln!(
            f,
            "time: setup {:.3?}, bootstrap {:.3?}, substep A {:.3?}, substep B {:.3?}, transfer {:.3?}",
            t.setup, t.bootstrap, t.substep_a, t.substep_b, t.transfer
        )?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        writeln!(f, "residual history (step, max |du/dt|):")?;
        for (k, r) in self.rates.iter().enumerate() {
            writeln!(f, "{} {:.6e}", k + 1, r)?;
        }
        Ok(())
    }
}
