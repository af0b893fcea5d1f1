//! Linear finite elements on a single integral curve.
//!
//! Two bilinear forms are assembled along a curve of length `L`, with `'`
//! the derivative in arc length:
//!
//! * along-flow form `s(u, v) = int mu u'v' + |beta| u'v + sigma uv dl`
//!   with load `int f v dl`, used on advection curves;
//! * cross-flow form `m(u, v) = int mu u'v' dl` with zero load, used on
//!   the orthogonal curves.
//!
//! Both curve ends carry homogeneous Dirichlet data, so only interior nodes
//! are unknowns and every matrix is tridiagonal.

use crate::error::{Error, Result};
use crate::problem::{PointCoefficients, Problem};
use crate::tracer::IntegralCurve;

/// Minimum number of elements per curve.
pub const MIN_ELEMENTS: usize = 4;

/// Nodes `0 = l_0 < l_1 < ... < l_N = L` in arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub nodes: Vec<f64>,
}

impl Mesh1D {
    /// Uniform mesh with element size close to `h`, at least
    /// [`MIN_ELEMENTS`] elements.
    pub fn uniform(length: f64, h: f64) -> Self {
        let n = ((length / h).round() as usize).max(MIN_ELEMENTS);
        let nodes = (0..=n)
            .map(|i| {
                if i == n {
                    length
                } else {
                    length * i as f64 / n as f64
                }
            })
            .collect();
        Mesh1D { nodes }
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Element index and local coordinate `lambda in [0, 1]` of arc
    /// length `s` (clamped to the mesh).
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let n = self.elements();
        let e = self.nodes.partition_point(|&l| l <= s).clamp(1, n) - 1;
        let (a, b) = (self.nodes[e], self.nodes[e + 1]);
        (e, ((s - a) / (b - a)).clamp(0.0, 1.0))
    }
}

/// Square tridiagonal matrix. `lower[i]` is entry `(i+1, i)`, `upper[i]`
/// is entry `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// `self + c * other`.
    pub fn plus_scaled(&self, c: f64, other: &Tridiagonal) -> Tridiagonal {
        let zip = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + c * y).collect();
        Tridiagonal {
            lower: zip(&self.lower, &other.lower),
            diag: zip(&self.diag, &other.diag),
            upper: zip(&self.upper, &other.upper),
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let mut s = self.diag[i];
        if i > 0 {
            s += self.lower[i - 1];
        }
        if i + 1 < self.dim() {
            s += self.upper[i];
        }
        s
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        solve_tridiagonal(&self.lower, &self.diag, &self.upper, rhs)
    }
}

/// Thomas algorithm (no pivoting).
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(rhs.len() == n && lower.len() + 1 == n.max(1) && upper.len() + 1 == n.max(1));
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SingularSystem { row: 0 });
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: i });
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    /// Diffusion along the curve, advection and reaction, with source load.
    AlongFlow,
    /// Diffusion along the curve only, zero load.
    CrossFlow,
}

/// Interior-node system of one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal1DSystem {
    pub kind: FormKind,
    pub mass: Tridiagonal,
    pub form: Tridiagonal,
    pub load: Vec<f64>,
}

/// Nodal values on a curve mesh, boundary values included (always zero).
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSolution {
    pub values: Vec<f64>,
}

impl CurveSolution {
    pub fn zeros(mesh: &Mesh1D) -> Self {
        CurveSolution {
            values: vec![0.0; mesh.nodes.len()],
        }
    }

    fn from_interior(interior: Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(0.0);
        values.extend(interior);
        values.push(0.0);
        CurveSolution { values }
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    /// Value of the piecewise-linear function at arc length `s`.
    pub fn eval(&self, mesh: &Mesh1D, s: f64) -> f64 {
        let (e, lam) = mesh.locate(s);
        self.values[e] + lam * (self.values[e + 1] - self.values[e])
    }
}

const GAUSS: [f64; 2] = [
    0.5 - 0.288_675_134_594_812_9, // 1/(2 sqrt 3)
    0.5 + 0.288_675_134_594_812_9,
];

/// Coefficients at the two Gauss points of every element.
pub fn sample_coefficients(
    curve: &IntegralCurve,
    mesh: &Mesh1D,
    problem: &Problem,
) -> Result<Vec<[PointCoefficients; 2]>> {
    mesh.nodes
        .windows(2)
        .map(|w| {
            let h = w[1] - w[0];
            let at = |xi: f64| problem.coefficients(curve.point_at(w[0] + xi * h));
            Ok([at(GAUSS[0])?, at(GAUSS[1])?])
        })
        .collect()
}

/// Assembles the element integrals with two-point Gauss quadrature and
/// eliminates the two boundary nodes.
pub fn assemble(
    curve: &IntegralCurve,
    mesh: &Mesh1D,
    problem: &Problem,
    kind: FormKind,
) -> Result<Tridiagonal1DSystem> {
    let coeffs = sample_coefficients(curve, mesh, problem)?;
    Ok(assemble_from_samples(mesh, &coeffs, kind))
}

pub fn assemble_from_samples(
    mesh: &Mesh1D,
    coeffs: &[[PointCoefficients; 2]],
    kind: FormKind,
) -> Tridiagonal1DSystem {
    let (mass, form, load) = assemble_full(mesh, coeffs, kind);
    Tridiagonal1DSystem {
        kind,
        mass: eliminate_boundary(&mass),
        form: eliminate_boundary(&form),
        load: load[1..load.len() - 1].to_vec(),
    }
}

/// Matrices over all `N + 1` nodes before boundary elimination.
pub(crate) fn assemble_full(
    mesh: &Mesh1D,
    coeffs: &[[PointCoefficients; 2]],
    kind: FormKind,
) -> (Tridiagonal, Tridiagonal, Vec<f64>) {
    let n_nodes = mesh.nodes.len();
    let mut mass = Tridiagonal::zeros(n_nodes);
    let mut form = Tridiagonal::zeros(n_nodes);
    let mut load = vec![0.0; n_nodes];
    for (e, w) in mesh.nodes.windows(2).enumerate() {
        let h = w[1] - w[0];
        let dphi = [-1.0 / h, 1.0 / h];
        let mut me = [[0.0; 2]; 2];
        let mut ke = [[0.0; 2]; 2];
        let mut fe = [0.0; 2];
        for (q, &xi) in GAUSS.iter().enumerate() {
            let weight = 0.5 * h;
            let phi = [1.0 - xi, xi];
            let c = coeffs[e][q];
            for a in 0..2 {
                for b in 0..2 {
                    me[a][b] += weight * (phi[a] * phi[b]);
                    let mut k = c.mu * (dphi[a] * dphi[b]);
                    if kind == FormKind::AlongFlow {
                        k += c.speed * dphi[b] * phi[a] + c.sigma * (phi[a] * phi[b]);
                    }
                    ke[a][b] += weight * k;
                }
                if kind == FormKind::AlongFlow {
                    fe[a] += weight * c.source * phi[a];
                }
            }
        }
        for (m, k) in [(&mut mass, &me), (&mut form, &ke)] {
            m.diag[e] += k[0][0];
            m.diag[e + 1] += k[1][1];
            m.upper[e] += k[0][1];
            m.lower[e] += k[1][0];
        }
        load[e] += fe[0];
        load[e + 1] += fe[1];
    }
    (mass, form, load)
}

fn eliminate_boundary(full: &Tridiagonal) -> Tridiagonal {
    let n = full.dim();
    Tridiagonal {
        lower: full.lower[1..n - 2].to_vec(),
        diag: full.diag[1..n - 1].to_vec(),
        upper: full.upper[1..n - 2].to_vec(),
    }
}

/// One step of the theta-scheme on interior unknowns:
/// `(M + theta dt A) udot = load - A u`, then `u + dt udot`.
pub fn theta_step_raw(
    mass: &Tridiagonal,
    form: &Tridiagonal,
    load: &[f64],
    u: &[f64],
    theta: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    let au = form.mul_vec(u);
    let rhs: Vec<f64> = load.iter().zip(&au).map(|(l, a)| l - a).collect();
    let udot = mass.plus_scaled(theta * dt, form).solve(&rhs)?;
    Ok(u.iter().zip(&udot).map(|(u, d)| u + dt * d).collect())
}

pub fn theta_step(
    sys: &Tridiagonal1DSystem,
    u: &CurveSolution,
    theta: f64,
    dt: f64,
) -> Result<CurveSolution> {
    let next = theta_step_raw(&sys.mass, &sys.form, &sys.load, u.interior(), theta, dt)?;
    Ok(CurveSolution::from_interior(next))
}

/// Solves `A u = load` directly.
pub fn stationary_solve(sys: &Tridiagonal1DSystem) -> Result<CurveSolution> {
    Ok(CurveSolution::from_interior(sys.form.solve(&sys.load)?))
}
