//! Unsplit 2D solver used to check the splitting method.
//!
//! Linear triangles on a structured mesh: every cell of a `kx x ky` grid is
//! cut by its bottom-left to top-right diagonal. The full form
//! `a(u, v) = int mu grad u . grad v + (beta . grad u) v + sigma u v` is
//! integrated with the three-point edge-midpoint rule, boundary nodes are
//! eliminated, and the banded systems are solved by direct elimination.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::problem::Problem;
use crate::transfer::{GridGeometry, SolutionGrid};

/// Cells per direction of the default reference mesh (15 x 15 x 2 = 450
/// triangles).
pub const DEFAULT_CELLS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredTriMesh {
    pub geometry: GridGeometry,
}

impl StructuredTriMesh {
    pub fn new(geometry: GridGeometry) -> Self {
        StructuredTriMesh { geometry }
    }

    pub fn triangle_count(&self) -> usize {
        2 * self.geometry.kx * self.geometry.ky
    }

    /// Node index pairs `(i, j)` of every triangle, counter-clockwise.
    pub fn triangles(&self) -> impl Iterator<Item = [(usize, usize); 3]> + '_ {
        let g = self.geometry;
        (0..g.ky).flat_map(move |j| {
            (0..g.kx).flat_map(move |i| {
                [
                    [(i, j), (i + 1, j), (i + 1, j + 1)],
                    [(i, j), (i + 1, j + 1), (i, j + 1)],
                ]
            })
        })
    }

    pub fn unknowns(&self) -> usize {
        (self.geometry.kx - 1) * (self.geometry.ky - 1)
    }

    /// Unknown index of an interior node.
    pub fn dof(&self, i: usize, j: usize) -> Option<usize> {
        let g = self.geometry;
        if g.is_boundary_node(i, j) {
            None
        } else {
            Some((j - 1) * (g.kx - 1) + (i - 1))
        }
    }

    pub fn half_bandwidth(&self) -> usize {
        self.geometry.kx
    }
}

/// Square band matrix stored row by row, `2 * bw + 1` entries per row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn plus_scaled(&self, c: f64, other: &BandMatrix) -> BandMatrix {
        assert_eq!((self.n, self.bw), (other.n, other.bw));
        BandMatrix {
            n: self.n,
            bw: self.bw,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    /// In-place LU factorization without pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem { row: k });
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let s = self.slot(i, k);
                let l = self.data[s] / pivot;
                self.data[s] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last {
                    let (a, b) = (self.slot(i, j), self.slot(k, j));
                    self.data[a] -= l * self.data[b];
                }
            }
        }
        Ok(BandLu { lu: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = &self.lu;
        let (n, bw) = (m.n, m.bw);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let s: f64 = (lo..i).map(|j| m.data[m.slot(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let s: f64 = (i + 1..=hi).map(|j| m.data[m.slot(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / m.data[m.slot(i, i)];
        }
        x
    }
}

/// Mass matrix, full-form matrix and load on the interior unknowns.
#[derive(Debug, Clone)]
pub struct Sparse2DSystem {
    pub mesh: StructuredTriMesh,
    pub mass: BandMatrix,
    pub form: BandMatrix,
    pub load: Vec<f64>,
}

impl Sparse2DSystem {
    /// Interior values to a full node grid with zero boundary.
    pub fn to_grid(&self, interior: &[f64]) -> SolutionGrid {
        let g = self.mesh.geometry;
        let mut grid = SolutionGrid::zeros(g);
        for j in 1..g.ky {
            for i in 1..g.kx {
                if let Some(k) = self.mesh.dof(i, j) {
                    grid.set(i, j, interior[k]);
                }
            }
        }
        grid
    }

    /// Interior values of a node grid on the same mesh.
    pub fn from_grid(&self, grid: &SolutionGrid) -> Result<Vec<f64>> {
        let g = self.mesh.geometry;
        if grid.geometry != g {
            return Err(Error::GeometryMismatch);
        }
        let mut out = vec![0.0; self.mesh.unknowns()];
        for j in 1..g.ky {
            for i in 1..g.kx {
                if let Some(k) = self.mesh.dof(i, j) {
                    out[k] = grid.value(i, j);
                }
            }
        }
        Ok(out)
    }
}

pub fn assemble_2d(problem: &Problem, mesh: &StructuredTriMesh) -> Result<Sparse2DSystem> {
    let g = mesh.geometry;
    if g.kx < 2 || g.ky < 2 {
        return Err(Error::Validation(
            "reference mesh needs at least 2 cells per direction".into(),
        ));
    }
    let n = mesh.unknowns();
    let bw = mesh.half_bandwidth();
    let mut mass = BandMatrix::zeros(n, bw);
    let mut form = BandMatrix::zeros(n, bw);
    let mut load = vec![0.0; n];

    for tri in mesh.triangles() {
        let p = tri.map(|(i, j)| g.node(i, j));
        let det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
        let area = 0.5 * det;
        // gradients of the barycentric coordinates
        let grad: [Point; 3] = std::array::from_fn(|a| {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            Point::new((p[b].y - p[c].y) / det, (p[c].x - p[b].x) / det)
        });
        let mut me = [[0.0; 3]; 3];
        let mut ke = [[0.0; 3]; 3];
        let mut fe = [0.0; 3];
        for q in 0..3 {
            // midpoint of the edge opposite vertex q
            let (a, b) = ((q + 1) % 3, (q + 2) % 3);
            let at = p[a].lerp(p[b], 0.5);
            let mut phi = [0.5; 3];
            phi[q] = 0.0;
            let w = area / 3.0;
            let mu = problem.mu.evaluate(at.x, at.y)?;
            let sigma = problem.sigma.evaluate(at.x, at.y)?;
            let beta = problem.field.beta(at)?;
            let f = problem.source.evaluate(at.x, at.y)?;
            for r in 0..3 {
                for c in 0..3 {
                    let pp = phi[r] * phi[c];
                    me[r][c] += w * pp;
                    ke[r][c] += w * (mu * grad[r].dot(grad[c]) + beta.dot(grad[c]) * phi[r] + sigma * pp);
                }
                fe[r] += w * f * phi[r];
            }
        }
        let dofs = tri.map(|(i, j)| mesh.dof(i, j));
        for r in 0..3 {
            let Some(dr) = dofs[r] else { continue };
            load[dr] += fe[r];
            for c in 0..3 {
                let Some(dc) = dofs[c] else { continue };
                mass.add(dr, dc, me[r][c]);
                form.add(dr, dc, ke[r][c]);
            }
        }
    }
    Ok(Sparse2DSystem {
        mesh: *mesh,
        mass,
        form,
        load,
    })
}

/// Direct solve of `a(u, v) = <l, v>`.
pub fn solve_stationary_2d(problem: &Problem, mesh: &StructuredTriMesh) -> Result<SolutionGrid> {
    let sys = assemble_2d(problem, mesh)?;
    let u = sys.form.clone().factor()?.solve(&sys.load);
    Ok(sys.to_grid(&u))
}

/// Theta-scheme with the left-hand matrix factored once.
pub struct ThetaStepper2D<'a> {
    sys: &'a Sparse2DSystem,
    lhs: BandLu,
    dt: f64,
}

impl<'a> ThetaStepper2D<'a> {
    pub fn new(sys: &'a Sparse2DSystem, theta: f64, dt: f64) -> Result<Self> {
        let lhs = sys.mass.plus_scaled(theta * dt, &sys.form).factor()?;
        Ok(ThetaStepper2D { sys, lhs, dt })
    }

    /// `(M + theta dt A) udot = l - A u`, `u + dt udot`.
    pub fn step(&self, u: &[f64]) -> Vec<f64> {
        let au = self.sys.form.mul_vec(u);
        let rhs: Vec<f64> = self.sys.load.iter().zip(&au).map(|(l, a)| l - a).collect();
        let udot = self.lhs.solve(&rhs);
        u.iter().zip(&udot).map(|(u, d)| u + self.dt * d).collect()
    }
}

pub fn step_theta_2d(sys: &Sparse2DSystem, u: &[f64], theta: f64, dt: f64) -> Result<Vec<f64>> {
    Ok(ThetaStepper2D::new(sys, theta, dt)?.step(u))
}

/// Outcome of a transient reference run.
#[derive(Debug, Clone)]
pub struct TransientRun {
    pub grid: SolutionGrid,
    pub steps: usize,
    /// Last `max |u_{j+1} - u_j| / dt`.
    pub rate: f64,
}

/// Runs the theta-scheme from `initial` for at most `max_steps`, stopping
/// early once the max-norm time derivative drops below `tol`.
pub fn solve_transient_2d(
    problem: &Problem,
    mesh: &StructuredTriMesh,
    initial: &SolutionGrid,
    theta: f64,
    dt: f64,
    max_steps: usize,
    tol: Option<f64>,
) -> Result<TransientRun> {
    let sys = assemble_2d(problem, mesh)?;
    let stepper = ThetaStepper2D::new(&sys, theta, dt)?;
    let mut u = sys.from_grid(initial)?;
    let mut rate = f64::INFINITY;
    let mut steps = 0;
    while steps < max_steps {
        let next = stepper.step(&u);
        rate = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / dt;
        u = next;
        steps += 1;
        if tol.is_some_and(|t| rate < t) {
            break;
        }
    }
    Ok(TransientRun {
        grid: sys.to_grid(&u),
        steps,
        rate,
    })
}

/// Relative nodal errors of `a` against `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeErrors {
    pub linf: f64,
    pub l1: f64,
}

/// `max|a - b| / max|b|` and `sum|a - b| / sum|b|` over the grid nodes.
pub fn compare(a: &SolutionGrid, b: &SolutionGrid) -> Result<RelativeErrors> {
    if a.geometry != b.geometry {
        return Err(Error::GeometryMismatch);
    }
    let (mut diff_max, mut ref_max, mut diff_sum, mut ref_sum) = (0.0f64, 0.0f64, 0.0, 0.0);
    for (x, y) in a.values.iter().zip(&b.values) {
        let d = (x - y).abs();
        diff_max = diff_max.max(d);
        ref_max = ref_max.max(y.abs());
        diff_sum += d;
        ref_sum += y.abs();
    }
    if ref_max == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(RelativeErrors {
        linf: diff_max / ref_max,
        l1: diff_sum / ref_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::field::VectorFieldSpec;
    use crate::geom::DomainRect;

    fn problem(mu: &str, sigma: &str, b1: &str, b2: &str, f: &str) -> Problem {
        Problem {
            domain: DomainRect::unit_square(),
            mu: parse(mu).unwrap(),
            sigma: parse(sigma).unwrap(),
            field: VectorFieldSpec::new(parse(b1).unwrap(), parse(b2).unwrap()),
            source: parse(f).unwrap(),
            initial: None,
        }
    }

    fn mesh(k: usize) -> StructuredTriMesh {
        StructuredTriMesh::new(GridGeometry::new(DomainRect::unit_square(), k, k).unwrap())
    }

    #[test]
    fn default_mesh_has_450_triangles() {
        let m = mesh(DEFAULT_CELLS);
        assert_eq!(m.triangle_count(), 450);
        assert_eq!(m.triangles().count(), 450);
        // positive orientation
        for t in m.triangles() {
            let p = t.map(|(i, j)| m.geometry.node(i, j));
            let det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
            assert!(det > 0.0);
        }
    }

    #[test]
    fn laplacian_stencil() {
        let m = mesh(6);
        let sys = assemble_2d(&problem("1", "0", "0", "0", "0"), &m).unwrap();
        let c = m.dof(3, 3).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(sys.form.get(c, c), 4.0));
        for (i, j) in [(2, 3), (4, 3), (3, 2), (3, 4)] {
            assert!(close(sys.form.get(c, m.dof(i, j).unwrap()), -1.0));
        }
        for (i, j) in [(2, 2), (4, 4), (2, 4), (4, 2)] {
            assert!(close(sys.form.get(c, m.dof(i, j).unwrap()), 0.0));
        }
        // rows away from the boundary sum to zero
        for j in 2..5 {
            for i in 2..5 {
                let r = m.dof(i, j).unwrap();
                let s: f64 = (0..m.unknowns()).map(|k| sys.form.get(r, k)).sum();
                assert!(s.abs() < 1e-12);
            }
        }
        assert!(sys.load.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn reaction_only_form_is_scaled_mass() {
        let m = mesh(5);
        let sys = assemble_2d(&problem("0", "2.5", "0", "0", "1"), &m).unwrap();
        for r in 0..m.unknowns() {
            for c in 0..m.unknowns() {
                let want = 2.5 * sys.mass.get(r, c);
                assert!((sys.form.get(r, c) - want).abs() <= 1e-15 * want.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn band_lu_matches_dense_product() {
        let m = mesh(7);
        let sys = assemble_2d(&problem("1", "1", "-5*(y+1)", "5*(x+1)", "5"), &m).unwrap();
        let x: Vec<f64> = (0..m.unknowns()).map(|k| (k as f64 * 0.37).sin()).collect();
        let b = sys.form.mul_vec(&x);
        let solved = sys.form.clone().factor().unwrap().solve(&b);
        for (a, b) in solved.iter().zip(&x) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    fn manufactured_error(k: usize) -> f64 {
        let p = problem(
            "1",
            "0",
            "0",
            "0",
            "2*3.141592653589793^2*sin(3.141592653589793*x)*sin(3.141592653589793*y)",
        );
        let grid = solve_stationary_2d(&p, &mesh(k)).unwrap();
        let pi = std::f64::consts::PI;
        let exact = SolutionGrid::from_fn(grid.geometry, |q| (pi * q.x).sin() * (pi * q.y).sin());
        grid.values
            .iter()
            .zip(&exact.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    #[test]
    fn manufactured_solution_second_order() {
        let errs: Vec<f64> = [8, 16, 32, 64].iter().map(|&k| manufactured_error(k)).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}, errors {errs:?}");
        }
    }

    #[test]
    fn zero_source_zero_solution() {
        let g = solve_stationary_2d(&problem("1", "1", "1", "0", "0"), &mesh(6)).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
        let sys = assemble_2d(&problem("1", "1", "1", "0", "0"), &mesh(6)).unwrap();
        let u = step_theta_2d(&sys, &vec![0.0; sys.mesh.unknowns()], 0.5, 0.01).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn theta_step_keeps_equilibrium() {
        let m = mesh(6);
        let mut sys = assemble_2d(&problem("1", "1", "-5*(y+1)", "5*(x+1)", "5"), &m).unwrap();
        let u: Vec<f64> = (0..m.unknowns()).map(|k| (k as f64).cos()).collect();
        sys.load = sys.form.mul_vec(&u);
        let next = step_theta_2d(&sys, &u, 0.5, 0.01).unwrap();
        for (a, b) in next.iter().zip(&u) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn compare_examples() {
        let g = GridGeometry::new(DomainRect::unit_square(), 3, 3).unwrap();
        let b = SolutionGrid::from_fn(g, |p| 1.0 + p.x + p.y);
        let e = compare(&b, &b).unwrap();
        assert_eq!((e.linf, e.l1), (0.0, 0.0));
        let a = SolutionGrid::from_fn(g, |p| 1.1 * (1.0 + p.x + p.y));
        let e = compare(&a, &b).unwrap();
        assert!((e.linf - 0.1).abs() < 1e-12 && (e.l1 - 0.1).abs() < 1e-12);
        assert!(matches!(
            compare(&a, &SolutionGrid::zeros(g)),
            Err(Error::ZeroReference)
        ));
        let other = GridGeometry::new(DomainRect::unit_square(), 4, 3).unwrap();
        assert!(matches!(
            compare(&SolutionGrid::zeros(other), &b),
            Err(Error::GeometryMismatch)
        ));
    }
}
