//! Advection field geometry.
//!
//! The advection field `beta` is split into its unit direction `b` and the
//! unit direction `p` of the rotated field `gamma = (beta2, -beta1)`. The two
//! directions are orthonormal everywhere `beta` does not vanish, so
//! `b b^T + p p^T = I` and the Laplacian separates into second derivatives
//! along each family of integral curves.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geom::{DomainRect, Edge, Point};

/// Default lower bound on `|beta|` at any point the solver evaluates.
pub const DEFAULT_EPS_FIELD: f64 = 1e-12;
/// Samples per edge when locating inflow sets.
pub const DEFAULT_EDGE_SAMPLES: usize = 512;

const BISECTION_ITERS: usize = 60;

/// Which of the two curve families a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Integral curves of the advection field.
    Beta,
    /// Integral curves of the orthogonal field.
    Gamma,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Beta => "beta",
            Family::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VectorFieldSpec {
    pub beta1: Expression,
    pub beta2: Expression,
    pub eps_field: f64,
}

/// Unit advection direction `b` and its clockwise rotation `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitFields {
    pub b: Point,
    pub p: Point,
}

impl VectorFieldSpec {
    pub fn new(beta1: Expression, beta2: Expression) -> Self {
        VectorFieldSpec {
            beta1,
            beta2,
            eps_field: DEFAULT_EPS_FIELD,
        }
    }

    pub fn beta(&self, at: Point) -> Result<Point> {
        Ok(Point::new(
            self.beta1.evaluate(at.x, at.y)?,
            self.beta2.evaluate(at.x, at.y)?,
        ))
    }

    pub fn gamma(&self, at: Point) -> Result<Point> {
        let beta = self.beta(at)?;
        Ok(Point::new(beta.y, -beta.x))
    }

    pub fn field(&self, at: Point, family: Family) -> Result<Point> {
        match family {
            Family::Beta => self.beta(at),
            Family::Gamma => self.gamma(at),
        }
    }

    /// `|beta|` at a point.
    pub fn speed(&self, at: Point) -> Result<f64> {
        Ok(self.beta(at)?.norm())
    }

    pub fn unit_fields(&self, at: Point) -> Result<UnitFields> {
        let beta = self.beta(at)?;
        let norm = beta.norm();
        if norm.is_nan() || norm < self.eps_field {
            return Err(Error::DegenerateField {
                x: at.x,
                y: at.y,
                norm,
                eps: self.eps_field,
            });
        }
        let b = (1.0 / norm) * beta;
        // gamma has the same norm as beta
        let p = Point::new(b.y, -b.x);
        Ok(UnitFields { b, p })
    }

    /// Unit tangent of the given family's integral curves.
    pub fn direction(&self, at: Point, family: Family) -> Result<Point> {
        let u = self.unit_fields(at)?;
        Ok(match family {
            Family::Beta => u.b,
            Family::Gamma => u.p,
        })
    }
}

/// Sub-interval `[t0, t1]` of one edge's `[0, 1]` parameter range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub edge: Edge,
    pub t0: f64,
    pub t1: f64,
}

/// Portion of the domain boundary, stored edge by edge in the order
/// bottom, right, top, left with ascending parameters within an edge.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundarySegmentSet {
    pub segments: Vec<BoundarySegment>,
}

impl BoundarySegmentSet {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn length(&self, domain: &DomainRect) -> f64 {
        self.segments
            .iter()
            .map(|s| (s.t1 - s.t0) * domain.edge_length(s.edge))
            .sum()
    }

    pub fn contains(&self, edge: Edge, t: f64) -> bool {
        self.segments
            .iter()
            .any(|s| s.edge == edge && t >= s.t0 && t <= s.t1)
    }

    /// Edges that belong to the set over their whole length (within `tol`).
    pub fn full_edges(&self, tol: f64) -> Vec<Edge> {
        self.segments
            .iter()
            .filter(|s| s.t0 <= tol && s.t1 >= 1.0 - tol)
            .map(|s| s.edge)
            .collect()
    }
}

/// `{x on the boundary | n(x) . field(x) < 0}`.
pub fn inflow_boundary(
    spec: &VectorFieldSpec,
    domain: &DomainRect,
    family: Family,
) -> Result<BoundarySegmentSet> {
    boundary_where(spec, domain, family, DEFAULT_EDGE_SAMPLES, |flux| flux < 0.0)
}

/// `{x on the boundary | n(x) . field(x) > 0}`.
pub fn outflow_boundary(
    spec: &VectorFieldSpec,
    domain: &DomainRect,
    family: Family,
) -> Result<BoundarySegmentSet> {
    boundary_where(spec, domain, family, DEFAULT_EDGE_SAMPLES, |flux| flux > 0.0)
}

fn boundary_where(
    spec: &VectorFieldSpec,
    domain: &DomainRect,
    family: Family,
    samples: usize,
    pred: impl Fn(f64) -> bool,
) -> Result<BoundarySegmentSet> {
    let samples = samples.max(2);
    let mut segments = Vec::new();
    for edge in Edge::ALL {
        let normal = edge.outward_normal();
        let in_set = |t: f64| -> Result<bool> {
            let v = spec.field(domain.edge_point(edge, t), family)?;
            Ok(pred(normal.dot(v)))
        };
        // Bisect between a parameter where membership is `from` and one
        // where it is not; returns the parameter just on the member side.
        let refine = |mut lo: f64, mut hi: f64, lo_member: bool| -> Result<f64> {
            for _ in 0..BISECTION_ITERS {
                let mid = 0.5 * (lo + hi);
                if in_set(mid)? == lo_member {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(if lo_member { lo } else { hi })
        };

        let param = |k: usize| k as f64 / (samples - 1) as f64;
        let mut prev = in_set(0.0)?;
        let mut start = if prev { Some(0.0) } else { None };
        for k in 1..samples {
            let t = param(k);
            let cur = in_set(t)?;
            if cur != prev {
                let t_prev = param(k - 1);
                if cur {
                    start = Some(refine(t_prev, t, false)?);
                } else if let Some(t0) = start.take() {
                    let t1 = refine(t_prev, t, true)?;
                    segments.push(BoundarySegment { edge, t0, t1 });
                }
            }
            prev = cur;
        }
        if let Some(t0) = start {
            segments.push(BoundarySegment { edge, t0, t1: 1.0 });
        }
    }
    Ok(BoundarySegmentSet { segments })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    pub max_abs: f64,
    pub at: Point,
    pub tol: f64,
    pub passed: bool,
}

/// Central-difference estimate of `div beta` on a 32x32 interior lattice.
pub fn check_divergence_free(
    spec: &VectorFieldSpec,
    domain: &DomainRect,
    tol: f64,
) -> Result<DivergenceReport> {
    const LATTICE: usize = 32;
    const H: f64 = 1e-4;
    let mut max_abs = 0.0;
    let mut at = Point::new(domain.x_min, domain.y_min);
    for j in 0..LATTICE {
        for i in 0..LATTICE {
            let x = domain.x_min + (i as f64 + 0.5) / LATTICE as f64 * domain.width();
            let y = domain.y_min + (j as f64 + 0.5) / LATTICE as f64 * domain.height();
            let dbx = (spec.beta1.evaluate(x + H, y)? - spec.beta1.evaluate(x - H, y)?) / (2.0 * H);
            let dby = (spec.beta2.evaluate(x, y + H)? - spec.beta2.evaluate(x, y - H)?) / (2.0 * H);
            let div = (dbx + dby).abs();
            if div > max_abs {
                max_abs = div;
                at = Point::new(x, y);
            }
        }
    }
    Ok(DivergenceReport {
        max_abs,
        at,
        tol,
        passed: max_abs <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn spec(b1: &str, b2: &str) -> VectorFieldSpec {
        VectorFieldSpec::new(parse(b1).unwrap(), parse(b2).unwrap())
    }

    fn experiment() -> VectorFieldSpec {
        spec("-5*(y+1)", "5*(x+1)")
    }

    fn close(a: Point, b: Point, tol: f64) -> bool {
        (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
    }

    #[test]
    fn unit_fields_examples() {
        let u = spec("1", "0").unit_fields(Point::new(0.2, 0.3)).unwrap();
        assert_eq!(u.b, Point::new(1.0, 0.0));
        assert_eq!(u.p, Point::new(0.0, -1.0));

        let u = spec("3", "4").unit_fields(Point::default()).unwrap();
        assert!(close(u.b, Point::new(0.6, 0.8), 1e-15));
        assert!(close(u.p, Point::new(0.8, -0.6), 1e-15));

        let u = experiment().unit_fields(Point::new(0.0, 0.0)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(u.b, Point::new(-s, s), 1e-15));
        assert!(close(u.p, Point::new(s, s), 1e-15));
    }

    #[test]
    fn degenerate_field_rejected() {
        let err = spec("x", "y").unit_fields(Point::new(0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateField { .. }));
    }

    #[test]
    fn projection_identity_and_norms() {
        let s = experiment();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let at = Point::new(rng.random_range(-0.5..1.5), rng.random_range(-0.5..1.5));
            let u = s.unit_fields(at).unwrap();
            let m = [
                [u.b.x * u.b.x + u.p.x * u.p.x, u.b.x * u.b.y + u.p.x * u.p.y],
                [u.b.y * u.b.x + u.p.y * u.p.x, u.b.y * u.b.y + u.p.y * u.p.y],
            ];
            assert!((m[0][0] - 1.0).abs() < 1e-12);
            assert!(m[0][1].abs() < 1e-12);
            assert!(m[1][0].abs() < 1e-12);
            assert!((m[1][1] - 1.0).abs() < 1e-12);
            assert!(u.b.dot(u.p).abs() < 1e-12);
            let (beta, gamma) = (s.beta(at).unwrap(), s.gamma(at).unwrap());
            assert!((beta.norm() - gamma.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn inflow_constant_field() {
        let set = inflow_boundary(&spec("1", "0"), &DomainRect::unit_square(), Family::Beta).unwrap();
        assert_eq!(
            set.segments,
            vec![BoundarySegment {
                edge: Edge::Left,
                t0: 0.0,
                t1: 1.0
            }]
        );
    }

    #[test]
    fn inflow_experiment_field() {
        let d = DomainRect::unit_square();
        let beta = inflow_boundary(&experiment(), &d, Family::Beta).unwrap();
        assert_eq!(beta.full_edges(0.0), vec![Edge::Bottom, Edge::Right]);
        assert_eq!(beta.segments.len(), 2);
        let gamma = inflow_boundary(&experiment(), &d, Family::Gamma).unwrap();
        assert_eq!(gamma.full_edges(0.0), vec![Edge::Bottom, Edge::Left]);
        assert_eq!(gamma.segments.len(), 2);
    }

    #[test]
    fn inflow_partial_edge_is_refined() {
        // beta = (0, x - 0.3): enters through the bottom where x > 0.3 and
        // through the top where x < 0.3.
        let d = DomainRect::unit_square();
        let set = inflow_boundary(&spec("0", "x - 0.3"), &d, Family::Beta).unwrap();
        assert_eq!(set.segments.len(), 2);
        let bottom = set.segments[0];
        assert_eq!(bottom.edge, Edge::Bottom);
        assert!((bottom.t0 - 0.3).abs() < 1e-12);
        assert_eq!(bottom.t1, 1.0);
        let top = set.segments[1];
        assert_eq!(top.edge, Edge::Top);
        assert_eq!(top.t0, 0.0);
        assert!((top.t1 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn inflow_and_outflow_disjoint() {
        let d = DomainRect::unit_square();
        for s in [experiment(), spec("0", "x - 0.3"), spec("y - 0.5", "0.2")] {
            for fam in [Family::Beta, Family::Gamma] {
                let inflow = inflow_boundary(&s, &d, fam).unwrap();
                let outflow = outflow_boundary(&s, &d, fam).unwrap();
                for a in &inflow.segments {
                    for b in outflow.segments.iter().filter(|b| b.edge == a.edge) {
                        assert!(a.t1 <= b.t0 || b.t1 <= a.t0, "{a:?} overlaps {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn divergence_checks() {
        let d = DomainRect::unit_square();
        let r = check_divergence_free(&experiment(), &d, 1e-8).unwrap();
        assert!(r.passed && r.max_abs <= 1e-8);
        let r = check_divergence_free(&spec("x", "y"), &d, 1e-8).unwrap();
        assert!(!r.passed);
        assert!((r.max_abs - 2.0).abs() < 1e-6);
        let r = check_divergence_free(&spec("y", "-x"), &d, 1e-8).unwrap();
        assert!(r.passed);
    }
}
