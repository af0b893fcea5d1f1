//! Integral curves of the advection field and of its orthogonal rotation.
//!
//! Curves start on the family's inflow boundary and are integrated with the
//! classic fourth-order Runge-Kutta method applied to the *unit* direction
//! field, so the integration parameter is arc length. A step that leaves
//! the domain is shortened by bisection until it lands on the boundary.

use log::warn;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{BoundarySegmentSet, Family, VectorFieldSpec};
use crate::geom::{DomainRect, Point};

const BISECTION_ITERS: usize = 60;

/// Polyline along one integral curve, parameterized by arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralCurve {
    pub family: Family,
    /// Position of the seed along the concatenated inflow set, in `[0, 1]`.
    pub seed_param: f64,
    pub nodes: Vec<Point>,
    /// Cumulative arc length, `arclen[0] == 0`.
    pub arclen: Vec<f64>,
}

impl IntegralCurve {
    pub fn length(&self) -> f64 {
        *self.arclen.last().unwrap_or(&0.0)
    }

    pub fn start(&self) -> Point {
        self.nodes[0]
    }

    pub fn end(&self) -> Point {
        self.nodes[self.nodes.len() - 1]
    }

    /// Point at arc length `s`, linear between polyline nodes. `s` is
    /// clamped to `[0, length]`.
    pub fn point_at(&self, s: f64) -> Point {
        let n = self.nodes.len();
        if s <= 0.0 {
            return self.nodes[0];
        }
        if s >= self.length() {
            return self.nodes[n - 1];
        }
        // first node with arclen > s
        let k = self.arclen.partition_point(|&a| a <= s);
        let (s0, s1) = (self.arclen[k - 1], self.arclen[k]);
        self.nodes[k - 1].lerp(self.nodes[k], (s - s0) / (s1 - s0))
    }
}

/// A starting point on the inflow boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub point: Point,
    pub param: f64,
}

/// Places `count` seeds uniformly by arc length along the inflow set, at
/// the midpoints of `count` equal pieces. Seeds landing exactly on a corner
/// of the domain are moved half a spacing along the set.
pub fn seed_points(inflow: &BoundarySegmentSet, domain: &DomainRect, count: usize) -> Result<Vec<Seed>> {
    if count < 2 {
        return Err(Error::TooFewSeeds { min: 2, got: count });
    }
    let total = inflow.length(domain);
    if inflow.is_empty() || total.is_nan() || total <= 0.0 {
        return Err(Error::EmptyInflow);
    }
    let spacing = total / count as f64;
    let corner_tol = 1e-12 * total;

    let locate = |s: f64| -> (Point, bool) {
        let mut rest = s;
        let last = inflow.segments.len() - 1;
        for (i, seg) in inflow.segments.iter().enumerate() {
            let len = (seg.t1 - seg.t0) * domain.edge_length(seg.edge);
            if rest <= len || i == last {
                let t = seg.t0 + (rest / len).clamp(0.0, 1.0) * (seg.t1 - seg.t0);
                let edge_len = domain.edge_length(seg.edge);
                let at_corner = t * edge_len <= corner_tol || (1.0 - t) * edge_len <= corner_tol;
                return (domain.edge_point(seg.edge, t), at_corner);
            }
            rest -= len;
        }
        unreachable!("inflow set is non-empty")
    };

    let seeds = (0..count)
        .map(|k| {
            let mut s = (k as f64 + 0.5) * spacing;
            let (mut point, at_corner) = locate(s);
            if at_corner {
                s = if s + 0.5 * spacing < total {
                    s + 0.5 * spacing
                } else {
                    s - 0.5 * spacing
                };
                point = locate(s).0;
            }
            Seed {
                point,
                param: s / total,
            }
        })
        .collect();
    Ok(seeds)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Fixed integration step (arc length).
    pub step: f64,
    /// Curves longer than this are treated as trapped or closed.
    pub max_arclen: f64,
    /// Curves shorter than `min_steps * step` are discarded.
    pub min_steps: f64,
}

impl TraceOptions {
    pub fn for_domain(domain: &DomainRect) -> Self {
        TraceOptions {
            step: domain.min_extent() / 1000.0,
            max_arclen: 10.0 * domain.perimeter(),
            min_steps: 3.0,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

fn rk4_step(spec: &VectorFieldSpec, family: Family, at: Point, h: f64) -> Result<Point> {
    let k1 = spec.direction(at, family)?;
    let k2 = spec.direction(at + (0.5 * h) * k1, family)?;
    let k3 = spec.direction(at + (0.5 * h) * k2, family)?;
    let k4 = spec.direction(at + h * k3, family)?;
    Ok(at + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// Integrates one curve from `seed` until it leaves the domain.
pub fn trace(
    spec: &VectorFieldSpec,
    seed: Seed,
    family: Family,
    domain: &DomainRect,
    opts: &TraceOptions,
) -> Result<IntegralCurve> {
    let h = opts.step;
    let start = seed.point;
    let mut nodes = vec![start];
    let mut arclen = vec![0.0];
    let mut cur = start;
    loop {
        let next = rk4_step(spec, family, cur, h)?;
        if domain.contains_strictly(next) {
            let s = arclen[arclen.len() - 1] + cur.dist(next);
            if s > opts.max_arclen {
                return Err(Error::CurveTooLong {
                    x: start.x,
                    y: start.y,
                    limit: opts.max_arclen,
                });
            }
            nodes.push(next);
            arclen.push(s);
            cur = next;
            continue;
        }

        // shorten the step until it ends on the boundary
        let (mut lo, mut hi) = (0.0, h);
        let mut outside = next;
        for _ in 0..BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            let p = rk4_step(spec, family, cur, mid)?;
            if domain.contains_strictly(p) {
                lo = mid;
            } else {
                hi = mid;
                outside = p;
            }
        }
        let exit = domain.snap_to_boundary(outside);
        let gap = cur.dist(exit);
        if gap <= 1e-14 && nodes.len() > 1 {
            // the previous node already sits on the boundary
            let last = nodes.len() - 1;
            nodes[last] = exit;
        } else {
            let s = arclen[arclen.len() - 1] + gap;
            nodes.push(exit);
            arclen.push(s);
        }
        break;
    }
    Ok(IntegralCurve {
        family,
        seed_param: seed.param,
        nodes,
        arclen,
    })
}

/// Result of tracing one family.
#[derive(Debug, Clone)]
pub struct TracedFamily {
    pub family: Family,
    /// Kept curves, ordered by seed parameter.
    pub curves: Vec<IntegralCurve>,
    /// Seed parameters of curves dropped as too short.
    pub discarded: Vec<f64>,
}

/// Traces every seed of a family. Work is spread over the current rayon
/// pool; the output order follows the seeds regardless of completion order.
pub fn trace_family(
    spec: &VectorFieldSpec,
    domain: &DomainRect,
    family: Family,
    seeds: &[Seed],
    opts: &TraceOptions,
) -> Result<TracedFamily> {
    let traced: Vec<IntegralCurve> = seeds
        .par_iter()
        .map(|&seed| trace(spec, seed, family, domain, opts))
        .collect::<Result<_>>()?;
    let min_len = opts.min_steps * opts.step;
    let mut curves = Vec::with_capacity(traced.len());
    let mut discarded = Vec::new();
    for curve in traced {
        if curve.length() < min_len || curve.nodes.len() < 2 {
            warn!(
                "discarding {} curve from ({:.6}, {:.6}): length {:.3e} below {:.3e}",
                family.name(),
                curve.start().x,
                curve.start().y,
                curve.length(),
                min_len
            );
            discarded.push(curve.seed_param);
        } else {
            curves.push(curve);
        }
    }
    Ok(TracedFamily {
        family,
        curves,
        discarded,
    })
}
