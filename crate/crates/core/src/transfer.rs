//! Moving nodal data between the two curve families.
//!
//! A rectangular grid of `kx + 1` vertical and `ky + 1` horizontal lines
//! covers the bounding box. Every curve polyline is intersected with the
//! lines; each grid-line segment keeps only the crossing with the smallest
//! and the largest coordinate along the line, together with the curve value
//! there. Grid-node values are then interpolated along the node's two lines
//! from the nearest recorded points and averaged. Values anywhere else come
//! from bilinear interpolation of the node values.
//!
//! Record updates are a min/max reduction under a total order (coordinate,
//! then seed parameter, then arc length along the curve), so the final state
//! does not depend on the order curves are recorded in.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::fem1d::{CurveSolution, Mesh1D};
use crate::geom::{DomainRect, Point};
use crate::tracer::IntegralCurve;

/// Points this far outside the box are clamped instead of rejected.
pub const BOX_TOLERANCE: f64 = 1e-10;

/// Line layout over a bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub bbox: DomainRect,
    pub kx: usize,
    pub ky: usize,
}

impl GridGeometry {
    pub fn new(bbox: DomainRect, kx: usize, ky: usize) -> Result<Self> {
        if kx == 0 || ky == 0 {
            return Err(Error::Validation(format!(
                "grid needs at least one cell per direction, got {kx}x{ky}"
            )));
        }
        Ok(GridGeometry { bbox, kx, ky })
    }

    pub fn nx(&self) -> usize {
        self.kx + 1
    }

    pub fn ny(&self) -> usize {
        self.ky + 1
    }

    pub fn dx(&self) -> f64 {
        self.bbox.width() / self.kx as f64
    }

    pub fn dy(&self) -> f64 {
        self.bbox.height() / self.ky as f64
    }

    /// Abscissa of vertical line `i`.
    pub fn x(&self, i: usize) -> f64 {
        if i == self.kx {
            self.bbox.x_max
        } else {
            self.bbox.x_min + i as f64 * self.dx()
        }
    }

    /// Ordinate of horizontal line `j`.
    pub fn y(&self, j: usize) -> f64 {
        if j == self.ky {
            self.bbox.y_max
        } else {
            self.bbox.y_min + j as f64 * self.dy()
        }
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new(self.x(i), self.y(j))
    }

    pub fn is_boundary_node(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.kx || j == self.ky
    }
}

/// Vertical lines carry coordinates in `y`, horizontal lines in `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Vertical,
    Horizontal,
}

/// Ordering key of a record, used to break coordinate ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordKey {
    pub seed_param: f64,
    pub arclen: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub coord: f64,
    pub value: f64,
    pub key: RecordKey,
}

impl Record {
    fn tie_cmp(&self, other: &Record) -> Ordering {
        self.key
            .seed_param
            .total_cmp(&other.key.seed_param)
            .then(self.key.arclen.total_cmp(&other.key.arclen))
    }
}

/// Extreme crossings on one grid-line segment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmentRecord {
    pub min: Option<Record>,
    pub max: Option<Record>,
}

impl SegmentRecord {
    fn update(&mut self, r: Record) {
        let replace_min = match &self.min {
            None => true,
            Some(cur) => r.coord.total_cmp(&cur.coord).then(r.tie_cmp(cur)) == Ordering::Less,
        };
        if replace_min {
            self.min = Some(r);
        }
        let replace_max = match &self.max {
            None => true,
            Some(cur) => match r.coord.total_cmp(&cur.coord) {
                Ordering::Greater => true,
                Ordering::Equal => r.tie_cmp(cur) == Ordering::Less,
                Ordering::Less => false,
            },
        };
        if replace_max {
            self.max = Some(r);
        }
    }
}

/// Intersection of one polyline edge with one grid line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub orientation: Orientation,
    pub line: usize,
    pub segment: usize,
    /// Position along the line.
    pub coord: f64,
    /// Polyline edge `edge -> edge + 1` and the fraction along it.
    pub edge: usize,
    pub t: f64,
}

/// Per-segment min/max records on every grid line.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferGrid {
    pub geometry: GridGeometry,
    /// `kx + 1` vertical lines of `ky` segments each.
    pub vertical: Vec<Vec<SegmentRecord>>,
    /// `ky + 1` horizontal lines of `kx` segments each.
    pub horizontal: Vec<Vec<SegmentRecord>>,
}

/// Fallbacks taken while computing node values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FallbackCounts {
    /// Nodes where only one of the two lines had records.
    pub single_line: usize,
    /// Nodes where neither line had records.
    pub nearest_point: usize,
}

impl std::ops::AddAssign for FallbackCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.single_line += rhs.single_line;
        self.nearest_point += rhs.nearest_point;
    }
}

fn segment_index(pos: f64, origin: f64, step: f64, cells: usize) -> usize {
    (((pos - origin) / step).floor().max(0.0) as usize).min(cells - 1)
}

/// All crossings of a polyline with the grid lines.
pub fn find_crossings(geometry: &GridGeometry, nodes: &[Point]) -> Vec<Crossing> {
    let bbox = geometry.bbox;
    let mut out = Vec::new();
    for (edge, w) in nodes.windows(2).enumerate() {
        let (p0, p1) = (w[0], w[1]);
        // vertical lines x = X
        crossings_1d(
            p0.x,
            p1.x,
            bbox.x_min,
            geometry.dx(),
            geometry.kx,
            |i| geometry.x(i),
            |line, t| {
                let y = p0.y + t * (p1.y - p0.y);
                if y < bbox.y_min - BOX_TOLERANCE || y > bbox.y_max + BOX_TOLERANCE {
                    return;
                }
                let y = y.clamp(bbox.y_min, bbox.y_max);
                out.push(Crossing {
                    orientation: Orientation::Vertical,
                    line,
                    segment: segment_index(y, bbox.y_min, geometry.dy(), geometry.ky),
                    coord: y,
                    edge,
                    t,
                });
            },
        );
        // horizontal lines y = Y
        crossings_1d(
            p0.y,
            p1.y,
            bbox.y_min,
            geometry.dy(),
            geometry.ky,
            |j| geometry.y(j),
            |line, t| {
                let x = p0.x + t * (p1.x - p0.x);
                if x < bbox.x_min - BOX_TOLERANCE || x > bbox.x_max + BOX_TOLERANCE {
                    return;
                }
                let x = x.clamp(bbox.x_min, bbox.x_max);
                out.push(Crossing {
                    orientation: Orientation::Horizontal,
                    line,
                    segment: segment_index(x, bbox.x_min, geometry.dx(), geometry.kx),
                    coord: x,
                    edge,
                    t,
                });
            },
        );
    }
    out
}

/// Lines `c = line_pos(k)` met by the edge from `a` to `b` in one
/// coordinate. An edge lying on a line reports both of its endpoints.
fn crossings_1d(
    a: f64,
    b: f64,
    origin: f64,
    step: f64,
    cells: usize,
    line_pos: impl Fn(usize) -> f64,
    mut emit: impl FnMut(usize, f64),
) {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let first = ((lo - origin) / step).floor() - 1.0;
    let last = ((hi - origin) / step).ceil() + 1.0;
    if last < 0.0 || first > cells as f64 {
        return;
    }
    let first = first.max(0.0) as usize;
    let last = (last as usize).min(cells);
    for k in first..=last {
        let c = line_pos(k);
        if c < lo || c > hi {
            continue;
        }
        if a == b {
            emit(k, 0.0);
            emit(k, 1.0);
        } else {
            emit(k, ((c - a) / (b - a)).clamp(0.0, 1.0));
        }
    }
}

impl TransferGrid {
    pub fn new(geometry: GridGeometry) -> Self {
        TransferGrid {
            geometry,
            vertical: vec![vec![SegmentRecord::default(); geometry.ky]; geometry.nx()],
            horizontal: vec![vec![SegmentRecord::default(); geometry.kx]; geometry.ny()],
        }
    }

    pub fn record(&mut self, crossing: &Crossing, value: f64, key: RecordKey) {
        let seg = match crossing.orientation {
            Orientation::Vertical => &mut self.vertical[crossing.line][crossing.segment],
            Orientation::Horizontal => &mut self.horizontal[crossing.line][crossing.segment],
        };
        seg.update(Record {
            coord: crossing.coord,
            value,
            key,
        });
    }

    /// Records a curve carrying `values` at its polyline nodes. Values at
    /// crossings are linear between the edge's endpoint values.
    pub fn record_curve(&mut self, curve: &IntegralCurve, values: &[f64]) {
        assert_eq!(curve.nodes.len(), values.len());
        for c in find_crossings(&self.geometry, &curve.nodes) {
            let value = values[c.edge] + c.t * (values[c.edge + 1] - values[c.edge]);
            let s0 = curve.arclen[c.edge];
            let arclen = s0 + c.t * (curve.arclen[c.edge + 1] - s0);
            self.record(
                &c,
                value,
                RecordKey {
                    seed_param: curve.seed_param,
                    arclen,
                },
            );
        }
    }

    /// Records a finite-element solution given on `mesh` along `curve`.
    pub fn record_solution(&mut self, curve: &IntegralCurve, mesh: &Mesh1D, sol: &CurveSolution) {
        let values: Vec<f64> = curve.arclen.iter().map(|&s| sol.eval(mesh, s)).collect();
        self.record_curve(curve, &values);
    }

    /// Folds another grid's records into this one with the same reduction.
    pub fn merge(&mut self, other: &TransferGrid) {
        assert_eq!(self.geometry, other.geometry);
        for (mine, theirs) in self
            .vertical
            .iter_mut()
            .chain(self.horizontal.iter_mut())
            .zip(other.vertical.iter().chain(&other.horizontal))
        {
            for (a, b) in mine.iter_mut().zip(theirs) {
                if let Some(r) = b.min {
                    a.update(r);
                }
                if let Some(r) = b.max {
                    a.update(r);
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.vertical
            .iter()
            .chain(&self.horizontal)
            .flatten()
            .all(|s| s.min.is_none())
    }

    /// Recorded `(coord, value)` pairs along one line, ascending.
    fn line_points(segments: &[SegmentRecord]) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(2 * segments.len());
        for s in segments {
            if let Some(min) = s.min {
                pts.push((min.coord, min.value));
            }
            if let (Some(min), Some(max)) = (s.min, s.max) {
                if max.coord > min.coord {
                    pts.push((max.coord, max.value));
                }
            }
        }
        pts
    }

    /// Node values: interpolation along the node's horizontal and vertical
    /// lines, averaged.
    pub fn to_grid_nodes(&self) -> Result<(SolutionGrid, FallbackCounts)> {
        if self.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let g = self.geometry;
        let vertical: Vec<Vec<(f64, f64)>> = self.vertical.iter().map(|l| Self::line_points(l)).collect();
        let horizontal: Vec<Vec<(f64, f64)>> = self.horizontal.iter().map(|l| Self::line_points(l)).collect();

        let mut counts = FallbackCounts::default();
        let mut values = vec![0.0; g.nx() * g.ny()];
        let mut all_points: Option<Vec<(Point, f64)>> = None;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let along_h = estimate_on_line(&horizontal[j], g.x(i));
                let along_v = estimate_on_line(&vertical[i], g.y(j));
                let v = match (along_h, along_v) {
                    (Some(a), Some(b)) => 0.5 * (a + b),
                    (Some(a), None) | (None, Some(a)) => {
                        counts.single_line += 1;
                        a
                    }
                    (None, None) => {
                        counts.nearest_point += 1;
                        let pts = all_points.get_or_insert_with(|| {
                            let mut pts = Vec::new();
                            for (i, line) in vertical.iter().enumerate() {
                                pts.extend(line.iter().map(|&(c, v)| (Point::new(g.x(i), c), v)));
                            }
                            for (j, line) in horizontal.iter().enumerate() {
                                pts.extend(line.iter().map(|&(c, v)| (Point::new(c, g.y(j)), v)));
                            }
                            pts
                        });
                        nearest_value(pts, g.node(i, j))
                    }
                };
                values[j * g.nx() + i] = v;
            }
        }
        Ok((SolutionGrid { geometry: g, values }, counts))
    }
}

/// Interpolates between the recorded points bracketing `at`, or
/// extrapolates from the two nearest on one side. A single point is used
/// as a constant.
fn estimate_on_line(pts: &[(f64, f64)], at: f64) -> Option<f64> {
    match pts.len() {
        0 => return None,
        1 => return Some(pts[0].1),
        _ => {}
    }
    let k = pts.partition_point(|p| p.0 < at);
    if k < pts.len() && pts[k].0 == at {
        return Some(pts[k].1);
    }
    let (a, b) = if k == 0 {
        (pts[0], pts[1])
    } else if k == pts.len() {
        (pts[k - 2], pts[k - 1])
    } else {
        (pts[k - 1], pts[k])
    };
    let span = b.0 - a.0;
    if span <= 0.0 {
        // coincident points; take the nearer one
        return Some(if (a.0 - at).abs() <= (b.0 - at).abs() {
            a.1
        } else {
            b.1
        });
    }
    let t = (at - a.0) / span;
    Some(a.1 + t * (b.1 - a.1))
}

fn nearest_value(pts: &[(Point, f64)], at: Point) -> f64 {
    pts.iter()
        .min_by(|a, b| a.0.dist(at).total_cmp(&b.0.dist(at)))
        .map(|p| p.1)
        .unwrap_or(0.0)
}

/// Values at the `(kx + 1) x (ky + 1)` grid nodes, row-major by `y` then `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

impl SolutionGrid {
    pub fn zeros(geometry: GridGeometry) -> Self {
        SolutionGrid {
            geometry,
            values: vec![0.0; geometry.nx() * geometry.ny()],
        }
    }

    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut(Point) -> f64) -> Self {
        let mut values = Vec::with_capacity(geometry.nx() * geometry.ny());
        for j in 0..geometry.ny() {
            for i in 0..geometry.nx() {
                values.push(f(geometry.node(i, j)));
            }
        }
        SolutionGrid { geometry, values }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.geometry.nx() + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let nx = self.geometry.nx();
        self.values[j * nx + i] = v;
    }

    /// Applies the homogeneous Dirichlet condition on the box boundary.
    pub fn zero_boundary(&mut self) {
        let g = self.geometry;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                if g.is_boundary_node(i, j) {
                    self.set(i, j, 0.0);
                }
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cell-local bilinear interpolation. Cell indices follow
    /// `i = ceil((x - a) / (b - a) * kx)` clamped to `[1, kx]`, so a point on
    /// an interior grid line belongs to the cell below it.
    pub fn sample_bilinear(&self, at: Point) -> Result<f64> {
        let g = &self.geometry;
        let bbox = g.bbox;
        if bbox.boundary_distance(at) > BOX_TOLERANCE && !bbox.contains(at) {
            return Err(Error::OutOfBox { x: at.x, y: at.y });
        }
        let at = bbox.clamp(at);
        let (ix, lx) = cell_and_weight((at.x - bbox.x_min) / bbox.width() * g.kx as f64, g.kx);
        let (iy, ly) = cell_and_weight((at.y - bbox.y_min) / bbox.height() * g.ky as f64, g.ky);
        let p11 = self.value(ix - 1, iy - 1);
        let p12 = self.value(ix, iy - 1);
        let p21 = self.value(ix - 1, iy);
        let p22 = self.value(ix, iy);
        // (1-ly)(1-lx) p11 + (1-ly) lx p12 + ly (1-lx) p21 + ly lx p22, written
        // as nested lerps so that equal corners reproduce exactly
        let bottom = p11 + lx * (p12 - p11);
        let top = p21 + lx * (p22 - p21);
        Ok(bottom + ly * (top - bottom))
    }

    /// Bilinear samples of this grid at the nodes of another geometry.
    pub fn resample(&self, onto: GridGeometry) -> Result<SolutionGrid> {
        let mut values = Vec::with_capacity(onto.nx() * onto.ny());
        for j in 0..onto.ny() {
            for i in 0..onto.nx() {
                values.push(self.sample_bilinear(onto.node(i, j))?);
            }
        }
        Ok(SolutionGrid {
            geometry: onto,
            values,
        })
    }
}

/// One-based cell index and fractional position inside it.
fn cell_and_weight(t: f64, cells: usize) -> (usize, f64) {
    let i = (t.ceil().max(1.0) as usize).min(cells);
    (i, (t - (i - 1) as f64).clamp(0.0, 1.0))
}

/// Samples the grid at every mesh node of a curve; the two end values are
/// set to zero.
pub fn restrict_to_curve(grid: &SolutionGrid, curve: &IntegralCurve, mesh: &Mesh1D) -> Result<CurveSolution> {
    let n = mesh.nodes.len();
    let mut values = Vec::with_capacity(n);
    for (k, &s) in mesh.nodes.iter().enumerate() {
        if k == 0 || k == n - 1 {
            values.push(0.0);
        } else {
            values.push(grid.sample_bilinear(curve.point_at(s))?);
        }
    }
    Ok(CurveSolution { values })
}
