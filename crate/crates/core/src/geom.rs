//! Points and the rectangular domain.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + t * (other.x - self.x), self.y + t * (other.y - self.y))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, rhs: Point) -> Point {
        Point::new(self * rhs.x, self * rhs.y)
    }
}

/// One side of the rectangle. Every edge is parameterized over `[0, 1]` in
/// the direction of its increasing free coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left];

    pub fn outward_normal(self) -> Point {
        match self {
            Edge::Bottom => Point::new(0.0, -1.0),
            Edge::Right => Point::new(1.0, 0.0),
            Edge::Top => Point::new(0.0, 1.0),
            Edge::Left => Point::new(-1.0, 0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Edge::Bottom => "bottom",
            Edge::Right => "right",
            Edge::Top => "top",
            Edge::Left => "left",
        }
    }
}

/// Axis-aligned rectangle `(x_min, x_max) x (y_min, y_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainRect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl DomainRect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::Validation(format!(
                "domain must satisfy x_min < x_max and y_min < y_max, got ({x_min}, {x_max}) x ({y_min}, {y_max})"
            )));
        }
        Ok(DomainRect {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    pub fn unit_square() -> Self {
        DomainRect {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn min_extent(&self) -> f64 {
        self.width().min(self.height())
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width() + self.height())
    }

    pub fn edge_length(&self, edge: Edge) -> f64 {
        match edge {
            Edge::Bottom | Edge::Top => self.width(),
            Edge::Left | Edge::Right => self.height(),
        }
    }

    pub fn edge_point(&self, edge: Edge, t: f64) -> Point {
        match edge {
            Edge::Bottom => Point::new(self.x_min + t * self.width(), self.y_min),
            Edge::Top => Point::new(self.x_min + t * self.width(), self.y_max),
            Edge::Left => Point::new(self.x_min, self.y_min + t * self.height()),
            Edge::Right => Point::new(self.x_max, self.y_min + t * self.height()),
        }
    }

    /// Closed containment.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_strictly(&self, p: Point) -> bool {
        p.x > self.x_min && p.x < self.x_max && p.y > self.y_min && p.y < self.y_max
    }

    /// Distance from `p` to the boundary (zero on it, positive otherwise).
    pub fn boundary_distance(&self, p: Point) -> f64 {
        if self.contains(p) {
            (p.x - self.x_min)
                .min(self.x_max - p.x)
                .min(p.y - self.y_min)
                .min(self.y_max - p.y)
        } else {
            let dx = (self.x_min - p.x).max(p.x - self.x_max).max(0.0);
            let dy = (self.y_min - p.y).max(p.y - self.y_max).max(0.0);
            dx.hypot(dy)
        }
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(
            p.x.clamp(self.x_min, self.x_max),
            p.y.clamp(self.y_min, self.y_max),
        )
    }

    /// Moves a point that is inside (or within rounding of) the rectangle
    /// onto the nearest side.
    pub fn snap_to_boundary(&self, p: Point) -> Point {
        let p = self.clamp(p);
        let candidates = [
            (p.x - self.x_min, Point::new(self.x_min, p.y)),
            (self.x_max - p.x, Point::new(self.x_max, p.y)),
            (p.y - self.y_min, Point::new(p.x, self.y_min)),
            (self.y_max - p.y, Point::new(p.x, self.y_max)),
        ];
        candidates
            .iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|c| c.1)
            .unwrap_or(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_domain() {
        assert!(DomainRect::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(DomainRect::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(DomainRect::new(0.0, 1.0, 0.0, 2.0).is_ok());
    }

    #[test]
    fn snapping_and_distance() {
        let d = DomainRect::unit_square();
        assert_eq!(
            d.snap_to_boundary(Point::new(0.3, 0.999_999)),
            Point::new(0.3, 1.0)
        );
        assert_eq!(
            d.snap_to_boundary(Point::new(1.0 + 1e-13, 0.5)),
            Point::new(1.0, 0.5)
        );
        assert_eq!(d.boundary_distance(Point::new(0.5, 0.5)), 0.5);
        assert_eq!(d.boundary_distance(Point::new(2.0, 0.5)), 1.0);
    }
}
