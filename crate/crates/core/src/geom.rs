//! Planar primitives shared by the grid queries and the tether model.
//!
//! Map coordinates put the center of cell `(x, y)` at the point `(x, y)`, so
//! the cell covers the closed square `[x - 0.5, x + 0.5] x [y - 0.5, y + 0.5]`.
//! Tether geometry only ever touches cell centers and cell corners, which are
//! all half-integers; [`HalfPoint`] stores them doubled so every predicate is
//! exact integer arithmetic.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// A point in continuous map coordinates (cell units).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
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

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A point on the half-cell lattice, stored as doubled map coordinates.
///
/// Cell centers have even components, cell corners odd ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfPoint {
    pub x: i64,
    pub y: i64,
}

impl HalfPoint {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn to_point(self) -> Point {
        Point::new(self.x as f64 / 2.0, self.y as f64 / 2.0)
    }

    /// True for points sitting on a cell corner.
    pub fn is_corner(self) -> bool {
        self.x.rem_euclid(2) == 1 && self.y.rem_euclid(2) == 1
    }

    pub fn distance(self, other: HalfPoint) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        dx.hypot(dy) / 2.0
    }
}

/// Twice the signed area of `(a, b, c)`: positive when `c` lies left of `a -> b`
/// in a y-up frame. Because map rows grow downward this reads as a clockwise
/// turn on screen; only the sign consistency matters.
pub fn orient(a: HalfPoint, b: HalfPoint, c: HalfPoint) -> i64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Corners of the square covered by cell `(cx, cy)` in doubled coordinates.
pub(crate) fn cell_corners(cx: i64, cy: i64) -> [HalfPoint; 4] {
    let (x, y) = (2 * cx, 2 * cy);
    [
        HalfPoint::new(x - 1, y - 1),
        HalfPoint::new(x + 1, y - 1),
        HalfPoint::new(x + 1, y + 1),
        HalfPoint::new(x - 1, y + 1),
    ]
}

/// Whether the open triangle `(a, b, c)` meets the open square of cell `(cx, cy)`.
///
/// Separating-axis test over the two box axes and the three edge normals;
/// weak separation on any axis means the interiors are disjoint.
pub(crate) fn open_triangle_meets_cell(
    a: HalfPoint,
    b: HalfPoint,
    c: HalfPoint,
    cx: i64,
    cy: i64,
) -> bool {
    let area = orient(a, b, c);
    if area == 0 {
        return false;
    }
    let (lo_x, hi_x) = (2 * cx - 1, 2 * cx + 1);
    let (lo_y, hi_y) = (2 * cy - 1, 2 * cy + 1);
    let tri_lo_x = a.x.min(b.x).min(c.x);
    let tri_hi_x = a.x.max(b.x).max(c.x);
    let tri_lo_y = a.y.min(b.y).min(c.y);
    let tri_hi_y = a.y.max(b.y).max(c.y);
    if tri_hi_x <= lo_x || tri_lo_x >= hi_x || tri_hi_y <= lo_y || tri_lo_y >= hi_y {
        return false;
    }
    let corners = cell_corners(cx, cy);
    for (p, q) in [(a, b), (b, c), (c, a)] {
        // The triangle lies on the `area` side of every directed edge.
        let separated = if area > 0 {
            corners.iter().all(|&k| orient(p, q, k) <= 0)
        } else {
            corners.iter().all(|&k| orient(p, q, k) >= 0)
        };
        if separated {
            return false;
        }
    }
    true
}

/// Whether the open segment `(a, b)` meets the open box `[lo, hi]`.
///
/// Exact whenever the inputs are half-integers, which covers every query the
/// tether model issues.
pub(crate) fn open_segment_meets_box(a: Point, b: Point, lo: Point, hi: Point) -> bool {
    if a.x.max(b.x) <= lo.x || a.x.min(b.x) >= hi.x {
        return false;
    }
    if a.y.max(b.y) <= lo.y || a.y.min(b.y) >= hi.y {
        return false;
    }
    let d = b - a;
    let mut pos = false;
    let mut neg = false;
    for k in [lo, Point::new(hi.x, lo.y), hi, Point::new(lo.x, hi.y)] {
        let s = d.cross(k - a);
        pos |= s > 0.0;
        neg |= s < 0.0;
    }
    pos && neg
}
