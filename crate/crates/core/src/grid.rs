//! Occupancy grids, the ASCII map format, and the geometric queries the risk
//! elements are built on.
//!
//! The map edge is modeled as a one-cell ring of virtual obstacles, so every
//! query that looks for "the nearest obstacle" or "a blocked ray" sees the
//! border as well.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{open_segment_meets_box, Point};

/// A lattice cell. `y` grows downward (row index in the map file).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Center of the cell in map coordinates.
    pub fn center(self) -> Point {
        Point::new(self.x as f64, self.y as f64)
    }

    pub fn offset(self, dx: i32, dy: i32) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }

    /// Euclidean distance between the two cell centers.
    pub fn distance(self, other: Cell) -> f64 {
        f64::from(self.x - other.x).hypot(f64::from(self.y - other.y))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("map is empty")]
    Empty,
    #[error("grid dimensions {width}x{height} do not match {len} cells")]
    Dimensions { width: usize, height: usize, len: usize },
    #[error("row {row} has {len} cells, expected {expected}")]
    RaggedRow { row: usize, len: usize, expected: usize },
    #[error("invalid map character {ch:?} at row {row}, column {col}")]
    InvalidChar { ch: char, row: usize, col: usize },
    #[error("marker {0:?} appears more than once")]
    DuplicateMarker(char),
    #[error("cell {0} is outside the map")]
    OutOfBounds(Cell),
    #[error("cell {0} is an obstacle")]
    Occupied(Cell),
    #[error("visibility needs a positive range and at least 4 rays (got range {range}, {rays} rays)")]
    VisibilityParams { range: f64, rays: usize },
}

/// Rectangular field of free and occupied cells.
///
/// Immutable after construction; the Euclidean distance field is computed once
/// up front.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<bool>,
    start: Option<Cell>,
    goal: Option<Cell>,
    anchor: Option<Cell>,
    distance: Vec<f64>,
}

impl PartialEq for OccupancyGrid {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.cells == other.cells
            && self.start == other.start
            && self.goal == other.goal
            && self.anchor == other.anchor
    }
}

impl OccupancyGrid {
    /// Builds a grid from a row-major obstacle mask (`true` = obstacle).
    pub fn new(width: usize, height: usize, cells: Vec<bool>) -> Result<Self, GridError> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(GridError::Dimensions {
                width,
                height,
                len: cells.len(),
            });
        }
        let distance = distance_field(width, height, &cells);
        Ok(Self {
            width,
            height,
            cells,
            start: None,
            goal: None,
            anchor: None,
            distance,
        })
    }

    /// Empty (all free) grid.
    pub fn open(width: usize, height: usize) -> Result<Self, GridError> {
        Self::new(width, height, vec![false; width * height])
    }

    /// Parses the ASCII map format: rows of `.`, `#`, `S`, `G`, `A`.
    ///
    /// The anchor falls back to the start marker when no `A` is present.
    pub fn parse(text: &str) -> Result<Self, GridError> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        let body = body.strip_suffix('\r').unwrap_or(body);
        if body.is_empty() {
            return Err(GridError::Empty);
        }
        let mut width = None;
        let mut cells = Vec::new();
        let mut markers: [Option<Cell>; 3] = [None; 3];
        let mut height = 0;
        for (row, line) in body.split('\n').enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            let len = line.chars().count();
            let expected = *width.get_or_insert(len);
            if len != expected || len == 0 {
                return Err(GridError::RaggedRow { row, len, expected });
            }
            for (col, ch) in line.chars().enumerate() {
                let slot = match ch {
                    '.' | '#' => None,
                    'S' => Some(0),
                    'G' => Some(1),
                    'A' => Some(2),
                    _ => return Err(GridError::InvalidChar { ch, row, col }),
                };
                if let Some(slot) = slot {
                    if markers[slot].is_some() {
                        return Err(GridError::DuplicateMarker(ch));
                    }
                    markers[slot] = Some(Cell::new(col as i32, row as i32));
                }
                cells.push(ch == '#');
            }
            height += 1;
        }
        let mut grid = Self::new(width.unwrap_or(0), height, cells)?;
        let [start, goal, anchor] = markers;
        grid.start = start;
        grid.goal = goal;
        grid.anchor = anchor.or(start);
        Ok(grid)
    }

    pub fn with_start(mut self, cell: Cell) -> Result<Self, GridError> {
        self.check_free(cell)?;
        self.start = Some(cell);
        if self.anchor.is_none() {
            self.anchor = Some(cell);
        }
        Ok(self)
    }

    pub fn with_goal(mut self, cell: Cell) -> Result<Self, GridError> {
        self.check_free(cell)?;
        self.goal = Some(cell);
        Ok(self)
    }

    pub fn with_anchor(mut self, cell: Cell) -> Result<Self, GridError> {
        self.check_free(cell)?;
        self.anchor = Some(cell);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Option<Cell> {
        self.start
    }

    pub fn goal(&self) -> Option<Cell> {
        self.goal
    }

    pub fn anchor(&self) -> Option<Cell> {
        self.anchor
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x >= 0 && cell.y >= 0 && (cell.x as usize) < self.width && (cell.y as usize) < self.height
    }

    fn index(&self, cell: Cell) -> usize {
        cell.y as usize * self.width + cell.x as usize
    }

    /// Out-of-bounds cells count as obstacles.
    pub fn is_obstacle(&self, cell: Cell) -> bool {
        !self.contains(cell) || self.cells[self.index(cell)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        !self.is_obstacle(cell)
    }

    pub fn obstacle_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// All in-bounds free cells in row-major order.
    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width)
                .map(move |x| Cell::new(x as i32, y as i32))
                .filter(move |&c| !self.cells[self.index(c)])
        })
    }

    /// In-bounds obstacle cells in row-major order.
    pub fn obstacles(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width)
                .map(move |x| Cell::new(x as i32, y as i32))
                .filter(move |&c| self.cells[self.index(c)])
        })
    }

    pub fn check_free(&self, cell: Cell) -> Result<(), GridError> {
        if !self.contains(cell) {
            Err(GridError::OutOfBounds(cell))
        } else if self.cells[self.index(cell)] {
            Err(GridError::Occupied(cell))
        } else {
            Ok(())
        }
    }

    /// Center-to-center distance from a free cell to the nearest obstacle,
    /// counting the virtual border ring.
    pub fn distance_to_closest_obstacle(&self, cell: Cell) -> Result<f64, GridError> {
        self.check_free(cell)?;
        Ok(self.distance[self.index(cell)])
    }

    /// Fraction of `rays` equally spaced rays from the cell center that enter
    /// an obstacle (or leave the map) within `range`.
    pub fn visibility_risk(&self, cell: Cell, range: f64, rays: usize) -> Result<f64, GridError> {
        self.check_free(cell)?;
        if !(range > 0.0) || rays < 4 {
            return Err(GridError::VisibilityParams { range, rays });
        }
        let origin = cell.center();
        let reach = range.ceil() as i32 + 1;
        let nearby: Vec<Cell> = (-reach..=reach)
            .flat_map(|dy| (-reach..=reach).map(move |dx| cell.offset(dx, dy)))
            .filter(|&c| self.contains(c) && self.cells[self.index(c)])
            .collect();
        let blocked = (0..rays)
            .filter(|&k| {
                let theta = std::f64::consts::TAU * k as f64 / rays as f64;
                let dir = Point::new(theta.cos(), theta.sin());
                self.ray_leaves_map(origin, dir, range)
                    || nearby
                        .iter()
                        .any(|&ob| ray_enters_cell(origin, dir, range, ob))
            })
            .count();
        Ok(blocked as f64 / rays as f64)
    }

    fn ray_leaves_map(&self, origin: Point, dir: Point, range: f64) -> bool {
        let lo = Point::new(-0.5, -0.5);
        let hi = Point::new(self.width as f64 - 0.5, self.height as f64 - 0.5);
        let exit_along = |o: f64, d: f64, lo: f64, hi: f64| {
            if d > 0.0 {
                (hi - o) / d
            } else if d < 0.0 {
                (lo - o) / d
            } else {
                f64::INFINITY
            }
        };
        let t_exit = exit_along(origin.x, dir.x, lo.x, hi.x).min(exit_along(origin.y, dir.y, lo.y, hi.y));
        t_exit < range
    }

    /// Whether the open segment `a`-`b` avoids the interior of every obstacle
    /// cell. Grazing corners and sliding along cell edges is allowed.
    pub fn line_of_sight(&self, a: Point, b: Point) -> bool {
        let (w, h) = (self.width as f64, self.height as f64);
        let inside = |p: Point| p.x >= -0.5 && p.y >= -0.5 && p.x <= w - 0.5 && p.y <= h - 0.5;
        if !inside(a) || !inside(b) {
            return false;
        }
        let x0 = ((a.x.min(b.x) - 0.5).ceil() as i32).max(0);
        let x1 = ((a.x.max(b.x) + 0.5).floor() as i32).min(self.width as i32 - 1);
        let y0 = ((a.y.min(b.y) - 0.5).ceil() as i32).max(0);
        let y1 = ((a.y.max(b.y) + 0.5).floor() as i32).min(self.height as i32 - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let c = Cell::new(x, y);
                if self.cells[self.index(c)] {
                    let center = c.center();
                    let lo = Point::new(center.x - 0.5, center.y - 0.5);
                    let hi = Point::new(center.x + 0.5, center.y + 0.5);
                    if open_segment_meets_box(a, b, lo, hi) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Whether a continuous point lies strictly inside an obstacle cell or
    /// outside the map. Points on cell boundaries count as free.
    pub fn point_blocked(&self, p: Point) -> bool {
        let (w, h) = (self.width as f64, self.height as f64);
        if p.x < -0.5 || p.y < -0.5 || p.x > w - 0.5 || p.y > h - 0.5 {
            return true;
        }
        let c = Cell::new((p.x + 0.5).floor() as i32, (p.y + 0.5).floor() as i32);
        if !self.contains(c) || !self.cells[self.index(c)] {
            return false;
        }
        (p.x - c.x as f64).abs() < 0.5 && (p.y - c.y as f64).abs() < 0.5
    }
}

impl fmt::Display for OccupancyGrid {
    /// Renders back to the map file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for y in 0..self.height {
            for x in 0..self.width {
                let c = Cell::new(x as i32, y as i32);
                let ch = if self.cells[self.index(c)] {
                    '#'
                } else if Some(c) == self.start {
                    'S'
                } else if Some(c) == self.goal {
                    'G'
                } else if Some(c) == self.anchor {
                    'A'
                } else {
                    '.'
                };
                write!(f, "{ch}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Slab test: does the ray `origin + t * dir`, `0 <= t < range`, pass through
/// the interior of cell `ob`? Corner grazes are rejected by the epsilon.
fn ray_enters_cell(origin: Point, dir: Point, range: f64, ob: Cell) -> bool {
    let mut t_in = 0.0_f64;
    let mut t_out = f64::INFINITY;
    for (o, d, c) in [(origin.x, dir.x, ob.x as f64), (origin.y, dir.y, ob.y as f64)] {
        let (lo, hi) = (c - 0.5, c + 0.5);
        if d.abs() < 1e-12 {
            if o <= lo || o >= hi {
                return false;
            }
        } else {
            let (a, b) = ((lo - o) / d, (hi - o) / d);
            t_in = t_in.max(a.min(b));
            t_out = t_out.min(a.max(b));
        }
    }
    t_out - t_in > 1e-9 && t_in < range
}

/// Exact Euclidean distance transform with the border ring as obstacles.
///
/// Two 1-D lower-envelope passes (Felzenszwalb and Huttenlocher) over the grid
/// padded by one cell on every side.
fn distance_field(width: usize, height: usize, cells: &[bool]) -> Vec<f64> {
    let (pw, ph) = (width + 2, height + 2);
    let inf = f64::INFINITY;
    let mut sq = vec![inf; pw * ph];
    for py in 0..ph {
        for px in 0..pw {
            let border = px == 0 || py == 0 || px == pw - 1 || py == ph - 1;
            if border || cells[(py - 1) * width + (px - 1)] {
                sq[py * pw + px] = 0.0;
            }
        }
    }
    let mut buf = vec![0.0; pw.max(ph)];
    for px in 0..pw {
        let column: Vec<f64> = (0..ph).map(|py| sq[py * pw + px]).collect();
        lower_envelope(&column, &mut buf[..ph]);
        for py in 0..ph {
            sq[py * pw + px] = buf[py];
        }
    }
    for py in 0..ph {
        let row = sq[py * pw..(py + 1) * pw].to_vec();
        lower_envelope(&row, &mut buf[..pw]);
        sq[py * pw..(py + 1) * pw].copy_from_slice(&buf[..pw]);
    }
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            out.push(sq[(y + 1) * pw + (x + 1)].sqrt());
        }
    }
    out
}

/// `out[q] = min_p (q - p)^2 + f[p]` via the lower envelope of parabolas.
fn lower_envelope(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(p) => p,
        None => {
            out.fill(f64::INFINITY);
            return;
        }
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            // z[0] is -inf, so k never underflows.
            if s <= z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    let mut k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *slot = d * d + f[v[k]];
    }
}
