//! Brute-force reference computations used to cross-check the production
//! algorithms. Nothing here is fast; everything here is simple.
//!
//! * [`straighten_walk`] pulls a densely sampled walk taut by repeated local
//!   shortening and reports the resulting cable length and kink count;
//!   [`TautOracle`] does the same one step at a time.
//! * [`enumerate_paths`] searches every bounded-length path exhaustively and
//!   keeps the cheapest.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::grid::{Cell, OccupancyGrid};
use crate::path::{Action, PathPlan};
use crate::risk::{RiskError, RiskModel, RiskProfile};
use crate::tether::TetherState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("walk is not a feasible collision-free walk on the grid")]
    InvalidWalk,
    #[error("shortening did not converge within {0} relaxations")]
    NoConvergence(usize),
    #[error("straightened cable kinks at a non-corner point ({0}, {1})")]
    NonCornerKink(f64, f64),
    #[error("running total {running} disagrees with the evaluated total {evaluated}")]
    ScoreMismatch { running: f64, evaluated: f64 },
    #[error("enumeration exceeded {0} visited paths")]
    EnumerationCap(usize),
    #[error("no path from {start} to {goal} within {max_len} steps")]
    NoPath { start: Cell, goal: Cell, max_len: usize },
    #[error(transparent)]
    Risk(#[from] RiskError),
}

/// Result of straightening a walk.
#[derive(Debug, Clone, PartialEq)]
pub struct StraightenedTether {
    pub length: f64,
    pub contacts: usize,
    /// Anchor, kinks, head.
    pub polyline: Vec<(f64, f64)>,
}

/// Default sampling step (cells) for [`straightening_oracle`].
pub const ORACLE_STEP: f64 = 0.05;

/// Taut cable for `walk` with the anchor at the walk's first state, sampling
/// the walk every [`ORACLE_STEP`] cells.
pub fn straightening_oracle(walk: &PathPlan, grid: &OccupancyGrid) -> Result<StraightenedTether, OracleError> {
    straighten_walk(walk, grid, ORACLE_STEP)
}

/// Taut cable for `walk`, sampling each step at most `max_step` apart.
///
/// `max_step >= sqrt(2)` uses the walk's own vertices.
pub fn straighten_walk(walk: &PathPlan, grid: &OccupancyGrid, max_step: f64) -> Result<StraightenedTether, OracleError> {
    if !walk.validate(grid).is_valid() {
        return Err(OracleError::InvalidWalk);
    }
    let mut oracle = TautOracle::new(grid, walk.start(), max_step)?;
    for &c in &walk.states()[1..] {
        oracle.step(c)?;
    }
    oracle.result()
}

/// Online form of [`straighten_walk`]: the walk is fed one step at a time and
/// the taut cable of the prefix seen so far is available after every step.
///
/// Shortening works on a stack, so the stack after consuming a prefix is
/// exactly what a fresh run over that prefix would produce. Cloning a
/// `TautOracle` forks the walk.
#[derive(Debug, Clone)]
pub struct TautOracle<'g> {
    field: Field<'g>,
    head: Cell,
    out: Vec<(i64, i64)>,
    relaxations: usize,
    cap: usize,
}

impl<'g> TautOracle<'g> {
    pub fn new(grid: &'g OccupancyGrid, anchor: Cell, max_step: f64) -> Result<Self, OracleError> {
        if !grid.is_free(anchor) || !(max_step > 0.0) {
            return Err(OracleError::InvalidWalk);
        }
        let k = (std::f64::consts::SQRT_2 / max_step).ceil().max(1.0) as i64;
        let field = Field { grid, k };
        Ok(Self {
            out: vec![field.scaled(anchor)],
            field,
            head: anchor,
            relaxations: 0,
            cap: 10_000,
        })
    }

    /// Extends the walk by one 8-connected step to a free cell.
    pub fn step(&mut self, next: Cell) -> Result<(), OracleError> {
        let a = Action::between(self.head, next);
        if !self.field.grid.is_free(next) || a.dx.abs() > 1 || a.dy.abs() > 1 || (a.dx == 0 && a.dy == 0) {
            return Err(OracleError::InvalidWalk);
        }
        let k = self.field.k;
        let (x0, y0) = self.field.scaled(self.head);
        self.head = next;
        self.cap += 200 * k as usize;
        for j in 1..=k {
            self.push_sample((x0 + 2 * j * i64::from(a.dx), y0 + 2 * j * i64::from(a.dy)))?;
        }
        Ok(())
    }

    fn push_sample(&mut self, sample: (i64, i64)) -> Result<(), OracleError> {
        let mut pending = vec![sample];
        while let Some(next) = pending.pop() {
            self.out.push(next);
            if self.out.len() < 3 {
                continue;
            }
            self.relaxations += 1;
            if self.relaxations > self.cap {
                return Err(OracleError::NoConvergence(self.cap));
            }
            let n = self.out.len();
            let (u, v, w) = (self.out[n - 3], self.out[n - 2], self.out[n - 1]);
            if let Shorten::Replace(chain) = self.field.shorten(u, v, w) {
                // Re-push the shortcut and the newest point so both are relaxed again.
                self.out.truncate(n - 2);
                pending.push(w);
                pending.extend(chain.into_iter().rev());
            }
        }
        Ok(())
    }

    /// Taut cable of the walk so far.
    pub fn result(&self) -> Result<StraightenedTether, OracleError> {
        let (k, scale) = (self.field.k, 2 * self.field.k);
        let out = &self.out;
        for &(x, y) in out.iter().skip(1).take(out.len().saturating_sub(2)) {
            if x.rem_euclid(scale) != k || y.rem_euclid(scale) != k {
                return Err(OracleError::NonCornerKink(x as f64 / scale as f64, y as f64 / scale as f64));
            }
        }
        let length = out
            .windows(2)
            .map(|p| ((p[1].0 - p[0].0) as f64).hypot((p[1].1 - p[0].1) as f64))
            .sum::<f64>()
            / scale as f64;
        Ok(StraightenedTether {
            length,
            contacts: out.len().saturating_sub(2),
            polyline: out.iter().map(|&(x, y)| (x as f64 / scale as f64, y as f64 / scale as f64)).collect(),
        })
    }
}

enum Shorten {
    Keep,
    Replace(Vec<(i64, i64)>),
}

/// Obstacle geometry on a lattice scaled so cell `c` spans `[2kc - k, 2kc + k]`.
#[derive(Debug, Clone, Copy)]
struct Field<'a> {
    grid: &'a OccupancyGrid,
    k: i64,
}

impl Field<'_> {
    fn scaled(&self, c: Cell) -> (i64, i64) {
        (2 * self.k * i64::from(c.x), 2 * self.k * i64::from(c.y))
    }

    /// Shortest replacement for the corner `v` of `u -> v -> w` that can be
    /// reached by sweeping across obstacle-free area only.
    fn shorten(&self, u: (i64, i64), v: (i64, i64), w: (i64, i64)) -> Shorten {
        let area = cross(u, v, w);
        if area == 0 {
            return Shorten::Replace(Vec::new());
        }
        let s = 2 * self.k;
        let x_lo = u.0.min(v.0).min(w.0);
        let x_hi = u.0.max(v.0).max(w.0);
        let y_lo = u.1.min(v.1).min(w.1);
        let y_hi = u.1.max(v.1).max(w.1);
        let mut corners: Vec<(i64, i64)> = Vec::new();
        for cy in (y_lo - self.k).div_euclid(s)..=(y_hi + self.k).div_euclid(s) + 1 {
            for cx in (x_lo - self.k).div_euclid(s)..=(x_hi + self.k).div_euclid(s) + 1 {
                let cell = Cell::new(cx as i32, cy as i32);
                if !self.grid.contains(cell) || self.grid.is_free(cell) {
                    continue;
                }
                let (lo_x, hi_x) = (s * cx - self.k, s * cx + self.k);
                let (lo_y, hi_y) = (s * cy - self.k, s * cy + self.k);
                if !clip_has_area([u, v, w], (lo_x, lo_y), (hi_x, hi_y)) {
                    continue;
                }
                for c in [(lo_x, lo_y), (hi_x, lo_y), (hi_x, hi_y), (lo_x, hi_y)] {
                    let inside = [cross(u, v, c), cross(v, w, c), cross(w, u, c)]
                        .iter()
                        .all(|&o| o == 0 || o.signum() == area.signum());
                    if inside {
                        corners.push(c);
                    }
                }
            }
        }
        if corners.is_empty() {
            return Shorten::Replace(Vec::new());
        }
        let chain = hull_arc(u, w, area.signum(), corners);
        if chain == [v] {
            Shorten::Keep
        } else {
            Shorten::Replace(chain)
        }
    }
}

fn cross(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> i64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Vertices strictly between `u` and `w` on the convex hull of `{u, w} + pts`,
/// walking the side where the turn sign is `side`.
fn hull_arc(u: (i64, i64), w: (i64, i64), side: i64, mut pts: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    pts.push(u);
    pts.push(w);
    pts.sort_unstable();
    pts.dedup();
    // Andrew's monotone chain; result is counter-clockwise in the cross() sense.
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    let hull: Vec<(i64, i64)> = lower.into_iter().chain(upper).collect();
    let n = hull.len();
    let iu = hull.iter().position(|&p| p == u).expect("u is a hull vertex");
    let iw = hull.iter().position(|&p| p == w).expect("w is a hull vertex");
    let mut arc = Vec::new();
    if side > 0 {
        let mut i = (iu + 1) % n;
        while i != iw {
            arc.push(hull[i]);
            i = (i + 1) % n;
        }
    } else {
        let mut i = (iu + n - 1) % n;
        while i != iw {
            arc.push(hull[i]);
            i = (i + n - 1) % n;
        }
    }
    arc
}

/// Exact rational number with positive denominator, kept reduced.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Ratio {
    n: i128,
    d: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl Ratio {
    fn new(n: i128, d: i128) -> Self {
        let s = if d < 0 { -1 } else { 1 };
        let g = gcd(n, d);
        Self { n: s * n / g, d: s * d / g }
    }
    fn int(v: i64) -> Self {
        Self { n: v.into(), d: 1 }
    }
    fn sub(self, o: Self) -> Self {
        Self::new(self.n * o.d - o.n * self.d, self.d * o.d)
    }
    fn add(self, o: Self) -> Self {
        Self::new(self.n * o.d + o.n * self.d, self.d * o.d)
    }
    fn mul(self, o: Self) -> Self {
        Self::new(self.n * o.n, self.d * o.d)
    }
    fn div(self, o: Self) -> Self {
        Self::new(self.n * o.d, self.d * o.n)
    }
    fn cmp(self, o: Self) -> std::cmp::Ordering {
        (self.n * o.d).cmp(&(o.n * self.d))
    }
}

type RPoint = (Ratio, Ratio);

/// Clips the closed triangle to the closed box and reports whether the
/// remaining polygon encloses positive area, i.e. whether the interiors meet.
fn clip_has_area(tri: [(i64, i64); 3], lo: (i64, i64), hi: (i64, i64)) -> bool {
    let mut poly: Vec<RPoint> = tri.iter().map(|&(x, y)| (Ratio::int(x), Ratio::int(y))).collect();
    // (axis, bound, keep >= bound?)
    let planes = [(0, lo.0, true), (0, hi.0, false), (1, lo.1, true), (1, hi.1, false)];
    for (axis, bound, keep_above) in planes {
        let bound = Ratio::int(bound);
        let coord = |p: &RPoint| if axis == 0 { p.0 } else { p.1 };
        let inside = |p: &RPoint| {
            let c = coord(p).cmp(bound);
            if keep_above {
                c != std::cmp::Ordering::Less
            } else {
                c != std::cmp::Ordering::Greater
            }
        };
        let mut next = Vec::new();
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            let (pin, qin) = (inside(&p), inside(&q));
            if pin {
                next.push(p);
            }
            if pin != qin {
                let t = bound.sub(coord(&p)).div(coord(&q).sub(coord(&p)));
                let x = p.0.add(q.0.sub(p.0).mul(t));
                let y = p.1.add(q.1.sub(p.1).mul(t));
                next.push((x, y));
            }
        }
        poly = next;
        if poly.len() < 3 {
            return false;
        }
    }
    let a = poly[0];
    poly.windows(2).skip(1).any(|pair| {
        let (b, c) = (pair[0], pair[1]);
        let cr = b.0.sub(a.0).mul(c.1.sub(a.1)).sub(b.1.sub(a.1).mul(c.0.sub(a.0)));
        cr.n != 0
    })
}

/// Cheapest path found by exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct EnumeratedOptimum {
    pub plan: PathPlan,
    pub profile: RiskProfile,
    pub visited: usize,
}

/// Default cap on the number of partial paths [`enumerate_paths`] may visit.
pub const ENUMERATION_CAP: usize = 5_000_000;

/// Minimum-risk path from `start` to `goal` among all feasible collision-free
/// walks of at most `max_len` steps (cell revisits allowed).
///
/// Depth-first with a bound: a partial walk is abandoned once its running
/// total reaches the best complete total, which is sound because every step
/// contributes non-negative risk. The bound starts from the breadth-first
/// shortest walk. Running totals are accumulated step by step in plan order;
/// every walk that improves the best total is re-scored from scratch with
/// [`RiskModel::evaluate`] and the two must agree exactly.
pub fn enumerate_paths(
    model: &RiskModel<'_>,
    start: Cell,
    goal: Cell,
    max_len: usize,
    cap: usize,
) -> Result<EnumeratedOptimum, OracleError> {
    let grid = model.grid();
    if !grid.is_free(start) || !grid.is_free(goal) {
        return Err(OracleError::InvalidWalk);
    }
    let mut search = Enumeration {
        model,
        goal,
        max_len,
        cap,
        visited: 0,
        best: None,
        cells: vec![start],
    };
    // The shortest route bounds the search; without one no walk can reach the goal.
    match bfs_route(grid, start, goal).filter(|r| r.len() <= max_len + 1) {
        Some(route) => search.offer(route)?,
        None => return Err(OracleError::NoPath { start, goal, max_len }),
    }
    let tether = model.initial_tether(start)?;
    let total = model.combine(0.0, model.state_category(start)?.score, model.path_risk(&tether).score);
    search.descend(&tether, None, total)?;
    match search.best {
        Some((plan, profile)) => Ok(EnumeratedOptimum {
            plan,
            profile,
            visited: search.visited,
        }),
        None => Err(OracleError::NoPath { start, goal, max_len }),
    }
}

/// Breadth-first 8-connected route.
fn bfs_route(grid: &OccupancyGrid, from: Cell, to: Cell) -> Option<Vec<Cell>> {
    let mut prev: HashMap<Cell, Cell> = HashMap::from([(from, from)]);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if c == to {
            let mut route = vec![c];
            while *route.last().unwrap() != from {
                route.push(prev[route.last().unwrap()]);
            }
            route.reverse();
            return Some(route);
        }
        for a in Action::MOVES {
            let n = c.offset(a.dx, a.dy);
            if grid.is_free(n) && !prev.contains_key(&n) {
                prev.insert(n, c);
                queue.push_back(n);
            }
        }
    }
    None
}

struct Enumeration<'m, 'g> {
    model: &'m RiskModel<'g>,
    goal: Cell,
    max_len: usize,
    cap: usize,
    visited: usize,
    best: Option<(PathPlan, RiskProfile)>,
    cells: Vec<Cell>,
}

impl Enumeration<'_, '_> {
    fn bound(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |(_, p)| p.total)
    }

    fn offer(&mut self, cells: Vec<Cell>) -> Result<(), OracleError> {
        let plan = PathPlan::new(cells).expect("non-empty");
        let profile = self.model.evaluate(&plan)?;
        if profile.total < self.bound() {
            self.best = Some((plan, profile));
        }
        Ok(())
    }

    fn descend(&mut self, tether: &TetherState, incoming: Option<Action>, total: f64) -> Result<(), OracleError> {
        self.visited += 1;
        if self.visited > self.cap {
            return Err(OracleError::EnumerationCap(self.cap));
        }
        if total >= self.bound() {
            return Ok(());
        }
        let here = *self.cells.last().unwrap();
        if here == self.goal {
            self.offer(self.cells.clone())?;
            let scored = self.best.as_ref().map(|(_, p)| p.total);
            if scored != Some(total) {
                return Err(OracleError::ScoreMismatch {
                    running: total,
                    evaluated: scored.unwrap_or(f64::NAN),
                });
            }
            // Extending a finished path only adds risk.
            return Ok(());
        }
        if self.cells.len() > self.max_len {
            return Ok(());
        }
        let grid = self.model.grid();
        for a in Action::MOVES {
            let next = here.offset(a.dx, a.dy);
            if !grid.is_free(next) {
                continue;
            }
            let t = tether.advance(grid, next).map_err(RiskError::from)?;
            let step = self.model.combine(
                self.model.action_risk(incoming, a).score,
                self.model.state_category(next)?.score,
                self.model.path_risk(&t).score,
            );
            self.cells.push(next);
            self.descend(&t, Some(a), total + step)?;
            self.cells.pop();
        }
        Ok(())
    }
}
