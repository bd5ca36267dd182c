//! Taut-tether bookkeeping for a robot tethered to a fixed reel.
//!
//! The tether is kept as the shortest cable homotopic to the walk the robot
//! has taken: a polyline from the anchor through a stack of obstacle-corner
//! contacts to the robot. Every contact records the turn direction the cable
//! makes around it; a contact is released as soon as the cable would bend the
//! other way there.
//!
//! All geometry runs on the doubled lattice ([`HalfPoint`]) so the wrap and
//! unwrap decisions are exact.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::geom::{cell_corners, open_triangle_meets_cell, orient, HalfPoint, Point};
use crate::grid::{Cell, GridError, OccupancyGrid};
use crate::path::Action;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TetherError {
    #[error("tether cell unusable: {0}")]
    Blocked(#[from] GridError),
    #[error("cannot move the tether head from {from} to {to}: not an 8-connected step")]
    NotAdjacent { from: Cell, to: Cell },
    #[error("no free route from anchor {anchor} to {start} to lay out the tether")]
    Unreachable { anchor: Cell, start: Cell },
    #[error("tether invariant violated: {0}")]
    Invariant(String),
}

/// A corner the tether wraps around, with the sign of the turn it makes there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Contact {
    #[serde(skip)]
    pub corner: HalfPoint,
    pub turn: i8,
}

impl Contact {
    pub fn point(&self) -> Point {
        self.corner.to_point()
    }
}

/// Anchor, contact stack and head of a taut tether.
#[derive(Debug, Clone, PartialEq)]
pub struct TetherState {
    anchor: Cell,
    head: Cell,
    contacts: Vec<Contact>,
    length: f64,
}

fn half(cell: Cell) -> HalfPoint {
    HalfPoint::new(2 * i64::from(cell.x), 2 * i64::from(cell.y))
}

impl TetherState {
    /// Tether fully reeled in at `anchor`.
    pub fn new(grid: &OccupancyGrid, anchor: Cell) -> Result<Self, TetherError> {
        grid.check_free(anchor)?;
        Ok(Self {
            anchor,
            head: anchor,
            contacts: Vec::new(),
            length: 0.0,
        })
    }

    /// Tether laid out from `anchor` to a robot starting at `start`.
    ///
    /// When the two differ the cable follows the breadth-first shortest
    /// 8-connected route (fixed move order) and is then pulled taut.
    pub fn deploy(grid: &OccupancyGrid, anchor: Cell, start: Cell) -> Result<Self, TetherError> {
        let mut state = Self::new(grid, anchor)?;
        grid.check_free(start)?;
        if anchor == start {
            return Ok(state);
        }
        let route = bfs_route(grid, anchor, start).ok_or(TetherError::Unreachable { anchor, start })?;
        for &cell in &route[1..] {
            state = state.advance(grid, cell)?;
        }
        Ok(state)
    }

    pub fn anchor(&self) -> Cell {
        self.anchor
    }

    pub fn head(&self) -> Cell {
        self.head
    }

    /// Cable length from the anchor to the head, in cell units.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn contact_count(&self) -> usize {
        self.contacts.len()
    }

    /// Contact stack, bottom (closest to the anchor) first.
    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    /// Anchor, contacts and head as map-coordinate points.
    pub fn polyline(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.contacts.len() + 2);
        pts.push(self.anchor.center());
        pts.extend(self.contacts.iter().map(Contact::point));
        pts.push(self.head.center());
        pts
    }

    /// Polyline as `x,y` CSV rows.
    pub fn to_csv(&self) -> String {
        self.polyline().iter().map(|p| format!("{},{}\n", p.x, p.y)).collect()
    }

    /// Moves the head one 8-connected step to `next` and re-tightens the cable.
    pub fn advance(&self, grid: &OccupancyGrid, next: Cell) -> Result<Self, TetherError> {
        grid.check_free(next)?;
        let step = Action::between(self.head, next);
        if step.dx.abs() > 1 || step.dy.abs() > 1 || (step.dx == 0 && step.dy == 0) {
            return Err(TetherError::NotAdjacent {
                from: self.head,
                to: next,
            });
        }

        // Polyline: anchor, contacts, old head (free vertex), new head.
        let mut verts: Vec<(HalfPoint, i8)> = Vec::with_capacity(self.contacts.len() + 4);
        verts.push((half(self.anchor), 0));
        verts.extend(self.contacts.iter().map(|c| (c.corner, c.turn)));
        verts.push((half(self.head), 0));
        verts.push((half(next), 0));
        let mut lowest_touched = verts.len() - 2;

        // Wrap: the old head collapses onto whatever the swept triangle catches.
        let mut i = verts.len() - 2;
        let mut guard = 0usize;
        loop {
            let (u, v, w) = (verts[i - 1].0, verts[i].0, verts[i + 1].0);
            let (chain, turn) = taut_chain(grid, u, v, w);
            verts.splice(i..=i, chain.into_iter().map(|p| (p, turn)));
            lowest_touched = lowest_touched.min(i);

            // Unwrap: find the topmost contact whose turn no longer matches.
            match (1..verts.len() - 1).rev().find(|&j| {
                let (u, (v, turn), w) = (verts[j - 1].0, verts[j], verts[j + 1].0);
                orient(u, v, w).signum() as i8 != turn || turn == 0
            }) {
                Some(j) => i = j,
                None => break,
            }
            guard += 1;
            if guard > 64 + 8 * verts.len() {
                return Err(TetherError::Invariant(format!(
                    "re-tightening did not settle after {guard} rounds moving {} -> {next}",
                    self.head
                )));
            }
        }

        let start = lowest_touched.saturating_sub(1);
        for pair in verts[start..].windows(2) {
            if !grid.line_of_sight(pair[0].0.to_point(), pair[1].0.to_point()) {
                return Err(TetherError::Invariant(format!(
                    "segment {} -> {} crosses an obstacle",
                    pair[0].0.to_point(),
                    pair[1].0.to_point()
                )));
            }
        }

        let contacts: Vec<Contact> = verts[1..verts.len() - 1]
            .iter()
            .map(|&(corner, turn)| Contact { corner, turn })
            .collect();
        let length = verts.windows(2).map(|p| p[0].0.distance(p[1].0)).sum();
        Ok(Self {
            anchor: self.anchor,
            head: next,
            contacts,
            length,
        })
    }
}

/// Replacement for the middle vertex of `u -> v -> w`: the convex chain of
/// obstacle corners that the straightened cable `u -> w` catches on the `v`
/// side, in order from `u`. Also returns the turn sign of every chain vertex.
///
/// A degenerate (collinear) triangle sweeps no area, so the chain is empty.
fn taut_chain(grid: &OccupancyGrid, u: HalfPoint, v: HalfPoint, w: HalfPoint) -> (Vec<HalfPoint>, i8) {
    let sigma = orient(u, v, w).signum();
    if sigma == 0 {
        return (Vec::new(), 0);
    }
    let candidates = blocking_corners(grid, u, v, w, sigma);
    if candidates.is_empty() {
        return (Vec::new(), sigma as i8);
    }

    // Gift wrapping from u to w keeping every candidate on the inner side.
    let mut chain = Vec::new();
    let mut p = u;
    for _ in 0..=candidates.len() {
        let mut q = w;
        for &r in &candidates {
            if r == p {
                continue;
            }
            let side = orient(p, q, r) * sigma;
            if side < 0 {
                q = r;
            } else if side == 0 {
                let (dq, dr) = ((q.x - p.x, q.y - p.y), (r.x - p.x, r.y - p.y));
                let along = dq.0 * dr.0 + dq.1 * dr.1;
                if along > 0 && dr.0 * dr.0 + dr.1 * dr.1 > dq.0 * dq.0 + dq.1 * dq.1 {
                    q = r;
                }
            }
        }
        if q == w {
            break;
        }
        chain.push(q);
        p = q;
    }
    (chain, sigma as i8)
}

/// Corners (inside the closed triangle, other than `u` and `w`) of obstacle
/// cells whose interior meets the open triangle `u, v, w`.
fn blocking_corners(grid: &OccupancyGrid, u: HalfPoint, v: HalfPoint, w: HalfPoint, sigma: i64) -> Vec<HalfPoint> {
    let lo_x = u.x.min(v.x).min(w.x);
    let hi_x = u.x.max(v.x).max(w.x);
    let lo_y = u.y.min(v.y).min(w.y);
    let hi_y = u.y.max(v.y).max(w.y);
    // Cell c spans [2c - 1, 2c + 1] on the doubled lattice.
    let cx0 = (lo_x.div_euclid(2)).max(0);
    let cx1 = ((hi_x + 1).div_euclid(2)).min(grid.width() as i64 - 1);
    let cy0 = (lo_y.div_euclid(2)).max(0);
    let cy1 = ((hi_y + 1).div_euclid(2)).min(grid.height() as i64 - 1);
    let mut out = Vec::new();
    for cy in cy0..=cy1 {
        for cx in cx0..=cx1 {
            if !grid.is_obstacle(Cell::new(cx as i32, cy as i32)) || !open_triangle_meets_cell(u, v, w, cx, cy) {
                continue;
            }
            for k in cell_corners(cx, cy) {
                let inside = orient(u, v, k) * sigma >= 0 && orient(v, w, k) * sigma >= 0 && orient(w, u, k) * sigma >= 0;
                if inside && k != u && k != w && !out.contains(&k) {
                    out.push(k);
                }
            }
        }
    }
    out
}

/// Breadth-first 8-connected route, expanding moves in [`Action::MOVES`] order.
pub(crate) fn bfs_route(grid: &OccupancyGrid, from: Cell, to: Cell) -> Option<Vec<Cell>> {
    let w = grid.width();
    let idx = |c: Cell| c.y as usize * w + c.x as usize;
    let mut parent: Vec<Option<Cell>> = vec![None; w * grid.height()];
    let mut seen = vec![false; w * grid.height()];
    let mut queue = VecDeque::from([from]);
    seen[idx(from)] = true;
    while let Some(c) = queue.pop_front() {
        if c == to {
            let mut route = vec![c];
            let mut cur = c;
            while let Some(p) = parent[idx(cur)] {
                route.push(p);
                cur = p;
            }
            route.reverse();
            return Some(route);
        }
        for a in Action::MOVES {
            let n = c.offset(a.dx, a.dy);
            if grid.is_free(n) && !seen[idx(n)] {
                seen[idx(n)] = true;
                parent[idx(n)] = Some(c);
                queue.push_back(n);
            }
        }
    }
    None
}
