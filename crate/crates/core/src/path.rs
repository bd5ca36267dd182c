//! Path plans, the actions between consecutive states, and prefix paths.

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{Cell, OccupancyGrid};

/// Default radius of connectivity: exactly the 8-connected moves are feasible.
pub const DEFAULT_CONNECTIVITY: f64 = SQRT_2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("a path needs at least one state")]
    Empty,
    #[error("connectivity radius must be positive, got {0}")]
    Radius(f64),
    #[error("line {line}: expected \"x,y\" with integer coordinates, got {text:?}")]
    Parse { line: usize, text: String },
    #[error("invalid path:\n{0}")]
    Invalid(ValidationReport),
}

/// Ordered sequence of lattice states `s_0 .. s_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPlan {
    states: Vec<Cell>,
    connectivity_radius: f64,
}

impl PathPlan {
    pub fn new(states: Vec<Cell>) -> Result<Self, PathError> {
        Self::with_connectivity(states, DEFAULT_CONNECTIVITY)
    }

    pub fn with_connectivity(states: Vec<Cell>, radius: f64) -> Result<Self, PathError> {
        if states.is_empty() {
            return Err(PathError::Empty);
        }
        if !(radius > 0.0) {
            return Err(PathError::Radius(radius));
        }
        Ok(Self {
            states,
            connectivity_radius: radius,
        })
    }

    /// Rebuilds a plan by applying `actions` from `start`.
    pub fn integrate(start: Cell, actions: &[Action]) -> Self {
        let mut states = Vec::with_capacity(actions.len() + 1);
        states.push(start);
        let mut cur = start;
        for a in actions {
            cur = cur.offset(a.dx, a.dy);
            states.push(cur);
        }
        Self {
            states,
            connectivity_radius: DEFAULT_CONNECTIVITY,
        }
    }

    pub fn states(&self) -> &[Cell] {
        &self.states
    }

    /// Number of steps `n` (one less than the number of states).
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn start(&self) -> Cell {
        self.states[0]
    }

    pub fn end(&self) -> Cell {
        self.states[self.states.len() - 1]
    }

    pub fn connectivity_radius(&self) -> f64 {
        self.connectivity_radius
    }

    /// Checks connectivity, repeated states and collisions for every index.
    pub fn validate(&self, grid: &OccupancyGrid) -> ValidationReport {
        let mut violations = Vec::new();
        for (i, &s) in self.states.iter().enumerate() {
            if i > 0 {
                let prev = self.states[i - 1];
                let length = prev.distance(s);
                if s == prev {
                    violations.push(Violation::Repeated { index: i, cell: s });
                } else if length > self.connectivity_radius + 1e-12 {
                    violations.push(Violation::Infeasible { index: i, length });
                }
            }
            if !grid.contains(s) {
                violations.push(Violation::OutOfBounds { index: i, cell: s });
            } else if grid.is_obstacle(s) {
                violations.push(Violation::Collision { index: i, cell: s });
            }
        }
        ValidationReport { violations }
    }

    /// Like [`validate`](Self::validate) but turns a non-empty report into an error.
    pub fn ensure_valid(&self, grid: &OccupancyGrid) -> Result<(), PathError> {
        let report = self.validate(grid);
        if report.is_valid() {
            Ok(())
        } else {
            Err(PathError::Invalid(report))
        }
    }

    /// `a_i = s_i - s_{i-1}` for `i = 1..=n`.
    pub fn actions(&self) -> Vec<Action> {
        self.states
            .windows(2)
            .map(|w| Action::between(w[0], w[1]))
            .collect()
    }

    /// The prefix paths `p_0 .. p_n`.
    pub fn prefixes(&self) -> Vec<PrefixPath<'_>> {
        (0..self.states.len())
            .map(|end_index| PrefixPath { plan: self, end_index })
            .collect()
    }

    pub fn prefix(&self, end_index: usize) -> Option<PrefixPath<'_>> {
        (end_index < self.states.len()).then_some(PrefixPath { plan: self, end_index })
    }

    /// Parses the path CSV format: one `x,y` integer pair per line, no header.
    pub fn parse_csv(text: &str) -> Result<Self, PathError> {
        let mut states = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            let bad = || PathError::Parse {
                line: line_no + 1,
                text: line.to_string(),
            };
            let (x, y) = line.split_once(',').ok_or_else(bad)?;
            let x = x.trim().parse().map_err(|_| bad())?;
            let y = y.trim().parse().map_err(|_| bad())?;
            states.push(Cell::new(x, y));
        }
        Self::new(states)
    }

    pub fn to_csv(&self) -> String {
        self.states.iter().map(|c| format!("{},{}\n", c.x, c.y)).collect()
    }
}

/// Displacement between two consecutive states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Action {
    pub dx: i32,
    pub dy: i32,
}

impl Action {
    /// The eight unit moves in a fixed order (row-major around the cell).
    pub const MOVES: [Action; 8] = [
        Action::new(-1, -1),
        Action::new(0, -1),
        Action::new(1, -1),
        Action::new(-1, 0),
        Action::new(1, 0),
        Action::new(-1, 1),
        Action::new(0, 1),
        Action::new(1, 1),
    ];

    pub const fn new(dx: i32, dy: i32) -> Self {
        Self { dx, dy }
    }

    pub fn between(from: Cell, to: Cell) -> Self {
        Self::new(to.x - from.x, to.y - from.y)
    }

    pub fn length(self) -> f64 {
        f64::from(self.dx).hypot(f64::from(self.dy))
    }

    /// Unsigned angle between the two displacement directions, in degrees.
    pub fn turn_degrees(self, next: Action) -> f64 {
        let (ax, ay) = (f64::from(self.dx), f64::from(self.dy));
        let (bx, by) = (f64::from(next.dx), f64::from(next.dy));
        let cross = ax * by - ay * bx;
        let dot = ax * bx + ay * by;
        cross.atan2(dot).abs().to_degrees()
    }
}

/// The prefix `p_i = {s_0, ..., s_i}` of a plan.
#[derive(Debug, Clone, Copy)]
pub struct PrefixPath<'a> {
    plan: &'a PathPlan,
    end_index: usize,
}

impl<'a> PrefixPath<'a> {
    pub fn end_index(&self) -> usize {
        self.end_index
    }

    pub fn states(&self) -> &'a [Cell] {
        &self.plan.states[..=self.end_index]
    }

    pub fn end(&self) -> Cell {
        self.plan.states[self.end_index]
    }

    pub fn to_plan(&self) -> PathPlan {
        PathPlan {
            states: self.states().to_vec(),
            connectivity_radius: self.plan.connectivity_radius,
        }
    }
}

impl PartialEq for PrefixPath<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.states() == other.states()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Step longer than the connectivity radius.
    Infeasible { index: usize, length: f64 },
    /// `s_i == s_{i-1}`.
    Repeated { index: usize, cell: Cell },
    Collision { index: usize, cell: Cell },
    OutOfBounds { index: usize, cell: Cell },
}

impl Violation {
    pub fn index(&self) -> usize {
        match *self {
            Violation::Infeasible { index, .. }
            | Violation::Repeated { index, .. }
            | Violation::Collision { index, .. }
            | Violation::OutOfBounds { index, .. } => index,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Infeasible { index, length } => {
                write!(f, "state {index}: step length {length:.4} exceeds the connectivity radius")
            }
            Violation::Repeated { index, cell } => write!(f, "state {index}: repeats {cell}"),
            Violation::Collision { index, cell } => write!(f, "state {index}: {cell} is an obstacle"),
            Violation::OutOfBounds { index, cell } => write!(f, "state {index}: {cell} is outside the map"),
        }
    }
}

/// Every feasibility and collision failure of a plan; empty means valid.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}
