//! Minimum-risk planning by uniform-cost search.
//!
//! Path risk depends on the tether, so a search node is the triple
//! (cell, incoming action, contact stack). The incoming action prices the
//! turn of the next step and the contact stack fixes the tether; together
//! they make every edge cost a function of the node alone. Edge costs are the
//! exact per-step contributions of [`RiskModel::evaluate`], so the reported
//! cost of a plan equals its evaluated risk index bit for bit.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::grid::{Cell, GridError, OccupancyGrid};
use crate::path::{Action, PathPlan};
use crate::risk::{RiskConfig, RiskError, RiskModel, RiskProfile};
use crate::tether::{bfs_route, Contact, TetherState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PlanLimits {
    /// Nodes whose tether holds more contacts are never generated.
    pub max_contacts: usize,
    /// Hard cap on node expansions.
    pub max_expansions: usize,
}

impl Default for PlanLimits {
    fn default() -> Self {
        Self {
            max_contacts: 10,
            max_expansions: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("planning endpoint unusable: {0}")]
    Endpoint(#[from] GridError),
    #[error("goal {goal} is not reachable from {start}")]
    Unreachable { start: Cell, goal: Cell },
    #[error("no path from {start} to {goal} keeps the tether within {max_contacts} contacts")]
    ContactLimit { start: Cell, goal: Cell, max_contacts: usize },
    #[error("expansion budget of {0} nodes exhausted before reaching the goal")]
    BudgetExhausted(usize),
    #[error(transparent)]
    Risk(#[from] RiskError),
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanResult {
    #[serde(skip)]
    pub plan: PathPlan,
    pub profile: RiskProfile,
    /// Accumulated search cost at the goal.
    pub cost: f64,
    pub expansions: usize,
    pub limits: PlanLimits,
}

type NodeKey = (Cell, Option<Action>, Vec<Contact>);

struct Node {
    cell: Cell,
    incoming: Option<Action>,
    tether: TetherState,
    g: f64,
    steps: usize,
    parent: Option<usize>,
}

#[derive(PartialEq)]
struct Entry {
    g: f64,
    steps: usize,
    seq: u64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so the max-heap pops the cheapest, then shortest, then oldest entry.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .g
            .total_cmp(&self.g)
            .then(other.steps.cmp(&self.steps))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-risk path from `start` to `goal` under `cfg`.
pub fn plan_min_risk(
    grid: &OccupancyGrid,
    start: Cell,
    goal: Cell,
    cfg: &RiskConfig,
    limits: PlanLimits,
) -> Result<PlanResult, PlanError> {
    plan_with_model(&RiskModel::new(grid, *cfg)?, start, goal, limits)
}

/// As [`plan_min_risk`], reusing a prepared model (and its anchor choice).
///
/// Ties in risk go to the path with fewer steps, then to the path discovered
/// first when successors are generated in [`Action::MOVES`] order.
pub fn plan_with_model(
    model: &RiskModel<'_>,
    start: Cell,
    goal: Cell,
    limits: PlanLimits,
) -> Result<PlanResult, PlanError> {
    let grid = model.grid();
    grid.check_free(start)?;
    grid.check_free(goal)?;
    if bfs_route(grid, start, goal).is_none() {
        return Err(PlanError::Unreachable { start, goal });
    }

    let tether = model.initial_tether(start)?;
    let g0 = model.combine(0.0, model.state_category(start)?.score, model.path_risk(&tether).score);
    let mut nodes = vec![Node {
        cell: start,
        incoming: None,
        tether: tether.clone(),
        g: g0,
        steps: 0,
        parent: None,
    }];
    let mut index: HashMap<NodeKey, usize> = HashMap::new();
    index.insert((start, None, tether.contacts().to_vec()), 0);
    let mut heap = BinaryHeap::from([Entry {
        g: g0,
        steps: 0,
        seq: 0,
        node: 0,
    }]);
    let mut seq = 1u64;
    let mut expansions = 0usize;

    while let Some(Entry { g, steps, node, .. }) = heap.pop() {
        let n = &nodes[node];
        if g != n.g || steps != n.steps {
            continue;
        }
        if n.cell == goal {
            return finish(model, &nodes, node, expansions, limits);
        }
        if expansions == limits.max_expansions {
            return Err(PlanError::BudgetExhausted(limits.max_expansions));
        }
        expansions += 1;

        let (cell, incoming, tether) = (n.cell, n.incoming, n.tether.clone());
        for a in Action::MOVES {
            let next = cell.offset(a.dx, a.dy);
            if !grid.is_free(next) {
                continue;
            }
            let t = tether.advance(grid, next).map_err(RiskError::from)?;
            if t.contact_count() > limits.max_contacts {
                continue;
            }
            let step = model.combine(
                model.action_risk(incoming, a).score,
                model.state_category(next)?.score,
                model.path_risk(&t).score,
            );
            let (g2, steps2) = (g + step, steps + 1);
            let key = (next, Some(a), t.contacts().to_vec());
            let id = match index.get(&key) {
                Some(&id) => {
                    let old = &nodes[id];
                    if (g2, steps2) >= (old.g, old.steps) {
                        continue;
                    }
                    id
                }
                None => {
                    nodes.push(Node {
                        cell: next,
                        incoming: Some(a),
                        tether: t.clone(),
                        g: f64::INFINITY,
                        steps: usize::MAX,
                        parent: None,
                    });
                    index.insert(key, nodes.len() - 1);
                    nodes.len() - 1
                }
            };
            let m = &mut nodes[id];
            m.g = g2;
            m.steps = steps2;
            m.parent = Some(node);
            m.tether = t;
            heap.push(Entry {
                g: g2,
                steps: steps2,
                seq,
                node: id,
            });
            seq += 1;
        }
    }
    Err(PlanError::ContactLimit {
        start,
        goal,
        max_contacts: limits.max_contacts,
    })
}

fn finish(
    model: &RiskModel<'_>,
    nodes: &[Node],
    goal_node: usize,
    expansions: usize,
    limits: PlanLimits,
) -> Result<PlanResult, PlanError> {
    let mut cells = Vec::new();
    let mut cur = Some(goal_node);
    while let Some(i) = cur {
        cells.push(nodes[i].cell);
        cur = nodes[i].parent;
    }
    cells.reverse();
    let plan = PathPlan::new(cells).expect("search paths are non-empty");
    let profile = model.evaluate(&plan)?;
    Ok(PlanResult {
        plan,
        profile,
        cost: nodes[goal_node].g,
        expansions,
        limits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_row_in_open_grid() {
        let grid = OccupancyGrid::open(5, 5).unwrap();
        let r = plan_min_risk(&grid, Cell::new(0, 2), Cell::new(4, 2), &RiskConfig::default(), PlanLimits::default()).unwrap();
        let ys: Vec<i32> = r.plan.states().iter().map(|c| c.y).collect();
        assert_eq!(ys, vec![2; 5]);
        assert_eq!(r.cost, r.profile.total);
    }

    #[test]
    fn goal_equals_start() {
        let grid = OccupancyGrid::open(5, 5).unwrap();
        let cfg = RiskConfig::default();
        let r = plan_min_risk(&grid, Cell::new(2, 2), Cell::new(2, 2), &cfg, PlanLimits::default()).unwrap();
        assert_eq!(r.plan.states().len(), 1);
        let state = crate::risk::state_category(Cell::new(2, 2), &grid, &cfg).unwrap();
        assert_eq!(r.cost, state.score);
    }

    #[test]
    fn unreachable_and_budget_are_distinct() {
        let grid = OccupancyGrid::parse("..#..\n..#..\n..#..").unwrap();
        let cfg = RiskConfig::default();
        let err = plan_min_risk(&grid, Cell::new(0, 0), Cell::new(4, 0), &cfg, PlanLimits::default()).unwrap_err();
        assert!(matches!(err, PlanError::Unreachable { .. }));

        let open = OccupancyGrid::open(6, 6).unwrap();
        let tight = PlanLimits {
            max_expansions: 3,
            ..PlanLimits::default()
        };
        let err = plan_min_risk(&open, Cell::new(0, 0), Cell::new(5, 5), &cfg, tight).unwrap_err();
        assert_eq!(err, PlanError::BudgetExhausted(3));
        assert!(matches!(
            plan_min_risk(&grid, Cell::new(2, 0), Cell::new(0, 0), &cfg, PlanLimits::default()),
            Err(PlanError::Endpoint(_))
        ));
    }
}
