//! Additive path risk index built from action-, state- and path-dependent
//! elements.
//!
//! Each step `i` of a plan contributes
//!
//! ```text
//! w_a * action(i) + w_s * state(s_i) + w_p * path(p_i)
//! ```
//!
//! where every category score is a weighted mean of elements normalized to
//! `[0, 1]`, and step 0 has no action term. The risk index of the plan is the
//! left-to-right sum of the contributions.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, GridError, OccupancyGrid};
use crate::path::{Action, PathPlan, PrefixPath, ValidationReport};
use crate::tether::{TetherError, TetherState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("invalid risk configuration: {0}")]
    Config(String),
    #[error("invalid path:\n{0}")]
    InvalidPlan(ValidationReport),
    #[error("action index must be in 1..={max}, got {index}")]
    ActionIndex { index: usize, max: usize },
    #[error("tether head {tether} does not match the prefix end {prefix}")]
    TetherMismatch { tether: Cell, prefix: Cell },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Tether(#[from] TetherError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateWeights {
    pub distance: f64,
    pub visibility: f64,
}

impl Default for StateWeights {
    fn default() -> Self {
        Self {
            distance: 1.0,
            visibility: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathWeights {
    pub tether_length: f64,
    pub contacts: f64,
}

impl Default for PathWeights {
    fn default() -> Self {
        Self {
            tether_length: 1.0,
            contacts: 1.0,
        }
    }
}

/// Element weights inside each category (`wa1`, `wa2`, `state`, `path`) and
/// the category weights of the total (`wa`, `ws`, `wp`). All default to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub wa1: f64,
    pub wa2: f64,
    pub wa: f64,
    pub ws: f64,
    pub wp: f64,
    pub state: StateWeights,
    pub path: PathWeights,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            wa1: 1.0,
            wa2: 1.0,
            wa: 1.0,
            ws: 1.0,
            wp: 1.0,
            state: StateWeights::default(),
            path: PathWeights::default(),
        }
    }
}

/// Normalization constants mapping raw element values onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Normalization {
    /// Longest action (the 8-connected diagonal).
    pub action_max_len: f64,
    /// Turn angle (degrees) that saturates the tortuosity element.
    pub turn_max_deg: f64,
    /// Obstacle distance at or below which the distance element is 1.
    pub dist_lo: f64,
    /// Obstacle distance at or above which the distance element is 0.
    pub dist_hi: f64,
    pub vis_range: f64,
    pub vis_rays: usize,
    pub tether_max: f64,
    pub contacts_max: usize,
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            action_max_len: SQRT_2,
            turn_max_deg: 180.0,
            dist_lo: 1.0,
            dist_hi: 4.0,
            vis_range: 5.0,
            vis_rays: 16,
            tether_max: 20.0,
            contacts_max: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    pub weights: Weights,
    pub norm: Normalization,
}

impl RiskConfig {
    pub fn validate(&self) -> Result<(), RiskError> {
        let w = &self.weights;
        let all = [
            ("wa1", w.wa1),
            ("wa2", w.wa2),
            ("wa", w.wa),
            ("ws", w.ws),
            ("wp", w.wp),
            ("state.distance", w.state.distance),
            ("state.visibility", w.state.visibility),
            ("path.tether_length", w.path.tether_length),
            ("path.contacts", w.path.contacts),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(RiskError::Config(format!("weight {name} must be finite and >= 0, got {v}")));
        }
        for (name, sum) in [
            ("action", w.wa1 + w.wa2),
            ("state", w.state.distance + w.state.visibility),
            ("path", w.path.tether_length + w.path.contacts),
        ] {
            if sum <= 0.0 {
                return Err(RiskError::Config(format!("{name} element weights are all zero")));
            }
        }
        let n = &self.norm;
        let positive = [
            ("action_max_len", n.action_max_len),
            ("turn_max_deg", n.turn_max_deg),
            ("vis_range", n.vis_range),
            ("tether_max", n.tether_max),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(RiskError::Config(format!("norm.{name} must be positive, got {v}")));
        }
        if !(n.dist_lo < n.dist_hi) || !n.dist_lo.is_finite() || !n.dist_hi.is_finite() {
            return Err(RiskError::Config(format!(
                "norm.dist_lo ({}) must be below norm.dist_hi ({})",
                n.dist_lo, n.dist_hi
            )));
        }
        if n.vis_rays < 4 {
            return Err(RiskError::Config(format!("norm.vis_rays must be >= 4, got {}", n.vis_rays)));
        }
        if n.contacts_max == 0 {
            return Err(RiskError::Config("norm.contacts_max must be >= 1".into()));
        }
        Ok(())
    }
}

fn weighted_mean(pairs: [(f64, f64); 2]) -> f64 {
    let (num, den) = pairs.iter().fold((0.0, 0.0), |(n, d), &(w, x)| (n + w * x, d + w));
    num / den
}

/// Action-dependent elements of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionRisk {
    pub length_risk: f64,
    pub turn_risk: f64,
    pub score: f64,
}

/// State-dependent elements of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateRisk {
    /// Raw distance to the closest obstacle, in cells.
    pub distance: f64,
    pub distance_risk: f64,
    pub visibility_risk: f64,
    pub score: f64,
}

/// Path-dependent (tether) elements at the end of a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRisk {
    pub tether_length: f64,
    pub contacts: usize,
    pub tether_risk: f64,
    pub contact_risk: f64,
    pub score: f64,
}

/// Contribution of one step to the risk index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRisk {
    pub index: usize,
    pub cell: Cell,
    /// `None` for step 0.
    pub action: Option<ActionRisk>,
    pub state: StateRisk,
    pub path: PathRisk,
    pub step_total: f64,
    pub cumulative: f64,
}

impl StepRisk {
    pub fn action_score(&self) -> f64 {
        self.action.map_or(0.0, |a| a.score)
    }
}

/// Per-step breakdown and total risk index of a plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskProfile {
    pub per_step: Vec<StepRisk>,
    pub total: f64,
}

/// Weighted category sums of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CategorySubtotals {
    pub action: f64,
    pub state: f64,
    pub path: f64,
}

impl RiskProfile {
    pub fn cumulative(&self) -> Vec<f64> {
        self.per_step.iter().map(|s| s.cumulative).collect()
    }

    pub fn subtotals(&self, cfg: &RiskConfig) -> CategorySubtotals {
        let w = &cfg.weights;
        let mut out = CategorySubtotals {
            action: 0.0,
            state: 0.0,
            path: 0.0,
        };
        for s in &self.per_step {
            out.action += w.wa * s.action_score();
            out.state += w.ws * s.state.score;
            out.path += w.wp * s.path.score;
        }
        out
    }
}

/// Risk evaluator bound to one grid and configuration.
///
/// State scores are computed once per free cell, so evaluating many plans on
/// the same map (as the planner and the enumeration oracle do) is cheap.
#[derive(Debug, Clone)]
pub struct RiskModel<'g> {
    grid: &'g OccupancyGrid,
    cfg: RiskConfig,
    anchor: Option<Cell>,
    states: Vec<Option<StateRisk>>,
}

impl<'g> RiskModel<'g> {
    /// Uses the grid's anchor marker when present, otherwise each plan's start.
    pub fn new(grid: &'g OccupancyGrid, cfg: RiskConfig) -> Result<Self, RiskError> {
        cfg.validate()?;
        let mut states = vec![None; grid.width() * grid.height()];
        for c in grid.free_cells() {
            states[c.y as usize * grid.width() + c.x as usize] = Some(state_elements(grid, &cfg, c)?);
        }
        Ok(Self {
            grid,
            cfg,
            anchor: grid.anchor(),
            states,
        })
    }

    /// Overrides the tether anchor (`None` = each plan's start).
    pub fn with_anchor(mut self, anchor: Option<Cell>) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn grid(&self) -> &'g OccupancyGrid {
        self.grid
    }

    pub fn config(&self) -> &RiskConfig {
        &self.cfg
    }

    pub fn anchor_for(&self, start: Cell) -> Cell {
        self.anchor.unwrap_or(start)
    }

    /// Tether configuration with the robot standing at `start`.
    pub fn initial_tether(&self, start: Cell) -> Result<TetherState, RiskError> {
        Ok(TetherState::deploy(self.grid, self.anchor_for(start), start)?)
    }

    pub fn state_category(&self, cell: Cell) -> Result<StateRisk, RiskError> {
        self.grid.check_free(cell)?;
        Ok(self.states[cell.y as usize * self.grid.width() + cell.x as usize].expect("free cells are precomputed"))
    }

    /// Action score of the step `prev -> action` (`prev` is `None` for `a_1`).
    pub fn action_risk(&self, prev: Option<Action>, action: Action) -> ActionRisk {
        action_elements(&self.cfg, prev, action)
    }

    pub fn path_risk(&self, tether: &TetherState) -> PathRisk {
        path_elements(&self.cfg, tether)
    }

    /// `w_a * action + w_s * state + w_p * path`; pass 0 as the action score of step 0.
    pub fn combine(&self, action: f64, state: f64, path: f64) -> f64 {
        let w = &self.cfg.weights;
        w.wa * action + w.ws * state + w.wp * path
    }

    /// Full per-step breakdown and risk index of a valid plan.
    pub fn evaluate(&self, plan: &PathPlan) -> Result<RiskProfile, RiskError> {
        let report = plan.validate(self.grid);
        if !report.is_valid() {
            return Err(RiskError::InvalidPlan(report));
        }
        let states = plan.states();
        let mut tether = self.initial_tether(states[0])?;
        let mut per_step = Vec::with_capacity(states.len());
        let mut cumulative = 0.0;
        let mut prev_action = None;
        for (i, &cell) in states.iter().enumerate() {
            let action = if i == 0 {
                None
            } else {
                tether = tether.advance(self.grid, cell)?;
                let a = Action::between(states[i - 1], cell);
                let risk = self.action_risk(prev_action, a);
                prev_action = Some(a);
                Some(risk)
            };
            let state = self.state_category(cell)?;
            let path = self.path_risk(&tether);
            let step_total = self.combine(action.map_or(0.0, |a| a.score), state.score, path.score);
            cumulative += step_total;
            per_step.push(StepRisk {
                index: i,
                cell,
                action,
                state,
                path,
                step_total,
                cumulative,
            });
        }
        Ok(RiskProfile {
            per_step,
            total: cumulative,
        })
    }
}

fn action_elements(cfg: &RiskConfig, prev: Option<Action>, action: Action) -> ActionRisk {
    let n = &cfg.norm;
    let w = &cfg.weights;
    let length_risk = (action.length() / n.action_max_len).min(1.0);
    let turn_risk = prev.map_or(0.0, |p| (p.turn_degrees(action) / n.turn_max_deg).min(1.0));
    ActionRisk {
        length_risk,
        turn_risk,
        score: weighted_mean([(w.wa1, length_risk), (w.wa2, turn_risk)]),
    }
}

fn state_elements(grid: &OccupancyGrid, cfg: &RiskConfig, cell: Cell) -> Result<StateRisk, RiskError> {
    let n = &cfg.norm;
    let w = &cfg.weights.state;
    let distance = grid.distance_to_closest_obstacle(cell)?;
    let distance_risk = ((n.dist_hi - distance) / (n.dist_hi - n.dist_lo)).clamp(0.0, 1.0);
    let visibility_risk = grid.visibility_risk(cell, n.vis_range, n.vis_rays)?;
    Ok(StateRisk {
        distance,
        distance_risk,
        visibility_risk,
        score: weighted_mean([(w.distance, distance_risk), (w.visibility, visibility_risk)]),
    })
}

fn path_elements(cfg: &RiskConfig, tether: &TetherState) -> PathRisk {
    let n = &cfg.norm;
    let w = &cfg.weights.path;
    let tether_length = tether.length();
    let contacts = tether.contact_count();
    let tether_risk = (tether_length / n.tether_max).min(1.0);
    let contact_risk = (contacts as f64 / n.contacts_max as f64).min(1.0);
    PathRisk {
        tether_length,
        contacts,
        tether_risk,
        contact_risk,
        score: weighted_mean([(w.tether_length, tether_risk), (w.contacts, contact_risk)]),
    }
}

/// Action category of step `i` (1-based) of an action sequence.
pub fn action_category(i: usize, actions: &[Action], cfg: &RiskConfig) -> Result<ActionRisk, RiskError> {
    if i == 0 || i > actions.len() {
        return Err(RiskError::ActionIndex {
            index: i,
            max: actions.len(),
        });
    }
    let prev = (i >= 2).then(|| actions[i - 2]);
    Ok(action_elements(cfg, prev, actions[i - 1]))
}

/// State category of a free cell.
pub fn state_category(cell: Cell, grid: &OccupancyGrid, cfg: &RiskConfig) -> Result<StateRisk, RiskError> {
    cfg.validate()?;
    state_elements(grid, cfg, cell)
}

/// Path category at the end of prefix `p`, given the tether obtained by
/// walking exactly `p`.
pub fn path_category(p: &PrefixPath<'_>, tether: &TetherState, cfg: &RiskConfig) -> Result<PathRisk, RiskError> {
    if tether.head() != p.end() {
        return Err(RiskError::TetherMismatch {
            tether: tether.head(),
            prefix: p.end(),
        });
    }
    Ok(path_elements(cfg, tether))
}

/// Risk profile of `plan` on `grid`.
pub fn evaluate(plan: &PathPlan, grid: &OccupancyGrid, cfg: &RiskConfig) -> Result<RiskProfile, RiskError> {
    RiskModel::new(grid, *cfg)?.evaluate(plan)
}
