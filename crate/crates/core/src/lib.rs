//! Risk of robot motion along paths on 2-D occupancy grids.
//!
//! A path's risk index is the sum of per-step contributions from the action
//! taken, the state reached, and the path history (here a taut tether paid
//! out from an anchor). The crate evaluates that index, checks executions
//! against plans, simulates noisy executions, and plans minimum-risk paths.
//!
//! ```
//! use motion_risk::{evaluate, OccupancyGrid, PathPlan, RiskConfig};
//!
//! let grid = OccupancyGrid::parse("S....\n.##..\n....G").unwrap();
//! let plan = PathPlan::parse_csv("0,0\n1,0\n2,0\n3,1\n4,2\n").unwrap();
//! let profile = evaluate(&plan, &grid, &RiskConfig::default()).unwrap();
//! assert_eq!(profile.per_step.len(), 5);
//! assert!(profile.total > 0.0);
//! ```

pub mod config;
pub mod execution;
pub mod geom;
pub mod grid;
pub mod oracle;
pub mod path;
pub mod planner;
pub mod risk;
pub mod tether;

pub use config::{ConfigError, Settings};
pub use execution::{
    check_reachability, check_stability, finishes, monte_carlo_failure_rate, simulate_execution, CheckResult,
    Condition, Execution, ExecutionError, FinishCriteria, FinishVerdict, FinishViolation, McReport, NoiseModel,
};
pub use geom::{HalfPoint, Point};
pub use grid::{Cell, GridError, OccupancyGrid};
pub use path::{Action, PathError, PathPlan, PrefixPath, ValidationReport, Violation};
pub use planner::{plan_min_risk, plan_with_model, PlanError, PlanLimits, PlanResult};
pub use risk::{
    action_category, evaluate, path_category, state_category, ActionRisk, CategorySubtotals, PathRisk, RiskConfig,
    RiskError, RiskModel, RiskProfile, StateRisk, StepRisk,
};
pub use tether::{Contact, TetherError, TetherState};
