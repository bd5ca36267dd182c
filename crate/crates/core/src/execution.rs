//! Whether an executed trajectory finishes a plan, plus a seeded noise model
//! and Monte Carlo failure estimates.
//!
//! Finishing needs both conditions:
//!
//! * reachability: for each consecutive plan pair `(s_i, s_{i+1})` there are
//!   execution indices `j1 <= j2` with `e_j1` within `rp` of `s_i` and `e_j2`
//!   within `rp` of `s_{i+1}`;
//! * stability: the same with the roles of plan and execution swapped and
//!   radius `re`.
//!
//! The pair indices are chosen independently for every `i`, so no single
//! monotone matching of the whole sequences is required.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geom::Point;
use crate::grid::OccupancyGrid;
use crate::path::{PathPlan, ValidationReport};
use crate::risk::{RiskError, RiskModel, RiskProfile};

/// Tolerance for `e_0 == s_0`.
pub const START_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecutionError {
    #[error("execution is empty")]
    Empty,
    #[error("execution starts at {exec} but the plan starts at {plan}")]
    StartMismatch { plan: Point, exec: Point },
    #[error("execution line {line}: expected `x,y` with real coordinates, got {text:?}")]
    Parse { line: usize, text: String },
    #[error("non-finite coordinate at execution index {0}")]
    NonFinite(usize),
    #[error("invalid finish criteria: {0}")]
    Criteria(String),
    #[error("invalid noise model: {0}")]
    Noise(String),
    #[error("Monte Carlo needs at least one trial")]
    NoTrials,
    #[error("risk profile has {profile} steps but the plan has {plan}")]
    ProfileMismatch { plan: usize, profile: usize },
    #[error("invalid path:\n{0}")]
    InvalidPlan(ValidationReport),
    #[error(transparent)]
    Risk(#[from] RiskError),
}

/// Executed positions `e_0 .. e_m` in continuous map coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Execution {
    states: Vec<Point>,
}

impl Execution {
    pub fn new(states: Vec<Point>) -> Result<Self, ExecutionError> {
        if states.is_empty() {
            return Err(ExecutionError::Empty);
        }
        if let Some(i) = states.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(ExecutionError::NonFinite(i));
        }
        Ok(Self { states })
    }

    /// The execution that visits every plan state exactly.
    pub fn from_plan(plan: &PathPlan) -> Self {
        Self {
            states: plan.states().iter().map(|c| c.center()).collect(),
        }
    }

    pub fn states(&self) -> &[Point] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn parse_csv(text: &str) -> Result<Self, ExecutionError> {
        let mut states = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            let bad = || ExecutionError::Parse {
                line: i + 1,
                text: line.to_string(),
            };
            let (x, y) = line.split_once(',').ok_or_else(bad)?;
            let x: f64 = x.trim().parse().map_err(|_| bad())?;
            let y: f64 = y.trim().parse().map_err(|_| bad())?;
            states.push(Point::new(x, y));
        }
        Self::new(states)
    }

    pub fn to_csv(&self) -> String {
        self.states.iter().map(|p| format!("{},{}\n", p.x, p.y)).collect()
    }
}

/// Plan-side radius `rp` and execution-side radius `re` (may be infinite).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinishCriteria {
    pub rp: f64,
    #[serde(serialize_with = "ser_radius", deserialize_with = "de_radius")]
    pub re: f64,
}

impl Default for FinishCriteria {
    fn default() -> Self {
        Self { rp: 0.5, re: 1.5 }
    }
}

impl FinishCriteria {
    pub fn new(rp: f64, re: f64) -> Result<Self, ExecutionError> {
        let c = Self { rp, re };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ExecutionError> {
        if !(self.rp.is_finite() && self.rp > 0.0) {
            return Err(ExecutionError::Criteria(format!("rp must be finite and > 0, got {}", self.rp)));
        }
        if self.re.is_nan() || self.re <= 0.0 {
            return Err(ExecutionError::Criteria(format!("re must be > 0 or infinite, got {}", self.re)));
        }
        Ok(())
    }
}

fn ser_radius<S: Serializer>(r: &f64, s: S) -> Result<S::Ok, S::Error> {
    if r.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*r)
    }
}

fn de_radius<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Radius {
        Number(f64),
        Text(String),
        Null(()),
    }
    match Radius::deserialize(d)? {
        Radius::Number(v) => Ok(v),
        Radius::Null(()) => Ok(f64::INFINITY),
        Radius::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
        Radius::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Reachability,
    Stability,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Reachability => "reachability",
            Condition::Stability => "stability",
        })
    }
}

/// Outcome of one condition; `first_failure` is the failing pair index
/// (`i` for reachability, `j` for stability).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub ok: bool,
    pub first_failure: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinishViolation {
    pub condition: Condition,
    pub index: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinishVerdict {
    pub finished: bool,
    pub reachability_ok: bool,
    pub stability_ok: bool,
    pub first_violation: Option<FinishViolation>,
}

fn plan_points(plan: &PathPlan) -> Vec<Point> {
    plan.states().iter().map(|c| c.center()).collect()
}

fn check_start(plan: &[Point], exec: &[Point]) -> Result<(), ExecutionError> {
    if plan[0].distance(exec[0]) > START_TOLERANCE {
        return Err(ExecutionError::StartMismatch {
            plan: plan[0],
            exec: exec[0],
        });
    }
    Ok(())
}

/// First consecutive pair `(a_i, a_{i+1})` of `targets` that `probes` fails
/// to visit in order within `r`.
///
/// Pair `i` is satisfiable iff the earliest probe near `a_i` comes no later
/// than the latest probe near `a_{i+1}`.
fn first_unvisited_pair(targets: &[Point], probes: &[Point], r: f64) -> Option<usize> {
    if r.is_infinite() {
        return None;
    }
    let near = |a: Point| probes.iter().map(move |&p| a.distance(p) <= r);
    let first: Vec<Option<usize>> = targets.iter().map(|&a| near(a).position(|b| b)).collect();
    let last: Vec<Option<usize>> = targets.iter().map(|&a| near(a).rposition(|b| b)).collect();
    (0..targets.len().saturating_sub(1)).find(|&i| match (first[i], last[i + 1]) {
        (Some(j1), Some(j2)) => j1 > j2,
        _ => true,
    })
}

pub fn check_reachability(plan: &PathPlan, exec: &Execution, c: &FinishCriteria) -> Result<CheckResult, ExecutionError> {
    c.validate()?;
    let s = plan_points(plan);
    check_start(&s, exec.states())?;
    let fail = first_unvisited_pair(&s, exec.states(), c.rp);
    Ok(CheckResult {
        ok: fail.is_none(),
        first_failure: fail,
    })
}

/// `re = inf` is vacuously satisfied.
pub fn check_stability(plan: &PathPlan, exec: &Execution, c: &FinishCriteria) -> Result<CheckResult, ExecutionError> {
    c.validate()?;
    let s = plan_points(plan);
    check_start(&s, exec.states())?;
    let fail = first_unvisited_pair(exec.states(), &s, c.re);
    Ok(CheckResult {
        ok: fail.is_none(),
        first_failure: fail,
    })
}

pub fn finishes(plan: &PathPlan, exec: &Execution, c: &FinishCriteria) -> Result<FinishVerdict, ExecutionError> {
    let reach = check_reachability(plan, exec, c)?;
    let stab = check_stability(plan, exec, c)?;
    let first_violation = if let Some(i) = reach.first_failure {
        Some(FinishViolation {
            condition: Condition::Reachability,
            index: i,
            detail: format!(
                "plan states {} -> {} are not reached in order within rp = {}",
                plan.states()[i],
                plan.states()[i + 1],
                c.rp
            ),
        })
    } else {
        stab.first_failure.map(|j| FinishViolation {
            condition: Condition::Stability,
            index: j,
            detail: format!(
                "executed states {} -> {} do not stay near the plan in order within re = {}",
                exec.states()[j],
                exec.states()[j + 1],
                c.re
            ),
        })
    };
    Ok(FinishVerdict {
        finished: reach.ok && stab.ok,
        reachability_ok: reach.ok,
        stability_ok: stab.ok,
        first_violation,
    })
}

/// Risk-coupled execution noise.
///
/// Step `j` fails outright with probability `kappa * t_j / 3`, otherwise the
/// robot lands uniformly inside a disk of radius `sigma * (1 + t_j)` around
/// `s_j`, where `t_j` is the step's risk contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub kappa: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { sigma: 0.2, kappa: 0.2 }
    }
}

impl NoiseModel {
    pub const NOISELESS: NoiseModel = NoiseModel { sigma: 0.0, kappa: 0.0 };

    pub fn validate(&self) -> Result<(), ExecutionError> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(ExecutionError::Noise(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(ExecutionError::Noise(format!("kappa must be in [0, 1], got {}", self.kappa)));
        }
        Ok(())
    }
}

/// Noisy replay of `plan`; identical inputs give bit-identical output.
///
/// `e_0 = s_0` always. The execution is cut before any step that fails or
/// whose perturbed position falls inside an obstacle or off the map.
pub fn simulate_execution(
    plan: &PathPlan,
    grid: &OccupancyGrid,
    profile: &RiskProfile,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Execution, ExecutionError> {
    noise.validate()?;
    let report = plan.validate(grid);
    if !report.is_valid() {
        return Err(ExecutionError::InvalidPlan(report));
    }
    if profile.per_step.len() != plan.states().len() {
        return Err(ExecutionError::ProfileMismatch {
            plan: plan.states().len(),
            profile: profile.per_step.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![plan.start().center()];
    for (cell, step) in plan.states().iter().zip(&profile.per_step).skip(1) {
        let t = step.step_total;
        let p_fail = (noise.kappa * t / 3.0).clamp(0.0, 1.0);
        if rng.random::<f64>() < p_fail {
            break;
        }
        let radius = noise.sigma * (1.0 + t);
        let r = radius * rng.random::<f64>().sqrt();
        let theta = 2.0 * PI * rng.random::<f64>();
        let c = cell.center();
        let e = Point::new(c.x + r * theta.cos(), c.y + r * theta.sin());
        if grid.point_blocked(e) {
            break;
        }
        out.push(e);
    }
    Ok(Execution { states: out })
}

/// Seed of trial `index`, derived only from the base seed and the index.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Empirical failure rate with a normal-approximation 95% half-width.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub trials: usize,
    pub failures: usize,
    pub rate: f64,
    pub ci_halfwidth: f64,
    pub seed: u64,
}

pub fn monte_carlo_failure_rate(
    plan: &PathPlan,
    model: &RiskModel<'_>,
    noise: &NoiseModel,
    trials: usize,
    criteria: &FinishCriteria,
    seed: u64,
) -> Result<McReport, ExecutionError> {
    if trials == 0 {
        return Err(ExecutionError::NoTrials);
    }
    criteria.validate()?;
    let profile = model.evaluate(plan)?;
    let mut failures = 0;
    for k in 0..trials {
        let exec = simulate_execution(plan, model.grid(), &profile, noise, trial_seed(seed, k as u64))?;
        if !finishes(plan, &exec, criteria)?.finished {
            failures += 1;
        }
    }
    let rate = failures as f64 / trials as f64;
    Ok(McReport {
        trials,
        failures,
        rate,
        ci_halfwidth: 1.96 * (rate * (1.0 - rate) / trials as f64).sqrt(),
        seed,
    })
}
