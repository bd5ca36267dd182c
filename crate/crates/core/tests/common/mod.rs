#![allow(dead_code)]

use std::path::PathBuf;

use motion_risk::{Action, Cell, OccupancyGrid, PathPlan, RiskConfig};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn load_map(name: &str) -> OccupancyGrid {
    OccupancyGrid::parse(&fixture_text(name)).unwrap()
}

pub fn load_path(name: &str) -> PathPlan {
    PathPlan::parse_csv(&fixture_text(name)).unwrap()
}

pub fn cells(points: &[(i32, i32)]) -> Vec<Cell> {
    points.iter().map(|&(x, y)| Cell::new(x, y)).collect()
}

pub fn plan(points: &[(i32, i32)]) -> PathPlan {
    PathPlan::new(cells(points)).unwrap()
}

/// Random grid with each cell an obstacle with probability `density`.
pub fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> OccupancyGrid {
    let cells = (0..w * h).map(|_| rng.random_bool(density)).collect();
    OccupancyGrid::new(w, h, cells).unwrap()
}

/// Random walk of up to `max_steps` 8-connected steps through free cells,
/// starting at a random free cell. Stops early when boxed in.
pub fn random_walk(rng: &mut ChaCha8Rng, grid: &OccupancyGrid, max_steps: usize) -> Option<PathPlan> {
    let free: Vec<Cell> = grid.free_cells().collect();
    let mut here = *free.choose(rng)?;
    let mut states = vec![here];
    for _ in 0..max_steps {
        let moves: Vec<Cell> = Action::MOVES
            .iter()
            .map(|a| here.offset(a.dx, a.dy))
            .filter(|&c| grid.is_free(c))
            .collect();
        let Some(&next) = moves.choose(rng) else { break };
        states.push(next);
        here = next;
    }
    Some(PathPlan::new(states).unwrap())
}

/// Random configuration: weights in `[0, 2]` with every category kept
/// non-degenerate, default normalization.
pub fn random_config(rng: &mut ChaCha8Rng, unit_top_level: bool) -> RiskConfig {
    let mut cfg = RiskConfig::default();
    let pair = |rng: &mut ChaCha8Rng| loop {
        let (a, b) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
        if a + b > 1e-3 {
            return (a, b);
        }
    };
    (cfg.weights.wa1, cfg.weights.wa2) = pair(rng);
    (cfg.weights.state.distance, cfg.weights.state.visibility) = pair(rng);
    (cfg.weights.path.tether_length, cfg.weights.path.contacts) = pair(rng);
    if !unit_top_level {
        cfg.weights.wa = rng.random_range(0.0..2.0);
        cfg.weights.ws = rng.random_range(0.0..2.0);
        cfg.weights.wp = rng.random_range(0.0..2.0);
    }
    cfg
}

/// All `w x h` grids with at most `max_obstacles` obstacle cells.
pub fn layouts(w: usize, h: usize, max_obstacles: usize) -> Vec<OccupancyGrid> {
    let n = w * h;
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize <= max_obstacles {
            let cells = (0..n).map(|i| mask >> i & 1 == 1).collect();
            out.push(OccupancyGrid::new(w, h, cells).unwrap());
        }
    }
    out
}

pub mod tether_walks {
    use motion_risk::oracle::TautOracle;
    use motion_risk::{Action, Cell, OccupancyGrid, TetherState};

    pub const LENGTH_TOL: f64 = 1e-6;

    #[derive(Debug, Default, Clone, Copy)]
    pub struct Tally {
        pub walks: u64,
        pub max_contacts: usize,
    }

    /// Compares the tether with the oracle after every step of every walk of
    /// at most `max_steps` steps starting anywhere on `grid`. The oracle runs
    /// on the raw walk vertices.
    pub fn exhaustive(grid: &OccupancyGrid, max_steps: usize, tally: &mut Tally) -> Result<(), String> {
        for start in grid.free_cells().collect::<Vec<_>>() {
            let tether = TetherState::new(grid, start).unwrap();
            let oracle = TautOracle::new(grid, start, f64::INFINITY).unwrap();
            let mut walk = vec![start];
            descend(grid, &tether, &oracle, &mut walk, max_steps, tally)?;
        }
        Ok(())
    }

    fn descend(
        grid: &OccupancyGrid,
        tether: &TetherState,
        oracle: &TautOracle<'_>,
        walk: &mut Vec<Cell>,
        left: usize,
        tally: &mut Tally,
    ) -> Result<(), String> {
        tally.walks += 1;
        let expected = oracle.result().map_err(|e| format!("oracle failed on {walk:?}: {e}"))?;
        if expected.contacts != tether.contact_count() || (expected.length - tether.length()).abs() > LENGTH_TOL {
            return Err(format!(
                "walk {walk:?} on\n{grid}: tether ({} contacts, length {}) vs oracle ({} contacts, length {})",
                tether.contact_count(),
                tether.length(),
                expected.contacts,
                expected.length
            ));
        }
        tally.max_contacts = tally.max_contacts.max(expected.contacts);
        if left == 0 {
            return Ok(());
        }
        let here = *walk.last().unwrap();
        for a in Action::MOVES {
            let next = here.offset(a.dx, a.dy);
            if !grid.is_free(next) {
                continue;
            }
            let t = tether
                .advance(grid, next)
                .map_err(|e| format!("advance failed on {walk:?} -> {next}: {e}"))?;
            let mut o = oracle.clone();
            o.step(next).map_err(|e| format!("oracle step failed: {e}"))?;
            walk.push(next);
            descend(grid, &t, &o, walk, left - 1, tally)?;
            walk.pop();
        }
        Ok(())
    }
}

pub mod finish {
    use motion_risk::{Execution, FinishCriteria, PathPlan, Point};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    /// Literal quantifier evaluation: for every consecutive target pair there are
    /// probe indices `j1 <= j2` within `r` of the pair's first and second element.
    pub fn brute_first_failure(targets: &[Point], probes: &[Point], r: f64) -> Option<usize> {
        (0..targets.len().saturating_sub(1)).find(|&i| {
            let mut found = false;
            for j1 in 0..probes.len() {
                for j2 in j1..probes.len() {
                    if targets[i].distance(probes[j1]) <= r && targets[i + 1].distance(probes[j2]) <= r {
                        found = true;
                    }
                }
            }
            !found
        })
    }

    pub fn centers(plan: &PathPlan) -> Vec<Point> {
        plan.states().iter().map(|c| c.center()).collect()
    }

    /// Perturbed, truncated, detoured or shuffled replays of `plan`.
    pub fn random_execution(rng: &mut ChaCha8Rng, plan: &PathPlan) -> Execution {
        let s = centers(plan);
        let mut e: Vec<Point> = Vec::new();
        let jitter = rng.random_range(0.0..1.2);
        for p in &s {
            let n = rng.random_range(0..3);
            for _ in 0..n.max(1) {
                e.push(Point::new(p.x + rng.random_range(-jitter..=jitter), p.y + rng.random_range(-jitter..=jitter)));
            }
        }
        match rng.random_range(0..5) {
            0 => {
                let cut = rng.random_range(1..=e.len());
                e.truncate(cut);
            }
            1 => {
                let at = rng.random_range(0..=e.len());
                let far = Point::new(rng.random_range(-5.0..15.0), rng.random_range(-5.0..15.0));
                e.insert(at, far);
            }
            2 if e.len() > 2 => {
                let (a, b) = (rng.random_range(1..e.len()), rng.random_range(1..e.len()));
                e.swap(a, b);
            }
            _ => {}
        }
        e[0] = s[0];
        Execution::new(e).unwrap()
    }

    pub fn random_criteria(rng: &mut ChaCha8Rng) -> FinishCriteria {
        let rp = rng.random_range(0.05..1.5);
        let re = if rng.random_bool(0.2) { f64::INFINITY } else { rng.random_range(rp..3.0) };
        FinishCriteria::new(rp, re).unwrap()
    }
}
