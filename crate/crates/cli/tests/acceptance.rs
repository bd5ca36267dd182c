//! Acceptance suite: one PASS/FAIL line per criterion, then a single verdict.
//!
//! The report goes straight to stderr so it shows even when the harness
//! captures test output.

#[path = "../../core/tests/common/mod.rs"]
mod common;
mod support;

use std::io::Write;
use std::time::{Duration, Instant};

use common::finish::{brute_first_failure, centers, random_criteria, random_execution};
use common::tether_walks::{exhaustive, Tally, LENGTH_TOL};
use motion_risk::oracle::{enumerate_paths, straightening_oracle, OracleError, ENUMERATION_CAP};
use motion_risk::{
    check_reachability, check_stability, finishes, monte_carlo_failure_rate, plan_with_model, Cell, FinishCriteria,
    NoiseModel, OccupancyGrid, PathPlan, PlanError, PlanLimits, RiskConfig, RiskModel, TetherState,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const ADDITIVITY_TOL: f64 = 1e-9;
const STEP_RANGE: (f64, f64) = (0.0, 3.0);
const PLANNER_TOL: f64 = 1e-9;
const MIN_SPEARMAN: f64 = 0.8;
const AXIOM_INSTANCES: usize = 1000;
const FINISH_INSTANCES: usize = 500;
const RANDOM_TETHER_WALKS: usize = 200;
const MC_TRIALS: usize = 2000;
const MC_SEED: u64 = 2024;

type Outcome = Result<String, String>;

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
}

/// Random grid up to 20x20 with a random walk of at most 40 steps on it.
fn random_instance(rng: &mut ChaCha8Rng) -> (OccupancyGrid, PathPlan) {
    loop {
        let (w, h) = (rng.random_range(1..=20), rng.random_range(1..=20));
        let density = rng.random_range(0.0..0.35);
        let grid = common::random_grid(rng, w, h, density);
        let steps = rng.random_range(0..=40);
        if let Some(plan) = common::random_walk(rng, &grid, steps) {
            return (grid, plan);
        }
    }
}

fn risk_axioms() -> Outcome {
    let mut rng = common::rng(101);
    let mut steps = 0;
    for k in 0..AXIOM_INSTANCES {
        let (grid, plan) = random_instance(&mut rng);
        let cfg = common::random_config(&mut rng, false);
        let model = RiskModel::new(&grid, cfg).map_err(|e| e.to_string())?;
        let prof = model.evaluate(&plan).map_err(|e| e.to_string())?;
        let mut prev = 0.0;
        for (i, s) in prof.per_step.iter().enumerate() {
            let parts = [s.action_score(), s.state.score, s.path.score, s.step_total];
            if parts.iter().any(|&v| v < 0.0 || v.is_nan()) {
                return Err(format!("instance {k}, step {i}: negative contribution {parts:?}"));
            }
            if s.cumulative < prev {
                return Err(format!("instance {k}, step {i}: prefix total decreased"));
            }
            prev = s.cumulative;
            let prefix = PathPlan::new(plan.states()[..=i].to_vec()).unwrap();
            let again = model.evaluate(&prefix).map_err(|e| e.to_string())?;
            let summed: f64 = prof.per_step[..=i].iter().map(|s| s.step_total).sum();
            if (again.total - s.cumulative).abs() > ADDITIVITY_TOL || (summed - s.cumulative).abs() > ADDITIVITY_TOL {
                return Err(format!("instance {k}, step {i}: prefix decomposition off"));
            }
            steps += 1;
        }
    }
    Ok(format!("{AXIOM_INSTANCES} instances, {steps} steps"))
}

fn step_range() -> Outcome {
    let mut rng = common::rng(102);
    let (mut steps, mut max) = (0, 0.0f64);
    for k in 0..AXIOM_INSTANCES {
        let (grid, plan) = random_instance(&mut rng);
        let cfg = common::random_config(&mut rng, true);
        let prof = RiskModel::new(&grid, cfg).and_then(|m| m.evaluate(&plan)).map_err(|e| e.to_string())?;
        for s in &prof.per_step {
            if !(STEP_RANGE.0..=STEP_RANGE.1).contains(&s.step_total) {
                return Err(format!("instance {k}, step {}: step_total {}", s.index, s.step_total));
            }
            max = max.max(s.step_total);
            steps += 1;
        }
    }
    Ok(format!("{steps} steps, largest {max:.4}"))
}

fn tether_correctness() -> Outcome {
    let mut tally = Tally::default();
    let layouts = common::layouts(3, 3, 2);
    for g in &layouts {
        exhaustive(g, 8, &mut tally)?;
    }
    let mut rng = common::rng(103);
    let mut walks = 0;
    while walks < RANDOM_TETHER_WALKS {
        let grid = common::random_grid(&mut rng, 12, 12, 0.2);
        let Some(walk) = common::random_walk(&mut rng, &grid, 40) else { continue };
        let mut t = TetherState::new(&grid, walk.start()).map_err(|e| e.to_string())?;
        for &c in &walk.states()[1..] {
            t = t.advance(&grid, c).map_err(|e| e.to_string())?;
        }
        let o = straightening_oracle(&walk, &grid).map_err(|e| e.to_string())?;
        if o.contacts != t.contact_count() || (o.length - t.length()).abs() > LENGTH_TOL {
            return Err(format!("walk {walk:?}: {} / {} vs oracle {} / {}", t.contact_count(), t.length(), o.contacts, o.length));
        }
        walks += 1;
    }
    Ok(format!(
        "{} exhaustive walks over {} layouts (up to {} contacts), {walks} random walks",
        tally.walks,
        layouts.len(),
        tally.max_contacts
    ))
}

fn finish_fidelity() -> Outcome {
    let mut rng = common::rng(104);
    let grid = OccupancyGrid::open(10, 10).unwrap();
    let (mut unfinished, mut infinite) = (0, 0);
    for k in 0..FINISH_INSTANCES {
        let plan = common::random_walk(&mut rng, &grid, 12).unwrap();
        let exec = random_execution(&mut rng, &plan);
        let c = random_criteria(&mut rng);
        let reach = check_reachability(&plan, &exec, &c).map_err(|e| e.to_string())?;
        let stab = check_stability(&plan, &exec, &c).map_err(|e| e.to_string())?;
        let verdict = finishes(&plan, &exec, &c).map_err(|e| e.to_string())?;
        let want_reach = brute_first_failure(&centers(&plan), exec.states(), c.rp);
        let want_stab = if c.re.is_infinite() { None } else { brute_first_failure(exec.states(), &centers(&plan), c.re) };
        if reach.first_failure != want_reach
            || stab.first_failure != want_stab
            || verdict.finished != (want_reach.is_none() && want_stab.is_none())
        {
            return Err(format!("instance {k} disagrees with quantifier evaluation"));
        }
        unfinished += usize::from(!verdict.finished);
        infinite += usize::from(c.re.is_infinite());
    }
    Ok(format!("{FINISH_INSTANCES} instances, {unfinished} unfinished, {infinite} with re = inf"))
}

fn planner_optimality() -> Outcome {
    let cfg = RiskConfig::default();
    let limits = PlanLimits::default();
    let (mut compared, mut unreachable, mut beyond, mut worst) = (0, 0, 0, 0.0f64);
    for w in 1..=4 {
        for h in 1..=4 {
            for grid in common::layouts(w, h, 3) {
                let model = RiskModel::new(&grid, cfg).map_err(|e| e.to_string())?;
                let free: Vec<Cell> = grid.free_cells().collect();
                for &s in &free {
                    for &g in &free {
                        let planned = plan_with_model(&model, s, g, limits);
                        let oracle = enumerate_paths(&model, s, g, 10, ENUMERATION_CAP);
                        match (planned, oracle) {
                            (Err(PlanError::Unreachable { .. }), Err(OracleError::NoPath { .. })) => unreachable += 1,
                            (Ok(p), Ok(o)) => {
                                let gap = (p.cost - o.profile.total).abs();
                                if gap > PLANNER_TOL {
                                    if p.plan.steps() > 10 && p.cost < o.profile.total {
                                        beyond += 1;
                                        continue;
                                    }
                                    return Err(format!("{s} -> {g} on\n{grid}planner {} vs oracle {}", p.cost, o.profile.total));
                                }
                                worst = worst.max(gap);
                                compared += 1;
                            }
                            (Ok(p), Err(OracleError::NoPath { .. })) if p.plan.steps() > 10 => beyond += 1,
                            (p, o) => return Err(format!("{s} -> {g} on\n{grid}planner {p:?} vs oracle {o:?}")),
                        }
                    }
                }
            }
        }
    }
    Ok(format!(
        "{compared} pairs equal (max gap {worst:.1e}), {unreachable} unreachable, {beyond} optima longer than 10 steps"
    ))
}

fn total(map: &str, path: &str) -> Result<f64, String> {
    let grid = common::load_map(map);
    let prof = RiskModel::new(&grid, RiskConfig::default()).and_then(|m| m.evaluate(&common::load_path(path)));
    prof.map(|p| p.total).map_err(|e| e.to_string())
}

fn ordering_reproduction() -> Outcome {
    let through = total("gap_20x20.map", "gap_20x20_through.path")?;
    let detour = total("gap_20x20.map", "gap_20x20_detour.path")?;
    let straight = total("tortuous_20x20.map", "tortuous_20x20_straight.path")?;
    let tortuous = total("tortuous_20x20.map", "tortuous_20x20_tortuous.path")?;
    let report = format!(
        "gap {through:.3} vs detour {detour:.3} (margin {:.3}); straight {straight:.3} vs tortuous {tortuous:.3} (margin {:.3})",
        detour - through,
        tortuous - straight
    );
    if through < detour && straight < tortuous {
        Ok(report)
    } else {
        Err(report)
    }
}

/// Ranks with ties sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            r[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn straight(x: i32, y: i32, dx: i32, dy: i32, n: i32) -> PathPlan {
    PathPlan::new((0..=n).map(|i| Cell::new(x + dx * i, y + dy * i)).collect()).unwrap()
}

fn monte_carlo_sanity() -> Outcome {
    let grid = common::load_map("gap_20x20.map");
    let corpus = [
        straight(1, 10, 1, 0, 1),
        straight(2, 2, 1, 0, 2),
        straight(15, 16, 0, 1, 3),
        straight(1, 10, 1, 0, 4),
        straight(2, 17, 1, -1, 4),
        straight(0, 0, 1, 1, 5),
        straight(12, 3, 1, 0, 6),
        straight(1, 10, 1, 0, 10),
        straight(0, 19, 1, 0, 12),
        straight(18, 0, 0, 1, 14),
    ];
    let model = RiskModel::new(&grid, RiskConfig::default()).map_err(|e| e.to_string())?;
    let noise = NoiseModel { sigma: 0.2, kappa: 0.2 };
    let (mut totals, mut rates) = (Vec::new(), Vec::new());
    for plan in &corpus {
        totals.push(model.evaluate(plan).map_err(|e| e.to_string())?.total);
        let mc = monte_carlo_failure_rate(plan, &model, &noise, MC_TRIALS, &FinishCriteria::default(), MC_SEED)
            .map_err(|e| e.to_string())?;
        rates.push(mc.rate);
    }
    let rho = spearman(&totals, &rates);
    let pairs: Vec<String> = totals.iter().zip(&rates).map(|(t, r)| format!("{t:.2}:{r:.3}")).collect();
    let report = format!("spearman {rho:.4} over total:rate {}", pairs.join(" "));
    if rho >= MIN_SPEARMAN {
        Ok(report)
    } else {
        Err(report)
    }
}

fn degeneration() -> Outcome {
    let mut rng = common::rng(108);
    for k in 0..200 {
        let (grid, plan) = random_instance(&mut rng);
        let mut cfg = common::random_config(&mut rng, true);
        cfg.weights.wa = 0.0;
        cfg.weights.wp = 0.0;
        cfg.weights.ws = rng.random_range(0.1..2.0);
        let model = RiskModel::new(&grid, cfg).map_err(|e| e.to_string())?;
        let prof = model.evaluate(&plan).map_err(|e| e.to_string())?;
        let mut direct = 0.0;
        for &c in plan.states() {
            direct += cfg.weights.ws * motion_risk::state_category(c, &grid, &cfg).map_err(|e| e.to_string())?.score;
        }
        if prof.total != direct {
            return Err(format!("instance {k}: {} vs direct {direct}", prof.total));
        }
    }
    let runs = support::golden_runs();
    for (name, args) in &runs {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        support::run(args, a.path());
        support::run(args, b.path());
        let (sa, sb) = (support::snapshot(a.path()), support::snapshot(b.path()));
        if sa.is_empty() || sa != sb {
            return Err(format!("{name} outputs differ between runs"));
        }
        if sa != support::snapshot(&support::golden_dir().join(name)) {
            return Err(format!("{name} outputs differ from tests/golden/{name}"));
        }
    }
    Ok(format!("200 state-only instances exact, {} subcommands byte-stable", runs.len()))
}

#[test]
fn acceptance_criteria() {
    let criteria = [
        Criterion { id: 1, name: "risk axioms", budget: Some(Duration::from_secs(30)), check: risk_axioms },
        Criterion { id: 2, name: "per-step range", budget: None, check: step_range },
        Criterion { id: 3, name: "tether correctness", budget: Some(Duration::from_secs(120)), check: tether_correctness },
        Criterion { id: 4, name: "finish-checker fidelity", budget: Some(Duration::from_secs(30)), check: finish_fidelity },
        Criterion { id: 5, name: "planner optimality", budget: Some(Duration::from_secs(300)), check: planner_optimality },
        Criterion { id: 6, name: "ordering reproduction", budget: None, check: ordering_reproduction },
        Criterion { id: 7, name: "monte carlo sanity", budget: Some(Duration::from_secs(120)), check: monte_carlo_sanity },
        Criterion { id: 8, name: "degeneration", budget: None, check: degeneration },
    ];
    let mut failed = Vec::new();
    for c in criteria {
        let started = Instant::now();
        let mut outcome = (c.check)();
        let took = started.elapsed();
        if let (Ok(detail), Some(budget)) = (&outcome, c.budget) {
            if took > budget {
                outcome = Err(format!("{detail}; took {took:.1?}, budget {budget:?}"));
            }
        }
        let (tag, detail) = match outcome {
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failed.push(c.id);
                ("FAIL", detail)
            }
        };
        let line = format!("[{tag}] C{} {}: {detail} ({took:.1?})\n", c.id, c.name);
        std::io::stderr().write_all(line.as_bytes()).unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
