//! `motion-risk`: evaluate, plan, check, simulate and render path risk on
//! occupancy-grid maps.
//!
//! Exit codes: 0 success, 1 domain failure (invalid path, execution does not
//! finish, goal unreachable), 2 usage or input error, 3 planner expansion
//! budget exhausted.

mod render;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use motion_risk::{
    finishes, monte_carlo_failure_rate, plan_with_model, Execution, ExecutionError, NoiseModel, OccupancyGrid,
    PathPlan, PlanError, PlanLimits, RiskError, RiskModel, RiskProfile, Settings, TetherState,
};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use render::{risk_color, Canvas, CELL_PX, TETHER};

#[derive(Parser)]
#[command(name = "motion-risk", version, about = "Motion risk of paths on occupancy grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Map file ('.', '#', 'S', 'G', 'A').
    #[arg(long)]
    map: PathBuf,
    /// JSON configuration (weights, norm, criteria); defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Per-step risk breakdown of a path.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        path: PathBuf,
    },
    /// Minimum-risk path from the map's S to its G.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = PlanLimits::default().max_contacts)]
        max_contacts: usize,
        #[arg(long, default_value_t = PlanLimits::default().max_expansions)]
        max_expansions: usize,
    },
    /// Whether an execution finishes a path.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        path: PathBuf,
        /// Executed positions, `x,y` per line.
        #[arg(long)]
        exec: PathBuf,
    },
    /// Monte Carlo failure rate of a path under the risk-coupled noise model.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        path: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = NoiseModel::default().sigma)]
        sigma: f64,
        #[arg(long, default_value_t = NoiseModel::default().kappa)]
        kappa: f64,
    },
    /// PPM risk map of one or more paths, with the final tether.
    Riskmap {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true, num_args = 1..)]
        path: Vec<PathBuf>,
        /// Also write one image per step.
        #[arg(long)]
        frames: bool,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<RiskError> for CliError {
    fn from(e: RiskError) -> Self {
        match e {
            RiskError::Config(_) => CliError::Input(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<ExecutionError> for CliError {
    fn from(e: ExecutionError) -> Self {
        match e {
            ExecutionError::Criteria(_) | ExecutionError::Noise(_) | ExecutionError::NoTrials => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Domain(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    inputs: Inputs,
    seed: u64,
    parameters: serde_json::Value,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Inputs {
    map: String,
    config: Option<String>,
    paths: Vec<String>,
    exec: Option<String>,
}

struct Run {
    out: PathBuf,
    written: Vec<String>,
}

impl Run {
    fn new(out: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(|e| CliError::Input(format!("cannot create {}: {e}", out.display())))?;
        Ok(Self {
            out: out.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(mut self, subcommand: &'static str, inputs: Inputs, seed: u64, parameters: serde_json::Value) -> Result<(), CliError> {
        let mut outputs = self.written.clone();
        outputs.push("manifest.json".into());
        let manifest = Manifest {
            tool: "motion-risk",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            inputs,
            seed,
            parameters,
            outputs,
        };
        self.write_json("manifest.json", &manifest)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_map(path: &Path) -> Result<OccupancyGrid, CliError> {
    OccupancyGrid::parse(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_path(path: &Path) -> Result<PathPlan, CliError> {
    PathPlan::parse_csv(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_settings(path: Option<&Path>) -> Result<Settings, CliError> {
    match path {
        None => Ok(Settings::default()),
        Some(p) => Settings::from_json(&read(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn inputs(common: &Common, paths: &[PathBuf], exec: Option<&Path>) -> Inputs {
    Inputs {
        map: display(&common.map),
        config: common.config.as_deref().map(display),
        paths: paths.iter().map(|p| display(p)).collect(),
        exec: exec.map(display),
    }
}

fn evaluated(model: &RiskModel<'_>, plan: &PathPlan, source: &Path) -> Result<RiskProfile, CliError> {
    model.evaluate(plan).map_err(|e| match e {
        RiskError::InvalidPlan(report) => CliError::Domain(format!("{} is not a valid path:\n{report}", source.display())),
        other => other.into(),
    })
}

fn profile_csv(profile: &RiskProfile) -> String {
    let mut out = String::from(
        "step,x,y,action_score,state_score,path_score,step_total,cumulative,\
         length_risk,turn_risk,distance,distance_risk,visibility_risk,\
         tether_length,contacts,tether_risk,contact_risk\n",
    );
    for s in &profile.per_step {
        let (lr, tr) = s.action.map_or((0.0, 0.0), |a| (a.length_risk, a.turn_risk));
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.index,
            s.cell.x,
            s.cell.y,
            s.action_score(),
            s.state.score,
            s.path.score,
            s.step_total,
            s.cumulative,
            lr,
            tr,
            s.state.distance,
            s.state.distance_risk,
            s.state.visibility_risk,
            s.path.tether_length,
            s.path.contacts,
            s.path.tether_risk,
            s.path.contact_risk
        )
        .unwrap();
    }
    out
}

fn summary(profile: &RiskProfile, settings: &Settings) -> serde_json::Value {
    json!({
        "total": profile.total,
        "n_steps": profile.per_step.len() - 1,
        "category_subtotals": profile.subtotals(&settings.risk()),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Evaluate { common, path } => {
            let grid = load_map(&common.map)?;
            let settings = load_settings(common.config.as_deref())?;
            let plan = load_path(&path)?;
            let model = RiskModel::new(&grid, settings.risk())?;
            let profile = evaluated(&model, &plan, &path)?;
            let mut run = Run::new(&common.out)?;
            run.write("profile.csv", &profile_csv(&profile))?;
            run.write_json("summary.json", &summary(&profile, &settings))?;
            let ins = inputs(&common, &[path], None);
            run.finish("evaluate", ins, 0, json!({}))
        }
        Command::Plan {
            common,
            max_contacts,
            max_expansions,
        } => {
            let grid = load_map(&common.map)?;
            let settings = load_settings(common.config.as_deref())?;
            let (start, goal) = match (grid.start(), grid.goal()) {
                (Some(s), Some(g)) => (s, g),
                _ => return Err(CliError::Input(format!("{} needs both S and G", common.map.display()))),
            };
            let limits = PlanLimits {
                max_contacts,
                max_expansions,
            };
            let model = RiskModel::new(&grid, settings.risk())?;
            let result = plan_with_model(&model, start, goal, limits).map_err(|e| match e {
                PlanError::BudgetExhausted(_) => CliError::Budget(e.to_string()),
                PlanError::Risk(r) => r.into(),
                other => CliError::Domain(other.to_string()),
            })?;
            let mut run = Run::new(&common.out)?;
            run.write("plan.csv", &result.plan.to_csv())?;
            run.write("profile.csv", &profile_csv(&result.profile))?;
            run.write_json(
                "plan.json",
                &json!({
                    "cost": result.cost,
                    "expansions": result.expansions,
                    "limits": result.limits,
                    "summary": summary(&result.profile, &settings),
                    "profile": result.profile,
                }),
            )?;
            let ins = inputs(&common, &[], None);
            run.finish("plan", ins, 0, json!({ "limits": limits }))
        }
        Command::Check { common, path, exec } => {
            let grid = load_map(&common.map)?;
            let settings = load_settings(common.config.as_deref())?;
            let plan = load_path(&path)?;
            let report = plan.validate(&grid);
            if !report.is_valid() {
                return Err(CliError::Domain(format!("{} is not a valid path:\n{report}", path.display())));
            }
            let execution = Execution::parse_csv(&read(&exec)?).map_err(|e| CliError::Input(format!("{}: {e}", exec.display())))?;
            let verdict = finishes(&plan, &execution, &settings.criteria).map_err(|e| match e {
                ExecutionError::StartMismatch { .. } => CliError::Domain(format!("start mismatch: {e}")),
                other => other.into(),
            })?;
            let mut run = Run::new(&common.out)?;
            run.write_json("verdict.json", &verdict)?;
            let ins = inputs(&common, &[path], Some(&exec));
            run.finish("check", ins, 0, json!({ "criteria": settings.criteria }))?;
            if verdict.finished {
                Ok(())
            } else {
                let v = verdict.first_violation.expect("unfinished verdicts carry a violation");
                Err(CliError::Domain(format!("execution does not finish the path: {} fails at {}: {}", v.condition, v.index, v.detail)))
            }
        }
        Command::Simulate {
            common,
            path,
            trials,
            seed,
            sigma,
            kappa,
        } => {
            let grid = load_map(&common.map)?;
            let settings = load_settings(common.config.as_deref())?;
            let plan = load_path(&path)?;
            let model = RiskModel::new(&grid, settings.risk())?;
            evaluated(&model, &plan, &path)?;
            let noise = NoiseModel { sigma, kappa };
            let report = monte_carlo_failure_rate(&plan, &model, &noise, trials, &settings.criteria, seed)?;
            let mut run = Run::new(&common.out)?;
            run.write_json("montecarlo.json", &report)?;
            let ins = inputs(&common, &[path], None);
            run.finish("simulate", ins, seed, json!({ "noise": noise, "criteria": settings.criteria, "trials": trials }))
        }
        Command::Riskmap { common, path, frames } => {
            let grid = load_map(&common.map)?;
            let settings = load_settings(common.config.as_deref())?;
            let model = RiskModel::new(&grid, settings.risk())?;
            let mut run = Run::new(&common.out)?;
            let mut legend_paths = Vec::new();
            for (k, source) in path.iter().enumerate() {
                let plan = load_path(source)?;
                let profile = evaluated(&model, &plan, source)?;
                let tethers = tethers(&model, &plan)?;
                let image = format!("riskmap_{k}.ppm");
                run.write(&image, &render_step(&grid, &profile, &tethers, plan.steps()))?;
                let mut frame_files = Vec::new();
                if frames {
                    for i in 0..=plan.steps() {
                        let name = format!("riskmap_{k}_step_{i:03}.ppm");
                        run.write(&name, &render_step(&grid, &profile, &tethers, i))?;
                        frame_files.push(name);
                    }
                }
                legend_paths.push(json!({
                    "path": display(source),
                    "image": image,
                    "frames": frame_files,
                    "total": profile.total,
                    "steps": profile.per_step.iter().map(|s| json!({
                        "step": s.index,
                        "x": s.cell.x,
                        "y": s.cell.y,
                        "step_total": s.step_total,
                        "rgb": risk_color(s.step_total),
                    })).collect::<Vec<_>>(),
                }));
            }
            run.write_json(
                "legend.json",
                &json!({
                    "cell_px": CELL_PX,
                    "scale": {"min": 0.0, "max": 3.0, "low_rgb": risk_color(0.0), "high_rgb": risk_color(3.0)},
                    "obstacle_rgb": render::OBSTACLE,
                    "free_rgb": render::FREE,
                    "tether_rgb": TETHER,
                    "paths": legend_paths,
                }),
            )?;
            let ins = inputs(&common, &path, None);
            run.finish("riskmap", ins, 0, json!({ "frames": frames }))
        }
    }
}

/// Tether after every step of `plan`.
fn tethers(model: &RiskModel<'_>, plan: &PathPlan) -> Result<Vec<TetherState>, CliError> {
    let mut t = model.initial_tether(plan.start())?;
    let mut out = vec![t.clone()];
    for &c in &plan.states()[1..] {
        t = t.advance(model.grid(), c).map_err(RiskError::from)?;
        out.push(t.clone());
    }
    Ok(out)
}

fn render_step(grid: &OccupancyGrid, profile: &RiskProfile, tethers: &[TetherState], step: usize) -> String {
    let mut canvas = Canvas::new(grid);
    canvas.draw_steps(profile, step);
    canvas.draw_polyline(&tethers[step].polyline(), TETHER);
    canvas.to_ppm()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
