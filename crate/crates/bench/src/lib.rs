//! Benchmark scenes shared by the criterion targets.

use motion_risk::{OccupancyGrid, PathPlan};

pub struct Scene {
    pub name: &'static str,
    pub grid: OccupancyGrid,
    pub path: PathPlan,
}

fn scene(name: &'static str, map: &str, path: &str) -> Scene {
    Scene {
        name,
        grid: OccupancyGrid::parse(map).expect("bundled map parses"),
        path: PathPlan::parse_csv(path).expect("bundled path parses"),
    }
}

/// The fixture maps with one authored path each.
pub fn scenes() -> Vec<Scene> {
    vec![
        scene(
            "corridor_9x9",
            include_str!("../../core/tests/fixtures/corridor_9x9.map"),
            include_str!("../../core/tests/fixtures/corridor_9x9.path"),
        ),
        scene(
            "wrap_10x10",
            include_str!("../../core/tests/fixtures/wrap_10x10.map"),
            include_str!("../../core/tests/fixtures/wrap_10x10.path"),
        ),
        scene(
            "gap_20x20",
            include_str!("../../core/tests/fixtures/gap_20x20.map"),
            include_str!("../../core/tests/fixtures/gap_20x20_detour.path"),
        ),
        scene(
            "tortuous_20x20",
            include_str!("../../core/tests/fixtures/tortuous_20x20.map"),
            include_str!("../../core/tests/fixtures/tortuous_20x20_tortuous.path"),
        ),
    ]
}
