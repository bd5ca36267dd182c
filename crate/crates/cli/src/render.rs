//! Plain-text PPM rendering of a scored path.

use motion_risk::{OccupancyGrid, Point, RiskProfile};

/// Edge length of one grid cell, in pixels.
pub const CELL_PX: usize = 8;

pub const FREE: [u8; 3] = [255, 255, 255];
pub const OBSTACLE: [u8; 3] = [48, 48, 48];
pub const TETHER: [u8; 3] = [0, 0, 0];

/// Linear green (0) to red (3) scale; values outside are clamped.
pub fn risk_color(step_total: f64) -> [u8; 3] {
    let t = if step_total.is_nan() { 0.0 } else { step_total.clamp(0.0, 3.0) };
    let r = (255.0 * t / 3.0).round() as u8;
    [r, 255 - r, 0]
}

pub struct Canvas {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl Canvas {
    pub fn new(grid: &OccupancyGrid) -> Self {
        let (width, height) = (grid.width() * CELL_PX, grid.height() * CELL_PX);
        let mut canvas = Self {
            width,
            height,
            pixels: vec![FREE; width * height],
        };
        for c in grid.obstacles() {
            canvas.fill_cell(c.x as usize, c.y as usize, OBSTACLE);
        }
        canvas
    }

    fn fill_cell(&mut self, cx: usize, cy: usize, color: [u8; 3]) {
        for y in cy * CELL_PX..(cy + 1) * CELL_PX {
            for x in cx * CELL_PX..(cx + 1) * CELL_PX {
                self.pixels[y * self.width + x] = color;
            }
        }
    }

    /// Colors each visited cell by the step that reached it, up to `last_step`.
    pub fn draw_steps(&mut self, profile: &RiskProfile, last_step: usize) {
        for s in profile.per_step.iter().take(last_step.saturating_add(1)) {
            self.fill_cell(s.cell.x as usize, s.cell.y as usize, risk_color(s.step_total));
        }
    }

    /// Draws a polyline given in map coordinates; zero-length segments are skipped.
    pub fn draw_polyline(&mut self, pts: &[Point], color: [u8; 3]) {
        let scale = CELL_PX as f64;
        for seg in pts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let len = a.distance(b);
            if len == 0.0 {
                continue;
            }
            let samples = (len * scale * 4.0).ceil() as usize;
            for i in 0..=samples {
                let t = i as f64 / samples as f64;
                let px = ((a.x + (b.x - a.x) * t + 0.5) * scale).floor();
                let py = ((a.y + (b.y - a.y) * t + 0.5) * scale).floor();
                let x = (px.max(0.0) as usize).min(self.width - 1);
                let y = (py.max(0.0) as usize).min(self.height - 1);
                self.pixels[y * self.width + x] = color;
            }
        }
    }

    /// P3 encoding, one pixel per line.
    pub fn to_ppm(&self) -> String {
        let mut out = format!("P3\n{} {}\n255\n", self.width, self.height);
        for p in &self.pixels {
            out.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
        }
        out
    }

    #[cfg(test)]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}
