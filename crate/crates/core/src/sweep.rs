//! Receiver grid sweeps, RIS optimization for a target, and the CSV and
//! pixmap writers.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::par::{map_indexed, Execution};
use crate::pathfinder::{path_field, PathSource, Tracer};
use crate::propagation::{received_power, FieldPhasor, PolarizationMode};
use crate::ris::{configure_greedy, GreedyOutcome};
use crate::scene::{Scene, SolverConfig};

/// Rectangular receiver grid at constant height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: f64,
    pub step: f64,
}

/// Slack for ranges that are a whole number of steps up to rounding.
const STEP_SLACK: f64 = 1e-9;

impl GridSpec {
    pub fn new(x: [f64; 2], y: [f64; 2], z: f64, step: f64) -> Result<Self> {
        let finite = x.iter().chain(&y).chain([&z, &step]).all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("grid", "all values must be finite"));
        }
        if !(step > 0.0) {
            return Err(Error::invalid("grid", format!("step must be positive, got {step}")));
        }
        if !(x[1] > x[0] && y[1] > y[0]) {
            return Err(Error::invalid(
                "grid",
                format!("ranges must be increasing, got x {x:?}, y {y:?}"),
            ));
        }
        Ok(GridSpec { x, y, z, step })
    }

    /// Parses `x0,x1,y0,y1,z,step` in meters.
    pub fn parse(text: &str) -> Result<Self> {
        let values = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::invalid("grid", format!("'{text}': {e}")))?;
        match values[..] {
            [x0, x1, y0, y1, z, step] => GridSpec::new([x0, x1], [y0, y1], z, step),
            _ => Err(Error::invalid(
                "grid",
                format!("expected x0,x1,y0,y1,z,step, got {} values", values.len()),
            )),
        }
    }

    fn count(range: [f64; 2], step: f64) -> usize {
        ((range[1] - range[0]) / step + STEP_SLACK).floor() as usize + 1
    }

    pub fn nx(&self) -> usize {
        Self::count(self.x, self.step)
    }

    pub fn ny(&self) -> usize {
        Self::count(self.y, self.step)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx()).map(|i| self.x[0] + i as f64 * self.step).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny()).map(|j| self.y[0] + j as f64 * self.step).collect()
    }

    /// Point at row-major index `i` (rows run along y).
    pub fn point(&self, i: usize) -> Vec3 {
        let nx = self.nx();
        let (row, col) = (i / nx, i % nx);
        Vec3::new(
            self.x[0] + col as f64 * self.step,
            self.y[0] + row as f64 * self.step,
            self.z,
        )
    }
}

/// What a power grid was computed from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMeta {
    pub scene_hash: String,
    pub ris_hash: String,
    pub max_order: usize,
    pub mode: PolarizationMode,
    pub center_prune: bool,
}

/// Received power in dBm, row-major with rows along y.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub path_counts: Vec<usize>,
    pub meta: GridMeta,
}

impl PowerGrid {
    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.spec.nx() + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Configures every panel for `target` and returns the frozen scene.
///
/// Each element's contribution is its direct element-to-target field with a
/// unit reflection coefficient; reflections are ignored. Panels are
/// optimized jointly and must share one alphabet.
pub fn optimize_and_freeze(scene: &Scene, target: Vec3) -> Result<(Scene, GreedyOutcome)> {
    let alphabet = match scene.panels.first() {
        Some(p) => p.alphabet.clone(),
        None => return Err(Error::invalid("RIS", "scene has no RIS panel to configure")),
    };
    if scene.panels.iter().any(|p| p.alphabet != alphabet) {
        return Err(Error::invalid("RIS", "all panels must share one alphabet"));
    }
    let mut unit = scene.clone();
    for panel in &mut unit.panels {
        for e in &mut panel.elements {
            e.gamma = Complex64::new(1.0, 0.0);
        }
    }
    let options = SolverConfig {
        max_order: 0,
        center_prune: false,
        include_los: false,
        mode: scene.solver.mode,
    };
    let tracer = Tracer::new(&unit, options);
    let offsets: Vec<usize> = scene
        .panels
        .iter()
        .scan(0, |acc, p| {
            let start = *acc;
            *acc += p.len();
            Some(start)
        })
        .collect();
    let total: usize = scene.panels.iter().map(|p| p.len()).sum();
    let mut contributions = vec![FieldPhasor::ZERO; total];
    for path in tracer.find_paths(target) {
        if let PathSource::Element { panel, element } = path.source {
            contributions[offsets[panel] + element] = path_field(&path, &unit, &unit.rx, options.mode)?;
        }
    }
    if contributions.iter().all(FieldPhasor::is_zero) {
        return Err(Error::invalid(
            "target",
            format!("no illuminated RIS element reaches {target:?}"),
        ));
    }
    let outcome = configure_greedy(&alphabet, &contributions);
    let mut frozen = scene.clone();
    for (p, panel) in frozen.panels.iter_mut().enumerate() {
        let choice = &outcome.choice[offsets[p]..offsets[p] + panel.len()];
        *panel = panel.set_config_indices(choice)?;
    }
    Ok((frozen, outcome))
}

/// Received power at every grid point, using the scene's current RIS
/// configuration and the receiver orientation of `scene.rx`.
///
/// Points are independent and results are stored by index, so the output is
/// identical for every execution mode and thread count.
pub fn sweep_grid(
    scene: &Scene,
    grid: &GridSpec,
    options: SolverConfig,
    exec: Execution,
) -> Result<PowerGrid> {
    let tracer = Tracer::new(scene, options);
    let results = map_indexed(grid.len(), exec, |i| {
        tracer.field_at(grid.point(i)).map(|p| (received_power(&p.field).dbm, p.paths))
    })?;
    let (values, path_counts) = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(PowerGrid {
        spec: *grid,
        values,
        path_counts,
        meta: GridMeta {
            scene_hash: scene.content_hash(),
            ris_hash: scene.ris_hash(),
            max_order: options.max_order,
            mode: options.mode,
            center_prune: options.center_prune,
        },
    })
}

const CSV_HEADER: &str = "# risrt grid v1";

/// CSV text: a comment line with the metadata, a header row of x
/// coordinates, then one row per y with power in dBm.
pub fn grid_csv_string(grid: &PowerGrid) -> String {
    let m = &grid.meta;
    let mut out = format!(
        "{CSV_HEADER} scene={} ris={} max_order={} mode={:?} center_prune={} z_m={:.6}\n",
        m.scene_hash,
        m.ris_hash,
        m.max_order,
        m.mode,
        m.center_prune,
        grid.spec.z
    )
    .to_lowercase();
    out.push_str("y_m\\x_m");
    for x in grid.spec.xs() {
        let _ = write!(out, ",{x:.6}");
    }
    out.push('\n');
    let nx = grid.spec.nx();
    for (row, y) in grid.spec.ys().into_iter().enumerate() {
        let _ = write!(out, "{y:.6}");
        for v in &grid.values[row * nx..(row + 1) * nx] {
            let _ = write!(out, ",{v:.6}");
        }
        out.push('\n');
    }
    out
}

pub fn write_grid_csv(grid: &PowerGrid, destination: &Path) -> Result<()> {
    std::fs::write(destination, grid_csv_string(grid)).map_err(|e| Error::io(destination, e))
}

/// Grid read back from CSV: x coordinates, y coordinates, row-major values.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn read_grid_csv(text: &str, source: &str) -> Result<CsvGrid> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let num = |line: usize, s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| err(line, format!("'{s}': {e}")))
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing header row".into()))?;
    let xs = header
        .split(',')
        .skip(1)
        .map(|s| num(hline + 1, s))
        .collect::<Result<Vec<_>>>()?;
    let mut ys = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines {
        let mut cells = line.split(',');
        ys.push(num(i + 1, cells.next().unwrap_or(""))?);
        let row = cells.map(|s| num(i + 1, s)).collect::<Result<Vec<_>>>()?;
        if row.len() != xs.len() {
            return Err(err(i + 1, format!("expected {} values, got {}", xs.len(), row.len())));
        }
        values.extend(row);
    }
    Ok(CsvGrid { xs, ys, values })
}

/// Color stops from dark blue through cyan and yellow to dark red.
const COLORMAP: [[f64; 3]; 6] = [
    [0.0, 0.0, 0.5],
    [0.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.5, 0.0, 0.0],
];

fn colormap(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0) * (COLORMAP.len() - 1) as f64;
    let i = (t.floor() as usize).min(COLORMAP.len() - 2);
    let f = t - i as f64;
    let mut rgb = [0u8; 3];
    for (c, out) in rgb.iter_mut().enumerate() {
        let v = COLORMAP[i][c] + (COLORMAP[i + 1][c] - COLORMAP[i][c]) * f;
        *out = (v * 255.0).round() as u8;
    }
    rgb
}

/// Binary PPM with one pixel per grid point. The first image row is the
/// minimum y, columns run along increasing x; values are clamped to `range`.
pub fn heatmap_ppm(grid: &PowerGrid, range: (f64, f64)) -> Result<Vec<u8>> {
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::invalid("color range", format!("need min < max, got {lo}..{hi}")));
    }
    let mut out = format!(
        "P6\n# risrt heatmap v1 dbm={lo}..{hi} row0=min_y\n{} {}\n255\n",
        grid.spec.nx(),
        grid.spec.ny()
    )
    .into_bytes();
    out.reserve(3 * grid.values.len());
    for v in &grid.values {
        out.extend(colormap((v - lo) / (hi - lo)));
    }
    Ok(out)
}

pub fn write_heatmap(grid: &PowerGrid, range: (f64, f64), destination: &Path) -> Result<()> {
    let bytes = heatmap_ppm(grid, range)?;
    std::fs::write(destination, bytes).map_err(|e| Error::io(destination, e))
}
