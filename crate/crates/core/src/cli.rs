//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::geometry::Vec3;
use crate::oracle::validate_against_oracle;
use crate::par::Execution;
use crate::pathfinder::{format_path_dump, Tracer};
use crate::propagation::{received_power, PolarizationMode};
use crate::scene::{resolve_scene, Scene, SolverConfig};
use crate::sweep::{optimize_and_freeze, sweep_grid, write_grid_csv, write_heatmap, GridSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "risrt", version, about = "Ray tracer for RIS-assisted indoor channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Configure the RIS for a target receiver and write the configuration.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Target `x,y,z` in meters; defaults to the scene's receiver.
        #[arg(long, value_parser = parse_point)]
        target: Option<Vec3>,
    },
    /// Sweep a receiver grid and write CSV and PPM maps.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid `x0,x1,y0,y1,z,step` in meters; defaults to the scene's grid.
        #[arg(long, value_parser = parse_grid)]
        grid: Option<GridSpec>,
        /// Heatmap color range `min,max` in dBm.
        #[arg(long, default_value = "-80,-50", value_parser = parse_range)]
        range: (f64, f64),
        /// Also write the paths to the scene's receiver.
        #[arg(long)]
        dump_paths: bool,
    },
    /// List the paths to one receiver position.
    Paths {
        #[command(flatten)]
        common: Common,
        /// Receiver `x,y,z` in meters; defaults to the scene's receiver.
        #[arg(long, value_parser = parse_point)]
        rx: Option<Vec3>,
    },
    /// Compare the pipeline with the closed-form surface-free oracle.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        configs: usize,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Preset name (`anechoic`, `table1_reflective`) or scene file.
    #[arg(long, default_value = "anechoic")]
    scene: String,
    /// RIS configuration file; without it the RIS is optimized for the
    /// scene's receiver.
    #[arg(long)]
    ris_config: Option<PathBuf>,
    #[arg(long)]
    max_order: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    no_center_prune: bool,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Reserved; nothing in the simulator is random except `validate` sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Scalar,
    Vector,
}

fn parse_floats<const N: usize>(text: &str) -> Result<[f64; N], String> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("'{s}': {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

fn parse_point(text: &str) -> Result<Vec3, String> {
    parse_floats::<3>(text).map(Vec3::from_array)
}

fn parse_range(text: &str) -> Result<(f64, f64), String> {
    let [lo, hi] = parse_floats::<2>(text)?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(format!("need min < max, got {lo},{hi}"))
    }
}

fn parse_grid(text: &str) -> Result<GridSpec, String> {
    GridSpec::parse(text).map_err(|e| e.to_string())
}

/// Why a command failed, which decides the exit code.
enum Failure {
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

fn config(e: Error) -> Failure {
    Failure::Config(e)
}

impl Common {
    fn solver(&self, scene: &Scene) -> SolverConfig {
        let mut s = scene.solver;
        if let Some(k) = self.max_order {
            s.max_order = k;
        }
        if let Some(m) = self.mode {
            s.mode = match m {
                ModeArg::Scalar => PolarizationMode::Scalar,
                ModeArg::Vector => PolarizationMode::Vector,
            };
        }
        if self.no_center_prune {
            s.center_prune = false;
        }
        s
    }

    /// Loads the scene and applies the RIS configuration file, if any.
    fn load(&self) -> Result<Scene, Failure> {
        let mut scene = resolve_scene(&self.scene).map_err(config)?;
        if let Some(path) = &self.ris_config {
            let text = std::fs::read_to_string(path).map_err(|e| config(Error::io(path, e)))?;
            let panel = scene
                .panels
                .first()
                .ok_or_else(|| config(Error::invalid("RIS", "scene has no RIS panel")))?;
            scene.panels[0] = panel.parse_config(&text, &path.display().to_string()).map_err(config)?;
        }
        Ok(scene)
    }

    /// Loaded scene, optimized for its receiver unless a configuration was given.
    fn configured(&self, target: Option<Vec3>) -> Result<Scene, Failure> {
        let scene = self.load()?;
        if self.ris_config.is_some() || scene.panels.is_empty() {
            return Ok(scene);
        }
        let target = target.unwrap_or_else(|| scene.rx_target());
        Ok(optimize_and_freeze(&scene, target)?.0)
    }

    fn output(&self, name: &str) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(&self.out).map_err(|e| Failure::Runtime(Error::io(&self.out, e)))?;
        Ok(self.out.join(name))
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(Error::io(path, e)))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Optimize { common, target } => {
            let scene = common.load()?;
            let target = target.unwrap_or_else(|| scene.rx_target());
            let (frozen, outcome) = optimize_and_freeze(&scene, target)?;
            let path = common.output("ris_config.txt")?;
            write(&path, &frozen.panels[0].config_to_string())?;
            let on = outcome.choice.iter().filter(|&&k| k == 0).count();
            println!(
                "optimized {} elements for ({:.3}, {:.3}, {:.3}) m: {on} set to alphabet entry 0, {} sweeps",
                outcome.choice.len(),
                target.x,
                target.y,
                target.z,
                outcome.objective_trace.len() - 1
            );
            println!("wrote {}", path.display());
        }
        Command::Sweep {
            common,
            grid,
            range,
            dump_paths,
        } => {
            let scene = common.configured(None)?;
            let options = common.solver(&scene);
            let grid = grid.or(scene.grid).ok_or_else(|| {
                config(Error::invalid("grid", "scene has no grid; pass --grid"))
            })?;
            let started = Instant::now();
            let power = sweep_grid(&scene, &grid, options, Execution::from_threads(common.threads))?;
            let elapsed = started.elapsed();
            let csv = common.output("power.csv")?;
            let ppm = common.output("power.ppm")?;
            write_grid_csv(&power, &csv)?;
            write_heatmap(&power, range, &ppm)?;
            if let Some(panel) = scene.panels.first() {
                write(&common.output("ris_config.txt")?, &panel.config_to_string())?;
            }
            if dump_paths {
                let paths = Tracer::new(&scene, options).find_paths(scene.rx_target());
                write(&common.output("paths.txt")?, &format_path_dump(&paths, &scene, options.mode)?)?;
            }
            println!(
                "{} points ({} x {}), max {:.2} dBm, {:.2} s",
                power.values.len(),
                grid.nx(),
                grid.ny(),
                power.max(),
                elapsed.as_secs_f64()
            );
            println!("wrote {} and {}", csv.display(), ppm.display());
        }
        Command::Paths { common, rx } => {
            let scene = common.configured(None)?;
            let options = common.solver(&scene);
            let rx = rx.unwrap_or_else(|| scene.rx_target());
            let tracer = Tracer::new(&scene, options);
            let paths = tracer.find_paths(rx);
            let dump = format_path_dump(&paths, &scene, options.mode)?;
            let path = common.output("paths.txt")?;
            write(&path, &dump)?;
            let total = received_power(&tracer.field_at(rx)?.field);
            println!("{} paths, total {:.3} dBm", paths.len(), total.dbm);
            println!("wrote {}", path.display());
        }
        Command::Validate {
            common,
            configs,
            points,
        } => {
            let scene = common.load()?;
            let report = validate_against_oracle(&scene, configs, points, common.seed)?;
            let ok = report.max_relative_error <= 1e-9;
            println!(
                "{} configurations x {} points, max relative error {:.3e}: {}",
                report.configurations,
                report.points,
                report.max_relative_error,
                if ok { "ok" } else { "MISMATCH" }
            );
            if !ok {
                return Err(Failure::Runtime(Error::Degenerate(
                    "pipeline disagrees with the closed form".into(),
                )));
            }
        }
    }
    Ok(())
}

/// Runs the CLI and returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
