//! Scene model and the TOML scene format.
//!
//! A scene file is a strict-schema TOML document (unknown keys are errors).
//! Units are carried in the key names (`_m`, `_mm`, `_deg`, `_db`, `_dbm`,
//! `_ghz`); everything is converted to SI units, radians, watts and linear
//! gains on load. Positions may be given in world coordinates or as
//! spherical coordinates around the first RIS, whose placement frame has x
//! along the RIS normal and z vertical.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::antennas::{db_to_linear, dbm_to_watts, Antenna, AntennaPattern, RadioParams};
use crate::error::{Error, Result};
use crate::geometry::{spherical_to_cartesian, Frame, Rect, Vec3};
use crate::propagation::{Material, PolarizationMode};
use crate::ris::{build_hex_panel, default_element_gain, HexLayout, RisPanel};
use crate::sweep::GridSpec;

pub const ANECHOIC_TOML: &str = include_str!("../presets/anechoic.toml");
pub const TABLE1_REFLECTIVE_TOML: &str = include_str!("../presets/table1_reflective.toml");

/// Names of the built-in scenes.
pub const PRESET_NAMES: [&str; 2] = ["anechoic", "table1_reflective"];

#[derive(Clone, Debug, PartialEq)]
pub struct Surface {
    pub name: String,
    pub rect: Rect,
    pub material: Material,
    /// Takes part in specular reflection sequences.
    pub reflective: bool,
    /// Occludes rays.
    pub blocking: bool,
}

/// Path-search and field options.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Maximum number of specular bounces between the RIS and the receiver.
    #[serde(default)]
    pub max_order: usize,
    /// Validate reflection sequences from the RIS center before per-element work.
    #[serde(default = "default_true")]
    pub center_prune: bool,
    #[serde(default)]
    pub mode: PolarizationMode,
    /// Also trace the direct TX-RX path.
    #[serde(default)]
    pub include_los: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_order: 0,
            center_prune: true,
            mode: PolarizationMode::Vector,
            include_los: false,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub name: String,
    pub radio: RadioParams,
    pub surfaces: Vec<Surface>,
    pub panels: Vec<RisPanel>,
    pub tx: Antenna,
    /// Receiver antenna placed at the optimization target.
    pub rx: Antenna,
    pub grid: Option<GridSpec>,
    pub solver: SolverConfig,
}

impl Scene {
    pub fn rx_target(&self) -> Vec3 {
        self.rx.position()
    }

    /// Ids of reflective surfaces in scene order.
    pub fn reflective_ids(&self) -> Vec<usize> {
        self.surfaces
            .iter()
            .enumerate()
            .filter(|(_, s)| s.reflective)
            .map(|(i, _)| i)
            .collect()
    }

    /// Hex digest identifying the scene contents.
    pub fn content_hash(&self) -> String {
        short_hash(format!("{self:?}").as_bytes())
    }

    /// Digest of the RIS configurations only.
    pub fn ris_hash(&self) -> String {
        let text: String = self.panels.iter().map(|p| p.config_to_string()).collect();
        short_hash(text.as_bytes())
    }
}

pub(crate) fn short_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// External representation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub name: String,
    pub radio: RadioConfig,
    pub tx: TxConfig,
    pub rx: RxConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ris: Vec<RisConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub surfaces: Vec<SurfaceConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<BoxConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub frequency_ghz: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// World coordinates in meters.
    CartesianM([f64; 3]),
    /// Spherical coordinates around the first RIS.
    RisSpherical {
        r_m: f64,
        phi_deg: f64,
        theta_deg: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aim {
    RisCenter,
    PointM([f64; 3]),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternConfig {
    Isotropic,
    /// Rotationally symmetric horn using the antenna's own gain.
    Directional,
    Cosine,
    Monopole { height_over_lambda: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxConfig {
    pub position: Placement,
    pub aim: Aim,
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    pub pattern: PatternConfig,
    pub gain_db: f64,
    pub power_dbm: f64,
    /// In the antenna frame, whose x axis is `up` made transverse to the boresight.
    #[serde(default = "default_tx_polarization")]
    pub polarization: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RxConfig {
    /// Receiver position the RIS is optimized for.
    pub target: Placement,
    /// Pattern axis (the monopole rod).
    #[serde(default = "default_up")]
    pub axis: [f64; 3],
    /// Azimuth reference, made transverse to `axis`.
    #[serde(default = "default_azimuth_reference")]
    pub azimuth_reference: [f64; 3],
    pub pattern: PatternConfig,
    pub gain_db: f64,
    #[serde(default = "default_rx_polarization")]
    pub polarization: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_m: [f64; 2],
    pub y_m: [f64; 2],
    pub z_m: f64,
    pub step_m: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementGainConfig {
    /// `4 pi d_y d_z / lambda^2`.
    Aperture,
    Db(f64),
    Linear(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisConfig {
    pub center_m: [f64; 3],
    pub normal: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    pub rings: usize,
    pub pitch_mm: f64,
    pub element_size_mm: [f64; 2],
    /// Opaque footprint, [horizontal, vertical].
    pub size_m: [f64; 2],
    pub element_gain: ElementGainConfig,
    pub element_pattern: PatternConfig,
    /// Reflection coefficients as [magnitude, phase_deg].
    pub alphabet: Vec<[f64; 2]>,
    #[serde(default)]
    pub lattice_rotation_deg: f64,
    /// RIS configuration file, relative to the scene file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub name: String,
    pub center_m: [f64; 3],
    pub normal: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    /// [horizontal, vertical] extent.
    pub size_m: [f64; 2],
    pub material: Material,
    pub reflective: bool,
    #[serde(default = "default_true")]
    pub blocking: bool,
}

/// Axis-aligned box, expanded into six outward-facing rectangles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub name: String,
    pub center_m: [f64; 3],
    pub size_m: [f64; 3],
    pub material: Material,
    #[serde(default)]
    pub reflective: bool,
    #[serde(default = "default_true")]
    pub blocking: bool,
}

fn default_up() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_tx_polarization() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn default_rx_polarization() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_azimuth_reference() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

impl SceneConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                path: source.to_string(),
                line,
                message: e.message().to_string(),
            }
        })
    }

    /// Canonical TOML form.
    pub fn to_toml(&self) -> String {
        let body = toml::to_string(self).expect("scene config is always representable");
        format!("# risrt scene v1\n{body}")
    }
}

// ---------------------------------------------------------------------------
// Unit helpers shared by the loader and the programmatic presets

pub fn mm(v: f64) -> f64 {
    v / 1000.0
}

pub fn ghz(v: f64) -> f64 {
    v * 1e9
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::from_array(a)
}

fn unit(a: [f64; 3], what: &'static str) -> Result<Vec3> {
    vec3(a)
        .normalized()
        .ok_or_else(|| Error::invalid(what, "direction must be non-zero"))
}

fn pattern_from(cfg: PatternConfig, gain: f64) -> Result<AntennaPattern> {
    Ok(match cfg {
        PatternConfig::Isotropic => AntennaPattern::Isotropic,
        PatternConfig::Directional => AntennaPattern::directional(gain)?,
        PatternConfig::Cosine => AntennaPattern::Cosine,
        PatternConfig::Monopole { height_over_lambda } => {
            if !(height_over_lambda > 0.0) {
                return Err(Error::invalid("antenna pattern", "monopole height must be positive"));
            }
            AntennaPattern::monopole(height_over_lambda)
        }
    })
}

fn resolve(placement: Placement, anchor: Option<&Frame>) -> Result<Vec3> {
    match placement {
        Placement::CartesianM(p) => Ok(vec3(p)),
        Placement::RisSpherical {
            r_m,
            phi_deg,
            theta_deg,
        } => {
            let frame = anchor.ok_or_else(|| {
                Error::invalid("placement", "spherical placement needs at least one RIS")
            })?;
            if !(r_m >= 0.0) || !(0.0..=180.0).contains(&theta_deg) {
                return Err(Error::invalid(
                    "placement",
                    format!("need r >= 0 and 0 <= theta <= 180 deg, got r={r_m}, theta={theta_deg}"),
                ));
            }
            Ok(spherical_to_cartesian(
                r_m,
                phi_deg.to_radians(),
                theta_deg.to_radians(),
                frame,
            ))
        }
    }
}

/// Rectangle centered at `center`, facing `normal`, `size = [horizontal, vertical]`.
pub fn facing_rect(center: Vec3, normal: Vec3, up: Vec3, size: [f64; 2]) -> Result<Rect> {
    let frame = Frame::from_z_and_up(center, normal, up)?;
    Rect::new(frame, [size[1] / 2.0, size[0] / 2.0])
}

/// The six outward-facing faces of an axis-aligned box.
pub fn box_faces(center: Vec3, size: [f64; 3]) -> Result<Vec<(&'static str, Rect)>> {
    let h = [size[0] / 2.0, size[1] / 2.0, size[2] / 2.0];
    let faces = [
        ("+x", Vec3::X, Vec3::Z, [size[1], size[2]], h[0]),
        ("-x", -Vec3::X, Vec3::Z, [size[1], size[2]], h[0]),
        ("+y", Vec3::Y, Vec3::Z, [size[0], size[2]], h[1]),
        ("-y", -Vec3::Y, Vec3::Z, [size[0], size[2]], h[1]),
        ("+z", Vec3::Z, Vec3::X, [size[1], size[0]], h[2]),
        ("-z", -Vec3::Z, Vec3::X, [size[1], size[0]], h[2]),
    ];
    faces
        .into_iter()
        .map(|(tag, n, up, extent, offset)| {
            Ok((tag, facing_rect(center + n * offset, n, up, extent)?))
        })
        .collect()
}

fn in_context(e: Error, context: &str) -> Error {
    match e {
        Error::Invalid { what, reason } => Error::Invalid {
            what,
            reason: format!("{context}: {reason}"),
        },
        other => other,
    }
}

/// Parses and validates a scene document. `base_dir` resolves relative RIS
/// configuration files.
pub fn load_scene(text: &str, source: &str, base_dir: Option<&Path>) -> Result<Scene> {
    let cfg = SceneConfig::parse(text, source)?;
    Scene::from_config(&cfg, base_dir)
}

/// Loads a built-in preset by name, or a scene file from disk.
pub fn resolve_scene(name_or_path: &str) -> Result<Scene> {
    match name_or_path {
        "anechoic" => load_scene(ANECHOIC_TOML, "anechoic", None),
        "table1_reflective" => load_scene(TABLE1_REFLECTIVE_TOML, "table1_reflective", None),
        path => {
            let path = PathBuf::from(path);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            load_scene(&text, &path.display().to_string(), path.parent())
        }
    }
}

impl Scene {
    pub fn from_config(cfg: &SceneConfig, base_dir: Option<&Path>) -> Result<Scene> {
        let radio = RadioParams::new(ghz(cfg.radio.frequency_ghz))?;

        let panels = cfg
            .ris
            .iter()
            .enumerate()
            .map(|(i, r)| {
                build_panel(r, &radio, base_dir)
                    .map_err(|e| in_context(e, &format!("ris[{i}]")))
            })
            .collect::<Result<Vec<_>>>()?;
        let anchor = panels.first().map(|p| p.placement_frame());

        let tx_position = resolve(cfg.tx.position, anchor.as_ref())
            .map_err(|e| in_context(e, "tx.position"))?;
        let aim = match cfg.tx.aim {
            Aim::RisCenter => panels
                .first()
                .map(|p| p.center())
                .ok_or_else(|| Error::invalid("tx", "aim = \"ris_center\" needs a RIS"))?,
            Aim::PointM(p) => vec3(p),
        };
        let tx_gain = db_to_linear(cfg.tx.gain_db);
        let tx = Antenna {
            frame: Frame::from_z_and_up(tx_position, aim - tx_position, vec3(cfg.tx.up))
                .map_err(|e| in_context(e, "tx orientation"))?,
            pattern: pattern_from(cfg.tx.pattern, tx_gain).map_err(|e| in_context(e, "tx"))?,
            gain: tx_gain,
            power: dbm_to_watts(cfg.tx.power_dbm),
            polarization: unit(cfg.tx.polarization, "tx polarization")?,
        };
        tx.validate(true).map_err(|e| in_context(e, "tx"))?;

        let rx_gain = db_to_linear(cfg.rx.gain_db);
        let rx_position = resolve(cfg.rx.target, anchor.as_ref())
            .map_err(|e| in_context(e, "rx.target"))?;
        let rx = Antenna {
            frame: Frame::from_z_and_up(
                rx_position,
                vec3(cfg.rx.axis),
                vec3(cfg.rx.azimuth_reference),
            )
            .map_err(|e| in_context(e, "rx orientation"))?,
            pattern: pattern_from(cfg.rx.pattern, rx_gain).map_err(|e| in_context(e, "rx"))?,
            gain: rx_gain,
            power: 0.0,
            polarization: unit(cfg.rx.polarization, "rx polarization")?,
        };
        rx.validate(false).map_err(|e| in_context(e, "rx"))?;

        let mut surfaces = Vec::new();
        for s in &cfg.surfaces {
            let ctx = format!("surface '{}'", s.name);
            s.material.validate().map_err(|e| in_context(e, &ctx))?;
            if !s.reflective && !s.blocking {
                return Err(Error::invalid("surface", format!("{ctx}: neither reflective nor blocking")));
            }
            let rect = facing_rect(vec3(s.center_m), vec3(s.normal), vec3(s.up), s.size_m)
                .map_err(|e| in_context(e, &ctx))?;
            surfaces.push(Surface {
                name: s.name.clone(),
                rect,
                material: s.material,
                reflective: s.reflective,
                blocking: s.blocking,
            });
        }
        for b in &cfg.boxes {
            let ctx = format!("box '{}'", b.name);
            b.material.validate().map_err(|e| in_context(e, &ctx))?;
            if !s_any(b.reflective, b.blocking) {
                return Err(Error::invalid("surface", format!("{ctx}: neither reflective nor blocking")));
            }
            for (tag, rect) in box_faces(vec3(b.center_m), b.size_m).map_err(|e| in_context(e, &ctx))? {
                surfaces.push(Surface {
                    name: format!("{}{}", b.name, tag),
                    rect,
                    material: b.material,
                    reflective: b.reflective,
                    blocking: b.blocking,
                });
            }
        }

        let grid = cfg
            .grid
            .as_ref()
            .map(|g| GridSpec::new(g.x_m, g.y_m, g.z_m, g.step_m))
            .transpose()
            .map_err(|e| in_context(e, "grid"))?;

        Ok(Scene {
            name: cfg.name.clone(),
            radio,
            surfaces,
            panels,
            tx,
            rx,
            grid,
            solver: cfg.solver,
        })
    }
}

fn s_any(a: bool, b: bool) -> bool {
    a || b
}

fn build_panel(r: &RisConfig, radio: &RadioParams, base_dir: Option<&Path>) -> Result<RisPanel> {
    let frame = Frame::from_z_and_up(vec3(r.center_m), vec3(r.normal), vec3(r.up))?;
    let element_size = (mm(r.element_size_mm[0]), mm(r.element_size_mm[1]));
    let gain = match r.element_gain {
        ElementGainConfig::Aperture => {
            default_element_gain(element_size.0, element_size.1, radio.wavelength)
        }
        ElementGainConfig::Db(db) => db_to_linear(db),
        ElementGainConfig::Linear(g) => g,
    };
    let alphabet = r
        .alphabet
        .iter()
        .map(|[mag, deg]| {
            if *mag < 0.0 {
                Err(Error::invalid("RIS alphabet", format!("negative magnitude {mag}")))
            } else {
                Ok(Complex64::from_polar(*mag, deg.to_radians()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let panel = build_hex_panel(
        frame,
        HexLayout {
            rings: r.rings,
            pitch: mm(r.pitch_mm),
            element_size,
            rotation: r.lattice_rotation_deg.to_radians(),
        },
        gain,
        pattern_from(r.element_pattern, gain)?,
        alphabet,
        r.size_m,
    )?;
    match &r.config_file {
        None => Ok(panel),
        Some(file) => {
            let path = base_dir.map(|d| d.join(file)).unwrap_or_else(|| PathBuf::from(file));
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            panel.parse_config(&text, &path.display().to_string())
        }
    }
}

/// Programmatic versions of the shipped presets.
pub mod presets {
    use super::*;

    fn table_panel(radio: &RadioParams) -> RisPanel {
        let frame = Frame::from_z_and_up(Vec3::new(0.0, 0.0, 0.5), Vec3::X, Vec3::Z).unwrap();
        let size = (mm(6.6), mm(6.6));
        let gain = default_element_gain(size.0, size.1, radio.wavelength);
        build_hex_panel(
            frame,
            HexLayout {
                rings: 6,
                pitch: mm(6.6),
                element_size: size,
                rotation: 30f64.to_radians(),
            },
            gain,
            AntennaPattern::Cosine,
            vec![
                Complex64::from_polar(1.25, 0.0),
                Complex64::from_polar(0.0, 0.0),
            ],
            [0.12, 0.12],
        )
        .unwrap()
    }

    fn table_antennas(panel: &RisPanel) -> (Antenna, Antenna) {
        let anchor = panel.placement_frame();
        let deg = |d: f64| d * PI / 180.0;
        let tx_pos = spherical_to_cartesian(1.86, deg(-36.0), deg(90.0), &anchor);
        let rx_pos = spherical_to_cartesian(1.4, deg(10.0), deg(106.0), &anchor);
        let tx_gain = db_to_linear(19.0);
        let tx = Antenna {
            frame: Frame::from_z_and_up(tx_pos, panel.center() - tx_pos, Vec3::Z).unwrap(),
            pattern: AntennaPattern::directional(tx_gain).unwrap(),
            gain: tx_gain,
            power: dbm_to_watts(10.0),
            polarization: Vec3::X,
        };
        let rx = Antenna {
            frame: Frame::from_z_and_up(rx_pos, Vec3::Z, Vec3::X).unwrap(),
            pattern: AntennaPattern::monopole(0.25),
            gain: db_to_linear(0.0),
            power: 0.0,
            polarization: Vec3::Z,
        };
        (tx, rx)
    }

    /// Sweep region of the reference experiment: 0.92-1.52 m by 0.02-0.92 m
    /// at 11.4 cm height, 1 cm steps.
    pub fn table1_grid() -> GridSpec {
        GridSpec::new([0.92, 1.52], [0.02, 0.92], 0.114, 0.01).unwrap()
    }

    /// 2 mm close-up region.
    pub fn closeup_grid() -> GridSpec {
        GridSpec::new([1.1, 1.3], [0.25, 0.45], 0.114, 0.002).unwrap()
    }

    pub fn anechoic() -> Scene {
        let radio = RadioParams::new(ghz(23.8)).unwrap();
        let panel = table_panel(&radio);
        let (tx, rx) = table_antennas(&panel);
        Scene {
            name: "anechoic".into(),
            radio,
            surfaces: Vec::new(),
            panels: vec![panel],
            tx,
            rx,
            grid: Some(table1_grid()),
            solver: SolverConfig {
                max_order: 0,
                center_prune: true,
                mode: PolarizationMode::Vector,
                include_los: false,
            },
        }
    }

    /// Metallic 2 x 2.4 x 1 m room: the RIS wall at x = 0 (blocking only),
    /// reflective side walls at y = +-1.2 and the opposite wall at x = 2,
    /// plus the 0.9 x 0.05 x 1 m blocking panel.
    pub fn table1_reflective() -> Scene {
        let metal = Material::metal();
        let wall = |name: &str, center: Vec3, normal: Vec3, size: [f64; 2], reflective: bool| Surface {
            name: name.into(),
            rect: facing_rect(center, normal, Vec3::Z, size).unwrap(),
            material: metal,
            reflective,
            blocking: true,
        };
        let mut surfaces = vec![
            wall("ris_wall", Vec3::new(0.0, 0.0, 0.5), Vec3::X, [2.4, 1.0], false),
            wall("side_wall_neg_y", Vec3::new(1.0, -1.2, 0.5), Vec3::Y, [2.0, 1.0], true),
            wall("side_wall_pos_y", Vec3::new(1.0, 1.2, 0.5), -Vec3::Y, [2.0, 1.0], true),
            wall("back_wall", Vec3::new(2.0, 0.0, 0.5), -Vec3::X, [2.4, 1.0], true),
        ];
        for (tag, rect) in box_faces(Vec3::new(1.55, -0.475, 0.5), [0.9, 0.05, 1.0]).unwrap() {
            surfaces.push(Surface {
                name: format!("blocker{tag}"),
                rect,
                material: metal,
                reflective: false,
                blocking: true,
            });
        }
        Scene {
            name: "table1_reflective".into(),
            surfaces,
            solver: SolverConfig {
                max_order: 2,
                center_prune: true,
                mode: PolarizationMode::Vector,
                include_los: false,
            },
            ..anechoic()
        }
    }

    /// Both reference scenes, `(anechoic, reflective)`.
    pub fn build_table1_presets() -> (Scene, Scene) {
        (anechoic(), table1_reflective())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_programmatic_construction() {
        let parsed = resolve_scene("anechoic").unwrap();
        assert_eq!(parsed, presets::anechoic());
        let parsed = resolve_scene("table1_reflective").unwrap();
        assert_eq!(parsed, presets::table1_reflective());
    }

    #[test]
    fn reflective_preset_contents() {
        let s = presets::table1_reflective();
        assert_eq!(s.radio.frequency, 23.8e9);
        assert_eq!(s.panels.len(), 1);
        let p = &s.panels[0];
        assert_eq!(p.len(), 127);
        assert_eq!(p.elements[0].d_y, 0.0066);
        assert_eq!(p.alphabet, vec![Complex64::new(1.25, 0.0), Complex64::new(0.0, 0.0)]);
        assert_eq!(p.center(), Vec3::new(0.0, 0.0, 0.5));
        assert_eq!(p.normal(), Vec3::X);
        assert_eq!(s.reflective_ids().len(), 3);
        assert_eq!(s.surfaces.len(), 10);
        assert!(s.surfaces.iter().all(|x| x.material == Material::metal()));
        assert!((s.tx.position() - Vec3::new(1.5048, -1.0933, 0.5)).norm() < 1e-3);
        assert!((s.tx.gain - 79.433).abs() < 1e-3);
        assert!((s.tx.power - 0.01).abs() < 1e-15);
        assert!((s.rx_target() - Vec3::new(1.33, 0.23, 0.11)).norm() < 1e-2);
        // blocker spans x 1.1..2.0 at y = -0.475
        let blocker: Vec<_> = s.surfaces.iter().filter(|x| x.name.starts_with("blocker")).collect();
        assert_eq!(blocker.len(), 6);
        assert!(blocker.iter().all(|x| !x.reflective && x.blocking));
    }

    #[test]
    fn anechoic_preset_has_no_surfaces() {
        let s = presets::anechoic();
        assert!(s.surfaces.is_empty());
        assert!(!s.solver.include_los);
        assert_eq!(s.tx.position(), presets::table1_reflective().tx.position());
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        for text in [ANECHOIC_TOML, TABLE1_REFLECTIVE_TOML] {
            let cfg = SceneConfig::parse(text, "preset").unwrap();
            let once = cfg.to_toml();
            let reparsed = SceneConfig::parse(&once, "canonical").unwrap();
            assert_eq!(reparsed, cfg);
            assert_eq!(reparsed.to_toml(), once);
        }
    }

    #[test]
    fn negative_conductivity_is_rejected() {
        let text = TABLE1_REFLECTIVE_TOML.replacen("sigma_s_per_m = 10000000.0", "sigma_s_per_m = -1.0", 1);
        assert_ne!(text, TABLE1_REFLECTIVE_TOML);
        let err = load_scene(&text, "bad", None).unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("material"), "{err}");
        assert!(err.to_string().contains("conductivity"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let text = ANECHOIC_TOML.replacen("[radio]\n", "[radio]\nfrequncy = 1.0\n", 1);
        match load_scene(&text, "typo.toml", None) {
            Err(Error::Parse { line, message, .. }) => {
                assert!(line > 1);
                assert!(message.contains("frequncy"), "{message}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn ris_config_file_is_resolved_relative_to_the_scene() {
        let dir = tempfile::tempdir().unwrap();
        let base = presets::anechoic();
        let off = base.panels[0].set_config_indices(&vec![1; 127]).unwrap();
        std::fs::write(dir.path().join("off.txt"), off.config_to_string()).unwrap();
        let mut cfg = SceneConfig::parse(ANECHOIC_TOML, "a").unwrap();
        cfg.ris[0].config_file = Some("off.txt".into());
        let path = dir.path().join("scene.toml");
        std::fs::write(&path, cfg.to_toml()).unwrap();
        let scene = resolve_scene(path.to_str().unwrap()).unwrap();
        assert_eq!(scene.panels[0].get_config(), off.get_config());
    }

    #[test]
    fn missing_scene_file() {
        let err = resolve_scene("/nonexistent/scene.toml").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn box_faces_point_outwards() {
        let c = Vec3::new(1.0, 2.0, 3.0);
        for (_, r) in box_faces(c, [0.9, 0.05, 1.0]).unwrap() {
            assert!(r.signed_distance(c) < 0.0);
        }
    }
}
