//! RIS panels: hexagonal element lattice, reflection coefficients, element
//! reemission and the coordinate-ascent configuration search.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::antennas::AntennaPattern;
use crate::error::{Error, Result};
use crate::geometry::{angles_in_frame, Frame, Rect, Vec3};
use crate::propagation::{repolarize, FieldPhasor, PolarizationMode};

/// Tolerance when matching a reflection coefficient to the alphabet.
pub const ALPHABET_TOLERANCE: f64 = 1e-9;

const CONFIG_HEADER: &str = "# risrt ris-config v1: index magnitude phase_degrees";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RisElement {
    pub index: usize,
    pub center: Vec3,
    /// Element frame; z is the element normal, x its polarization axis.
    pub frame: Frame,
    pub d_y: f64,
    pub d_z: f64,
    pub gamma: Complex64,
}

impl RisElement {
    /// Effective area `d_y * d_z`.
    pub fn area(&self) -> f64 {
        self.d_y * self.d_z
    }
}

/// Geometry of a hexagonal panel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HexLayout {
    pub rings: usize,
    /// Nearest-neighbour center spacing in meters.
    pub pitch: f64,
    pub element_size: (f64, f64),
    /// Rotation of the lattice within the panel plane, radians.
    pub rotation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RisPanel {
    /// Panel frame: z along the normal, x the in-plane "up" axis.
    pub frame: Frame,
    pub elements: Vec<RisElement>,
    pub element_gain: f64,
    pub element_pattern: AntennaPattern,
    pub alphabet: Vec<Complex64>,
    /// Opaque footprint of the panel.
    pub bounds: Rect,
    pub layout: HexLayout,
}

/// Number of elements in a centered hexagonal lattice with `rings` rings.
pub fn hex_element_count(rings: usize) -> usize {
    1 + 3 * rings * (rings + 1)
}

/// In-plane lattice coordinates `(a, b)` in units of the pitch, ordered ring
/// by ring and by angle within a ring. `a` runs along the panel's y axis.
fn hex_lattice(rings: usize) -> Vec<(usize, f64, f64)> {
    let r = rings as i64;
    let mut cells = Vec::with_capacity(hex_element_count(rings));
    for q in -r..=r {
        for s in (-r).max(-q - r)..=r.min(-q + r) {
            let ring = q.abs().max(s.abs()).max((q + s).abs()) as usize;
            let a = q as f64 + 0.5 * s as f64;
            let b = s as f64 * 3f64.sqrt() / 2.0;
            cells.push((ring, a, b));
        }
    }
    let angle = |a: f64, b: f64| {
        let t = b.atan2(a);
        if t < 0.0 {
            t + 2.0 * PI
        } else {
            t
        }
    };
    cells.sort_by(|x, y| {
        x.0.cmp(&y.0)
            .then_with(|| angle(x.1, x.2).partial_cmp(&angle(y.1, y.2)).unwrap_or(Ordering::Equal))
    });
    cells
}

/// Builds a panel whose element centers form a centered hexagonal lattice in
/// the plane spanned by the frame's x and y axes.
///
/// Element 0 sits at the frame origin. All elements start at the largest
/// magnitude entry of `alphabet`.
pub fn build_hex_panel(
    frame: Frame,
    layout: HexLayout,
    element_gain: f64,
    element_pattern: AntennaPattern,
    alphabet: Vec<Complex64>,
    footprint: [f64; 2],
) -> Result<RisPanel> {
    frame.validate()?;
    if !(layout.pitch > 0.0) {
        return Err(Error::invalid("RIS panel", "pitch must be positive"));
    }
    if !(layout.element_size.0 > 0.0 && layout.element_size.1 > 0.0) {
        return Err(Error::invalid("RIS panel", "element size must be positive"));
    }
    if !(element_gain > 0.0 && element_gain.is_finite()) {
        return Err(Error::invalid("RIS panel", "element gain must be positive"));
    }
    if alphabet.is_empty() {
        return Err(Error::invalid("RIS panel", "reflection alphabet is empty"));
    }
    let initial = alphabet[max_magnitude_index(&alphabet)];
    let (sin_r, cos_r) = layout.rotation.sin_cos();
    let elements = hex_lattice(layout.rings)
        .into_iter()
        .enumerate()
        .map(|(index, (_, a, b))| {
            let (a, b) = if layout.rotation == 0.0 {
                (a, b)
            } else {
                (a * cos_r - b * sin_r, a * sin_r + b * cos_r)
            };
            let center = frame.origin + frame.y * (a * layout.pitch) + frame.x * (b * layout.pitch);
            RisElement {
                index,
                center,
                frame: frame.at(center),
                d_y: layout.element_size.0,
                d_z: layout.element_size.1,
                gamma: initial,
            }
        })
        .collect();
    // footprint is [horizontal width, vertical height]
    let bounds = Rect::new(frame, [footprint[1] / 2.0, footprint[0] / 2.0])?;
    Ok(RisPanel {
        frame,
        elements,
        element_gain,
        element_pattern,
        alphabet,
        bounds,
        layout,
    })
}

/// Element gain matching the effective area, `4 pi d_y d_z / lambda^2`.
pub fn default_element_gain(d_y: f64, d_z: f64, wavelength: f64) -> f64 {
    4.0 * PI * d_y * d_z / (wavelength * wavelength)
}

fn max_magnitude_index(alphabet: &[Complex64]) -> usize {
    let mut best = 0;
    for (i, a) in alphabet.iter().enumerate() {
        if a.norm() > alphabet[best].norm() {
            best = i;
        }
    }
    best
}

impl RisPanel {
    pub fn center(&self) -> Vec3 {
        self.frame.origin
    }

    pub fn normal(&self) -> Vec3 {
        self.frame.z
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Frame used for spherical placements around the panel: x along the
    /// normal and z along the panel's up axis.
    pub fn placement_frame(&self) -> Frame {
        Frame::from_x_and_up(self.frame.origin, self.frame.z, self.frame.x)
            .expect("panel frame axes are orthonormal")
    }

    pub fn get_config(&self) -> Vec<Complex64> {
        self.elements.iter().map(|e| e.gamma).collect()
    }

    /// Index of `gamma` in the alphabet, if it is a member.
    pub fn alphabet_index(&self, gamma: Complex64) -> Option<usize> {
        self.alphabet
            .iter()
            .position(|a| (a - gamma).norm() <= ALPHABET_TOLERANCE)
    }

    /// Returns a copy with new reflection coefficients, snapped to the
    /// alphabet entries they match.
    pub fn set_config(&self, gammas: &[Complex64]) -> Result<RisPanel> {
        if gammas.len() != self.elements.len() {
            return Err(Error::RisConfig(format!(
                "expected {} coefficients, got {}",
                self.elements.len(),
                gammas.len()
            )));
        }
        let indices = gammas
            .iter()
            .enumerate()
            .map(|(m, g)| {
                self.alphabet_index(*g).ok_or_else(|| {
                    Error::RisConfig(format!(
                        "element {m}: coefficient {g} is not in the alphabet"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.set_config_indices(&indices)
    }

    pub fn set_config_indices(&self, indices: &[usize]) -> Result<RisPanel> {
        if indices.len() != self.elements.len() {
            return Err(Error::RisConfig(format!(
                "expected {} coefficients, got {}",
                self.elements.len(),
                indices.len()
            )));
        }
        let mut panel = self.clone();
        for (e, &k) in panel.elements.iter_mut().zip(indices) {
            e.gamma = *self.alphabet.get(k).ok_or_else(|| {
                Error::RisConfig(format!("alphabet index {k} out of range"))
            })?;
        }
        Ok(panel)
    }

    /// Serializes the current configuration, one `index magnitude
    /// phase_degrees` line per element.
    pub fn config_to_string(&self) -> String {
        let mut out = String::from(CONFIG_HEADER);
        out.push('\n');
        for e in &self.elements {
            let (mag, phase) = e.gamma.to_polar();
            let _ = writeln!(out, "{} {} {}", e.index, mag, phase.to_degrees());
        }
        out
    }

    /// Parses a configuration produced by [`RisPanel::config_to_string`] and
    /// applies it. Every element must appear exactly once.
    pub fn parse_config(&self, text: &str, source: &str) -> Result<RisPanel> {
        let mut gammas: Vec<Option<Complex64>> = vec![None; self.elements.len()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: source.to_string(),
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|_| err(format!("bad element index '{}'", fields[0])))?;
            let mag: f64 = fields[1]
                .parse()
                .map_err(|_| err(format!("bad magnitude '{}'", fields[1])))?;
            let phase: f64 = fields[2]
                .parse()
                .map_err(|_| err(format!("bad phase '{}'", fields[2])))?;
            let slot = gammas
                .get_mut(index)
                .ok_or_else(|| err(format!("element index {index} out of range")))?;
            if slot.is_some() {
                return Err(err(format!("element {index} listed twice")));
            }
            *slot = Some(Complex64::from_polar(mag, phase.to_radians()));
        }
        let gammas = gammas
            .into_iter()
            .enumerate()
            .map(|(m, g)| g.ok_or_else(|| Error::RisConfig(format!("{source}: element {m} missing"))))
            .collect::<Result<Vec<_>>>()?;
        self.set_config(&gammas)
    }
}

/// Field reemitted by an element towards `out_dir` given the impinging field.
///
/// `sqrt(G F(theta_out)) * gamma * E_in`; in vector mode the field is first
/// received along the element's polarization axis and reradiated with that
/// axis made transverse to `out_dir`.
pub fn element_reemit(
    e_in: FieldPhasor,
    element: &RisElement,
    pattern: &AntennaPattern,
    gain: f64,
    in_dir: Vec3,
    out_dir: Vec3,
    mode: PolarizationMode,
) -> FieldPhasor {
    let (_, theta_out) = angles_in_frame(&element.frame, out_dir);
    let factor = element.gamma * (gain * pattern.eval(theta_out)).sqrt();
    if factor == Complex64::new(0.0, 0.0) {
        return FieldPhasor::ZERO;
    }
    let field = match mode {
        PolarizationMode::Scalar => e_in,
        PolarizationMode::Vector => repolarize(e_in, element.frame.x, in_dir, out_dir),
    };
    field * factor
}

/// Result of [`configure_greedy`].
#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    /// Chosen alphabet index per element.
    pub choice: Vec<usize>,
    /// `|sum gamma_m c_m|` at the start and after every sweep.
    pub objective_trace: Vec<f64>,
}

fn objective(alphabet: &[Complex64], contributions: &[FieldPhasor], choice: &[usize]) -> f64 {
    contributions
        .iter()
        .zip(choice)
        .fold(FieldPhasor::ZERO, |acc, (c, &k)| acc + *c * alphabet[k])
        .norm()
}

/// Coordinate ascent on `|sum_m gamma_m c_m|`.
///
/// Starts with every element at the largest-magnitude alphabet entry, then
/// sweeps the elements in index order, moving each to the entry that
/// maximizes the objective with the others held fixed. A move is only made
/// on a strict improvement (ties go to the lower alphabet index), so the
/// search terminates once a whole sweep changes nothing.
pub fn configure_greedy(alphabet: &[Complex64], contributions: &[FieldPhasor]) -> GreedyOutcome {
    assert!(!alphabet.is_empty(), "alphabet must not be empty");
    let m = contributions.len();
    let mut choice = vec![max_magnitude_index(alphabet); m];
    let mut trace = vec![objective(alphabet, contributions, &choice)];
    loop {
        let mut changed = false;
        for i in 0..m {
            let rest = contributions
                .iter()
                .zip(&choice)
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(FieldPhasor::ZERO, |acc, (_, (c, &k))| acc + *c * alphabet[k]);
            let value = |k: usize| (rest + contributions[i] * alphabet[k]).norm_squared();
            let mut best = 0;
            let mut best_value = value(0);
            for k in 1..alphabet.len() {
                let v = value(k);
                if v > best_value {
                    best = k;
                    best_value = v;
                }
            }
            if best != choice[i] && best_value > value(choice[i]) {
                choice[i] = best;
                changed = true;
            }
        }
        trace.push(objective(alphabet, contributions, &choice));
        if !changed {
            break;
        }
    }
    GreedyOutcome {
        choice,
        objective_trace: trace,
    }
}
