//! Antenna radiation patterns, gains and the launch field of a transmitter.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{angles_in_frame, Frame, Vec3};
use crate::propagation::{FieldPhasor, PolarizationMode};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space wave impedance, 120 pi ohm.
pub const ETA0: f64 = 120.0 * PI;

/// Carrier frequency and the derived wavelength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadioParams {
    pub frequency: f64,
    pub wavelength: f64,
}

impl RadioParams {
    pub fn new(frequency: f64) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::invalid(
                "radio",
                format!("frequency must be positive, got {frequency}"),
            ));
        }
        Ok(RadioParams {
            frequency,
            wavelength: SPEED_OF_LIGHT / frequency,
        })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

/// Normalized, rotationally symmetric radiation pattern `F(theta)`, with
/// `theta` measured from the antenna's z axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AntennaPattern {
    Isotropic,
    /// `cos(theta)^(G/2 - 1)` in the front hemisphere, zero behind. `gain` is
    /// linear and must be at least 2 for the pattern to stay normalized.
    Directional { gain: f64 },
    /// Vertical monopole of height `h`, normalized to its peak.
    Monopole { height_over_lambda: f64, peak: f64 },
    /// `max(cos(theta), 0)`.
    Cosine,
}

impl AntennaPattern {
    pub fn directional(gain: f64) -> Result<Self> {
        if !(gain >= 2.0 && gain.is_finite()) {
            return Err(Error::invalid(
                "antenna pattern",
                format!("directional pattern needs a linear gain >= 2, got {gain}"),
            ));
        }
        Ok(AntennaPattern::Directional { gain })
    }

    /// Monopole pattern. The normalization peak is found by a dense scan; for
    /// a quarter-wave monopole it is 1 at the horizon.
    pub fn monopole(height_over_lambda: f64) -> Self {
        let raw = |theta: f64| monopole_raw(height_over_lambda, theta);
        let steps = 4096;
        let scanned = (0..=steps)
            .map(|i| raw(PI * i as f64 / steps as f64))
            .fold(0.0f64, f64::max);
        let peak = scanned.max(raw(PI / 2.0));
        AntennaPattern::Monopole {
            height_over_lambda,
            peak,
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            AntennaPattern::Isotropic => 1.0,
            AntennaPattern::Directional { gain } => {
                let c = theta.cos();
                if c <= 0.0 {
                    0.0
                } else {
                    c.powf(gain / 2.0 - 1.0)
                }
            }
            AntennaPattern::Monopole {
                height_over_lambda,
                peak,
            } => {
                if peak > 0.0 {
                    (monopole_raw(height_over_lambda, theta) / peak).min(1.0)
                } else {
                    0.0
                }
            }
            AntennaPattern::Cosine => theta.cos().max(0.0),
        }
    }
}

/// Evaluates `pattern` at elevation `theta`.
pub fn eval_pattern(pattern: &AntennaPattern, theta: f64) -> f64 {
    pattern.eval(theta)
}

fn monopole_raw(height_over_lambda: f64, theta: f64) -> f64 {
    let s = theta.sin();
    // removable singularity on the axis: the numerator vanishes quadratically
    if s.abs() < 1e-12 {
        return 0.0;
    }
    let kh = 2.0 * PI * height_over_lambda;
    let v = ((kh * theta.cos()).cos() - kh.cos()) / s;
    v * v
}

/// An antenna placed in the scene.
///
/// The frame's z axis is the pattern axis (boresight for horns, the rod for a
/// monopole). `polarization` is given in frame coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Antenna {
    pub frame: Frame,
    pub pattern: AntennaPattern,
    /// Linear gain.
    pub gain: f64,
    /// Transmit power in watts; unused for receivers.
    pub power: f64,
    pub polarization: Vec3,
}

impl Antenna {
    pub fn position(&self) -> Vec3 {
        self.frame.origin
    }

    pub fn validate(&self, transmitter: bool) -> Result<()> {
        self.frame.validate()?;
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::invalid(
                "antenna",
                format!("gain must be positive, got {}", self.gain),
            ));
        }
        if transmitter && !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::invalid(
                "antenna",
                format!("transmit power must be positive, got {} W", self.power),
            ));
        }
        if (self.polarization.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("antenna", "polarization must be a unit vector"));
        }
        Ok(())
    }

    /// Same antenna moved to `position`, keeping its orientation.
    pub fn moved_to(&self, position: Vec3) -> Antenna {
        Antenna {
            frame: self.frame.at(position),
            ..*self
        }
    }
}

/// Field launched by `tx` along the unit `direction`, before any distance
/// factor: `|E| = sqrt(2 eta0 P G F(theta))` with zero phase.
pub fn tx_launch_field(
    tx: &Antenna,
    direction: Vec3,
    mode: PolarizationMode,
) -> Result<FieldPhasor> {
    let (_, theta) = angles_in_frame(&tx.frame, direction);
    let magnitude = (2.0 * ETA0 * tx.power * tx.gain * tx.pattern.eval(theta)).sqrt();
    let polarization = tx.frame.to_world(tx.polarization);
    let polarization = match mode {
        PolarizationMode::Scalar => polarization,
        PolarizationMode::Vector => polarization
            .reject(direction)
            .normalized()
            .filter(|_| polarization.cross(direction).norm() > 1e-9)
            .ok_or_else(|| {
                Error::Degenerate(
                    "transmit polarization is parallel to the launch direction".into(),
                )
            })?,
    };
    Ok(FieldPhasor::polarized(
        Complex64::new(magnitude, 0.0),
        polarization,
    ))
}

/// Effective aperture `lambda^2 G / (4 pi)` in m^2.
pub fn effective_aperture(gain: f64, wavelength: f64) -> f64 {
    wavelength * wavelength * gain / (4.0 * PI)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}
