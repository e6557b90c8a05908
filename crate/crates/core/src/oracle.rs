//! Closed-form received power for RIS-only scenes without surfaces.
//!
//! Written as one expression over the raw geometry, independent of the
//! modular pipeline, and used by `risrt validate` to cross-check it.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::antennas::{AntennaPattern, ETA0};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::pathfinder::Tracer;
use crate::propagation::{received_power, PolarizationMode};
use crate::scene::{Scene, SolverConfig};

fn horn(pattern: &AntennaPattern, cos_t: f64) -> Result<f64> {
    match *pattern {
        AntennaPattern::Isotropic => Ok(1.0),
        AntennaPattern::Directional { gain } if cos_t > 0.0 => Ok(cos_t.powf(gain / 2.0 - 1.0)),
        AntennaPattern::Directional { .. } => Ok(0.0),
        _ => Err(Error::invalid("oracle", "transmitter must be isotropic or directional")),
    }
}

fn monopole(pattern: &AntennaPattern, cos_t: f64) -> Result<f64> {
    match *pattern {
        AntennaPattern::Isotropic => Ok(1.0),
        AntennaPattern::Monopole { height_over_lambda, peak } => {
            let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
            if sin_t < 1e-12 {
                return Ok(0.0);
            }
            let kh = 2.0 * PI * height_over_lambda;
            Ok((((kh * cos_t).cos() - kh.cos()) / sin_t).powi(2) / peak)
        }
        _ => Err(Error::invalid("oracle", "receiver must be isotropic or a monopole")),
    }
}

/// Received power in watts at `rx` from all panels of a surface-free scene.
pub fn ris_power_watts(scene: &Scene, rx: Vec3) -> Result<f64> {
    if !scene.surfaces.is_empty() {
        return Err(Error::invalid("oracle", "scene must not contain surfaces"));
    }
    let tx = &scene.tx;
    let lambda = scene.radio.wavelength;
    let k = 2.0 * PI / lambda;
    let rx_axis = scene.rx.frame.z;
    let mut sum = Complex64::new(0.0, 0.0);
    for panel in &scene.panels {
        if panel.element_pattern != AntennaPattern::Cosine {
            return Err(Error::invalid("oracle", "element pattern must be cosine"));
        }
        let n = panel.normal();
        for e in &panel.elements {
            let to_tx = tx.position() - e.center;
            let to_rx = rx - e.center;
            let (d_t, d_r) = (to_tx.norm(), to_rx.norm());
            let cos_in = to_tx.dot(n) / d_t;
            let cos_out = to_rx.dot(n) / d_r;
            if cos_in <= 0.0 || cos_out <= 0.0 {
                continue;
            }
            let f_t = horn(&tx.pattern, -to_tx.dot(tx.frame.z) / d_t)?;
            let f_r = monopole(&scene.rx.pattern, to_rx.dot(rx_axis) / d_r)?;
            let amplitude = (2.0 * ETA0 * tx.power * tx.gain * f_t).sqrt()
                * (panel.element_gain * cos_in * cos_out * e.d_y * e.d_z / (4.0 * PI)).sqrt()
                / d_t
                * (scene.rx.gain * f_r).sqrt()
                * lambda
                / (4.0 * PI * d_r);
            sum += e.gamma * Complex64::from_polar(amplitude, -k * (d_t + d_r));
        }
    }
    Ok(sum.norm_sqr() / (2.0 * ETA0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationReport {
    pub configurations: usize,
    pub points: usize,
    pub max_relative_error: f64,
}

/// Compares the scalar-mode pipeline with [`ris_power_watts`] for random
/// RIS configurations and receiver positions in front of the first panel.
pub fn validate_against_oracle(
    scene: &Scene,
    configurations: usize,
    points: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let panel = scene
        .panels
        .first()
        .ok_or_else(|| Error::invalid("oracle", "scene has no RIS panel"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let options = SolverConfig {
        max_order: 0,
        center_prune: true,
        mode: PolarizationMode::Scalar,
        include_los: false,
    };
    let mut worst = 0.0f64;
    for _ in 0..configurations {
        let mut configured = scene.clone();
        for p in &mut configured.panels {
            let choice: Vec<usize> = (0..p.len()).map(|_| rng.gen_range(0..p.alphabet.len())).collect();
            *p = p.set_config_indices(&choice)?;
        }
        let tracer = Tracer::new(&configured, options);
        for _ in 0..points {
            let local = Vec3::new(
                rng.gen_range(0.3..1.8),
                rng.gen_range(-0.9..0.9),
                rng.gen_range(-0.45..0.45),
            );
            let rx = panel.center() + panel.placement_frame().to_world(local);
            let pipeline = received_power(&tracer.field_at(rx)?.field).watts;
            let oracle = ris_power_watts(&configured, rx)?;
            let err = if oracle == 0.0 {
                pipeline.abs()
            } else {
                (pipeline - oracle).abs() / oracle
            };
            worst = worst.max(err);
        }
    }
    Ok(ValidationReport {
        configurations,
        points,
        max_relative_error: worst,
    })
}
