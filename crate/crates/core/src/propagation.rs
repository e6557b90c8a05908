//! Field evolution along a ray: element illumination, reemission, arrival at
//! the receiver, coherent summation, power conversion, and Fresnel reflection
//! on lossy walls.
//!
//! Unit ledger for [`FieldPhasor`]: volts at launch (no distance factor),
//! V/m once a spreading factor has been applied, and a received-voltage
//! equivalent after [`field_at_rx`] folds in the receive aperture. The last
//! form converts to received power directly with [`received_power`].

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::antennas::{Antenna, AntennaPattern, RadioParams, ETA0};
use crate::error::{Error, Result};
use crate::geometry::{Rect, Vec3};
use crate::ris::RisElement;

/// Vacuum permittivity in F/m.
pub const EPSILON0: f64 = 8.8541878128e-12;

/// Reported power for a zero field.
pub const POWER_FLOOR_DBM: f64 = -400.0;

pub(crate) const GRAZING_TOLERANCE: f64 = 1e-9;

/// How polarization is carried along a path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarizationMode {
    /// Magnitude and phase only. The vector keeps the launch polarization and
    /// is only ever scaled; walls apply the s-polarized Fresnel coefficient.
    Scalar,
    /// Full complex 3-vector with projections at every interaction.
    #[default]
    Vector,
}

/// Complex electric field vector in world coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldPhasor(pub [Complex64; 3]);

impl FieldPhasor {
    pub const ZERO: FieldPhasor = FieldPhasor([Complex64::new(0.0, 0.0); 3]);

    /// Linearly polarized field `amplitude * polarization`.
    pub fn polarized(amplitude: Complex64, polarization: Vec3) -> Self {
        FieldPhasor([
            amplitude * polarization.x,
            amplitude * polarization.y,
            amplitude * polarization.z,
        ])
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Complex amplitude along a real direction.
    pub fn project(&self, axis: Vec3) -> Complex64 {
        self.0[0] * axis.x + self.0[1] * axis.y + self.0[2] * axis.z
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

impl Add for FieldPhasor {
    type Output = FieldPhasor;
    fn add(self, rhs: FieldPhasor) -> FieldPhasor {
        FieldPhasor([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl AddAssign for FieldPhasor {
    fn add_assign(&mut self, rhs: FieldPhasor) {
        *self = *self + rhs;
    }
}

impl Mul<Complex64> for FieldPhasor {
    type Output = FieldPhasor;
    fn mul(self, s: Complex64) -> FieldPhasor {
        FieldPhasor([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<f64> for FieldPhasor {
    type Output = FieldPhasor;
    fn mul(self, s: f64) -> FieldPhasor {
        FieldPhasor([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// Free-space phase term `exp(-j 2 pi d / lambda)`.
pub fn propagation_phase(distance: f64, wavelength: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * distance / wavelength)
}

/// Receive-then-reradiate along a polarization axis.
///
/// The incoming field is projected on `axis` made transverse to
/// `incoming_dir`; the result is reradiated along `axis` made transverse to
/// `outgoing_dir`. A degenerate (parallel) axis yields a zero field.
pub(crate) fn repolarize(
    field: FieldPhasor,
    axis: Vec3,
    incoming_dir: Vec3,
    outgoing_dir: Vec3,
) -> FieldPhasor {
    let (Some(p_in), Some(p_out)) = (
        axis.reject(incoming_dir).normalized(),
        axis.reject(outgoing_dir).normalized(),
    ) else {
        return FieldPhasor::ZERO;
    };
    FieldPhasor::polarized(field.project(p_in), p_out)
}

/// Lossy, non-magnetic material.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub eps_r: f64,
    /// Conductivity in S/m.
    #[serde(rename = "sigma_s_per_m")]
    pub sigma: f64,
}

impl Material {
    pub fn new(eps_r: f64, sigma: f64) -> Result<Self> {
        let m = Material { eps_r, sigma };
        m.validate()?;
        Ok(m)
    }

    /// The metal used for the walls of the reference room.
    pub fn metal() -> Self {
        Material {
            eps_r: 1.0,
            sigma: 1e7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_r >= 1.0 && self.eps_r.is_finite()) {
            return Err(Error::invalid(
                "material",
                format!("relative permittivity must be >= 1, got {}", self.eps_r),
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(
                "material",
                format!("conductivity must be >= 0, got {}", self.sigma),
            ));
        }
        Ok(())
    }
}

/// Field impinging on a RIS element after the TX-element hop.
pub fn impinging_field(
    e_t: FieldPhasor,
    d_t: f64,
    theta_in: f64,
    element_pattern: &AntennaPattern,
    area: f64,
    wavelength: f64,
) -> Result<FieldPhasor> {
    if !(d_t > 0.0) {
        return Err(Error::Degenerate(format!(
            "transmitter coincides with a RIS element (d = {d_t})"
        )));
    }
    let f = element_pattern.eval(theta_in);
    let scale = (f * area / (4.0 * PI * d_t * d_t)).sqrt();
    Ok(e_t * (propagation_phase(d_t, wavelength) * scale))
}

/// Geometry of one element interaction.
#[derive(Clone, Copy, Debug)]
pub struct ElementHop {
    /// TX to element distance.
    pub d_t: f64,
    /// Unit direction of travel from the TX to the element.
    pub incoming: Vec3,
    /// Unit direction of travel leaving the element.
    pub outgoing: Vec3,
    /// Elevation of the TX seen from the element, in the element frame.
    pub theta_in: f64,
    /// Elevation of the outgoing ray in the element frame.
    pub theta_out: f64,
}

/// Fused TX-element-reemission factor applied to the launch field.
///
/// Equal to reemitting the impinging field, up to rounding.
pub fn combined_element_field(
    e_t: FieldPhasor,
    element: &RisElement,
    gain: f64,
    element_pattern: &AntennaPattern,
    hop: &ElementHop,
    wavelength: f64,
    mode: PolarizationMode,
) -> Result<FieldPhasor> {
    if !(hop.d_t > 0.0) {
        return Err(Error::Degenerate(format!(
            "transmitter coincides with a RIS element (d = {})",
            hop.d_t
        )));
    }
    if element.gamma == Complex64::new(0.0, 0.0) {
        return Ok(FieldPhasor::ZERO);
    }
    let f_ris = element_pattern.eval(hop.theta_in) * element_pattern.eval(hop.theta_out);
    let amplitude = (gain * f_ris * element.d_y * element.d_z / (4.0 * PI)).sqrt() / hop.d_t;
    let factor = element.gamma * propagation_phase(hop.d_t, wavelength) * amplitude;
    let field = match mode {
        PolarizationMode::Scalar => e_t,
        PolarizationMode::Vector => repolarize(e_t, element.frame.x, hop.incoming, hop.outgoing),
    };
    Ok(field * factor)
}

/// Field at the receiver from a reemitted (and possibly reflected) field
/// travelling a total unfolded distance `d_r`.
pub fn field_at_rx(
    e: FieldPhasor,
    d_r: f64,
    rx: &Antenna,
    arrival_dir: Vec3,
    radio: &RadioParams,
    mode: PolarizationMode,
) -> Result<FieldPhasor> {
    if !(d_r > 0.0) {
        return Err(Error::Degenerate(format!(
            "receiver coincides with the last interaction point (d = {d_r})"
        )));
    }
    // The pattern sees where the wave comes from, not where it travels.
    let (_, theta) = crate::geometry::angles_in_frame(&rx.frame, -arrival_dir);
    let f_r = rx.pattern.eval(theta);
    let lambda = radio.wavelength;
    let factor = propagation_phase(d_r, lambda)
        * ((rx.gain * f_r).sqrt() * lambda / (4.0 * PI * d_r));
    let field = match mode {
        PolarizationMode::Scalar => e,
        PolarizationMode::Vector => {
            let p = rx.frame.to_world(rx.polarization);
            match p.reject(arrival_dir).normalized() {
                Some(p) => FieldPhasor::polarized(e.project(p), p),
                None => FieldPhasor::ZERO,
            }
        }
    };
    Ok(field * factor)
}

/// Coherent sum in the given order.
///
/// Callers pass components sorted by their path key so that the result does
/// not depend on how the components were produced.
pub fn superpose<I>(components: I) -> FieldPhasor
where
    I: IntoIterator<Item = FieldPhasor>,
{
    components
        .into_iter()
        .fold(FieldPhasor::ZERO, |acc, c| acc + c)
}

/// Sorts keyed components and sums them in key order.
pub fn superpose_keyed<K: Ord>(mut components: Vec<(K, FieldPhasor)>) -> FieldPhasor {
    components.sort_by(|a, b| a.0.cmp(&b.0));
    superpose(components.into_iter().map(|(_, c)| c))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Power {
    pub watts: f64,
    pub dbm: f64,
}

impl Power {
    pub fn from_watts(watts: f64) -> Self {
        let dbm = if watts > 0.0 {
            (10.0 * (watts / 1e-3).log10()).max(POWER_FLOOR_DBM)
        } else {
            POWER_FLOOR_DBM
        };
        Power { watts, dbm }
    }
}

/// Received power of a receiver-side field.
pub fn received_power(e_r: &FieldPhasor) -> Power {
    Power::from_watts(e_r.norm_squared() / (2.0 * ETA0))
}

/// Complex relative permittivity `eps_r - j sigma / (omega eps0)`.
pub fn complex_permittivity(mat: &Material, frequency: f64) -> Complex64 {
    Complex64::new(
        mat.eps_r,
        -mat.sigma / (2.0 * PI * frequency * EPSILON0),
    )
}

/// Fresnel reflection coefficients `(r_s, r_p)` for a wave incident from
/// vacuum at angle `acos(cos_i)` onto a half-space of permittivity `eps_c`.
///
/// `r_p` refers to the basis where the p unit vector is `s x k` for both the
/// incident and the reflected wave; with that convention a perfect conductor
/// gives `r_s = -1` and `r_p = +1`.
pub fn fresnel_coefficients(cos_i: f64, eps_c: Complex64) -> (Complex64, Complex64) {
    let sin2 = (1.0 - cos_i * cos_i).max(0.0);
    let root = (eps_c - sin2).sqrt();
    let r_s = (cos_i - root) / (cos_i + root);
    let r_p = (eps_c * cos_i - root) / (eps_c * cos_i + root);
    (r_s, r_p)
}

/// Specular reflection of a field on a lossy surface.
///
/// Returns the reflected field and direction. At normal incidence the s unit
/// vector is the surface frame's x axis.
pub fn fresnel_reflect(
    e_in: FieldPhasor,
    incident_dir: Vec3,
    surface: &Rect,
    mat: &Material,
    frequency: f64,
    mode: PolarizationMode,
) -> Result<(FieldPhasor, Vec3)> {
    let n = surface.normal();
    let cos_n = incident_dir.dot(n);
    if cos_n.abs() < GRAZING_TOLERANCE {
        return Err(Error::Degenerate("grazing incidence on a surface".into()));
    }
    if cos_n > 0.0 {
        return Err(Error::Degenerate(
            "ray approaches the back side of a reflecting surface".into(),
        ));
    }
    let reflected = incident_dir - n * (2.0 * cos_n);
    let (r_s, r_p) = fresnel_coefficients(-cos_n, complex_permittivity(mat, frequency));
    let out = match mode {
        PolarizationMode::Scalar => e_in * r_s,
        PolarizationMode::Vector => {
            let c = incident_dir.cross(n);
            let s = if c.norm() > 1e-12 {
                c / c.norm()
            } else {
                surface.frame.x
            };
            let p_in = s.cross(incident_dir);
            let p_out = s.cross(reflected);
            FieldPhasor::polarized(e_in.project(s) * r_s, s)
                + FieldPhasor::polarized(e_in.project(p_in) * r_p, p_out)
        }
    };
    Ok((out, reflected))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::geometry::Frame;

    const LAMBDA: f64 = 299_792_458.0 / 23.8e9;

    fn unit() -> FieldPhasor {
        FieldPhasor::polarized(Complex64::new(1.0, 0.0), Vec3::Z)
    }

    #[test]
    fn impinging_unit_construction() {
        let d = 1.0;
        let e = impinging_field(unit(), d, 0.0, &AntennaPattern::Isotropic, 4.0 * PI, LAMBDA)
            .unwrap();
        assert!((e.norm() - 1.0).abs() < 1e-14);
        let expected = propagation_phase(d, LAMBDA);
        assert!((e.0[2] - expected).norm() < 1e-14);
    }

    #[test]
    fn impinging_spreading_halves_with_distance() {
        let p = AntennaPattern::Isotropic;
        let a = impinging_field(unit(), 1.3, 0.0, &p, 1.0, LAMBDA).unwrap();
        let b = impinging_field(unit(), 2.6, 0.0, &p, 1.0, LAMBDA).unwrap();
        assert!((b.norm() / a.norm() - 0.5).abs() < 1e-14);
        assert!(impinging_field(unit(), 0.0, 0.0, &p, 1.0, LAMBDA).is_err());
    }

    #[test]
    fn impinging_table_geometry() {
        let e = impinging_field(unit(), 1.86, 0.0, &AntennaPattern::Cosine, 0.0066 * 0.0066, LAMBDA)
            .unwrap();
        // sqrt(0.0066^2 / (4 pi 1.86^2))
        assert!((e.norm() - 1.0007e-3).abs() < 1e-6, "{}", e.norm());
    }

    #[test]
    fn combined_table_geometry() {
        let hop = ElementHop {
            d_t: 1.86,
            incoming: -Vec3::X,
            outgoing: Vec3::X,
            theta_in: 0.0,
            theta_out: 0.0,
        };
        let mut element = RisElement {
            index: 0,
            center: Vec3::ZERO,
            frame: Frame::from_z_and_up(Vec3::ZERO, Vec3::X, Vec3::Z).unwrap(),
            d_y: 0.0066,
            d_z: 0.0066,
            gamma: Complex64::new(1.25, 0.0),
        };
        let fused = |element: &RisElement| {
            combined_element_field(
                unit(),
                element,
                3.450,
                &AntennaPattern::Cosine,
                &hop,
                LAMBDA,
                PolarizationMode::Scalar,
            )
            .unwrap()
        };
        let e = fused(&element);
        let expected = (3.450 * 0.0066f64.powi(2) / (4.0 * PI)).sqrt() * (1.25 / 1.86);
        assert!((e.norm() - expected).abs() < 1e-15);
        // 3.45819e-3 * 1.25 / 1.86
        assert!((e.norm() - 2.32405e-3).abs() < 1e-8, "{}", e.norm());
        element.gamma = Complex64::new(0.0, 0.0);
        assert!(fused(&element).is_zero());
    }

    fn monopole_rx() -> Antenna {
        Antenna {
            frame: Frame::identity(),
            pattern: AntennaPattern::monopole(0.25),
            gain: 1.0,
            power: 0.0,
            polarization: Vec3::Z,
        }
    }

    #[test]
    fn rx_factor_unit_construction() {
        let radio = RadioParams::new(23.8e9).unwrap();
        let rx = Antenna {
            pattern: AntennaPattern::Isotropic,
            ..monopole_rx()
        };
        let d = radio.wavelength / (4.0 * PI);
        let e = field_at_rx(unit(), d, &rx, Vec3::X, &radio, PolarizationMode::Scalar).unwrap();
        assert!((e.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rx_monopole_horizontal_and_axial_arrival() {
        let radio = RadioParams::new(23.8e9).unwrap();
        let rx = monopole_rx();
        let d = 1.0;
        let free = radio.wavelength / (4.0 * PI * d);
        let e = field_at_rx(unit(), d, &rx, Vec3::X, &radio, PolarizationMode::Vector).unwrap();
        assert!((e.norm() - free).abs() < 1e-15);
        let axial = FieldPhasor::polarized(Complex64::new(1.0, 0.0), Vec3::X);
        let e = field_at_rx(axial, d, &rx, -Vec3::Z, &radio, PolarizationMode::Scalar).unwrap();
        assert!(e.norm() < 1e-30);
        assert!(field_at_rx(unit(), 0.0, &rx, Vec3::X, &radio, PolarizationMode::Scalar).is_err());
    }

    #[test]
    fn superposition_interference() {
        let e = FieldPhasor::polarized(Complex64::new(0.3, -0.7), Vec3::Y);
        assert!(superpose([e, e * -1.0]).is_zero());
        let sum = superpose(std::iter::repeat_n(e, 8));
        assert!((sum.norm() - 8.0 * e.norm()).abs() < 1e-14);
        assert!(superpose(Vec::new()).is_zero());
    }

    #[test]
    fn power_conversion() {
        let p = received_power(&unit());
        assert!((p.watts - 1.0 / (2.0 * ETA0)).abs() < 1e-18);
        assert!((p.dbm - 1.2270).abs() < 1e-3, "{}", p.dbm);
        assert_eq!(received_power(&FieldPhasor::ZERO).dbm, POWER_FLOOR_DBM);
        let ten = received_power(&(unit() * 10.0));
        assert!((ten.dbm - p.dbm - 20.0).abs() < 1e-12);
    }

    #[test]
    fn permittivity_of_metal() {
        let eps = complex_permittivity(&Material::metal(), 23.8e9);
        assert_eq!(eps.re, 1.0);
        assert!((eps.im / -7.552e6 - 1.0).abs() < 1e-3, "{}", eps.im);
        let double = complex_permittivity(&Material::metal(), 47.6e9);
        assert!((double.im * 2.0 - eps.im).abs() < 1e-6);
        assert_eq!(complex_permittivity(&Material::new(4.0, 0.0).unwrap(), 1e9).im, 0.0);
        assert!(Material::new(1.0, -1.0).is_err());
        assert!(Material::new(0.5, 0.0).is_err());
    }

    fn floor_rect() -> Rect {
        Rect::new(Frame::identity(), [10.0, 10.0]).unwrap()
    }

    #[test]
    fn metal_normal_incidence_is_nearly_perfect() {
        let eps = complex_permittivity(&Material::metal(), 23.8e9);
        let (r_s, r_p) = fresnel_coefficients(1.0, eps);
        assert!(r_s.norm() > 0.999 && r_s.re < -0.99);
        assert!(r_p.norm() > 0.999 && r_p.re > 0.99);
        // tangential field reverses, as on a perfect conductor
        let e = FieldPhasor::polarized(Complex64::new(1.0, 0.0), Vec3::X);
        let (out, dir) = fresnel_reflect(
            e,
            -Vec3::Z,
            &floor_rect(),
            &Material::metal(),
            23.8e9,
            PolarizationMode::Vector,
        )
        .unwrap();
        assert_eq!(dir, Vec3::Z);
        assert!((out.0[0].re + 1.0).abs() < 1e-3);
    }

    #[test]
    fn vacuum_interface_reflects_nothing() {
        let (r_s, r_p) = fresnel_coefficients(0.7, Complex64::new(1.0, 0.0));
        assert!(r_s.norm() < 1e-15 && r_p.norm() < 1e-15);
        let vacuum = Material::new(1.0, 0.0).unwrap();
        let e = FieldPhasor::polarized(Complex64::new(1.0, 0.0), Vec3::Y);
        let d = Vec3::new(-1.0, 0.0, -1.0).normalized().unwrap();
        let (out, _) =
            fresnel_reflect(e, d, &floor_rect(), &vacuum, 1e9, PolarizationMode::Vector).unwrap();
        assert!(out.norm() < 1e-15);
    }

    #[test]
    fn specular_direction() {
        let d = Vec3::new(-1.0, 0.0, -1.0).normalized().unwrap();
        let (_, r) = fresnel_reflect(
            unit(),
            d,
            &floor_rect(),
            &Material::metal(),
            1e9,
            PolarizationMode::Scalar,
        )
        .unwrap();
        assert!((r - Vec3::new(-1.0, 0.0, 1.0).normalized().unwrap()).norm() < 1e-15);
        assert!(fresnel_reflect(unit(), Vec3::X, &floor_rect(), &Material::metal(), 1e9, PolarizationMode::Scalar).is_err());
    }

    #[test]
    fn vector_reflection_stays_transverse() {
        let d = Vec3::new(0.3, -0.2, -0.9).normalized().unwrap();
        let pol = Vec3::Z.reject(d).normalized().unwrap();
        let e = FieldPhasor::polarized(Complex64::new(0.4, 0.9), pol);
        let (out, r) = fresnel_reflect(
            e,
            d,
            &floor_rect(),
            &Material::new(5.0, 0.02).unwrap(),
            2.4e9,
            PolarizationMode::Vector,
        )
        .unwrap();
        assert!(out.project(r).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn fresnel_is_passive(cos_i in 1e-6f64..1.0, eps_r in 1.0f64..100.0, sigma in 0.0f64..1e8, f in 1e8f64..1e11) {
            let eps = complex_permittivity(&Material::new(eps_r, sigma).unwrap(), f);
            let (r_s, r_p) = fresnel_coefficients(cos_i, eps);
            prop_assert!(r_s.norm() <= 1.0 + 1e-12);
            prop_assert!(r_p.norm() <= 1.0 + 1e-12);
        }
    }
}
