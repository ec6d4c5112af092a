//! Species constants, magnet geometry and the characteristic scales derived
//! from them.
//!
//! All quantities are SI. The constants are stored at three significant
//! figures, the precision of the published parameter tables.

use std::fmt;
use std::str::FromStr;

use crate::error::ParamError;

/// Reduced Planck constant, kg m^2 s^-1.
pub const HBAR: f64 = 1.05e-34;

/// Default field gradient B1, T/m.
pub const DEFAULT_B1: f64 = 300.0;
/// Default entrance plane of the magnet, m (source sits at y = 0).
pub const DEFAULT_Y_START: f64 = 1.0;
/// Default magnet length, m.
pub const DEFAULT_LENGTH: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Neutron,
    ImaginarySilver,
}

impl Species {
    pub const ALL: [Species; 2] = [Species::Neutron, Species::ImaginarySilver];

    pub fn name(self) -> &'static str {
        match self {
            Species::Neutron => "neutron",
            Species::ImaginarySilver => "silver",
        }
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Species {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "neutron" => Ok(Species::Neutron),
            "silver" | "imaginary_silver" => Ok(Species::ImaginarySilver),
            other => Err(format!("unknown species `{other}` (expected neutron or silver)")),
        }
    }
}

/// Mass and gyromagnetic ratio of the simulated particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// kg
    pub mass: f64,
    /// T^-1 s^-1, signed.
    pub gamma: f64,
}

impl PhysicalParams {
    pub fn new(mass: f64, gamma: f64) -> Result<Self, ParamError> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(ParamError::NonPositive { name: "mass", value: mass });
        }
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(ParamError::ZeroGamma);
        }
        Ok(Self { mass, gamma })
    }

    pub fn hbar(&self) -> f64 {
        HBAR
    }

    /// ħγB1/m: the acceleration per unit spin component inside the magnet.
    pub fn spin_acceleration(&self, b1: f64) -> f64 {
        HBAR * self.gamma * b1 / self.mass
    }
}

/// Uniform field B0, gradient B1 and the slab `[y_start, y_end)` where the
/// field is switched on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    pub b0: f64,
    pub b1: f64,
    pub y_start: f64,
    pub y_end: f64,
}

impl FieldConfig {
    pub fn new(b0: f64, b1: f64, y_start: f64, y_end: f64) -> Result<Self, ParamError> {
        if !(b0 >= 0.0 && b0.is_finite()) {
            return Err(ParamError::Negative { name: "B0", value: b0 });
        }
        if !(b1 >= 0.0 && b1.is_finite()) {
            return Err(ParamError::Negative { name: "B1", value: b1 });
        }
        if !(y_start < y_end) || !y_start.is_finite() || !y_end.is_finite() {
            return Err(ParamError::EmptyRegion { y_start, y_end });
        }
        Ok(Self { b0, b1, y_start, y_end })
    }

    /// Magnet of the reference geometry: entrance at 1 m, 0.8 m long, 300 T/m.
    pub fn standard(b0: f64) -> Result<Self, ParamError> {
        Self::new(b0, DEFAULT_B1, DEFAULT_Y_START, DEFAULT_Y_START + DEFAULT_LENGTH)
    }

    pub fn length(&self) -> f64 {
        self.y_end - self.y_start
    }

    pub fn contains(&self, y: f64) -> bool {
        y >= self.y_start && y < self.y_end
    }
}

/// Beam kinematics at the source. `sigma_x` and `sigma_v` are standard
/// deviations of the transverse position and velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    pub v_y: f64,
    pub sigma_x: f64,
    pub sigma_v: f64,
}

impl BeamConfig {
    pub fn new(v_y: f64, sigma_x: f64, sigma_v: f64) -> Result<Self, ParamError> {
        if !(v_y > 0.0 && v_y.is_finite()) {
            return Err(ParamError::NonPositive { name: "v_y", value: v_y });
        }
        if !(sigma_x >= 0.0 && sigma_x.is_finite()) {
            return Err(ParamError::Negative { name: "sigma_x", value: sigma_x });
        }
        if !(sigma_v >= 0.0 && sigma_v.is_finite()) {
            return Err(ParamError::Negative { name: "sigma_v", value: sigma_v });
        }
        Ok(Self { v_y, sigma_x, sigma_v })
    }
}

/// Time of flight through the magnet and the transverse velocity and
/// displacement acquired by a spin aligned with the gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub t_star: f64,
    pub v_star: f64,
    pub z_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl DimensionlessCoeffs {
    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

/// Tabulated constants for the two species, plus the source beam with no
/// transverse spread.
pub fn preset(species: Species) -> (PhysicalParams, BeamConfig) {
    let (mass, gamma, v_y) = match species {
        Species::Neutron => (1.67e-27, -1.83e8, 395.6),
        Species::ImaginarySilver => (1.79e-25, -1.09e7, 540.0),
    };
    (
        PhysicalParams { mass, gamma },
        BeamConfig { v_y, sigma_x: 0.0, sigma_v: 0.0 },
    )
}

pub fn derive_scales(
    params: &PhysicalParams,
    field: &FieldConfig,
    beam: &BeamConfig,
) -> Result<Scales, ParamError> {
    if !(beam.v_y > 0.0) {
        return Err(ParamError::NonPositive { name: "v_y", value: beam.v_y });
    }
    let t_star = field.length() / beam.v_y;
    let v_star = (0.5 * params.spin_acceleration(field.b1)).abs() * t_star;
    let z_star = v_star * t_star / 2.0;
    Ok(Scales { t_star, v_star, z_star })
}

/// Coefficients of the dimensionless momentum-space Hamiltonian for time
/// unit `t0` and velocity unit `v0`.
pub fn dimensionless_coeffs(
    params: &PhysicalParams,
    field: &FieldConfig,
    t0: f64,
    v0: f64,
) -> Result<DimensionlessCoeffs, ParamError> {
    if !(t0 > 0.0) {
        return Err(ParamError::NonPositive { name: "t0", value: t0 });
    }
    if !(v0 > 0.0) {
        return Err(ParamError::NonPositive { name: "v0", value: v0 });
    }
    let m = params.mass;
    let a = m * t0 * v0 * v0 / (2.0 * HBAR);
    // same operation order as v* in derive_scales, so b = sign(γ) exactly there
    let b = 0.5 * params.spin_acceleration(field.b1) * t0 / v0;
    let c = params.gamma * field.b0 * t0 / 2.0;
    Ok(DimensionlessCoeffs { a, b, c })
}

/// Transverse displacement accumulated over `distance` of straight flight.
pub fn free_flight_displacement(
    v_transverse: f64,
    distance: f64,
    v_y: f64,
) -> Result<f64, ParamError> {
    if !(v_y > 0.0) {
        return Err(ParamError::NonPositive { name: "v_y", value: v_y });
    }
    Ok(v_transverse * distance / v_y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn presets_match_tables() {
        let (n, nb) = preset(Species::Neutron);
        assert_eq!((n.mass, n.gamma, nb.v_y), (1.67e-27, -1.83e8, 395.6));
        assert_eq!((nb.sigma_x, nb.sigma_v), (0.0, 0.0));
        let (s, sb) = preset(Species::ImaginarySilver);
        assert_eq!((s.mass, s.gamma, sb.v_y), (1.79e-25, -1.09e7, 540.0));
    }

    #[test]
    fn neutron_scales() {
        let (p, b) = preset(Species::Neutron);
        let s = derive_scales(&p, &FieldConfig::standard(1.0).unwrap(), &b).unwrap();
        assert!(rel(s.t_star, 2.02e-3) < 5e-3);
        assert!(rel(s.v_star, 3.50) < 5e-3);
        assert!(rel(s.z_star, 3.53e-3) < 5e-3);
    }

    #[test]
    fn silver_scales() {
        let (p, b) = preset(Species::ImaginarySilver);
        let s = derive_scales(&p, &FieldConfig::standard(1.0).unwrap(), &b).unwrap();
        assert!(rel(s.t_star, 1.48e-3) < 5e-3);
        assert!(rel(s.v_star, 1.42e-3) < 5e-3);
        assert!(rel(s.z_star, 1.05e-6) < 5e-3);
    }

    #[test]
    fn no_gradient_no_deflection() {
        let (p, b) = preset(Species::Neutron);
        let f = FieldConfig::new(1.0, 0.0, 1.0, 1.8).unwrap();
        let s = derive_scales(&p, &f, &b).unwrap();
        assert_eq!(s.v_star, 0.0);
        assert_eq!(s.z_star, 0.0);
    }

    #[test]
    fn b_is_sign_of_gamma_at_natural_scales() {
        for sp in Species::ALL {
            let (p, beam) = preset(sp);
            let f = FieldConfig::standard(1.0).unwrap();
            let s = derive_scales(&p, &f, &beam).unwrap();
            let c = dimensionless_coeffs(&p, &f, s.t_star, s.v_star).unwrap();
            assert_eq!(c.b, p.gamma.signum());
        }
    }

    #[test]
    fn c_vanishes_without_uniform_field() {
        let (p, beam) = preset(Species::ImaginarySilver);
        let f = FieldConfig::standard(0.0).unwrap();
        let s = derive_scales(&p, &f, &beam).unwrap();
        assert_eq!(dimensionless_coeffs(&p, &f, s.t_star, s.v_star).unwrap().c, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let (p, _) = preset(Species::Neutron);
        let f = FieldConfig::standard(1.0).unwrap();
        assert!(dimensionless_coeffs(&p, &f, 0.0, 1.0).is_err());
        assert!(dimensionless_coeffs(&p, &f, 1.0, -1.0).is_err());
        assert!(free_flight_displacement(1.0, 1.0, 0.0).is_err());
        assert!(FieldConfig::new(-1.0, 300.0, 1.0, 1.8).is_err());
        assert!(FieldConfig::new(1.0, 300.0, 1.8, 1.8).is_err());
        assert!(BeamConfig::new(0.0, 0.0, 0.0).is_err());
        assert!(PhysicalParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn screen_displacement() {
        let dz = free_flight_displacement(3.50, 2.0, 395.6).unwrap();
        assert!((dz - 17.7e-3).abs() < 0.05e-3);
        assert_eq!(free_flight_displacement(0.0, 2.0, 395.6).unwrap(), 0.0);
        // in-magnet displacement plus the flight to the screen
        assert!((dz + 3.53e-3 - 21.2e-3).abs() < 0.1e-3);
    }
}
