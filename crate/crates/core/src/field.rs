//! Uniform-plus-quadrupole magnetic field and the force it exerts on a
//! classical moment.
//!
//! Inside the slab `y_start <= y < y_end` the field is
//! `B = (-x B1, 0, B0 + z B1)`; outside it vanishes.

use crate::error::FieldError;
use crate::params::{FieldConfig, PhysicalParams};
use crate::vec3::Vec3;

/// Field at `position`, zero outside the slab.
pub fn field_at(position: Vec3, config: &FieldConfig) -> Vec3 {
    if config.contains(position.y) {
        field_inside(position, config)
    } else {
        Vec3::ZERO
    }
}

/// In-slab field expression without the y gate.
#[inline]
pub fn field_inside(position: Vec3, config: &FieldConfig) -> Vec3 {
    Vec3::new(-position.x * config.b1, 0.0, config.b0 + position.z * config.b1)
}

/// Central-difference divergence and curl of [`field_at`].
pub fn divergence_and_curl_fd(
    position: Vec3,
    config: &FieldConfig,
    h: f64,
) -> Result<(f64, Vec3), FieldError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(FieldError::BadStep(h));
    }
    if position.y - h < config.y_start || position.y + h >= config.y_end {
        return Err(FieldError::NearBoundary { y: position.y, h });
    }
    let d = |axis: usize| {
        let mut e = Vec3::ZERO;
        match axis {
            0 => e.x = h,
            1 => e.y = h,
            _ => e.z = h,
        }
        (field_at(position + e, config) - field_at(position - e, config)) * (0.5 / h)
    };
    let (dx, dy, dz) = (d(0), d(1), d(2));
    let div = dx.x + dy.y + dz.z;
    let curl = Vec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x);
    Ok((div, curl))
}

/// `γ ∇(B·S)` inside the slab; zero outside. Multiply by ħ/m for an
/// acceleration (see [`acceleration`]).
pub fn force_on_moment(
    spin: Vec3,
    params: &PhysicalParams,
    config: &FieldConfig,
    inside: bool,
) -> Vec3 {
    debug_assert!((spin.norm() - 0.5).abs() < 1e-9, "spin length {}", spin.norm());
    if !inside {
        return Vec3::ZERO;
    }
    let g = params.gamma * config.b1;
    Vec3::new(-g * spin.x, 0.0, g * spin.z)
}

/// Acceleration ħ/m times [`force_on_moment`].
pub fn acceleration(
    spin: Vec3,
    params: &PhysicalParams,
    config: &FieldConfig,
    inside: bool,
) -> Vec3 {
    force_on_moment(spin, params, config, inside) * (params.hbar() / params.mass)
}
