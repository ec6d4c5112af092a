//! Event-by-event model: a Newtonian particle whose spin snaps to `±B/|B|`
//! the first time it sees a non-zero field.
//!
//! The snap uses the particle's reserved threshold `r` in `[-1/2, 1/2)`:
//! the spin goes to `+B/(2|B|)` when `r <= S·B/|B|`, otherwise to
//! `-B/(2|B|)`. For a uniformly distributed `r` this reproduces Malus' law,
//! `P(+) = cos²(θ/2)` with `θ` the angle between the spin and the field.

use crate::error::EngineError;
use crate::newton::{run_with, EnsembleSpec, ExitRecord};
use crate::vec3::Vec3;

pub use crate::newton::SPIN_LENGTH;

/// Probability of `outcome` (+1 along the field, −1 against it) for a spin
/// at angle `xi` to the field: `(1 + outcome·cos ξ)/2`.
pub fn malus_probability(xi: f64, outcome: i8) -> f64 {
    assert!(outcome == 1 || outcome == -1, "outcome must be +1 or -1, got {outcome}");
    0.5 * (1.0 + outcome as f64 * xi.cos())
}

/// Applies the alignment rule once. Fails for a zero field.
pub fn align_spin_once(spin: Vec3, b_field: Vec3, r: f64) -> Result<Vec3, EngineError> {
    crate::newton::align_to_field(spin, b_field, r).ok_or(EngineError::ZeroField)
}

/// Options on top of the Newtonian ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOptions {
    /// Disables the alignment step; the run is then identical to the
    /// Newtonian engine with the same seed.
    pub align: bool,
}

impl Default for EventOptions {
    fn default() -> Self {
        Self { align: true }
    }
}

/// Runs the ensemble with alignment at the first in-field point of every
/// trajectory. Deterministic in `spec.seed` and independent of thread count.
pub fn run_event_ensemble(
    spec: &EnsembleSpec,
    options: EventOptions,
) -> Result<Vec<ExitRecord>, EngineError> {
    run_with(spec, options.align)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{run_ensemble, InitSpec};
    use crate::params::{derive_scales, preset, FieldConfig, Species};
    use proptest::prelude::*;

    #[test]
    fn malus_values() {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
        assert_eq!(malus_probability(0.0, 1), 1.0);
        assert!((malus_probability(FRAC_PI_2, 1) - 0.5).abs() < 1e-15);
        assert!((malus_probability(FRAC_PI_3, 1) - 0.75).abs() < 1e-15);
        assert!(malus_probability(PI, 1) < 1e-15);
        for xi in [0.1, 1.0, 2.5] {
            assert!((malus_probability(xi, 1) + malus_probability(xi, -1) - 1.0).abs() < 1e-15);
            assert!((malus_probability(xi, 1) - (0.5 * xi).cos().powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_field_is_an_error() {
        assert_eq!(
            align_spin_once(Vec3::new(0.0, 0.0, 0.5), Vec3::ZERO, 0.0),
            Err(EngineError::ZeroField)
        );
    }

    #[test]
    fn tie_goes_up() {
        let b = Vec3::new(0.0, 0.0, 2.0);
        let s = align_spin_once(Vec3::new(0.5, 0.0, 0.0), b, 0.0).unwrap();
        assert_eq!(s, Vec3::new(0.0, 0.0, 0.5));
    }

    proptest! {
        #[test]
        fn aligned_spin_is_parallel_to_field(
            bx in -2.0f64..2.0, by in -2.0f64..2.0, bz in 0.1f64..2.0,
            theta in 0.0f64..3.14, phi in 0.0f64..6.28, r in -0.5f64..0.5
        ) {
            let b = Vec3::new(bx, by, bz);
            let s = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * 0.5;
            let out = align_spin_once(s, b, r).unwrap();
            prop_assert!((out.norm() - 0.5).abs() < 1e-15);
            prop_assert!(out.cross(b).norm() < 1e-12 * b.norm());
            let up = out.dot(b) > 0.0;
            prop_assert_eq!(up, r <= s.dot(b) / b.norm());
        }
    }

    #[test]
    fn disabled_alignment_matches_newton() {
        let (p, beam) = preset(Species::Neutron);
        let spec = EnsembleSpec {
            n: 16,
            init: InitSpec::UniformSphere,
            tau: 1e-6,
            params: p,
            field: FieldConfig::standard(1.0).unwrap(),
            beam,
            seed: 5,
        };
        let a = run_event_ensemble(&spec, EventOptions { align: false }).unwrap();
        assert_eq!(a, run_ensemble(&spec).unwrap());
    }

    #[test]
    fn aligned_particles_leave_at_plus_minus_v_star() {
        let (p, beam) = preset(Species::Neutron);
        let field = FieldConfig::standard(1.0).unwrap();
        let v_star = derive_scales(&p, &field, &beam).unwrap().v_star;
        let spec = EnsembleSpec {
            n: 64,
            init: InitSpec::UniformSphere,
            tau: 1e-6,
            params: p,
            field,
            beam,
            seed: 9,
        };
        for rec in run_event_ensemble(&spec, EventOptions::default()).unwrap() {
            assert!(((rec.vz.abs() - v_star) / v_star).abs() < 1e-9, "{}", rec.vz);
            assert!(rec.vx.abs() < 1e-9 * v_star);
        }
    }
}
