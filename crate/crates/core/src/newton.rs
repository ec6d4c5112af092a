//! Classical spin-in-a-gradient dynamics.
//!
//! The translational motion is advanced with velocity Verlet and the spin is
//! rotated exactly over each step about the local field. Outside the magnet
//! the force vanishes, so the flight from the source to the entrance plane is
//! done in one exact drift. Inside, the slab is traversed in an integer number
//! of steps of length `tau` followed by one shorter step that lands exactly on
//! the exit plane; the slab is treated as closed for the integration so a
//! constant force is integrated without error.

use rayon::prelude::*;

use crate::error::{EngineError, ParamError};
use crate::field::{acceleration, field_at, field_inside};
use crate::params::{BeamConfig, FieldConfig, PhysicalParams};
use crate::rng::ParticleStream;
use crate::vec3::Vec3;

/// Magnitude of the classical spin vector.
pub const SPIN_LENGTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub spin: Vec3,
}

/// Transverse velocity and spin of a particle as it leaves the magnet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitRecord {
    pub particle_id: u64,
    pub vx: f64,
    pub vz: f64,
    pub spin: Vec3,
}

/// Exact solution operator of `dS/dt = γ S × B` over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(pub [[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix =
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> RotationMatrix {
        let m = &self.0;
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = m[j][i];
            }
        }
        RotationMatrix(t)
    }

    pub fn mul(&self, other: &RotationMatrix) -> RotationMatrix {
        let mut p = [[0.0; 3]; 3];
        for (i, row) in p.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        RotationMatrix(p)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `RᵀR − I`.
    pub fn orthogonality_defect(&self) -> f64 {
        let p = self.transpose().mul(self);
        let mut worst: f64 = 0.0;
        for (i, row) in p.0.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                let id = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((e - id).abs());
            }
        }
        worst
    }
}

/// Precession matrix for a step `tau` in field `b`.
pub fn rotation_matrix(b_field: Vec3, gamma: f64, tau: f64) -> RotationMatrix {
    let omega = gamma.abs() * b_field.norm();
    if omega == 0.0 {
        return RotationMatrix::IDENTITY;
    }
    let (u, v, w) = (
        gamma * b_field.x / omega,
        gamma * b_field.y / omega,
        gamma * b_field.z / omega,
    );
    let (s, c) = (tau * omega).sin_cos();
    RotationMatrix([
        [u * u + (v * v + w * w) * c, u * v - u * v * c + w * s, u * w - u * w * c - v * s],
        [u * v - u * v * c - w * s, v * v + (u * u + w * w) * c, v * w - v * w * c + u * s],
        [u * w - u * w * c + v * s, v * w - v * w * c - u * s, w * w + (u * u + v * v) * c],
    ])
}

/// `rotation_matrix(b, gamma, tau).apply(spin)` without forming the matrix.
#[inline]
pub(crate) fn precess(spin: Vec3, b: Vec3, gamma: f64, tau: f64) -> Vec3 {
    let bn = b.norm();
    if bn == 0.0 {
        return spin;
    }
    let n = b * (gamma.signum() / bn);
    let (s, c) = (tau * gamma.abs() * bn).sin_cos();
    let along = n * n.dot(spin);
    along + (spin - along) * c + spin.cross(n) * s
}

/// One velocity-Verlet step with exact spin rotation. The force is gated on
/// the half-open slab at the start and at the end of the step.
pub fn verlet_step(
    state: ParticleState,
    tau: f64,
    params: &PhysicalParams,
    field: &FieldConfig,
) -> ParticleState {
    let ParticleState { mut position, mut velocity, mut spin } = state;
    let a0 = acceleration(spin, params, field, field.contains(position.y));
    velocity += a0 * (0.5 * tau);
    position += velocity * tau;
    spin = precess(spin, field_at(position, field), params.gamma, tau);
    let a1 = acceleration(spin, params, field, field.contains(position.y));
    velocity += a1 * (0.5 * tau);
    ParticleState { position, velocity, spin }
}

/// Uniformly distributed point on the sphere of radius 1/2.
pub fn sample_uniform_sphere<R: rand::Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let cos_theta: f64 = 2.0 * rng.gen::<f64>() - 1.0;
    let phi = std::f64::consts::TAU * rng.gen::<f64>();
    spin_from_angles(cos_theta.acos(), phi)
}

pub fn spin_from_angles(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * cp, st * sp, ct) * SPIN_LENGTH
}

/// How initial spins are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    /// Direction uniform on the sphere.
    UniformSphere,
    /// Fixed polar angle from +z, azimuth uniform in `[0, 2π)`.
    Polar { theta: f64 },
    /// Same spin for every particle; rescaled to length 1/2.
    Fixed(Vec3),
}

/// Everything needed to run an ensemble. `seed` keys the per-particle streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub n: u64,
    pub init: InitSpec,
    pub tau: f64,
    pub params: PhysicalParams,
    pub field: FieldConfig,
    pub beam: BeamConfig,
    pub seed: u64,
}

impl EnsembleSpec {
    pub(crate) fn validate(&self) -> Result<(), EngineError> {
        if self.n == 0 {
            return Err(EngineError::EmptyEnsemble);
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(EngineError::BadTimeStep(self.tau));
        }
        if !(self.beam.v_y > 0.0) {
            return Err(ParamError::NonPositive { name: "v_y", value: self.beam.v_y }.into());
        }
        if let InitSpec::Fixed(s) = self.init {
            if !(s.norm() > 0.0) {
                return Err(ParamError::NonPositive { name: "|spin|", value: s.norm() }.into());
            }
        }
        Ok(())
    }

    /// Initial state of `particle_id` and its reserved alignment draw.
    pub fn initial_state(&self, particle_id: u64) -> (ParticleState, f64) {
        let mut stream = ParticleStream::new(self.seed, particle_id);
        let r = stream.alignment_threshold();
        let spin = match self.init {
            InitSpec::UniformSphere => sample_uniform_sphere(stream.rng()),
            InitSpec::Polar { theta } => {
                spin_from_angles(theta, std::f64::consts::TAU * stream.uniform())
            }
            InitSpec::Fixed(s) => s * (SPIN_LENGTH / s.norm()),
        };
        let (sx, sv) = (self.beam.sigma_x, self.beam.sigma_v);
        let position = Vec3::new(sx * stream.normal(), 0.0, sx * stream.normal());
        let velocity = Vec3::new(sv * stream.normal(), self.beam.v_y, sv * stream.normal());
        (ParticleState { position, velocity, spin }, r)
    }
}

/// What happens at the first in-field point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Alignment {
    None,
    /// Align to ±B once, using this threshold in `[-1/2, 1/2)`.
    Threshold(f64),
}

/// Carries `state` through the magnet and returns it on the exit plane.
/// `observe` sees the state at every integration point, with the time
/// elapsed since entering the slab.
pub(crate) fn traverse<O: FnMut(f64, &ParticleState)>(
    state: ParticleState,
    particle_id: u64,
    tau: f64,
    params: &PhysicalParams,
    field: &FieldConfig,
    alignment: Alignment,
    mut observe: O,
) -> Result<ParticleState, EngineError> {
    let [out] = traverse_lanes([state], particle_id, tau, params, field, [alignment], |t, s| {
        observe(t, &s[0])
    })?;
    Ok(out)
}

/// [`traverse`] for `L` particles in lockstep. All lanes must share `v_y` and
/// the starting `y`, so they share one step schedule; each lane sees exactly
/// the arithmetic of a single-particle run. Interleaving independent lanes
/// hides the latency of the per-step trigonometry.
pub(crate) fn traverse_lanes<const L: usize, O: FnMut(f64, &[ParticleState; L])>(
    states: [ParticleState; L],
    first_id: u64,
    tau: f64,
    params: &PhysicalParams,
    field: &FieldConfig,
    alignment: [Alignment; L],
    mut observe: O,
) -> Result<[ParticleState; L], EngineError> {
    let v_y = states[0].velocity.y;
    let y0 = states[0].position.y;
    debug_assert!(states.iter().all(|s| s.velocity.y == v_y && s.position.y == y0));
    if !(v_y > 0.0) {
        return Err(ParamError::NonPositive { name: "v_y", value: v_y }.into());
    }
    if y0 >= field.y_end {
        return Ok(states);
    }
    let mut st = states;
    let y_entry = y0.max(field.y_start);
    if y0 < field.y_start {
        let dt = (field.y_start - y0) / v_y;
        for s in st.iter_mut() {
            s.position.x += s.velocity.x * dt;
            s.position.z += s.velocity.z * dt;
            s.position.y = field.y_start;
        }
    }
    let t_region = (field.y_end - y_entry) / v_y;
    let full = (t_region / tau).floor();
    let rem = t_region - full * tau;
    let mut n_steps = full as u64;
    let mut last = tau;
    if rem > 1e-9 * tau {
        n_steps += 1;
        last = rem;
    }
    let budget = (4.0 * field.length() / v_y / tau).ceil() as u64;
    if n_steps > budget.max(1) {
        return Err(EngineError::NoExit { particle_id: first_id, budget });
    }

    let gamma = params.gamma;
    let k = params.spin_acceleration(field.b1);
    let mut pending = alignment.map(|a| match a {
        Alignment::None => None,
        Alignment::Threshold(r) => Some(r),
    });
    let mut any_pending = pending.iter().any(Option::is_some);
    let align = |st: &mut [ParticleState; L], pending: &mut [Option<f64>; L], i: usize, b: Vec3| {
        if let Some(r) = pending[i] {
            if let Some(aligned) = align_to_field(st[i].spin, b, r) {
                st[i].spin = aligned;
                pending[i] = None;
            }
        }
    };

    let mut ax = [0.0; L];
    let mut az = [0.0; L];
    for i in 0..L {
        if any_pending {
            let b = field_inside(st[i].position, field);
            align(&mut st, &mut pending, i, b);
        }
        ax[i] = -k * st[i].spin.x;
        az[i] = k * st[i].spin.z;
    }
    any_pending = pending.iter().any(Option::is_some);
    observe(0.0, &st);
    for step in 0..n_steps {
        let final_step = step + 1 == n_steps;
        let h = if final_step { last } else { tau };
        let elapsed = if final_step { t_region } else { (step + 1) as f64 * tau };
        let y = y_entry + v_y * elapsed;
        for i in 0..L {
            let s = &mut st[i];
            s.velocity.x += 0.5 * h * ax[i];
            s.velocity.z += 0.5 * h * az[i];
            s.position.x += h * s.velocity.x;
            s.position.z += h * s.velocity.z;
            s.position.y = y;
            let b = field_inside(s.position, field);
            s.spin = precess(s.spin, b, gamma, h);
            if any_pending {
                align(&mut st, &mut pending, i, b);
            }
            let s = &mut st[i];
            ax[i] = -k * s.spin.x;
            az[i] = k * s.spin.z;
            s.velocity.x += 0.5 * h * ax[i];
            s.velocity.z += 0.5 * h * az[i];
        }
        if any_pending {
            any_pending = pending.iter().any(Option::is_some);
        }
        observe(elapsed, &st);
    }
    for s in st.iter_mut() {
        s.position.y = field.y_end;
    }
    Ok(st)
}

/// `±B/(2|B|)` according to the threshold rule, or `None` for a zero field.
pub(crate) fn align_to_field(spin: Vec3, b: Vec3, r: f64) -> Option<Vec3> {
    let bn = b.norm();
    if bn == 0.0 {
        return None;
    }
    let unit = b * (1.0 / bn);
    let sign = if r <= spin.dot(unit) { 1.0 } else { -1.0 };
    Some(unit * (sign * SPIN_LENGTH))
}

/// Particles advanced together by the ensemble drivers.
const LANES: usize = 4;

pub(crate) fn run_with(
    spec: &EnsembleSpec,
    aligned: bool,
) -> Result<Vec<ExitRecord>, EngineError> {
    spec.validate()?;
    let groups = spec.n.div_ceil(LANES as u64);
    let nested: Vec<Vec<ExitRecord>> = (0..groups)
        .into_par_iter()
        .map(|g| {
            let first = g * LANES as u64;
            let count = (spec.n - first).min(LANES as u64) as usize;
            // short groups are padded with copies of their first particle
            let ids: [u64; LANES] = std::array::from_fn(|i| first + if i < count { i as u64 } else { 0 });
            let init: [(ParticleState, f64); LANES] = std::array::from_fn(|i| spec.initial_state(ids[i]));
            let states = init.map(|(s, _)| s);
            let alignment = init.map(|(_, r)| if aligned { Alignment::Threshold(r) } else { Alignment::None });
            let out = traverse_lanes(states, first, spec.tau, &spec.params, &spec.field, alignment, |_, _| {})?;
            Ok(out[..count]
                .iter()
                .zip(ids)
                .map(|(s, id)| ExitRecord { particle_id: id, vx: s.velocity.x, vz: s.velocity.z, spin: s.spin })
                .collect())
        })
        .collect::<Result<_, EngineError>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Integrates every particle of the ensemble through the magnet. Runs on the
/// current rayon pool; output is in particle-id order and independent of the
/// number of worker threads.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<Vec<ExitRecord>, EngineError> {
    run_with(spec, false)
}

/// Integrates a single trajectory and returns the states at every
/// integration point inside the magnet, keyed by time since entry.
pub fn trajectory(
    state: ParticleState,
    tau: f64,
    params: &PhysicalParams,
    field: &FieldConfig,
) -> Result<Vec<(f64, ParticleState)>, EngineError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(EngineError::BadTimeStep(tau));
    }
    let mut out = Vec::new();
    traverse(state, 0, tau, params, field, Alignment::None, |t, s| out.push((t, *s)))?;
    Ok(out)
}

/// Exit state of a single particle.
pub fn exit_state(
    state: ParticleState,
    tau: f64,
    params: &PhysicalParams,
    field: &FieldConfig,
) -> Result<ParticleState, EngineError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(EngineError::BadTimeStep(tau));
    }
    traverse(state, 0, tau, params, field, Alignment::None, |_, _| {})
}

/// Closed-form `(v_z, z)` after time `t` in the slab for a particle on the
/// axis with spin `spin_sign * (0, 0, 1/2)`.
pub fn analytic_constant_force(
    t: f64,
    spin_sign: f64,
    params: &PhysicalParams,
    field: &FieldConfig,
) -> (f64, f64) {
    let a = spin_sign * params.spin_acceleration(field.b1) * SPIN_LENGTH;
    (a * t, 0.5 * a * t * t)
}

/// Prediction for a strong uniform field, where the gradient terms in the
/// precession can be dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeB0Prediction {
    pub vx: f64,
    /// Displacement along x since entering the slab.
    pub x: f64,
    pub vz: f64,
    /// `ħB1/(mB0)`.
    pub beta: f64,
    /// `β/(γB0)`.
    pub beta_prime: f64,
}

/// Velocities after time `t` in the slab, with the spin precessing freely
/// about `B0 e_z` at angular frequency `γB0`. The precession sense is that of
/// [`rotation_matrix`].
pub fn large_b0_oracle(
    t: f64,
    initial_spin: Vec3,
    initial_v: Vec3,
    params: &PhysicalParams,
    field: &FieldConfig,
) -> Result<LargeB0Prediction, ParamError> {
    if !(field.b0 > 0.0) {
        return Err(ParamError::NonPositive { name: "B0", value: field.b0 });
    }
    let omega = params.gamma * field.b0;
    let beta = params.hbar() * field.b1 / (params.mass * field.b0);
    let beta_prime = beta / omega;
    let (s, c) = (omega * t).sin_cos();
    let (sx, sy, sz) = (initial_spin.x, initial_spin.y, initial_spin.z);
    let vx = initial_v.x - beta * (sx * s + sy * (1.0 - c));
    let x = initial_v.x * t - beta * sy * t - beta_prime * (sx * (1.0 - c) - sy * s);
    let vz = initial_v.z + params.spin_acceleration(field.b1) * sz * t;
    Ok(LargeB0Prediction { vx, x, vz, beta, beta_prime })
}
