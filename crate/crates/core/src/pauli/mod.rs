//! Two-component spinor in the transverse-velocity representation and the
//! dimensionless Pauli Hamiltonian
//!
//! `H = a(x² + z²) − cσᶻ − bσᶻp_z + bσˣp_x`, with `p = i∂`,
//!
//! on a periodic square grid. Derivatives are spectral; the Nyquist mode is
//! dropped so that `p` is Hermitian on the grid.

mod bessel;
mod chebyshev;
mod textbook;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::analysis::{AxisUnit, HistogramGrid};
use crate::error::PauliError;
use crate::params::DimensionlessCoeffs;

pub use bessel::bessel_j_all;
pub use chebyshev::{chebyshev_propagate, spectral_bounds, ChebyshevReport};
pub use textbook::{product_formula_propagate, textbook_propagate, textbook_spinor};

/// Largest `2aδ` for which the quadratic term is still representable: beyond
/// it neighbouring grid points differ in phase rate by more than the
/// Nyquist limit.
pub const GRID_CRITERION_LIMIT: f64 = PI;
/// `2aδ` above which the discretization is flagged as inaccurate.
pub const GRID_CRITERION_WARN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    points: usize,
    half_width: f64,
}

impl GridSpec {
    pub fn new(points_per_axis: usize, half_width: f64) -> Result<Self, PauliError> {
        if points_per_axis < 64 || !points_per_axis.is_power_of_two() {
            return Err(PauliError::GridSize(points_per_axis));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(PauliError::HalfWidth(half_width));
        }
        Ok(Self { points: points_per_axis, half_width })
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Grid spacing δ.
    pub fn mesh(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Coordinate of index `i`; index `n/2` sits at the origin.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.mesh()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.coord(i)).collect()
    }

    /// FFT wavenumbers; the Nyquist entry is zero.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points;
        let dk = PI / self.half_width;
        (0..n)
            .map(|j| match j {
                j if j < n / 2 => j as f64 * dk,
                j if j == n / 2 => 0.0,
                j => (j as f64 - n as f64) * dk,
            })
            .collect()
    }

    /// `2aδ`.
    pub fn criterion(&self, a: f64) -> f64 {
        2.0 * a.abs() * self.mesh()
    }
}

/// Polar angle and relative phase of the initial spinor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub theta: f64,
    pub alpha: f64,
}

impl SpinState {
    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        let (s, c) = (0.5 * self.theta).sin_cos();
        (
            Complex64::from_polar(c, -0.5 * self.alpha),
            Complex64::from_polar(s, 0.5 * self.alpha),
        )
    }
}

/// Spinor components stored row-major, `data[iz * n + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorGrid {
    pub up: Vec<Complex64>,
    pub down: Vec<Complex64>,
    pub spec: GridSpec,
}

impl SpinorGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        let len = spec.points * spec.points;
        Self { up: vec![Complex64::default(); len], down: vec![Complex64::default(); len], spec }
    }

    pub fn from_fn<F: Fn(f64, f64) -> (Complex64, Complex64)>(spec: GridSpec, f: F) -> Self {
        let mut g = Self::zeros(spec);
        let n = spec.points;
        for iz in 0..n {
            let z = spec.coord(iz);
            for ix in 0..n {
                let (u, d) = f(spec.coord(ix), z);
                g.up[iz * n + ix] = u;
                g.down[iz * n + ix] = d;
            }
        }
        g
    }

    /// `Σ δ² (|up|² + |down|²)`.
    pub fn norm(&self) -> f64 {
        let d2 = self.spec.mesh().powi(2);
        d2 * (sum_sqr(&self.up) + sum_sqr(&self.down))
    }

    /// `⟨self|other⟩` with grid quadrature.
    pub fn inner(&self, other: &SpinorGrid) -> Result<Complex64, PauliError> {
        if self.spec != other.spec {
            return Err(PauliError::GridMismatch);
        }
        let dot = |a: &[Complex64], b: &[Complex64]| {
            a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>()
        };
        Ok((dot(&self.up, &other.up) + dot(&self.down, &other.down)) * self.spec.mesh().powi(2))
    }

    /// Largest pointwise difference over both components.
    pub fn max_abs_diff(&self, other: &SpinorGrid) -> Result<f64, PauliError> {
        if self.spec != other.spec {
            return Err(PauliError::GridMismatch);
        }
        let m = |a: &[Complex64], b: &[Complex64]| {
            a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
        };
        Ok(m(&self.up, &other.up).max(m(&self.down, &other.down)))
    }

    /// `α·self + β·other`.
    pub fn combine(
        &self,
        alpha: Complex64,
        other: &SpinorGrid,
        beta: Complex64,
    ) -> Result<SpinorGrid, PauliError> {
        if self.spec != other.spec {
            return Err(PauliError::GridMismatch);
        }
        let f = |a: &[Complex64], b: &[Complex64]| {
            a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect()
        };
        Ok(SpinorGrid { up: f(&self.up, &other.up), down: f(&self.down, &other.down), spec: self.spec })
    }
}

fn sum_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Gaussian packet centered at the origin with the given spin state,
/// normalized on the grid.
pub fn init_state(spin: SpinState, sigma: f64, spec: GridSpec) -> Result<SpinorGrid, PauliError> {
    let scale = envelope_scale(sigma, &spec)?;
    let (cu, cd) = spin.amplitudes();
    Ok(SpinorGrid::from_fn(spec, |x, z| {
        let amp = scale * (-(x * x + z * z) / (2.0 * sigma * sigma)).exp();
        (cu * amp, cd * amp)
    }))
}

/// Factor that normalizes `exp(−r²/2σ²)` on the grid.
pub(crate) fn envelope_scale(sigma: f64, spec: &GridSpec) -> Result<f64, PauliError> {
    let delta = spec.mesh();
    if !(sigma >= 3.0 * delta) || !sigma.is_finite() {
        return Err(PauliError::Unresolved { sigma, delta });
    }
    // the envelope factorizes, so one axis suffices
    let axis: f64 = spec.coords().iter().map(|x| (-x * x / (sigma * sigma)).exp()).sum();
    Ok(1.0 / (axis * delta))
}

/// Which terms of the Hamiltonian are active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian {
    pub coeffs: DimensionlessCoeffs,
    /// The `bσˣp_x` term; off gives the textbook model.
    pub sigma_x_term: bool,
}

impl Hamiltonian {
    pub fn full(coeffs: DimensionlessCoeffs) -> Self {
        Self { coeffs, sigma_x_term: true }
    }

    pub fn textbook(coeffs: DimensionlessCoeffs) -> Self {
        Self { coeffs, sigma_x_term: false }
    }
}

/// FFT plans, wavenumbers and scratch space for one grid.
pub(crate) struct SpectralOps {
    spec: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `−k/n`: the multiplier of `p = i∂` including the inverse-FFT scale.
    p_mult: Vec<f64>,
    r2: Vec<f64>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
    pz_up: Vec<Complex64>,
    pz_down: Vec<Complex64>,
    px_up: Vec<Complex64>,
    px_down: Vec<Complex64>,
}

impl SpectralOps {
    pub(crate) fn new(spec: GridSpec) -> Self {
        let n = spec.points;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let p_mult = spec.wavenumbers().iter().map(|k| -k / n as f64).collect();
        let c = spec.coords();
        let mut r2 = vec![0.0; n * n];
        for iz in 0..n {
            for ix in 0..n {
                r2[iz * n + ix] = c[ix] * c[ix] + c[iz] * c[iz];
            }
        }
        let zeros = || vec![Complex64::default(); n * n];
        Self {
            spec,
            forward,
            inverse,
            p_mult,
            r2,
            scratch: vec![Complex64::default(); scratch_len],
            transposed: zeros(),
            pz_up: zeros(),
            pz_down: zeros(),
            px_up: zeros(),
            px_down: zeros(),
        }
    }

    /// Applies `mult[k]` to the FFT of every row of `buf` in place.
    fn filter_rows(&mut self, buf: &mut [Complex64], mult: &dyn Fn(usize) -> Complex64) {
        let n = self.spec.points;
        self.forward.process_with_scratch(buf, &mut self.scratch);
        for row in buf.chunks_exact_mut(n) {
            for (j, v) in row.iter_mut().enumerate() {
                *v *= mult(j);
            }
        }
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }

    fn p_rows(&mut self, buf: &mut [Complex64]) {
        let n = self.spec.points;
        self.forward.process_with_scratch(buf, &mut self.scratch);
        for row in buf.chunks_exact_mut(n) {
            for (v, &m) in row.iter_mut().zip(&self.p_mult) {
                *v *= m;
            }
        }
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }

    /// `dst = p_x src`.
    fn p_x(&mut self, src: &[Complex64], dst_sel: Which) {
        let mut dst = std::mem::take(self.buffer(dst_sel));
        dst.copy_from_slice(src);
        self.p_rows(&mut dst);
        *self.buffer(dst_sel) = dst;
    }

    /// `dst = p_z src`.
    fn p_z(&mut self, src: &[Complex64], dst_sel: Which) {
        let n = self.spec.points;
        let mut t = std::mem::take(&mut self.transposed);
        transpose(src, &mut t, n);
        self.p_rows(&mut t);
        let mut dst = std::mem::take(self.buffer(dst_sel));
        transpose(&t, &mut dst, n);
        *self.buffer(dst_sel) = dst;
        self.transposed = t;
    }

    /// Multiplies the z-transform of `buf` by `mult` (both components share
    /// the transposition buffer).
    pub(crate) fn filter_z(&mut self, buf: &mut [Complex64], mult: &dyn Fn(usize) -> Complex64) {
        let n = self.spec.points;
        let mut t = std::mem::take(&mut self.transposed);
        transpose(buf, &mut t, n);
        self.filter_rows(&mut t, mult);
        transpose(&t, buf, n);
        self.transposed = t;
    }

    fn buffer(&mut self, w: Which) -> &mut Vec<Complex64> {
        match w {
            Which::PzUp => &mut self.pz_up,
            Which::PzDown => &mut self.pz_down,
            Which::PxUp => &mut self.px_up,
            Which::PxDown => &mut self.px_down,
        }
    }

    /// `out = scale · (H − shift) psi`.
    pub(crate) fn apply(
        &mut self,
        h: &Hamiltonian,
        psi: &SpinorGrid,
        out: &mut SpinorGrid,
        shift: f64,
        scale: f64,
    ) {
        let DimensionlessCoeffs { a, b, c } = h.coeffs;
        self.p_z(&psi.up, Which::PzUp);
        self.p_z(&psi.down, Which::PzDown);
        if h.sigma_x_term {
            self.p_x(&psi.down, Which::PxUp);
            self.p_x(&psi.up, Which::PxDown);
        }
        let (as_, bs) = (a * scale, b * scale);
        let cu = (-c - shift) * scale;
        let cd = (c - shift) * scale;
        for i in 0..psi.up.len() {
            let ar = as_ * self.r2[i];
            out.up[i] = psi.up[i] * (ar + cu) - self.pz_up[i] * bs;
            out.down[i] = psi.down[i] * (ar + cd) + self.pz_down[i] * bs;
        }
        if h.sigma_x_term {
            for i in 0..psi.up.len() {
                out.up[i] += self.px_up[i] * bs;
                out.down[i] += self.px_down[i] * bs;
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Which {
    PzUp,
    PzDown,
    /// `p_x` of the down component, which feeds the up row of `σˣ`.
    PxUp,
    PxDown,
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

fn check_coeffs(coeffs: &DimensionlessCoeffs) -> Result<(), PauliError> {
    if coeffs.is_finite() {
        Ok(())
    } else {
        Err(PauliError::NonFiniteCoeffs)
    }
}

/// `Hψ` for the full Hamiltonian.
pub fn apply_hamiltonian(
    psi: &SpinorGrid,
    coeffs: &DimensionlessCoeffs,
) -> Result<SpinorGrid, PauliError> {
    apply_hamiltonian_terms(psi, &Hamiltonian::full(*coeffs))
}

pub fn apply_hamiltonian_terms(psi: &SpinorGrid, h: &Hamiltonian) -> Result<SpinorGrid, PauliError> {
    check_coeffs(&h.coeffs)?;
    let mut ops = SpectralOps::new(psi.spec);
    let mut out = SpinorGrid::zeros(psi.spec);
    ops.apply(h, psi, &mut out, 0.0, 1.0);
    Ok(out)
}

/// Grid-quadrature moments of a spinor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub norm: f64,
    /// Weights of the up and down components; they sum to `norm`.
    pub weights: [f64; 2],
    /// `⟨x⟩` of each component, normalized by its weight; `None` when the
    /// component is empty.
    pub mean_x: [Option<f64>; 2],
    pub mean_z: [Option<f64>; 2],
}

impl Observables {
    /// `⟨σᶻ⟩` relative to the norm.
    pub fn spin_z(&self) -> f64 {
        (self.weights[0] - self.weights[1]) / self.norm
    }

    /// Total `⟨z⟩` relative to the norm.
    pub fn total_mean_z(&self) -> f64 {
        let part = |i: usize| self.mean_z[i].map_or(0.0, |m| m * self.weights[i]);
        (part(0) + part(1)) / self.norm
    }
}

pub fn observables(psi: &SpinorGrid) -> Observables {
    let n = psi.spec.points;
    let coords = psi.spec.coords();
    let d2 = psi.spec.mesh().powi(2);
    let moments = |v: &[Complex64]| {
        let (mut w, mut mx, mut mz) = (0.0, 0.0, 0.0);
        for (iz, row) in v.chunks_exact(n).enumerate() {
            let mut rw = 0.0;
            for (ix, c) in row.iter().enumerate() {
                let p = c.norm_sqr();
                rw += p;
                mx += p * coords[ix];
            }
            w += rw;
            mz += rw * coords[iz];
        }
        let mean = |m: f64| if w > 0.0 { Some(m / w) } else { None };
        (w * d2, mean(mx), mean(mz))
    };
    let (wu, xu, zu) = moments(&psi.up);
    let (wd, xd, zd) = moments(&psi.down);
    Observables { norm: wu + wd, weights: [wu, wd], mean_x: [xu, xd], mean_z: [zu, zd] }
}

/// Which part of the spinor a probability map shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Total,
    Up,
    Down,
}

/// `δ²|ψ|²` on the native grid: one bin per grid point, bin centers on the
/// grid coordinates, axes in units of `v0`.
pub fn probability_map(psi: &SpinorGrid, component: Component) -> HistogramGrid {
    let spec = psi.spec;
    let n = spec.points;
    let d = spec.mesh();
    let d2 = d * d;
    let values = (0..n * n)
        .map(|i| {
            d2 * match component {
                Component::Total => psi.up[i].norm_sqr() + psi.down[i].norm_sqr(),
                Component::Up => psi.up[i].norm_sqr(),
                Component::Down => psi.down[i].norm_sqr(),
            }
        })
        .collect();
    let lo = -spec.half_width - 0.5 * d;
    let hi = spec.half_width - 0.5 * d;
    HistogramGrid {
        nx: n,
        nz: n,
        x_range: (lo, hi),
        z_range: (lo, hi),
        values,
        overflow: 0.0,
        unit: AxisUnit::V0,
    }
}

/// Problems with a grid that do not stop a run.
#[derive(Debug, Clone, PartialEq)]
pub enum GridWarning {
    /// `2aδ` exceeds [`GRID_CRITERION_WARN`].
    Criterion { value: f64 },
    /// More than 10⁻⁶ of the norm lies within 10 mesh widths of an edge.
    Boundary { fraction: f64 },
}

impl std::fmt::Display for GridWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GridWarning::Criterion { value } => write!(
                f,
                "grid criterion 2*a*mesh = {value:.4} is not small compared to 1; the quadratic term is coarsely sampled"
            ),
            GridWarning::Boundary { fraction } => write!(
                f,
                "{fraction:.3e} of the norm lies within 10 mesh widths of the grid edge"
            ),
        }
    }
}

/// Rejects grids on which `a(x² + z²)` cannot be represented and flags
/// coarse ones.
pub fn check_grid(spec: &GridSpec, coeffs: &DimensionlessCoeffs) -> Result<Option<GridWarning>, PauliError> {
    check_coeffs(coeffs)?;
    let value = spec.criterion(coeffs.a);
    if value >= GRID_CRITERION_LIMIT {
        return Err(PauliError::GridCriterion { value, limit: GRID_CRITERION_LIMIT });
    }
    if value >= GRID_CRITERION_WARN {
        log::warn!("{}", GridWarning::Criterion { value });
        return Ok(Some(GridWarning::Criterion { value }));
    }
    Ok(None)
}

/// Fraction of the norm within 10 mesh widths of any edge.
pub fn edge_fraction(psi: &SpinorGrid) -> f64 {
    let n = psi.spec.points;
    let band = 10.min(n / 2);
    let near = |i: usize| i < band || i >= n - band;
    let mut edge = 0.0;
    let mut total = 0.0;
    for iz in 0..n {
        for ix in 0..n {
            let i = iz * n + ix;
            let p = psi.up[i].norm_sqr() + psi.down[i].norm_sqr();
            total += p;
            if near(ix) || near(iz) {
                edge += p;
            }
        }
    }
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

pub fn boundary_warning(psi: &SpinorGrid) -> Option<GridWarning> {
    let fraction = edge_fraction(psi);
    (fraction > 1e-6).then(|| {
        log::warn!("{}", GridWarning::Boundary { fraction });
        GridWarning::Boundary { fraction }
    })
}
