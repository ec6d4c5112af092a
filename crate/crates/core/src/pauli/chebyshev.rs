use num_complex::Complex64;

use super::bessel::bessel_j_all;
use super::{check_coeffs, GridSpec, Hamiltonian, SpectralOps, SpinorGrid};
use crate::error::PauliError;
use crate::params::DimensionlessCoeffs;

/// Lower and upper bounds on the spectrum of `h` on `spec`.
pub fn spectral_bounds(h: &Hamiltonian, spec: &GridSpec) -> (f64, f64) {
    let c = h.coeffs;
    let p_max = std::f64::consts::PI / spec.mesh();
    let p_terms = if h.sigma_x_term { 2f64.sqrt() } else { 1.0 } * c.b.abs() * p_max;
    let hw = spec.half_width();
    (-(c.c.abs() + p_terms), 2.0 * c.a.abs() * hw * hw + c.c.abs() + p_terms)
}

/// Expansion details of one propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebyshevReport {
    /// Number of Chebyshev terms summed.
    pub terms: usize,
    /// Center and half-width of the mapped spectral interval.
    pub center: f64,
    pub half_width: f64,
}

const COEFF_TOL: f64 = 1e-14;
const SAFETY: f64 = 1.1;

/// `exp(−iHt) ψ` by Chebyshev expansion with Bessel coefficients.
pub fn chebyshev_propagate(
    psi: &SpinorGrid,
    h: &Hamiltonian,
    t: f64,
) -> Result<(SpinorGrid, ChebyshevReport), PauliError> {
    check_coeffs(&h.coeffs)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PauliError::BadTime(t));
    }
    if !h.sigma_x_term && h.coeffs.c != 0.0 {
        // −cσᶻ commutes with the rest of the textbook Hamiltonian: expand
        // without it and apply its phases exactly
        let reduced = Hamiltonian::textbook(DimensionlessCoeffs { c: 0.0, ..h.coeffs });
        let (mut out, report) = chebyshev_propagate(psi, &reduced, t)?;
        let up = Complex64::from_polar(1.0, h.coeffs.c * t);
        for v in out.up.iter_mut() {
            *v *= up;
        }
        for v in out.down.iter_mut() {
            *v *= up.conj();
        }
        return Ok((out, report));
    }
    let (lo, hi) = spectral_bounds(h, &psi.spec);
    let center = 0.5 * (hi + lo);
    let half = SAFETY * 0.5 * (hi - lo);
    if t == 0.0 {
        return Ok((psi.clone(), ChebyshevReport { terms: 0, center, half_width: half }));
    }
    let x = half * t;
    let j = bessel_j_all(x);
    let budget = j.len();

    let mut ops = SpectralOps::new(psi.spec);
    let scale = 1.0 / half;
    let mut prev = psi.clone();
    let mut cur = SpinorGrid::zeros(psi.spec);
    ops.apply(h, &prev, &mut cur, center, scale);

    let mut acc = SpinorGrid::zeros(psi.spec);
    let axpy = |acc: &mut SpinorGrid, w: Complex64, v: &SpinorGrid| {
        for (a, b) in acc.up.iter_mut().zip(&v.up) {
            *a += w * b;
        }
        for (a, b) in acc.down.iter_mut().zip(&v.down) {
            *a += w * b;
        }
    };
    // (−i)^k
    let phase = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    axpy(&mut acc, Complex64::new(j[0], 0.0), &prev);
    axpy(&mut acc, phase[1] * (2.0 * j.get(1).copied().unwrap_or(0.0)), &cur);

    let mut small = 0;
    let mut terms = 2;
    let mut next = SpinorGrid::zeros(psi.spec);
    loop {
        let k = terms;
        if k >= budget {
            return Err(PauliError::NoConvergence(budget));
        }
        let coeff = 2.0 * j[k];
        if k as f64 > x && coeff.abs() < COEFF_TOL {
            small += 1;
            if small == 3 {
                break;
            }
        } else {
            small = 0;
        }
        // T_{k} = 2 H_n T_{k-1} − T_{k-2}
        ops.apply(h, &cur, &mut next, center, 2.0 * scale);
        for (n, p) in next.up.iter_mut().zip(&prev.up) {
            *n -= p;
        }
        for (n, p) in next.down.iter_mut().zip(&prev.down) {
            *n -= p;
        }
        axpy(&mut acc, phase[k % 4] * coeff, &next);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        terms += 1;
    }
    let rot = Complex64::from_polar(1.0, -center * t);
    for v in acc.up.iter_mut().chain(acc.down.iter_mut()) {
        *v *= rot;
    }
    Ok((acc, ChebyshevReport { terms, center, half_width: half }))
}
