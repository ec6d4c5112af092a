//! Closed-form evolution without the `σˣ` term. Then `σᶻ = s` is conserved
//! and each component is a packet translated rigidly in velocity at rate
//! `g = bs`, dressed with known phases:
//!
//! `φ_s(z, t) = e^{icst} e^{−iag²t³/12} e^{−iat(z − gt/2)²} φ_s(z − gt, 0)`,
//!
//! and the `x` dependence only acquires `e^{−iatx²}`.

use num_complex::Complex64;

use super::{check_coeffs, envelope_scale, GridSpec, SpectralOps, SpinState, SpinorGrid};
use crate::error::PauliError;
use crate::params::{DimensionlessCoeffs, FieldConfig, PhysicalParams};

/// Closed-form solution at time `t` for the Gaussian initial state of
/// [`init_state`](super::init_state), with the same grid normalization.
pub fn textbook_spinor(
    spin: SpinState,
    sigma: f64,
    spec: GridSpec,
    coeffs: &DimensionlessCoeffs,
    t: f64,
) -> Result<SpinorGrid, PauliError> {
    check_coeffs(coeffs)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PauliError::BadTime(t));
    }
    let scale = envelope_scale(sigma, &spec)?;
    let (cu, cd) = spin.amplitudes();
    let DimensionlessCoeffs { a, b, c } = *coeffs;
    let component = |s: f64, amp: Complex64, x: f64, z: f64| {
        let g = b * s;
        let zs = z - g * t;
        let env = scale * (-(x * x + zs * zs) / (2.0 * sigma * sigma)).exp();
        let w = z - 0.5 * g * t;
        let phase = c * s * t - a * g * g * t.powi(3) / 12.0 - a * t * (x * x + w * w);
        amp * Complex64::from_polar(env, phase)
    };
    Ok(SpinorGrid::from_fn(spec, |x, z| (component(1.0, cu, x, z), component(-1.0, cd, x, z))))
}

/// One component of the physical-units closed form. `initial` is the
/// profile `φ_s(k_z, 0)`, evaluated off-grid at `k_z − gt`; `s` is ±1.
pub fn textbook_propagate<F: Fn(f64) -> Complex64>(
    k_z: &[f64],
    initial: F,
    s: i8,
    params: &PhysicalParams,
    field: &FieldConfig,
    t: f64,
) -> Vec<Complex64> {
    assert!(s == 1 || s == -1, "spin sign must be +1 or -1, got {s}");
    let s = s as f64;
    let g = s * params.gamma * field.b1 / 2.0;
    let hm = params.hbar() / params.mass;
    let global = s * t * params.gamma * field.b0 / 2.0 - hm * g * g * t.powi(3) / 24.0;
    k_z.iter()
        .map(|&k| {
            let w = k - 0.5 * g * t;
            Complex64::from_polar(1.0, global - hm * t * w * w / 2.0) * initial(k - g * t)
        })
        .collect()
}

/// Repeated application of the exact factorized evolution over `n_steps`
/// equal steps. Only the `σˣ`-free part of the Hamiltonian enters.
pub fn product_formula_propagate(
    psi: &SpinorGrid,
    coeffs: &DimensionlessCoeffs,
    t: f64,
    n_steps: usize,
) -> Result<SpinorGrid, PauliError> {
    check_coeffs(coeffs)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PauliError::BadTime(t));
    }
    if t == 0.0 || n_steps == 0 {
        return Ok(psi.clone());
    }
    let spec = psi.spec;
    let n = spec.points_per_axis();
    let h = t / n_steps as f64;
    let DimensionlessCoeffs { a, b, c } = *coeffs;
    let coords = spec.coords();
    let k = spec.wavenumbers();

    let mut ops = SpectralOps::new(spec);
    let mut out = psi.clone();
    for (s, buf) in [(1.0, &mut out.up), (-1.0, &mut out.down)] {
        let g = b * s;
        // e^{ighp_z} translates by gh; the Nyquist mode (k = 0 in the table)
        // stays put, matching the spectral p used elsewhere
        let shift: Vec<Complex64> =
            k.iter().map(|kj| Complex64::from_polar(1.0 / n as f64, -g * h * kj)).collect();
        let global = c * s * h - a * g * g * h.powi(3) / 12.0;
        let mut phase = vec![Complex64::default(); n * n];
        for iz in 0..n {
            let w = coords[iz] - 0.5 * g * h;
            for ix in 0..n {
                let x = coords[ix];
                phase[iz * n + ix] = Complex64::from_polar(1.0, global - a * h * (x * x + w * w));
            }
        }
        for _ in 0..n_steps {
            ops.filter_z(buf, &|j| shift[j]);
            for (v, p) in buf.iter_mut().zip(&phase) {
                *v *= p;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{preset, Species};
    use crate::pauli::{chebyshev_propagate, init_state, observables, Hamiltonian};
    use std::f64::consts::PI;

    fn silver(b0: f64) -> DimensionlessCoeffs {
        DimensionlessCoeffs { a: 2.53618, b: -1.0, c: -8053.19 * b0 }
    }

    #[test]
    fn zero_time_identity() {
        let spec = GridSpec::new(64, 2.0).unwrap();
        let spin = SpinState { theta: 0.9, alpha: 0.2 };
        let psi = init_state(spin, 0.2, spec).unwrap();
        let tb = textbook_spinor(spin, 0.2, spec, &silver(1.0), 0.0).unwrap();
        assert!(tb.max_abs_diff(&psi).unwrap() < 1e-15);
        assert_eq!(product_formula_propagate(&psi, &silver(1.0), 0.0, 5).unwrap(), psi);
    }

    #[test]
    fn physical_density_translates() {
        let (p, _) = preset(Species::Neutron);
        let f = FieldConfig::standard(1.0).unwrap();
        let k0 = 1e6;
        let profile = |k: f64| Complex64::new((-(k / k0).powi(2)).exp(), 0.0);
        let t = 1e-5;
        let ks: Vec<f64> = (-200..=200).map(|i| i as f64 * 2e4).collect();
        assert_eq!(textbook_propagate(&ks, profile, 1, &p, &f, 0.0), ks.iter().map(|&k| profile(k)).collect::<Vec<_>>());
        for s in [1i8, -1] {
            let g = s as f64 * p.gamma * f.b1 / 2.0;
            let shifted: Vec<f64> = ks.iter().map(|k| k + g * t).collect();
            let out = textbook_propagate(&shifted, profile, s, &p, &f, t);
            for (o, &k) in out.iter().zip(&ks) {
                assert!((o.norm_sqr() - profile(k).norm_sqr()).abs() < 1e-14);
            }
            // mean wavenumber moves by g t
            let all = textbook_propagate(&ks, profile, s, &p, &f, t);
            let w: f64 = all.iter().map(|c| c.norm_sqr()).sum();
            let mean: f64 = all.iter().zip(&ks).map(|(c, k)| c.norm_sqr() * k).sum::<f64>() / w;
            assert!((mean - g * t).abs() < 1e-6 * k0, "{mean} {}", g * t);
        }
    }

    #[test]
    fn chebyshev_matches_closed_form_small_grid() {
        let spec = GridSpec::new(128, 2.5).unwrap();
        let spin = SpinState { theta: PI / 3.0, alpha: 0.4 };
        let sigma = 0.15;
        let co = DimensionlessCoeffs { a: 2.53618, b: -1.0, c: -5.0 };
        let t = 0.5;
        let psi = init_state(spin, sigma, spec).unwrap();
        let (cheb, _) = chebyshev_propagate(&psi, &Hamiltonian::textbook(co), t).unwrap();
        let exact = textbook_spinor(spin, sigma, spec, &co, t).unwrap();
        assert!(cheb.max_abs_diff(&exact).unwrap() < 1e-8);
        let prod = product_formula_propagate(&psi, &co, t, 7).unwrap();
        assert!(prod.max_abs_diff(&exact).unwrap() < 1e-8);
        let o = observables(&exact);
        assert!((o.mean_z[0].unwrap() + t).abs() < 1e-9);
        assert!((o.mean_z[1].unwrap() - t).abs() < 1e-9);
    }
}
