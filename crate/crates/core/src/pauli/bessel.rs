//! Bessel functions of the first kind for integer order, all orders at once.

/// `J_0(x), J_1(x), ..., J_{n-1}(x)` for `x >= 0` by Miller's backward
/// recurrence, normalized with `J_0 + 2 Σ J_{2k} = 1`. The length `n` is
/// chosen so that the tail beyond it is far below double precision.
pub fn bessel_j_all(x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel argument {x}");
    if x == 0.0 {
        return vec![1.0];
    }
    let n = start_order(x);
    let mut j = vec![0.0; n + 1];
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    j[n] = cur;
    for k in (1..=n).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        j[k - 1] = cur;
        if cur.abs() > 1e200 {
            for v in &mut j[k - 1..] {
                *v *= 1e-200;
            }
            next *= 1e-200;
            cur *= 1e-200;
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for v in &mut j {
        *v /= norm;
    }
    j
}

/// Starting order of the backward recurrence.
fn start_order(x: f64) -> usize {
    let n = (x + 20.0 * x.cbrt() + 40.0).ceil() as usize;
    n + (n & 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `(1/2π) ∫ cos(nτ − x sin τ) dτ` by the trapezoid rule, which is
    /// spectrally accurate for periodic integrands once the point count
    /// exceeds the bandwidth `x + n`.
    fn bessel_quadrature(n: usize, x: f64) -> f64 {
        let m = (x + n as f64) as usize * 2 + 64;
        let h = 2.0 * PI / m as f64;
        (0..m)
            .map(|i| {
                let tau = i as f64 * h;
                (n as f64 * tau - x * tau.sin()).cos()
            })
            .sum::<f64>()
            / m as f64
    }

    #[test]
    fn reference_values() {
        let j1 = bessel_j_all(1.0);
        assert!((j1[0] - 0.7651976865579666).abs() < 1e-15);
        assert!((j1[1] - 0.4400505857449335).abs() < 1e-15);
        let j10 = bessel_j_all(10.0);
        assert!((j10[0] + 0.2459357644513483).abs() < 1e-14);
        assert!((j10[5] + 0.2340615281867936).abs() < 1e-14);
    }

    #[test]
    fn zero_argument() {
        assert_eq!(bessel_j_all(0.0), vec![1.0]);
    }

    #[test]
    fn matches_quadrature_over_wide_range() {
        for &x in &[0.3, 7.5, 120.0, 2500.0, 21000.0] {
            let j = bessel_j_all(x);
            let orders = [0, 1, 2, (x * 0.5) as usize, x as usize, (x + 3.0 * x.cbrt()) as usize];
            for &n in &orders {
                let q = bessel_quadrature(n, x);
                assert!((j[n] - q).abs() < 1e-12, "x={x} n={n}: {} vs {q}", j[n]);
            }
        }
    }

    #[test]
    fn tail_is_negligible() {
        for &x in &[5.0, 300.0, 9000.0] {
            let j = bessel_j_all(x);
            let tail: f64 = j[j.len() - 5..].iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(tail < 1e-30, "x={x} tail={tail}");
        }
    }
}
