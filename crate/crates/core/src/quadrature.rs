//! Gauss–Legendre nodes and a symmetric product rule on the unit sphere.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = vec![(0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        out[n / 2].0 = 0.0;
    }
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule for the uniform measure on the sphere, as `([x, y, z], weight)`.
///
/// The symmetry axis is `+y`, the normal of the x–z measurement plane:
/// `azimuthal` midpoint nodes around it (rounded up to an even count) times
/// `polar` Gauss–Legendre nodes in `cos` of the angle from it (rounded up to
/// an even count so that no node lies in the plane). The node set is closed
/// under `s -> -s` with equal weights. For in-plane settings at multiples of
/// `2π / azimuthal` every node lies strictly off the sign boundaries, so
/// sign-rule integrals over such settings are exact.
pub fn sphere_product_rule(azimuthal: usize, polar: usize) -> Vec<([f64; 3], f64)> {
    let n_az = azimuthal.max(2).next_multiple_of(2);
    let n_pol = polar.max(2).next_multiple_of(2);
    let gl = gauss_legendre(n_pol);
    let mut nodes = Vec::with_capacity(n_az * n_pol);
    for &(u, wu) in &gl {
        let r = (1.0 - u * u).sqrt();
        for j in 0..n_az {
            let psi = (j as f64 + 0.5) * 2.0 * PI / n_az as f64;
            nodes.push(([r * psi.sin(), u, r * psi.cos()], 0.5 * wu / n_az as f64));
        }
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in 1..12 {
            let rule = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = rule.iter().map(|&(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn sphere_rule_is_normalised_and_antipodal() {
        let rule = sphere_product_rule(16, 8);
        let total: f64 = rule.iter().map(|r| r.1).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for (s, w) in &rule {
            let neg = [-s[0], -s[1], -s[2]];
            let found = rule.iter().any(|(t, v)| {
                (0..3).all(|k| (t[k] - neg[k]).abs() < 1e-14) && (v - w).abs() < 1e-18
            });
            assert!(found);
        }
    }

    #[test]
    fn sphere_rule_second_moments() {
        let rule = sphere_product_rule(32, 16);
        for k in 0..3 {
            let m: f64 = rule.iter().map(|(s, w)| w * s[k] * s[k]).sum();
            assert!((m - 1.0 / 3.0).abs() < 1e-13);
        }
    }
}
