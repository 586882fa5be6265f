//! Exact-as-possible reduction of phases modulo one.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Representative of `x` modulo 1 in [-1/2, 1/2).
#[inline]
pub fn mod1_centered(x: f64) -> f64 {
    let r = x - x.round();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// `n * x mod 1` in [-1/2, 1/2), using an error-free product so that large
/// integers `n` do not destroy the fractional part.
#[inline]
pub fn frac_prod(n: f64, x: f64) -> f64 {
    let p = n * x;
    let e = n.mul_add(x, -p);
    mod1_centered(mod1_centered(p) + e)
}

/// `(n * x - m)` evaluated with one rounding, for `alpha = theta - a/q` style
/// differences: returns `x*n - m` where the product is exact.
#[inline]
pub fn frac_round(x: f64, n: f64, m: f64) -> f64 {
    let p = x * n;
    let e = x.mul_add(n, -p);
    (p - m) + e
}

/// x − num/q reduced modulo 1 to the representative nearest zero, with x·q
/// formed exactly.
#[inline]
pub fn rational_offset(x: f64, num: i64, q: i64) -> f64 {
    let qf = q as f64;
    let p = x * qf;
    let e = x.mul_add(qf, -p);
    let mut t = (p - num as f64) + e;
    t -= qf * (t / qf).round();
    t / qf
}

/// e^{-2 pi i t}, with t first reduced modulo 1.
#[inline]
pub fn cis_neg(t: f64) -> Complex64 {
    let (s, c) = (TAU * mod1_centered(t)).sin_cos();
    Complex64::new(c, -s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_multiplier_keeps_fraction() {
        let x = 0.1f64;
        let n = 1.0e12;
        // x is not exactly 0.1, so n*x mod 1 is determined by the binary value.
        let exact = {
            let (m, e) = (x.to_bits() & ((1u64 << 52) - 1) | (1u64 << 52), -56i32);
            // x = m * 2^e ; n*x = n*m*2^e computed in i128
            let prod = (n as i128) * (m as i128);
            let den = 1i128 << (-e);
            let rem = prod.rem_euclid(den);
            let r = rem as f64 / den as f64;
            if r >= 0.5 {
                r - 1.0
            } else {
                r
            }
        };
        assert!((frac_prod(n, x) - exact).abs() < 1e-15);
    }

    #[test]
    fn centered_range() {
        for &x in &[0.5, -0.5, 1.49, -2.7, 3.0] {
            let r = mod1_centered(x);
            assert!((-0.5..0.5).contains(&r));
        }
    }
}
