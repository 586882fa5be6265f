use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Complex Gamma function (Lanczos, g = 7, n = 9) with reflection for Re z < 1/2.
/// Returns `None` at the poles 0, -1, -2, ...
pub fn gamma(z: Complex64) -> Option<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return None;
    }
    if z.re < 0.5 {
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return gamma(Complex64::new(1.0, 0.0) - z).map(|g| PI / (s * g));
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Some((2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x)
}

/// sin(x)/x with the removable singularity filled in.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn known_values() {
        let half = gamma(Complex64::new(0.5, 0.0)).unwrap();
        assert!(rel(half, Complex64::new(PI.sqrt(), 0.0)) < 1e-13);
        let g5 = gamma(Complex64::new(5.0, 0.0)).unwrap();
        assert!(rel(g5, Complex64::new(24.0, 0.0)) < 1e-13);
        let gi = gamma(Complex64::new(1.0, 1.0)).unwrap();
        assert!(rel(gi, Complex64::new(0.498_015_668_118_356_0, -0.154_949_828_301_810_7)) < 1e-12);
        let neg = gamma(Complex64::new(-0.5, 0.0)).unwrap();
        assert!(rel(neg, Complex64::new(-2.0 * PI.sqrt(), 0.0)) < 1e-13);
    }

    #[test]
    fn poles_rejected() {
        assert!(gamma(Complex64::new(0.0, 0.0)).is_none());
        assert!(gamma(Complex64::new(-3.0, 0.0)).is_none());
    }

    #[test]
    fn recurrence_holds_off_axis() {
        for &(x, y) in &[(0.3, 2.0), (2.5, -4.0), (-1.7, 0.6), (6.0, 10.0)] {
            let z = Complex64::new(x, y);
            let lhs = gamma(z + 1.0).unwrap();
            let rhs = z * gamma(z).unwrap();
            assert!(rel(lhs, rhs) < 1e-12, "{z}");
        }
    }
}
