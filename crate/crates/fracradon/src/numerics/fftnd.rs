//! Multi-dimensional FFTs on row-major arrays, one axis at a time.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// Apply `f` to every line of a row-major array along each axis in turn.
pub fn transform_axes<F: FnMut(usize, &mut [Complex64])>(data: &mut [Complex64], dims: &[usize], mut f: F) {
    let total: usize = dims.iter().product();
    assert_eq!(total, data.len(), "array size does not match dims");
    let mut line = Vec::new();
    for (axis, &len) in dims.iter().enumerate() {
        let stride: usize = dims[axis + 1..].iter().product();
        line.resize(len, Complex64::new(0.0, 0.0));
        for start in (0..total).filter(|s| (s / stride).is_multiple_of(len)) {
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[start + i * stride];
            }
            f(axis, &mut line);
            for (i, v) in line.iter().enumerate() {
                data[start + i * stride] = *v;
            }
        }
    }
}

/// Unnormalized forward (e^{-2πi}) or inverse (e^{+2πi}) DFT over all axes.
pub fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let dir = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
    let mut planner = FftPlanner::new();
    let plans: Vec<_> = dims.iter().map(|&n| planner.plan_fft(n, dir)).collect();
    transform_axes(data, dims, |axis, line| plans[axis].process(line));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_dft() {
        let dims = [4usize, 3];
        let x: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let mut y = x.clone();
        fft_nd(&mut y, &dims, false);
        for k0 in 0..4 {
            for k1 in 0..3 {
                let mut s = Complex64::new(0.0, 0.0);
                for n0 in 0..4 {
                    for n1 in 0..3 {
                        let ph = -std::f64::consts::TAU * ((k0 * n0) as f64 / 4.0 + (k1 * n1) as f64 / 3.0);
                        s += x[n0 * 3 + n1] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((s - y[k0 * 3 + k1]).norm() < 1e-12);
            }
        }
        fft_nd(&mut y, &dims, true);
        for (a, b) in x.iter().zip(&y) {
            assert!((a * 12.0 - b).norm() < 1e-11);
        }
    }
}
