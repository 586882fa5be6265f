use num_complex::Complex64;

/// Neumaier compensated accumulator for complex values.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    re: f64,
    re_c: f64,
    im: f64,
    im_c: f64,
}

#[inline]
fn step(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        step(&mut self.re, &mut self.re_c, z.re);
        step(&mut self.im, &mut self.im_c, z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re + self.re_c, self.im + self.im_c)
    }

    pub fn sum_iter<I: IntoIterator<Item = Complex64>>(it: I) -> Complex64 {
        let mut s = Self::new();
        for z in it {
            s.add(z);
        }
        s.value()
    }
}

/// Compensated sum of real values.
pub fn sum_f64<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    NeumaierSum::sum_iter(it.into_iter().map(|x| Complex64::new(x, 0.0))).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum_f64(xs), 2.0);
    }
}
