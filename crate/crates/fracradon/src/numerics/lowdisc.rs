/// Additive-recurrence (Kronecker) low-discrepancy sequence in [0,1)^d using
/// the generalized golden ratio. Deterministic for a given seed.
#[derive(Debug, Clone)]
pub struct Kronecker {
    alpha: Vec<f64>,
    offset: Vec<f64>,
    n: u64,
}

impl Kronecker {
    pub fn new(dim: usize, seed: u64) -> Self {
        // phi_d solves x^{d+1} = x + 1
        let mut g = 2.0f64;
        for _ in 0..64 {
            g = (1.0 + g).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|i| (1.0 / g.powi(i as i32)).fract()).collect();
        let mut state = seed ^ 0x9E37_79B9_7F4A_7C15;
        let offset = (0..dim)
            .map(|_| {
                // splitmix64
                state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
                let mut z = state;
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
                z ^= z >> 31;
                (z >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        Self { alpha, offset, n: 0 }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        self.n += 1;
        let n = self.n as f64;
        self.alpha.iter().zip(&self.offset).map(|(a, o)| (o + n * a).rem_euclid(1.0)).collect()
    }
}

impl Iterator for Kronecker {
    type Item = Vec<f64>;
    fn next(&mut self) -> Option<Vec<f64>> {
        Some(self.next_point())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_unit_square_evenly() {
        let pts: Vec<_> = Kronecker::new(2, 7).take(4096).collect();
        let mut bins = [0usize; 16];
        for p in &pts {
            assert!(p.iter().all(|x| (0.0..1.0).contains(x)));
            bins[(p[0] * 4.0) as usize * 4 + (p[1] * 4.0) as usize] += 1;
        }
        assert!(bins.iter().all(|&b| (220..=292).contains(&b)), "{bins:?}");
    }

    #[test]
    fn deterministic() {
        let a: Vec<_> = Kronecker::new(3, 1).take(5).collect();
        let b: Vec<_> = Kronecker::new(3, 1).take(5).collect();
        assert_eq!(a, b);
    }
}
