//! Representation numbers r(n) = #{m ∈ Z^k : Q(m) = n} and the cumulative
//! counts A(N) = Σ_{1≤n≤N} r(n), by exact lattice enumeration.

use crate::error::{Error, Result};
use crate::numerics::{gamma, ols};
use crate::quadform::QuadraticForm;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// Largest number of lattice points [`rep_table`] will visit.
pub const REP_BUDGET: f64 = 3e9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepTable {
    pub form: QuadraticForm,
    pub upto: usize,
    /// r(n) for n = 0..=upto with r(0) set to 0 (the origin is excluded).
    pub counts: Vec<u64>,
    /// A(n) for n = 0..=upto.
    pub cumulative: Vec<u64>,
}

/// Volume of {x : Q(x) ≤ 1}, so that A(N) ~ vol · N^{k/2}.
pub fn ellipsoid_volume(form: &QuadraticForm) -> f64 {
    let k = form.dim() as f64;
    let ball = std::f64::consts::PI.powf(k / 2.0) / gamma(Complex64::new(k / 2.0 + 1.0, 0.0)).map_or(f64::NAN, |g| g.re);
    ball * 2f64.powf(k / 2.0) / (form.det() as f64).sqrt()
}

pub fn rep_table(form: &QuadraticForm, upto: usize) -> Result<RepTable> {
    if upto < 1 {
        return Err(Error::Precondition("rep_table needs N >= 1".into()));
    }
    let estimate = ellipsoid_volume(form) * (upto as f64).powf(form.dim() as f64 / 2.0);
    if estimate > REP_BUDGET || upto > 1 << 31 {
        return Err(Error::Budget(format!("about {estimate:.3e} lattice points up to N = {upto}")));
    }
    let n_max = upto as i64;
    let r = form.box_radius(n_max);
    let mut counts = (-r..=r)
        .into_par_iter()
        .fold(
            || vec![0u64; upto + 1],
            |mut acc, first| {
                form.for_each_lattice_point_with_first(first, n_max, &mut |_, v| acc[v as usize] += 1);
                acc
            },
        )
        .reduce(
            || vec![0u64; upto + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    counts[0] = 0;
    let cumulative = counts
        .iter()
        .scan(0u64, |s, &c| {
            *s += c;
            Some(*s)
        })
        .collect();
    Ok(RepTable { form: form.clone(), upto, counts, cumulative })
}

impl RepTable {
    pub fn r(&self, n: i64) -> u64 {
        if n < 1 || n as usize > self.upto {
            0
        } else {
            self.counts[n as usize]
        }
    }

    pub fn a(&self, n: usize) -> u64 {
        self.cumulative[n.min(self.upto)]
    }

    /// Σ_{n≥1} r(n) e^{-2πny}, truncated at the table end.
    pub fn theta_minus_one(&self, y: f64) -> f64 {
        let mut v: Vec<f64> =
            (1..=self.upto).filter(|&n| self.counts[n] > 0).map(|n| self.counts[n] as f64 * (-2.0 * std::f64::consts::PI * n as f64 * y).exp()).collect();
        v.reverse();
        v.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,r,A")?;
        for n in 1..=self.upto {
            writeln!(w, "{n},{},{}", self.counts[n], self.cumulative[n])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticFit {
    /// c with the exponent held at k/2 (log-mean over the samples).
    pub constant: f64,
    /// Slope of the free log-log fit.
    pub exponent: f64,
    /// exp(intercept) of the free fit.
    pub free_constant: f64,
    /// max |A(N') − c N'^{k/2}| / (c N'^{k/2}) over the samples.
    pub max_rel_err: f64,
    /// max |A(N') − c N'^{k/2}| / N'^{(k−1)/2}.
    pub error_term_constant: f64,
    /// Volume of the unit ellipsoid.
    pub predicted_constant: f64,
    /// Smallest and largest A(N') / N'^{k/2}.
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub samples: Vec<u64>,
}

/// Fit over dyadic N' = 2^i with max(16, N/2^10) ≤ N' ≤ N.
pub fn asymptotic_fit(table: &RepTable) -> Result<AsymptoticFit> {
    if table.upto < 1000 {
        return Err(Error::Precondition(format!("asymptotic fit needs N >= 1000, got {}", table.upto)));
    }
    let lo = (table.upto >> 10).max(16);
    let samples: Vec<u64> = (0..63).map(|i| 1u64 << i).filter(|&n| n as usize >= lo && n as usize <= table.upto).collect();
    let half_k = table.form.dim() as f64 / 2.0;
    let xs: Vec<f64> = samples.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&n| (table.a(n as usize) as f64).ln()).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::DegenerateFit("A(N') vanishes at a sample".into()));
    }
    let fit = ols(&xs, &ys)?;
    let log_c = xs.iter().zip(&ys).map(|(x, y)| y - half_k * x).sum::<f64>() / xs.len() as f64;
    let c = log_c.exp();
    let (mut rel, mut err_c, mut lo_r, mut hi_r) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for &n in &samples {
        let nf = n as f64;
        let a = table.a(n as usize) as f64;
        let main = c * nf.powf(half_k);
        rel = rel.max((a - main).abs() / main);
        err_c = err_c.max((a - main).abs() / nf.powf(half_k - 0.5));
        lo_r = lo_r.min(a / nf.powf(half_k));
        hi_r = hi_r.max(a / nf.powf(half_k));
    }
    Ok(AsymptoticFit {
        constant: c,
        exponent: fit.slope,
        free_constant: fit.intercept.exp(),
        max_rel_err: rel,
        error_term_constant: err_c,
        predicted_constant: ellipsoid_volume(&table.form),
        ratio_lo: lo_r,
        ratio_hi: hi_r,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::theta_direct;

    fn brute(form: &QuadraticForm, n: i64) -> u64 {
        let r = form.box_radius(n) + 1;
        let k = form.dim();
        let mut count = 0;
        let side = (2 * r + 1) as usize;
        for idx in 0..side.pow(k as u32) {
            let mut rest = idx;
            let m: Vec<i64> = (0..k)
                .map(|_| {
                    let c = (rest % side) as i64 - r;
                    rest /= side;
                    c
                })
                .collect();
            if form.eval(&m) == n {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn small_values() {
        let q = QuadraticForm::sum_of_squares(2);
        let t = rep_table(&q, 100).unwrap();
        assert_eq!((t.r(1), t.r(2), t.r(3), t.r(5), t.r(25)), (4, 4, 0, 8, 12));
        assert_eq!(t.a(0), 0);
        assert_eq!(t.a(100), 316);
        assert_eq!(t.r(0), 0);
        assert_eq!(t.r(-3), 0);
    }

    #[test]
    fn matches_brute_force_box_count() {
        for q in [
            QuadraticForm::sum_of_squares(1),
            QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap(),
            QuadraticForm::new(vec![vec![4, 1, 0], vec![1, 2, 1], vec![0, 1, 6]]).unwrap(),
        ] {
            let t = rep_table(&q, 40).unwrap();
            for n in 1..=40 {
                assert_eq!(t.r(n), brute(&q, n), "n = {n}");
                assert_eq!(t.r(n) % 2, 0);
            }
        }
    }

    #[test]
    fn agrees_with_theta_at_zero_frequency() {
        let q = QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let t = rep_table(&q, 400).unwrap();
        for y in [0.02, 0.1, 0.5] {
            let th = theta_direct(&q, y, 0.0, &[0.0, 0.0], 1e-14).unwrap().value;
            assert!((th.re - 1.0 - t.theta_minus_one(y)).abs() < 1e-11, "y = {y}");
        }
    }

    #[test]
    fn fit_on_disk() {
        let t = rep_table(&QuadraticForm::sum_of_squares(2), 20_000).unwrap();
        let f = asymptotic_fit(&t).unwrap();
        assert!((f.exponent - 1.0).abs() < 0.01);
        assert!((f.constant / std::f64::consts::PI - 1.0).abs() < 0.01);
        assert!((f.predicted_constant - std::f64::consts::PI).abs() < 1e-12);
        let hex = rep_table(&QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap(), 5000).unwrap();
        let g = asymptotic_fit(&hex).unwrap();
        assert!(g.ratio_lo > 0.0 && g.ratio_hi < 2.0 * g.predicted_constant);
        assert!((g.constant / g.predicted_constant - 1.0).abs() < 0.02);
        assert!(asymptotic_fit(&rep_table(&QuadraticForm::sum_of_squares(2), 999).unwrap()).is_err());
    }
}
