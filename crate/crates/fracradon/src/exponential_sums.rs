//! Complete Gauss sums S(a,b;q) of a quadratic form and their averages.

use crate::error::{Error, Result};
use crate::numerics::NeumaierSum;
use crate::quadform::QuadraticForm;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// e^{-2πi h/q} for every residue h mod q.
pub fn roots_of_unity(q: i64) -> Vec<Complex64> {
    (0..q)
        .map(|h| {
            let (s, c) = (TAU * h as f64 / q as f64).sin_cos();
            Complex64::new(c, -s)
        })
        .collect()
}

fn combine(counts: &[u64], roots: &[Complex64]) -> Complex64 {
    NeumaierSum::sum_iter(counts.iter().zip(roots).filter(|(c, _)| **c > 0).map(|(c, w)| w * *c as f64))
}

/// Iterate over all r in [0, q)^k in lexicographic order.
fn for_each_residue<F: FnMut(&[i64])>(k: usize, q: i64, mut f: F) {
    let mut r = vec![0i64; k];
    loop {
        f(&r);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            r[i] += 1;
            if r[i] < q {
                break;
            }
            r[i] = 0;
        }
    }
}

/// Parameters of one Gauss sum query, with b canonicalized to [1,q]^k.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussSumQuery<'a> {
    pub form: &'a QuadraticForm,
    pub a: i64,
    pub q: i64,
    pub b: Vec<i64>,
}

impl<'a> GaussSumQuery<'a> {
    pub fn new(form: &'a QuadraticForm, a: i64, b: &[i64], q: i64) -> Result<Self> {
        if q < 1 {
            return Err(Error::Precondition(format!("q must be positive, got {q}")));
        }
        if b.len() != form.dim() {
            return Err(Error::DimensionMismatch { expected: form.dim(), got: b.len() });
        }
        if gcd(a, q) != 1 {
            return Err(Error::Precondition(format!("gcd({a}, {q}) != 1")));
        }
        let a = (a - 1).rem_euclid(q) + 1;
        let b = b.iter().map(|&x| (x - 1).rem_euclid(q) + 1).collect();
        Ok(Self { form, a, q, b })
    }
}

/// S(a,b;q) = Σ_{r mod q} e^{-2πi(Q(r)a + r·b)/q} by direct summation with
/// exact integer phase reduction and multiplicity counting.
pub fn gauss_sum(query: &GaussSumQuery) -> Complex64 {
    let (q, k) = (query.q, query.form.dim());
    let mut counts = vec![0u64; q as usize];
    for_each_residue(k, q, |r| {
        let qa = (query.form.eval(r) as i128 * query.a as i128).rem_euclid(q as i128) as i64;
        let lin: i128 = r.iter().zip(&query.b).map(|(x, y)| *x as i128 * *y as i128).sum();
        counts[((qa as i128 + lin).rem_euclid(q as i128)) as usize] += 1;
    });
    combine(&counts, &roots_of_unity(q))
}

/// Convenience wrapper validating the arguments.
pub fn gauss_sum_of(form: &QuadraticForm, a: i64, b: &[i64], q: i64) -> Result<Complex64> {
    Ok(gauss_sum(&GaussSumQuery::new(form, a, b, q)?))
}

/// The bound |det A|^{k/2} q^{k/2} on |S(a,b;q)|.
pub fn gauss_sum_bound(form: &QuadraticForm, q: i64) -> f64 {
    let k = form.dim() as f64;
    (form.det() as f64).powf(k / 2.0) * (q as f64).powf(k / 2.0)
}

/// All values S(a, c; q) for c ∈ [0,q)^k, indexed lexicographically.
/// Cost O(q^{2k}) integer operations.
pub fn gauss_sum_table(form: &QuadraticForm, a: i64, q: i64) -> Result<Vec<Complex64>> {
    if q < 1 || gcd(a, q) != 1 {
        return Err(Error::Precondition(format!("need q >= 1 and gcd(a, q) = 1, got a={a}, q={q}")));
    }
    let k = form.dim();
    let qu = q as usize;
    let size = qu.checked_pow(k as u32).filter(|&s| s <= 1 << 24).ok_or_else(|| Error::Budget("gauss table too large".into()))?;
    let mut quad = Vec::with_capacity(size);
    let mut points = Vec::with_capacity(size * k);
    for_each_residue(k, q, |r| {
        quad.push(((form.eval(r) as i128 * a as i128).rem_euclid(q as i128)) as u32);
        points.extend(r.iter().map(|&x| x as u32));
    });
    let roots = roots_of_unity(q);
    let mut out = Vec::with_capacity(size);
    let mut counts = vec![0u64; qu];
    for_each_residue(k, q, |c| {
        counts.iter_mut().for_each(|x| *x = 0);
        for (idx, qa) in quad.iter().enumerate() {
            let r = &points[idx * k..idx * k + k];
            let mut h = *qa as u64;
            for i in 0..k {
                h += r[i] as u64 * c[i] as u64;
            }
            counts[(h % q as u64) as usize] += 1;
        }
        out.push(combine(&counts, &roots));
    });
    Ok(out)
}

/// Direct and closed-form values of the averaged Gauss sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedGaussSum {
    pub direct: Complex64,
    pub closed_form: Complex64,
}

impl AveragedGaussSum {
    pub fn relative_gap(&self) -> f64 {
        (self.direct - self.closed_form).norm() / self.closed_form.norm().max(1.0)
    }
}

/// Σ_{(a,q)=1} e^{-2πi n a/q} (a Ramanujan sum, exactly reduced).
pub fn ramanujan_sum(q: i64, n: i64) -> Complex64 {
    let roots = roots_of_unity(q);
    let mut counts = vec![0u64; q as usize];
    for a in 1..=q {
        if gcd(a, q) == 1 {
            counts[((n as i128 * a as i128).rem_euclid(q as i128)) as usize] += 1;
        }
    }
    combine(&counts, &roots)
}

/// Closed form q^k Σ_{(a,q)=1} e^{-2πi(Q(-l2)+l1)a/q}.
pub fn averaged_gauss_sum_closed(form: &QuadraticForm, q: i64, l1: i64, l2: &[i64]) -> Result<Complex64> {
    if q < 1 {
        return Err(Error::Precondition(format!("q must be positive, got {q}")));
    }
    let neg: Vec<i64> = l2.iter().map(|x| -x).collect();
    let n = form.evaluate(&neg)?.rem_euclid(q) + l1.rem_euclid(q);
    Ok(ramanujan_sum(q, n) * (q as f64).powi(form.dim() as i32))
}

/// The averaged sum Σ_{(a,q)=1} Σ_{b mod q} S(a,b;q) e^{-2πi l1 a/q} e^{-2πi l2·b/q},
/// evaluated directly and in closed form.
pub fn averaged_gauss_sum(form: &QuadraticForm, q: i64, l1: i64, l2: &[i64]) -> Result<AveragedGaussSum> {
    if l2.len() != form.dim() {
        return Err(Error::DimensionMismatch { expected: form.dim(), got: l2.len() });
    }
    let closed_form = averaged_gauss_sum_closed(form, q, l1, l2)?;
    let roots = roots_of_unity(q);
    let mut total = NeumaierSum::new();
    for a in (1..=q).filter(|&a| gcd(a, q) == 1) {
        let table = gauss_sum_table(form, a, q)?;
        let mut idx = 0;
        let mut inner = NeumaierSum::new();
        for_each_residue(form.dim(), q, |b| {
            let h: i128 = b.iter().zip(l2).map(|(x, y)| *x as i128 * *y as i128).sum();
            inner.add(table[idx] * roots[h.rem_euclid(q as i128) as usize]);
            idx += 1;
        });
        total.add(inner.value() * roots[((l1 as i128 * a as i128).rem_euclid(q as i128)) as usize]);
    }
    Ok(AveragedGaussSum { direct: total.value(), closed_form })
}

/// All averaged sums for |l1| ≤ l1_max and every l2 ∈ [0,q)^k, sharing one
/// Gauss table per a. Entries are (l1, l2, value).
pub fn averaged_gauss_sum_grid(form: &QuadraticForm, q: i64, l1_max: i64) -> Result<Vec<(i64, Vec<i64>, AveragedGaussSum)>> {
    let k = form.dim();
    let roots = roots_of_unity(q);
    let units: Vec<i64> = (1..=q).filter(|&a| gcd(a, q) == 1).collect();
    // t[a][l2] = Σ_b S(a,b) e(-l2·b/q)
    let mut t: Vec<Vec<Complex64>> = Vec::with_capacity(units.len());
    for &a in &units {
        let table = gauss_sum_table(form, a, q)?;
        let mut row = Vec::new();
        for_each_residue(k, q, |l2| {
            let mut idx = 0;
            let mut inner = NeumaierSum::new();
            for_each_residue(k, q, |b| {
                let h: i128 = b.iter().zip(l2).map(|(x, y)| *x as i128 * *y as i128).sum();
                inner.add(table[idx] * roots[h.rem_euclid(q as i128) as usize]);
                idx += 1;
            });
            row.push(inner.value());
        });
        t.push(row);
    }
    let mut out = Vec::new();
    let mut l2s = Vec::new();
    for_each_residue(k, q, |l2| l2s.push(l2.to_vec()));
    for l1 in -l1_max..=l1_max {
        for (li, l2) in l2s.iter().enumerate() {
            let mut s = NeumaierSum::new();
            for (ai, &a) in units.iter().enumerate() {
                s.add(t[ai][li] * roots[((l1 as i128 * a as i128).rem_euclid(q as i128)) as usize]);
            }
            let closed_form = averaged_gauss_sum_closed(form, q, l1, l2)?;
            out.push((l1, l2.clone(), AveragedGaussSum { direct: s.value(), closed_form }));
        }
    }
    Ok(out)
}

/// Per-modulus summary of [`gauss_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussSweepRow {
    pub q: i64,
    /// max |S(a,b;q)| over all coprime a and all b.
    pub max_abs: f64,
    pub bound: f64,
    pub ratio: f64,
    /// Largest relative gap between direct and closed-form averaged sums.
    pub avg_max_rel_gap: f64,
    /// Largest |averaged sum| / q^{k+1}.
    pub avg_max_over_bound: f64,
    pub pass: bool,
}

/// Exhaustive Gauss-sum bound check for 1 ≤ q ≤ q_max, together with the
/// averaged sums for each l1 in `l1_values` and every l2 whose coordinates
/// lie in {0, 1, 2, q−1} mod q.
pub fn gauss_sweep(form: &QuadraticForm, q_max: i64, l1_values: &[i64], tol: f64) -> Result<Vec<GaussSweepRow>> {
    if q_max < 1 {
        return Err(Error::Precondition("q_max must be positive".into()));
    }
    let k = form.dim();
    let mut rows: Vec<GaussSweepRow> = (1..=q_max)
        .rev()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&q| {
            let roots = roots_of_unity(q);
            let mut coords: Vec<i64> = [0, 1, 2, q - 1].iter().map(|c| c.rem_euclid(q)).collect();
            coords.sort_unstable();
            coords.dedup();
            let mut l2s: Vec<Vec<i64>> = vec![Vec::new()];
            for _ in 0..k {
                l2s = l2s.into_iter().flat_map(|p| coords.iter().map(move |&c| [p.clone(), vec![c]].concat())).collect();
            }
            let units: Vec<i64> = (1..=q).filter(|&a| gcd(a, q) == 1).collect();
            let mut max_abs = 0f64;
            // inner[a][l2] = Σ_b S(a,b) e(-l2·b/q)
            let mut inner = Vec::with_capacity(units.len());
            for &a in &units {
                let table = gauss_sum_table(form, a, q)?;
                max_abs = table.iter().fold(max_abs, |m, v| m.max(v.norm()));
                let row: Vec<Complex64> = l2s
                    .iter()
                    .map(|l2| {
                        let mut idx = 0;
                        let mut acc = NeumaierSum::new();
                        for_each_residue(k, q, |b| {
                            let h: i128 = b.iter().zip(l2).map(|(x, y)| *x as i128 * *y as i128).sum();
                            acc.add(table[idx] * roots[h.rem_euclid(q as i128) as usize]);
                            idx += 1;
                        });
                        acc.value()
                    })
                    .collect();
                inner.push(row);
            }
            let qk1 = (q as f64).powi(k as i32 + 1);
            let (mut gap, mut over) = (0f64, 0f64);
            for &l1 in l1_values {
                for (li, l2) in l2s.iter().enumerate() {
                    let mut acc = NeumaierSum::new();
                    for (ai, &a) in units.iter().enumerate() {
                        acc.add(inner[ai][li] * roots[((l1 as i128 * a as i128).rem_euclid(q as i128)) as usize]);
                    }
                    let v = AveragedGaussSum { direct: acc.value(), closed_form: averaged_gauss_sum_closed(form, q, l1, l2)? };
                    gap = gap.max(v.relative_gap());
                    over = over.max(v.direct.norm() / qk1);
                }
            }
            let bound = gauss_sum_bound(form, q);
            let ratio = max_abs / bound;
            let pass = ratio <= 1.0 + 1e-12 && gap <= tol && over <= 1.0 + tol;
            Ok(GaussSweepRow { q, max_abs, bound, ratio, avg_max_rel_gap: gap, avg_max_over_bound: over, pass })
        })
        .collect::<Result<_>>()?;
    rows.reverse();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x2() -> QuadraticForm {
        QuadraticForm::new(vec![vec![2]]).unwrap()
    }

    #[test]
    fn small_examples() {
        let q1 = gauss_sum_of(&x2(), 1, &[0], 1).unwrap();
        assert!((q1 - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let s3 = gauss_sum_of(&x2(), 1, &[0], 3).unwrap();
        assert!((s3 - Complex64::new(0.0, -3f64.sqrt())).norm() < 1e-14);
        assert!(gauss_sum_of(&x2(), 2, &[0], 4).is_err());
    }

    #[test]
    fn averaged_examples() {
        let one = averaged_gauss_sum(&x2(), 1, 0, &[0]).unwrap();
        assert!((one.direct - 1.0).norm() < 1e-14 && (one.closed_form - 1.0).norm() < 1e-14);
        let three = averaged_gauss_sum(&x2(), 3, 0, &[0]).unwrap();
        assert!((three.direct - 6.0).norm() < 1e-12 && (three.closed_form - 6.0).norm() < 1e-12);
    }

    #[test]
    fn table_matches_pointwise() {
        let q = QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let t = gauss_sum_table(&q, 2, 5).unwrap();
        let direct = gauss_sum_of(&q, 2, &[3, 1], 5).unwrap();
        assert!((t[3 * 5 + 1] - direct).norm() < 1e-12);
    }

    #[test]
    fn grid_matches_single() {
        let q = x2();
        for (l1, l2, v) in averaged_gauss_sum_grid(&q, 6, 3).unwrap() {
            let single = averaged_gauss_sum(&q, 6, l1, &l2).unwrap();
            assert!((single.direct - v.direct).norm() < 1e-10);
            assert!(v.relative_gap() < 1e-9);
        }
    }
}
