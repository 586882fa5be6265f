//! Positive definite integral quadratic forms Q(x) = ½ xᵀAx and their adjoints.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Integer symmetric positive definite matrix with even diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct QuadraticForm {
    k: usize,
    a: Vec<i64>,
    det: i64,
    eig_min: f64,
    eig_max: f64,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Bareiss fraction-free elimination; returns the leading principal minors
/// (the last one is the determinant). Stops early on a zero pivot.
fn leading_minors(m: &[i128], k: usize) -> Vec<i128> {
    let mut a = m.to_vec();
    let mut minors = Vec::with_capacity(k);
    let mut prev = 1i128;
    for p in 0..k {
        let piv = a[p * k + p];
        minors.push(piv);
        if piv == 0 {
            break;
        }
        for i in p + 1..k {
            for j in p + 1..k {
                a[i * k + j] = (a[i * k + j] * piv - a[i * k + p] * a[p * k + j]) / prev;
            }
        }
        prev = piv;
    }
    minors
}

fn det_i128(m: &[i128], k: usize) -> i128 {
    if k == 0 {
        return 1;
    }
    // Bareiss with row pivoting for general (possibly singular-leading) minors.
    let mut a = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for p in 0..k {
        if a[p * k + p] == 0 {
            match (p + 1..k).find(|&r| a[r * k + p] != 0) {
                Some(r) => {
                    for c in 0..k {
                        a.swap(p * k + c, r * k + c);
                    }
                    sign = -sign;
                }
                None => return 0,
            }
        }
        let piv = a[p * k + p];
        for i in p + 1..k {
            for j in p + 1..k {
                a[i * k + j] = (a[i * k + j] * piv - a[i * k + p] * a[p * k + j]) / prev;
            }
        }
        prev = piv;
    }
    sign * a[(k - 1) * k + (k - 1)]
}

/// Number of eigenvalues of the symmetric matrix `a` strictly below `x`
/// (Sylvester inertia of a − xI via LDLᵀ).
fn count_below(a: &[f64], k: usize, x: f64) -> usize {
    let mut m: Vec<f64> = a.to_vec();
    for i in 0..k {
        m[i * k + i] -= x;
    }
    let mut neg = 0;
    for p in 0..k {
        let mut d = m[p * k + p];
        if d == 0.0 {
            d = -f64::EPSILON * (1.0 + x.abs());
        }
        if d < 0.0 {
            neg += 1;
        }
        for i in p + 1..k {
            let f = m[i * k + p] / d;
            for j in p + 1..k {
                m[i * k + j] -= f * m[p * k + j];
            }
        }
    }
    neg
}

fn eigen_bounds(a: &[i64], k: usize) -> (f64, f64) {
    let af: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..k {
        let r: f64 = (0..k).filter(|&j| j != i).map(|j| af[i * k + j].abs()).sum();
        lo = lo.min(af[i * k + i] - r);
        hi = hi.max(af[i * k + i] + r);
    }
    if lo == hi {
        return (lo, hi);
    }
    // 64 bisection steps for each extreme eigenvalue inside the Gershgorin interval.
    let (mut l, mut h) = (lo, hi);
    for _ in 0..64 {
        let m = 0.5 * (l + h);
        if count_below(&af, k, m) == 0 {
            l = m;
        } else {
            h = m;
        }
    }
    let emin = l;
    let (mut l2, mut h2) = (lo, hi);
    for _ in 0..64 {
        let m = 0.5 * (l2 + h2);
        if count_below(&af, k, m) < k {
            l2 = m;
        } else {
            h2 = m;
        }
    }
    let emax = h2;
    let slack = 1e-12 * hi.abs().max(1.0);
    ((emin - slack).max(f64::MIN_POSITIVE), emax + slack)
}

impl QuadraticForm {
    /// Build from the rows of A. Rejects non-square, asymmetric, odd-diagonal
    /// or non positive definite input.
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidForm("empty matrix".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::InvalidForm(format!("row of length {} in a {k}x{k} matrix", r.len())));
        }
        let a: Vec<i64> = rows.into_iter().flatten().collect();
        for i in 0..k {
            if a[i * k + i] % 2 != 0 {
                return Err(Error::InvalidForm(format!("diagonal entry A[{i}][{i}] = {} is odd", a[i * k + i])));
            }
            for j in 0..i {
                if a[i * k + j] != a[j * k + i] {
                    return Err(Error::InvalidForm(format!("A[{i}][{j}] != A[{j}][{i}]")));
                }
            }
        }
        if a.iter().any(|v| v.unsigned_abs() > 1 << 20) {
            return Err(Error::InvalidForm("entries must be bounded by 2^20".into()));
        }
        let wide: Vec<i128> = a.iter().map(|&v| v as i128).collect();
        let minors = leading_minors(&wide, k);
        if minors.len() < k || minors.iter().any(|&m| m <= 0) {
            return Err(Error::InvalidForm("matrix is not positive definite".into()));
        }
        let det = i64::try_from(minors[k - 1]).map_err(|_| Error::InvalidForm("determinant overflow".into()))?;
        let (eig_min, eig_max) = eigen_bounds(&a, k);
        Ok(Self { k, a, det, eig_min, eig_max })
    }

    /// Q(x) = x_1² + ... + x_k² (A = 2I).
    pub fn sum_of_squares(k: usize) -> Self {
        let rows = (0..k).map(|i| (0..k).map(|j| if i == j { 2 } else { 0 }).collect()).collect();
        Self::new(rows).expect("2I is valid")
    }

    pub fn dim(&self) -> usize {
        self.k
    }
    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.a[i * self.k + j]
    }
    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.a.chunks(self.k).map(|r| r.to_vec()).collect()
    }
    pub fn det(&self) -> i64 {
        self.det
    }
    pub fn eig_min(&self) -> f64 {
        self.eig_min
    }
    pub fn eig_max(&self) -> f64 {
        self.eig_max
    }

    /// Q(x) in exact integer arithmetic, checking the dimension and overflow.
    pub fn evaluate(&self, x: &[i64]) -> Result<i64> {
        if x.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: x.len() });
        }
        let v = self.eval_i128(x);
        i64::try_from(v).map_err(|_| Error::Domain("Q(x) overflows i64".into()))
    }

    /// Q(x) without the dimension check; caller guarantees `x.len() == k`.
    #[inline]
    pub fn eval(&self, x: &[i64]) -> i64 {
        self.eval_i128(x) as i64
    }

    fn eval_i128(&self, x: &[i64]) -> i128 {
        let k = self.k;
        let mut s = 0i128;
        for i in 0..k {
            let xi = x[i] as i128;
            s += (self.a[i * k + i] / 2) as i128 * xi * xi;
            for j in i + 1..k {
                s += self.a[i * k + j] as i128 * xi * x[j] as i128;
            }
        }
        s
    }

    /// Q at a real vector.
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let k = self.k;
        let mut s = 0.0;
        for i in 0..k {
            s += 0.5 * self.a[i * k + i] as f64 * x[i] * x[i];
            for j in i + 1..k {
                s += self.a[i * k + j] as f64 * x[i] * x[j];
            }
        }
        s
    }

    /// Bound on |m|∞ over the ellipsoid Q(m) ≤ n_max.
    pub fn box_radius(&self, n_max: i64) -> i64 {
        if n_max < 0 {
            return -1;
        }
        ((2.0 * n_max as f64 / self.eig_min).sqrt() * (1.0 + 1e-12)).floor() as i64 + 1
    }

    /// Visit every integer m with Q(m) ≤ n_max, in lexicographic order, passing
    /// (m, Q(m)). The outer k−1 coordinates run over a box; the last one is
    /// solved exactly from the quadratic inequality.
    pub fn for_each_lattice_point<F: FnMut(&[i64], i64)>(&self, n_max: i64, mut f: F) {
        let r = self.box_radius(n_max);
        if r < 0 {
            return;
        }
        for m1 in -r..=r {
            self.for_each_lattice_point_with_first(m1, n_max, &mut f);
        }
    }

    /// As [`for_each_lattice_point`](Self::for_each_lattice_point) restricted to m_1 = `first`.
    pub fn for_each_lattice_point_with_first<F: FnMut(&[i64], i64)>(&self, first: i64, n_max: i64, f: &mut F) {
        let k = self.k;
        let r = self.box_radius(n_max);
        let mut m = vec![0i64; k];
        m[0] = first;
        if k == 1 {
            let v = self.eval(&m);
            if v <= n_max {
                f(&m, v);
            }
            return;
        }
        // odometer over coordinates 1..k-1 (exclusive of the last)
        for x in m.iter_mut().take(k - 1).skip(1) {
            *x = -r;
        }
        let c2 = (self.a[k * k - 1] / 2) as i128;
        loop {
            m[k - 1] = 0;
            let c0 = self.eval_i128(&m);
            let lin: i128 = (0..k - 1).map(|i| self.a[i * k + k - 1] as i128 * m[i] as i128).sum();
            // c2 x² + lin x + c0 ≤ n_max
            let disc = (lin * lin) as f64 - 4.0 * c2 as f64 * (c0 - n_max as i128) as f64;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                let mut lo = ((-(lin as f64) - sq) / (2.0 * c2 as f64)).floor() as i64;
                let mut hi = ((-(lin as f64) + sq) / (2.0 * c2 as f64)).ceil() as i64;
                let val = |x: i64| c2 * x as i128 * x as i128 + lin * x as i128 + c0;
                while val(lo) > n_max as i128 && lo <= hi {
                    lo += 1;
                }
                while lo > i64::MIN + 1 && val(lo - 1) <= n_max as i128 {
                    lo -= 1;
                }
                while val(hi) > n_max as i128 && hi >= lo {
                    hi -= 1;
                }
                while val(hi + 1) <= n_max as i128 {
                    hi += 1;
                }
                let mut v = val(lo);
                for x in lo..=hi {
                    m[k - 1] = x;
                    f(&m, v as i64);
                    v += c2 * (2 * x as i128 + 1) + lin;
                }
            }
            // advance coordinates k-2 down to 1
            let mut i = k - 1;
            loop {
                if i == 1 {
                    return;
                }
                i -= 1;
                m[i] += 1;
                if m[i] <= r {
                    break;
                }
                m[i] = -r;
            }
        }
    }

    pub fn adjoint(&self) -> AdjointForm {
        let k = self.k;
        let wide: Vec<i128> = self.a.iter().map(|&v| v as i128).collect();
        let mut adj = vec![0i128; k * k];
        for i in 0..k {
            for j in 0..k {
                // cofactor C_ji goes to adj[i][j]
                let mut minor = Vec::with_capacity((k - 1) * (k - 1));
                for r in (0..k).filter(|&r| r != j) {
                    for c in (0..k).filter(|&c| c != i) {
                        minor.push(wide[r * k + c]);
                    }
                }
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                adj[i * k + j] = sign * det_i128(&minor, k - 1);
            }
        }
        AdjointForm { k, num: adj, den: self.det as i128 }
    }
}

impl TryFrom<Vec<Vec<i64>>> for QuadraticForm {
    type Error = Error;
    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<QuadraticForm> for Vec<Vec<i64>> {
    fn from(q: QuadraticForm) -> Self {
        q.rows()
    }
}

/// Q*(x) = ½ xᵀA⁻¹x with A⁻¹ stored as an integer numerator matrix over det A.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointForm {
    k: usize,
    num: Vec<i128>,
    den: i128,
}

impl AdjointForm {
    pub fn dim(&self) -> usize {
        self.k
    }
    /// Entry (i,j) of A⁻¹ as (numerator, denominator) before reduction.
    pub fn entry(&self, i: usize, j: usize) -> (i128, i128) {
        (self.num[i * self.k + j], self.den)
    }

    /// Exact Q*(x) for integer x, as a reduced fraction (numerator, denominator > 0).
    pub fn evaluate_exact(&self, x: &[i64]) -> Result<(i128, i128)> {
        if x.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: x.len() });
        }
        let k = self.k;
        let mut s = 0i128;
        for i in 0..k {
            for j in 0..k {
                s += self.num[i * k + j] * x[i] as i128 * x[j] as i128;
            }
        }
        let d = 2 * self.den;
        let g = gcd(s, d).max(1);
        Ok((s / g, d / g))
    }

    /// Q*(x) at a real vector.
    #[inline]
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let k = self.k;
        let mut s = 0.0;
        for i in 0..k {
            let mut row = 0.0;
            for j in 0..k {
                row += self.num[i * k + j] as f64 * x[j];
            }
            s += row * x[i];
        }
        s / (2.0 * self.den as f64)
    }
}

/// Constants (c1, c2) with c1·Q(x) ≤ R(x) ≤ c2·Q(x) for all real x.
pub fn comparability_constants(q: &QuadraticForm, r: &QuadraticForm) -> Result<(f64, f64)> {
    if q.dim() != r.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), got: r.dim() });
    }
    Ok((r.eig_min() / q.eig_max(), r.eig_max() / q.eig_min()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hex() -> QuadraticForm {
        QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let q = QuadraticForm::new(vec![vec![2]]).unwrap();
        assert_eq!(q.evaluate(&[3]).unwrap(), 9);
        assert_eq!(hex().evaluate(&[1, 1]).unwrap(), 3);
        assert_eq!(hex().evaluate(&[0, 0]).unwrap(), 0);
        assert!(matches!(hex().evaluate(&[1]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(QuadraticForm::new(vec![vec![1]]).is_err());
        assert!(QuadraticForm::new(vec![vec![2, 1], vec![0, 2]]).is_err());
        assert!(QuadraticForm::new(vec![vec![2, 3], vec![3, 2]]).is_err());
        assert!(QuadraticForm::new(vec![vec![-2]]).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let a = hex().adjoint();
        // (x1² − x1x2 + x2²)/3 at (1,0), (1,1), (2,-1)
        assert_eq!(a.evaluate_exact(&[1, 0]).unwrap(), (1, 3));
        assert_eq!(a.evaluate_exact(&[1, 1]).unwrap(), (1, 3));
        assert_eq!(a.evaluate_exact(&[2, -1]).unwrap(), (7, 3));
        let s = QuadraticForm::sum_of_squares(3).adjoint();
        assert_eq!(s.evaluate_exact(&[1, 2, 3]).unwrap(), (7, 2));
        let x2 = QuadraticForm::new(vec![vec![2]]).unwrap().adjoint();
        assert!((x2.eval_f64(&[0.5]) - 0.0625).abs() < 1e-16);
    }

    #[test]
    fn adjoint_is_inverse() {
        let q = QuadraticForm::new(vec![vec![4, 1, 0], vec![1, 2, 1], vec![0, 1, 6]]).unwrap();
        let adj = q.adjoint();
        let k = 3;
        for i in 0..k {
            for j in 0..k {
                let s: i128 = (0..k).map(|l| adj.entry(i, l).0 * q.entry(l, j) as i128).sum();
                assert_eq!(s, if i == j { q.det() as i128 } else { 0 });
            }
        }
    }

    #[test]
    fn eigen_bounds_bracket_spectrum() {
        let q = hex();
        assert!(q.eig_min() <= 1.0 && q.eig_min() > 1.0 - 1e-9);
        assert!(q.eig_max() >= 3.0 && q.eig_max() < 3.0 + 1e-9);
        let x = QuadraticForm::new(vec![vec![2]]).unwrap();
        assert_eq!((x.eig_min(), x.eig_max()), (2.0, 2.0));
    }

    #[test]
    fn ellipsoid_enumeration_matches_box() {
        let forms = [hex(), QuadraticForm::sum_of_squares(3), QuadraticForm::new(vec![vec![2]]).unwrap()];
        for q in &forms {
            let n_max = 30;
            let mut seen = Vec::new();
            q.for_each_lattice_point(n_max, |m, v| {
                assert_eq!(v, q.eval(m));
                seen.push(m.to_vec());
            });
            let k = q.dim();
            let mut expected = Vec::new();
            let side = 13i64;
            let total = (2 * side + 1).pow(k as u32);
            for idx in 0..total {
                let mut t = idx;
                let m: Vec<i64> = (0..k)
                    .map(|_| {
                        let c = t % (2 * side + 1) - side;
                        t /= 2 * side + 1;
                        c
                    })
                    .collect();
                if q.eval(&m) <= n_max {
                    expected.push(m);
                }
            }
            seen.sort();
            expected.sort();
            assert_eq!(seen, expected);
        }
    }

    #[test]
    fn comparability_examples() {
        let x = QuadraticForm::new(vec![vec![2]]).unwrap();
        let two_x = QuadraticForm::new(vec![vec![4]]).unwrap();
        assert_eq!(comparability_constants(&x, &two_x).unwrap(), (2.0, 2.0));
        let (c1, c2) = comparability_constants(&hex(), &hex()).unwrap();
        assert!(c1 <= 1.0 && 1.0 <= c2);
    }
}
