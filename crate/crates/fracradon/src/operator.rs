//! The operator J f(n, t) = Σ_{m≠0} f(n − m, t − Q1(m)) Q2(m)^{-kλ/2} on finitely
//! supported lattice functions, and its cyclic counterpart on periodic grids
//! computed through the DFT.

use crate::error::{Error, Result};
use crate::numerics::{fft_nd, NeumaierSum};
use crate::quadform::QuadraticForm;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

/// Largest number of (output point, support point) pairs visited by [`apply_direct`].
pub const DIRECT_BUDGET: f64 = 4e9;

/// A finitely supported function on Z^k × Z. Zero values are never stored.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct LatticeFunction {
    k: usize,
    support: BTreeMap<(Vec<i64>, i64), Complex64>,
}

impl LatticeFunction {
    pub fn new(k: usize) -> Self {
        Self { k, support: BTreeMap::new() }
    }

    pub fn delta(k: usize) -> Self {
        let mut f = Self::new(k);
        f.support.insert((vec![0; k], 0), Complex64::new(1.0, 0.0));
        f
    }

    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Set f(n, t); a zero value removes the point.
    pub fn set(&mut self, n: &[i64], t: i64, v: Complex64) -> Result<()> {
        if n.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: n.len() });
        }
        if v == Complex64::new(0.0, 0.0) {
            self.support.remove(&(n.to_vec(), t));
        } else {
            self.support.insert((n.to_vec(), t), v);
        }
        Ok(())
    }

    pub fn get(&self, n: &[i64], t: i64) -> Complex64 {
        self.support.get(&(n.to_vec(), t)).copied().unwrap_or_default()
    }

    /// Points in lexicographic order of (n, t).
    pub fn iter(&self) -> impl Iterator<Item = (&[i64], i64, Complex64)> {
        self.support.iter().map(|((n, t), v)| (n.as_slice(), *t, *v))
    }

    pub fn shifted(&self, n0: &[i64], t0: i64) -> Self {
        let support = self.support.iter().map(|((n, t), v)| ((n.iter().zip(n0).map(|(a, b)| a + b).collect(), t + t0), *v)).collect();
        Self { k: self.k, support }
    }

    pub fn scale_add(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        if other.k != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: other.k });
        }
        let mut out = Self::new(self.k);
        for ((n, t), v) in &self.support {
            out.set(n, *t, v * a)?;
        }
        for ((n, t), v) in &other.support {
            let cur = out.get(n, *t);
            out.set(n, *t, cur + v * b)?;
        }
        Ok(out)
    }

    /// ‖f‖_p for p ∈ [1, ∞].
    pub fn norm(&self, p: f64) -> Result<f64> {
        lp_norm(self.support.values().map(|v| v.norm()), p)
    }

    /// CSV rows n_1..n_k, t, re, im with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header: Vec<String> = (1..=self.k).map(|i| format!("n{i}")).collect();
        header.extend(["t", "re", "im"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for ((n, t), v) in &self.support {
            let ns: Vec<String> = n.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{},{t},{:.16e},{:.16e}", ns.join(","), v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Io("empty lattice-function file".into()))??;
        let cols = header.split(',').count();
        if cols < 4 {
            return Err(Error::Io(format!("expected at least 4 columns, got {cols}")));
        }
        let k = cols - 3;
        let mut f = Self::new(k);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != cols {
                return Err(Error::Io(format!("row {}: expected {cols} fields", i + 2)));
            }
            let bad = |e: &dyn std::fmt::Display| Error::Io(format!("row {}: {e}", i + 2));
            let n: Vec<i64> = parts[..k].iter().map(|s| s.parse::<i64>()).collect::<std::result::Result<_, _>>().map_err(|e| bad(&e))?;
            let t: i64 = parts[k].parse().map_err(|e| bad(&e))?;
            let re: f64 = parts[k + 1].parse().map_err(|e| bad(&e))?;
            let im: f64 = parts[k + 2].parse().map_err(|e| bad(&e))?;
            f.set(&n, t, Complex64::new(re, im))?;
        }
        Ok(f)
    }
}

fn lp_norm<I: Iterator<Item = f64>>(values: I, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Precondition(format!("p must lie in [1, ∞], got {p}")));
    }
    if p.is_infinite() {
        return Ok(values.fold(0.0, f64::max));
    }
    let mut v: Vec<f64> = values.map(|x| x.powf(p)).collect();
    v.sort_by(f64::total_cmp);
    Ok(v.iter().sum::<f64>().powf(1.0 / p))
}

/// Box of output points: n_lo ≤ n ≤ n_hi coordinatewise, t_lo ≤ t ≤ t_hi.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Window {
    pub n_lo: Vec<i64>,
    pub n_hi: Vec<i64>,
    pub t_lo: i64,
    pub t_hi: i64,
}

impl Window {
    pub fn points(&self) -> Vec<(Vec<i64>, i64)> {
        let k = self.n_lo.len();
        let mut out = Vec::new();
        let mut n = self.n_lo.clone();
        if self.n_hi.iter().zip(&self.n_lo).any(|(h, l)| h < l) || self.t_hi < self.t_lo {
            return out;
        }
        loop {
            for t in self.t_lo..=self.t_hi {
                out.push((n.clone(), t));
            }
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                n[i] += 1;
                if n[i] <= self.n_hi[i] {
                    break;
                }
                n[i] = self.n_lo[i];
            }
        }
    }

    pub fn size(&self) -> f64 {
        self.n_lo.iter().zip(&self.n_hi).map(|(l, h)| (h - l + 1).max(0) as f64).product::<f64>() * (self.t_hi - self.t_lo + 1).max(0) as f64
    }
}

/// f grouped by spatial point.
struct SupportIndex {
    spatial: Vec<(Vec<i64>, Column)>,
}

/// Contiguous runs of t values, each with its first t and the values.
struct Column {
    runs: Vec<(i64, Vec<Complex64>)>,
}

impl Column {
    fn push(&mut self, t: i64, v: Complex64) {
        match self.runs.last_mut() {
            Some((start, vals)) if *start + vals.len() as i64 == t => vals.push(v),
            _ => self.runs.push((t, vec![v])),
        }
    }

    fn lookup(&self, t: i64) -> Option<Complex64> {
        let i = self.runs.partition_point(|(start, _)| *start <= t).checked_sub(1)?;
        let (start, vals) = &self.runs[i];
        vals.get((t - start) as usize).copied()
    }
}

impl SupportIndex {
    fn new(f: &LatticeFunction) -> Self {
        let mut spatial: Vec<(Vec<i64>, Column)> = Vec::new();
        for ((n, t), v) in &f.support {
            match spatial.last_mut() {
                Some((last, col)) if last == n => col.push(*t, *v),
                _ => spatial.push((n.clone(), Column { runs: vec![(*t, vec![*v])] })),
            }
        }
        Self { spatial }
    }

    /// Largest |n_i − n'_i| between an output point and a support column.
    fn max_offset(&self, points: &[(Vec<i64>, i64)]) -> i64 {
        let k = self.spatial.first().map_or(0, |s| s.0.len());
        let mut span = 0i64;
        for i in 0..k {
            let (flo, fhi) = self.spatial.iter().fold((i64::MAX, i64::MIN), |(lo, hi), (n, _)| (lo.min(n[i]), hi.max(n[i])));
            let (plo, phi) = points.iter().fold((i64::MAX, i64::MIN), |(lo, hi), (n, _)| (lo.min(n[i]), hi.max(n[i])));
            span = span.max(phi.saturating_sub(flo)).max(fhi.saturating_sub(plo));
        }
        span
    }
}

/// Precomputed Q2(m)^{-kλ/2} for small values of Q2(m).
const WEIGHT_TABLE_MAX: f64 = 4e6;

/// Q2(m)^{-kλ/2} on the principal branch.
fn weight(q2: &QuadraticForm, m: &[i64], kappa: Complex64) -> Complex64 {
    (-kappa * (q2.eval(m) as f64).ln()).exp()
}

fn check_pair(q1: &QuadraticForm, q2: &QuadraticForm, f: &LatticeFunction) -> Result<()> {
    if q1.dim() != q2.dim() {
        return Err(Error::DimensionMismatch { expected: q1.dim(), got: q2.dim() });
    }
    if f.dim() != q1.dim() {
        return Err(Error::DimensionMismatch { expected: q1.dim(), got: f.dim() });
    }
    Ok(())
}

/// J f at the given output points, in the given order. Each value sums over
/// m = n − n' for n' in the spatial support of f, lexicographically in m.
pub fn apply_direct_at(q1: &QuadraticForm, q2: &QuadraticForm, lambda: Complex64, f: &LatticeFunction, points: &[(Vec<i64>, i64)]) -> Result<Vec<Complex64>> {
    check_pair(q1, q2, f)?;
    let idx = SupportIndex::new(f);
    if points.len() as f64 * idx.spatial.len() as f64 > DIRECT_BUDGET {
        return Err(Error::Budget(format!("{} output points x {} support columns", points.len(), idx.spatial.len())));
    }
    let kappa = lambda * (q1.dim() as f64 / 2.0);
    let span = idx.max_offset(points) as f64;
    let q_bound = q2.eig_max() / 2.0 * q2.dim() as f64 * span * span;
    let table: Vec<Complex64> = if q_bound <= WEIGHT_TABLE_MAX && !points.is_empty() {
        (0..=q_bound.ceil() as usize + 1).map(|v| (-kappa * (v as f64).ln()).exp()).collect()
    } else {
        Vec::new()
    };
    Ok(points
        .par_iter()
        .map(|(n, t)| {
            let mut acc = NeumaierSum::new();
            let mut m = vec![0i64; n.len()];
            for (np, col) in idx.spatial.iter().rev() {
                for i in 0..m.len() {
                    m[i] = n[i] - np[i];
                }
                if m.iter().all(|&x| x == 0) {
                    continue;
                }
                if let Some(v) = col.lookup(t - q1.eval(&m)) {
                    let w = match table.get(q2.eval(&m) as usize) {
                        Some(w) => *w,
                        None => weight(q2, &m, kappa),
                    };
                    acc.add(v * w);
                }
            }
            acc.value()
        })
        .collect())
}

/// J f on a window, exact (the sum over m is finite).
pub fn apply_direct(q1: &QuadraticForm, q2: &QuadraticForm, lambda: Complex64, f: &LatticeFunction, window: &Window) -> Result<LatticeFunction> {
    if window.n_lo.len() != f.dim() || window.n_hi.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: window.n_lo.len() });
    }
    let cols = SupportIndex::new(f).spatial.len() as f64;
    if window.size() * cols > DIRECT_BUDGET {
        return Err(Error::Budget(format!("window of {} points x {cols} support columns", window.size())));
    }
    let pts = window.points();
    let vals = apply_direct_at(q1, q2, lambda, f, &pts)?;
    let mut out = LatticeFunction::new(f.dim());
    for ((n, t), v) in pts.iter().zip(vals) {
        out.set(n, *t, v)?;
    }
    Ok(out)
}

/// ‖J f restricted to the window‖_q / ‖f‖_p.
pub fn norm_ratio(q1: &QuadraticForm, q2: &QuadraticForm, lambda: Complex64, f: &LatticeFunction, p: f64, q: f64, window: &Window) -> Result<f64> {
    let nf = f.norm(p)?;
    if nf == 0.0 {
        return Err(Error::Precondition("‖f‖_p = 0".into()));
    }
    let jf = apply_direct(q1, q2, lambda, f, window)?;
    Ok(jf.norm(q)? / nf)
}

/// Values on (Z/N)^k × Z/M, row-major with t fastest: index ((n_1 N + n_2)…)M + t.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicGrid {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub values: Vec<Complex64>,
}

impl PeriodicGrid {
    pub fn zeros(k: usize, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Precondition("grid dimensions must be positive".into()));
        }
        Ok(Self { k, n, m, values: vec![Complex64::new(0.0, 0.0); n.pow(k as u32) * m] })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.n; self.k];
        d.push(self.m);
        d
    }

    pub fn index(&self, n: &[i64], t: i64) -> usize {
        let mut idx = 0usize;
        for x in n {
            idx = idx * self.n + x.rem_euclid(self.n as i64) as usize;
        }
        idx * self.m + t.rem_euclid(self.m as i64) as usize
    }

    /// Spatial coordinates of a flat index.
    pub fn coords(&self, idx: usize) -> (Vec<i64>, i64) {
        let t = (idx % self.m) as i64;
        let mut rest = idx / self.m;
        let mut n = vec![0i64; self.k];
        for i in (0..self.k).rev() {
            n[i] = (rest % self.n) as i64;
            rest /= self.n;
        }
        (n, t)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::Precondition("grid shapes differ".into()));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Header k, N, M as u64 followed by (re, im) f64 pairs, all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        for h in [self.k, self.n, self.m] {
            w.write_all(&(h as u64).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut head = [0usize; 3];
        for h in &mut head {
            r.read_exact(&mut b8)?;
            *h = u64::from_le_bytes(b8) as usize;
        }
        let [k, n, m] = head;
        if k == 0 || k > 8 {
            return Err(Error::Io(format!("unsupported grid dimension {k}")));
        }
        let len = n.checked_pow(k as u32).and_then(|x| x.checked_mul(m)).filter(|&x| x <= 1 << 30).ok_or_else(|| Error::Io("grid too large".into()))?;
        let mut g = Self::zeros(k, n, m)?;
        for v in g.values.iter_mut().take(len) {
            r.read_exact(&mut b8)?;
            let re = f64::from_le_bytes(b8);
            r.read_exact(&mut b8)?;
            *v = Complex64::new(re, f64::from_le_bytes(b8));
        }
        Ok(g)
    }
}

fn check_spectral(grid: &PeriodicGrid, radius: usize) -> Result<()> {
    if !grid.n.is_power_of_two() || !grid.m.is_power_of_two() {
        return Err(Error::Precondition(format!("grid sizes N = {}, M = {} must be powers of two", grid.n, grid.m)));
    }
    if 2 * radius > grid.n {
        return Err(Error::Precondition(format!("kernel radius {radius} exceeds N/2 = {}", grid.n / 2)));
    }
    Ok(())
}

/// Kernel entries (m, Q(m), Q(m)^{-kλ/2}) for 0 < |m|∞ ≤ R, lexicographic in m.
fn kernel_entries(q: &QuadraticForm, lambda: Complex64, radius: usize) -> Vec<(Vec<i64>, i64, Complex64)> {
    let k = q.dim();
    let kappa = lambda * (k as f64 / 2.0);
    let r = radius as i64;
    let mut out = Vec::new();
    let mut m = vec![-r; k];
    loop {
        if m.iter().any(|&x| x != 0) {
            out.push((m.clone(), q.eval(&m), weight(q, &m, kappa)));
        }
        let mut i = k;
        loop {
            if i == 0 {
                return out;
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

/// The truncated kernel K(m, u) = Q(m)^{-kλ/2}[u ≡ Q(m) mod M] periodized onto the grid.
pub fn periodized_kernel(q: &QuadraticForm, lambda: Complex64, k: usize, n: usize, m: usize, radius: usize) -> Result<PeriodicGrid> {
    if q.dim() != k {
        return Err(Error::DimensionMismatch { expected: q.dim(), got: k });
    }
    let mut g = PeriodicGrid::zeros(k, n, m)?;
    check_spectral(&g, radius)?;
    for (mv, qm, w) in kernel_entries(q, lambda, radius) {
        let i = g.index(&mv, qm);
        g.values[i] += w;
    }
    Ok(g)
}

/// inverseDFT(DFT(K)·DFT(f)): the cyclic convolution of f with the periodized kernel.
pub fn apply_spectral_periodic(q: &QuadraticForm, lambda: Complex64, grid: &PeriodicGrid, radius: usize) -> Result<PeriodicGrid> {
    check_spectral(grid, radius)?;
    let mut kern = periodized_kernel(q, lambda, grid.k, grid.n, grid.m, radius)?;
    let dims = grid.dims();
    let mut f = grid.values.clone();
    fft_nd(&mut kern.values, &dims, false);
    fft_nd(&mut f, &dims, false);
    let scale = 1.0 / f.len() as f64;
    for (a, b) in f.iter_mut().zip(&kern.values) {
        *a *= b * scale;
    }
    fft_nd(&mut f, &dims, true);
    Ok(PeriodicGrid { values: f, ..grid.clone() })
}

/// The same cyclic convolution summed directly (oracle for the spectral path).
pub fn cyclic_convolution_direct(q: &QuadraticForm, lambda: Complex64, grid: &PeriodicGrid, radius: usize) -> Result<PeriodicGrid> {
    if q.dim() != grid.k {
        return Err(Error::DimensionMismatch { expected: q.dim(), got: grid.k });
    }
    if 2 * radius > grid.n {
        return Err(Error::Precondition(format!("kernel radius {radius} exceeds N/2 = {}", grid.n / 2)));
    }
    let entries = kernel_entries(q, lambda, radius);
    let values = (0..grid.values.len())
        .into_par_iter()
        .map(|idx| {
            let (n, t) = grid.coords(idx);
            let mut acc = NeumaierSum::new();
            let mut src = vec![0i64; n.len()];
            for (m, qm, w) in &entries {
                for i in 0..n.len() {
                    src[i] = n[i] - m[i];
                }
                acc.add(grid.values[grid.index(&src, t - qm)] * w);
            }
            acc.value()
        })
        .collect();
    Ok(PeriodicGrid { values, ..grid.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn x2() -> QuadraticForm {
        QuadraticForm::sum_of_squares(1)
    }

    fn random_grid(k: usize, n: usize, m: usize, seed: u64) -> PeriodicGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = PeriodicGrid::zeros(k, n, m).unwrap();
        for v in &mut g.values {
            *v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        g
    }

    #[test]
    fn delta_response() {
        let w = Window { n_lo: vec![-3], n_hi: vec![3], t_lo: 0, t_hi: 9 };
        let out = apply_direct(&x2(), &x2(), c(0.5, 0.0), &LatticeFunction::delta(1), &w).unwrap();
        assert!((out.get(&[2], 4).re - 0.5f64.sqrt()).abs() < 1e-15);
        for (n, t, v) in out.iter() {
            assert!(n[0] != 0 && t == n[0] * n[0]);
            assert!((v.re - (n[0].abs() as f64).powf(-0.5)).abs() < 1e-15);
        }
        assert_eq!(out.len(), 6);
    }

    #[test]
    fn translation_and_linearity() {
        let mut f = LatticeFunction::new(1);
        f.set(&[0], 0, c(1.0, 2.0)).unwrap();
        f.set(&[2], -1, c(-0.5, 0.0)).unwrap();
        let mut g = LatticeFunction::new(1);
        g.set(&[1], 3, c(0.25, -1.0)).unwrap();
        let lam = c(0.6, 0.2);
        let w = Window { n_lo: vec![-4], n_hi: vec![6], t_lo: -3, t_hi: 20 };
        let jf = apply_direct(&x2(), &x2(), lam, &f, &w).unwrap();
        let shifted = apply_direct(&x2(), &x2(), lam, &f.shifted(&[3], 5), &Window { n_lo: vec![-1], n_hi: vec![9], t_lo: 2, t_hi: 25 }).unwrap();
        for (n, t, v) in jf.iter() {
            assert_eq!(shifted.get(&[n[0] + 3], t + 5), v);
        }
        let (a, b) = (c(2.0, -1.0), c(0.5, 0.5));
        let lhs = apply_direct(&x2(), &x2(), lam, &f.scale_add(a, &g, b).unwrap(), &w).unwrap();
        let jg = apply_direct(&x2(), &x2(), lam, &g, &w).unwrap();
        for (n, t) in w.points() {
            let rhs = jf.get(&n, t) * a + jg.get(&n, t) * b;
            assert!((lhs.get(&n, t) - rhs).norm() < 1e-14);
        }
    }

    #[test]
    fn spectral_matches_cyclic_direct() {
        for (k, lam) in [(1usize, c(0.6, 0.0)), (2, c(0.6, 0.2))] {
            let q = QuadraticForm::sum_of_squares(k);
            let g = random_grid(k, 16, 64, 3);
            let a = apply_spectral_periodic(&q, lam, &g, 7).unwrap();
            let b = cyclic_convolution_direct(&q, lam, &g, 7).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-10);
        }
    }

    #[test]
    fn spectral_delta_is_kernel() {
        let q = x2();
        let mut g = PeriodicGrid::zeros(1, 16, 64).unwrap();
        g.values[0] = c(1.0, 0.0);
        let out = apply_spectral_periodic(&q, c(0.3, 0.0), &g, 7).unwrap();
        let k = periodized_kernel(&q, c(0.3, 0.0), 1, 16, 64, 7).unwrap();
        assert!(out.max_abs_diff(&k).unwrap() < 1e-13);
    }

    #[test]
    fn large_grid_reproduces_direct_on_interior() {
        let q = x2();
        let lam = c(0.4, 0.1);
        let mut f = LatticeFunction::new(1);
        f.set(&[0], 0, c(1.0, -0.5)).unwrap();
        f.set(&[1], 2, c(0.3, 0.0)).unwrap();
        f.set(&[-1], 1, c(-0.7, 0.2)).unwrap();
        let w = Window { n_lo: vec![-2], n_hi: vec![2], t_lo: 0, t_hi: 12 };
        let direct = apply_direct(&q, &q, lam, &f, &w).unwrap();
        let mut prev = f64::INFINITY;
        for (n, m, r) in [(4usize, 8usize, 2usize), (8, 16, 3), (16, 64, 4)] {
            let mut g = PeriodicGrid::zeros(1, n, m).unwrap();
            for (x, t, v) in f.iter() {
                let i = g.index(x, t);
                g.values[i] = v;
            }
            let out = apply_spectral_periodic(&q, lam, &g, r).unwrap();
            let err = w.points().iter().map(|(x, t)| (out.values[out.index(x, *t)] - direct.get(x, *t)).norm()).fold(0.0, f64::max);
            assert!(err <= prev + 1e-12);
            prev = err;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn real_kernel_spectrum_is_conjugate_symmetric() {
        let q = QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let mut k = periodized_kernel(&q, c(0.7, 0.0), 2, 8, 16, 3).unwrap();
        let dims = k.dims();
        fft_nd(&mut k.values, &dims, false);
        for idx in 0..k.values.len() {
            let (n, t) = k.coords(idx);
            let neg: Vec<i64> = n.iter().map(|x| -x).collect();
            assert!((k.values[idx] - k.values[k.index(&neg, -t)].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn spectral_preconditions() {
        let q = x2();
        assert!(apply_spectral_periodic(&q, c(0.5, 0.0), &PeriodicGrid::zeros(1, 12, 64).unwrap(), 3).is_err());
        assert!(apply_spectral_periodic(&q, c(0.5, 0.0), &PeriodicGrid::zeros(1, 16, 64).unwrap(), 9).is_err());
    }

    #[test]
    fn norm_ratio_examples() {
        let q = x2();
        let d = LatticeFunction::delta(1);
        let w = Window { n_lo: vec![-5], n_hi: vec![5], t_lo: 0, t_hi: 25 };
        assert!((norm_ratio(&q, &q, c(0.5, 0.0), &d, 2.0, f64::INFINITY, &w).unwrap() - 1.0).abs() < 1e-15);
        let small = Window { n_lo: vec![-2], n_hi: vec![2], t_lo: 0, t_hi: 4 };
        let a = norm_ratio(&q, &q, c(0.5, 0.0), &d, 1.0, 2.0, &small).unwrap();
        let b = norm_ratio(&q, &q, c(0.5, 0.0), &d, 1.0, 2.0, &w).unwrap();
        assert!(b >= a);
        assert!(norm_ratio(&q, &q, c(0.5, 0.0), &LatticeFunction::new(1), 1.0, 2.0, &w).is_err());
    }

    #[test]
    fn file_round_trips() {
        let mut f = LatticeFunction::new(2);
        f.set(&[1, -2], 3, c(0.1, -7.25e-9)).unwrap();
        f.set(&[0, 0], -1, c(1.0 / 3.0, 0.0)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(LatticeFunction::read_csv(&buf[..]).unwrap(), f);
        let g = random_grid(2, 4, 8, 9);
        let mut bin = Vec::new();
        g.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 24 + 16 * 128);
        assert_eq!(PeriodicGrid::read_binary(&bin[..]).unwrap(), g);
    }
}
