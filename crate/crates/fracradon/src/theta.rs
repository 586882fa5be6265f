//! The twisted theta function Θ(y+iθ, φ) = Σ_m e^{-2πQ(m)(y+iθ)} e^{-2πi m·φ},
//! evaluated by direct lattice summation and by the inversion law around a
//! rational point a/q, b/q.

use crate::error::{Error, Result};
use crate::exponential_sums::{gauss_sum_bound, gauss_sum_of, gcd};
use crate::numerics::{cis_neg, frac_prod, rational_offset, NeumaierSum};
use crate::quadform::QuadraticForm;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Largest admissible truncation radius.
pub const RADIUS_CAP: usize = 1 << 14;
/// Largest number of lattice points a single series may enumerate.
pub const POINT_BUDGET: u64 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMode {
    Direct,
    Inversion,
}

/// A theta value with its truncation data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEval {
    pub value: Complex64,
    pub trunc_radius: f64,
    pub tail_bound: f64,
    pub mode: ThetaMode,
}

/// Upper bound for Σ_{|m|∞ > r} Π_i e^{-c m_i²} over Z^k (r > 0).
pub fn gaussian_box_tail(c: f64, r: f64, k: usize) -> f64 {
    if r <= 0.0 {
        return f64::INFINITY;
    }
    // Σ_{|n|>r} e^{-cn²} ≤ 2∫_r^∞ e^{-cx²}dx = √(π/c)·erfc(r√c) ≤ e^{-cr²}/(c r)
    let one_dim = (-c * r * r).exp() / (c * r);
    let full = 1.0 + (PI / c).sqrt();
    k as f64 * full.powi(k as i32 - 1) * one_dim
}

fn pick_radius(c: f64, k: usize, eps: f64, shift: f64) -> Result<usize> {
    let mut r = ((1.0 / eps).ln().max(1.0) / c).sqrt().ceil() as usize + k;
    while gaussian_box_tail(c, r as f64 - shift, k) > eps {
        r = r + 1 + r / 8;
        if r > RADIUS_CAP {
            return Err(Error::TruncationInfeasible { radius: r, cap: RADIUS_CAP });
        }
    }
    if r > RADIUS_CAP {
        return Err(Error::TruncationInfeasible { radius: r, cap: RADIUS_CAP });
    }
    Ok(r)
}

/// z^{k/2} on the principal branch.
#[inline]
pub fn half_power(z: Complex64, k: usize) -> Complex64 {
    if k.is_multiple_of(2) {
        z.powi(k as i32 / 2)
    } else {
        z.powi((k as i32 - 1) / 2) * z.sqrt()
    }
}

fn check_dims(form: &QuadraticForm, phi: &[f64]) -> Result<()> {
    if phi.len() != form.dim() {
        return Err(Error::DimensionMismatch { expected: form.dim(), got: phi.len() });
    }
    Ok(())
}

/// Direct lattice series Σ_n e^{-2πny} P_n with P_n = e^{-2πinθ} Σ_{Q(m)=n} e^{-2πim·φ},
/// valid (to `eps`) for every y ≥ `y_min`. Terms are grouped by n = Q(m) and
/// accumulated in increasing n with compensation.
#[derive(Debug, Clone)]
pub struct DirectSeries {
    coeffs: Vec<Complex64>,
    counts: Vec<u32>,
    radius: usize,
    y_min: f64,
    eig_min: f64,
    k: usize,
    points: f64,
}

impl DirectSeries {
    pub fn new(form: &QuadraticForm, y_min: f64, theta: f64, phi: &[f64], eps: f64) -> Result<Self> {
        check_dims(form, phi)?;
        let k = form.dim();
        let (radius, box_points, n_cut) = direct_truncation(form, y_min, eps)?;
        let len = usize::try_from(n_cut + 1).map_err(|_| Error::Budget("bucket count".into()))?;
        if len > 1 << 27 {
            return Err(Error::Budget(format!("{len} theta buckets")));
        }
        let tables: Vec<Vec<Complex64>> = phi.iter().map(|&p| (-(radius as i64)..=radius as i64).map(|m| cis_neg(frac_prod(m as f64, p))).collect()).collect();
        let mut buckets = vec![Complex64::new(0.0, 0.0); len];
        let mut counts = vec![0u32; len];
        let r = radius as i64;
        form.for_each_lattice_point(n_cut, |m, n| {
            if m.iter().any(|x| x.abs() > r) {
                return;
            }
            let mut w = tables[0][(m[0] + r) as usize];
            for i in 1..m.len() {
                w *= tables[i][(m[i] + r) as usize];
            }
            buckets[n as usize] += w;
            counts[n as usize] += 1;
        });
        for (n, b) in buckets.iter_mut().enumerate() {
            if counts[n] > 0 {
                *b *= cis_neg(frac_prod(n as f64, theta));
            }
        }
        Ok(Self { coeffs: buckets, counts, radius, y_min, eig_min: form.eig_min(), k, points: box_points })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Θ(y+iθ, φ) for y ≥ y_min.
    pub fn eval(&self, y: f64) -> ThetaEval {
        debug_assert!(y >= self.y_min * (1.0 - 1e-12));
        let mut s = NeumaierSum::new();
        let mut last = 0usize;
        for (n, (p, &cnt)) in self.coeffs.iter().zip(&self.counts).enumerate() {
            if cnt == 0 {
                continue;
            }
            let w = (-2.0 * PI * n as f64 * y).exp();
            if w == 0.0 {
                break;
            }
            s.add(*p * w);
            last = n;
        }
        let c = PI * self.eig_min * y;
        let box_tail = gaussian_box_tail(c, self.radius as f64, self.k);
        let dropped = self.points * (-2.0 * PI * self.coeffs.len().max(last + 1) as f64 * y).exp();
        ThetaEval { value: s.value(), trunc_radius: self.radius as f64, tail_bound: box_tail + dropped, mode: ThetaMode::Direct }
    }
}

/// Box radius R, box size (2R+1)^k and value cut-off n_cut for a direct sum
/// at y ≥ y_min whose total truncation error stays below eps.
fn direct_truncation(form: &QuadraticForm, y_min: f64, eps: f64) -> Result<(usize, f64, i64)> {
    if !(y_min > 0.0) || !y_min.is_finite() {
        return Err(Error::Domain(format!("y must be positive, got {y_min}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Domain("eps must be positive".into()));
    }
    let k = form.dim();
    let c = PI * form.eig_min() * y_min;
    let radius = pick_radius(c, k, eps / 2.0, 0.0)?;
    let box_points = (2.0 * radius as f64 + 1.0).powi(k as i32);
    if box_points > POINT_BUDGET as f64 {
        return Err(Error::TruncationInfeasible { radius, cap: RADIUS_CAP });
    }
    // drop in-box points with e^{-2π n y_min}·box_points < eps/2
    let n_cut = ((2.0 * box_points / eps).ln() / (2.0 * PI * y_min)).ceil();
    let n_max_box = form.eig_max() * k as f64 * (radius * radius) as f64 / 2.0;
    Ok((radius, box_points, n_cut.min(n_max_box.ceil()) as i64))
}

/// Low/high split tables for z^n = e^{-2πn(y - iθ)}: z^n = hi[n / B]·lo[n % B].
const SPLIT: i64 = 2048;

/// Θ(y+iθ, φ) by direct summation over |m|∞ ≤ R with tail below eps.
pub fn theta_direct(form: &QuadraticForm, y: f64, theta: f64, phi: &[f64], eps: f64) -> Result<ThetaEval> {
    check_dims(form, phi)?;
    let k = form.dim();
    let (radius, box_points, n_cut) = direct_truncation(form, y, eps)?;
    let z = |n: i64| cis_neg(frac_prod(n as f64, theta)) * (-2.0 * PI * n as f64 * y).exp();
    let lo: Vec<Complex64> = (0..SPLIT).map(z).collect();
    let hi: Vec<Complex64> = (0..=n_cut / SPLIT).map(|h| z(h * SPLIT)).collect();
    let r = radius as i64;
    let tables: Vec<Vec<Complex64>> = phi.iter().map(|&p| (-r..=r).map(|m| cis_neg(frac_prod(m as f64, p))).collect()).collect();
    let mut acc = NeumaierSum::new();
    form.for_each_lattice_point(n_cut, |m, n| {
        if m.iter().any(|x| x.abs() > r) {
            return;
        }
        let mut w = hi[(n / SPLIT) as usize] * lo[(n % SPLIT) as usize];
        for (t, &mi) in tables.iter().zip(m) {
            w *= t[(mi + r) as usize];
        }
        acc.add(w);
    });
    let box_tail = gaussian_box_tail(PI * form.eig_min() * y, radius as f64, k);
    let dropped = box_points * (-2.0 * PI * (n_cut + 1) as f64 * y).exp();
    Ok(ThetaEval { value: acc.value(), trunc_radius: radius as f64, tail_bound: box_tail + dropped, mode: ThetaMode::Direct })
}

/// Rational anchor data: θ = a/q + α, φ = b/q + β with α, β reduced to the
/// representative nearest zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcPoint {
    pub theta: f64,
    pub phi: Vec<f64>,
    pub a: i64,
    pub q: i64,
    pub b: Vec<i64>,
    pub alpha: f64,
    pub beta: Vec<f64>,
}

impl ArcPoint {
    pub fn new(theta: f64, phi: &[f64], a: i64, b: &[i64], q: i64) -> Result<Self> {
        if q < 1 || gcd(a, q) != 1 {
            return Err(Error::Precondition(format!("need q >= 1 and gcd(a, q) = 1, got a={a}, q={q}")));
        }
        if phi.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: b.len(), got: phi.len() });
        }
        Ok(Self {
            theta,
            phi: phi.to_vec(),
            a: (a - 1).rem_euclid(q) + 1,
            q,
            b: b.iter().map(|&x| (x - 1).rem_euclid(q) + 1).collect(),
            alpha: rational_offset(theta, a, q),
            beta: phi.iter().zip(b).map(|(&p, &bb)| rational_offset(p, bb, q)).collect(),
        })
    }

    /// Anchor at the nearest b for a given (a, q).
    pub fn nearest_b(theta: f64, phi: &[f64], a: i64, q: i64) -> Result<Self> {
        let b: Vec<i64> = phi.iter().map(|p| (p * q as f64).round() as i64).collect();
        Self::new(theta, phi, a, &b, q)
    }

    /// Whether the point satisfies the hypotheses of the remainder bound at level j.
    pub fn satisfies_hypotheses(&self, j: u32) -> bool {
        let n = 2f64.powi((j / 2) as i32);
        let qf = self.q as f64;
        self.alpha.abs() <= 1.0 / (qf * n) && self.q as f64 <= n && self.beta.iter().all(|b| b.abs() <= 0.75 / qf)
    }
}

/// Inversion-law series around (a/q, b/q), valid for y in [y_lo, y_hi].
#[derive(Debug, Clone)]
pub struct InversionSeries {
    k: usize,
    q: i64,
    alpha: f64,
    sqrt_det: f64,
    /// (S(a, b−m; q), Q*(m/q + β), is m = 0), sorted by Q* ascending.
    terms: Vec<(Complex64, f64, bool)>,
    radius: usize,
    tail: TailParams,
}

#[derive(Debug, Clone, Copy)]
struct TailParams {
    eig_max: f64,
    s_bound: f64,
}

impl InversionSeries {
    pub fn new(form: &QuadraticForm, point: &ArcPoint, y_lo: f64, y_hi: f64, eps: f64) -> Result<Self> {
        check_dims(form, &point.phi)?;
        if !(y_lo > 0.0) || y_hi < y_lo {
            return Err(Error::Domain(format!("invalid y range [{y_lo}, {y_hi}]")));
        }
        let k = form.dim();
        let q = point.q;
        let u = |y: f64| y / (y * y + point.alpha * point.alpha);
        let u0 = u(y_lo).min(u(y_hi));
        let eig_max = form.eig_max();
        let c = PI * u0 / (eig_max * (q * q) as f64);
        let s_bound = gauss_sum_bound(form, q);
        let pref = s_bound / ((q as f64).powi(k as i32) * (form.det() as f64).sqrt() * y_lo.powf(k as f64 / 2.0));
        let radius = pick_radius(c, k, eps / pref.max(1e-300), 0.5)?;
        if (2.0 * radius as f64 + 1.0).powi(k as i32) > 5e7 {
            return Err(Error::TruncationInfeasible { radius, cap: RADIUS_CAP });
        }
        let adj = form.adjoint();
        let qb: Vec<f64> = point.beta.iter().map(|b| b * q as f64).collect();
        let center: Vec<i64> = qb.iter().map(|x| (-x).round() as i64).collect();
        let r = radius as i64;
        let mut cache: HashMap<Vec<i64>, Complex64> = HashMap::new();
        let mut terms = Vec::new();
        let mut off = vec![-r; k];
        let mut m = vec![0i64; k];
        let mut x = vec![0.0; k];
        loop {
            for i in 0..k {
                m[i] = center[i] + off[i];
                x[i] = (m[i] as f64 + qb[i]) / q as f64;
            }
            let qs = adj.eval_f64(&x);
            // skip terms that are negligible over the whole y range
            if 2.0 * PI * qs * u0 < 745.0 {
                let res: Vec<i64> = point.b.iter().zip(&m).map(|(b, mi)| (b - mi).rem_euclid(q)).collect();
                let s = match cache.get(&res) {
                    Some(v) => *v,
                    None => {
                        let v = gauss_sum_of(form, point.a, &res, q)?;
                        cache.insert(res, v);
                        v
                    }
                };
                terms.push((s, qs, m.iter().all(|&v| v == 0)));
            }
            let mut i = k;
            loop {
                if i == 0 {
                    terms.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
                    return Ok(Self { k, q, alpha: point.alpha, sqrt_det: (form.det() as f64).sqrt(), terms, radius, tail: TailParams { eig_max, s_bound } });
                }
                i -= 1;
                off[i] += 1;
                if off[i] <= r {
                    break;
                }
                off[i] = -r;
            }
        }
    }

    fn prefactor(&self, z: Complex64) -> Complex64 {
        1.0 / ((self.q as f64).powi(self.k as i32) * self.sqrt_det * half_power(z, self.k))
    }

    fn sum(&self, y: f64, include_zero: bool) -> ThetaEval {
        let z = Complex64::new(y, self.alpha);
        let w = -2.0 * PI / z;
        let mut s = NeumaierSum::new();
        for (g, qs, zero) in &self.terms {
            if *zero && !include_zero {
                continue;
            }
            s.add(*g * (w * *qs).exp());
        }
        let pref = self.prefactor(z);
        let u = y / z.norm_sqr();
        let c = PI * u / (self.tail.eig_max * (self.q * self.q) as f64);
        let tail = pref.norm() * self.tail.s_bound * gaussian_box_tail(c, self.radius as f64 - 0.5, self.k);
        ThetaEval { value: s.value() * pref, trunc_radius: self.radius as f64, tail_bound: tail, mode: ThetaMode::Inversion }
    }

    /// Θ via the inversion law.
    pub fn eval(&self, y: f64) -> ThetaEval {
        self.sum(y, true)
    }

    /// The m ≠ 0 part of the inversion sum.
    pub fn remainder(&self, y: f64) -> ThetaEval {
        self.sum(y, false)
    }

    pub fn radius(&self) -> usize {
        self.radius
    }
}

/// Θ(y+iθ, φ) via the inversion law around (a/q, b/q).
#[allow(clippy::too_many_arguments)]
pub fn theta_via_inversion(form: &QuadraticForm, y: f64, theta: f64, phi: &[f64], a: i64, b: &[i64], q: i64, eps: f64) -> Result<ThetaEval> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("y must be positive, got {y}")));
    }
    let p = ArcPoint::new(theta, phi, a, b, q)?;
    Ok(InversionSeries::new(form, &p, y, y, eps)?.eval(y))
}

/// S(a,b;q)·(q^k |A|^{1/2})^{-1}·e^{-2πQ*(β)/(y+iα)}·(y+iα)^{-k/2}.
#[allow(clippy::too_many_arguments)]
pub fn approx_main_term(form: &QuadraticForm, y: f64, alpha: f64, beta: &[f64], a: i64, b: &[i64], q: i64) -> Result<Complex64> {
    check_dims(form, beta)?;
    if !(y > 0.0) {
        return Err(Error::Domain(format!("y must be positive, got {y}")));
    }
    let s = gauss_sum_of(form, a, b, q)?;
    let k = form.dim();
    let z = Complex64::new(y, alpha);
    let qs = form.adjoint().eval_f64(beta);
    Ok(s * (-2.0 * PI * qs / z).exp() / ((q as f64).powi(k as i32) * (form.det() as f64).sqrt() * half_power(z, k)))
}

/// The remainder E = Σ_{m≠0} of the inversion sum, after checking the arc
/// hypotheses at level j: |α| ≤ 1/(q 2^{⌊j/2⌋}), |β_i| ≤ 3/(4q), q ≤ 2^{⌊j/2⌋},
/// 2^{-j} ≤ y ≤ 2^{1-j}.
#[allow(clippy::too_many_arguments)]
pub fn remainder_e(form: &QuadraticForm, y: f64, theta: f64, phi: &[f64], a: i64, b: &[i64], q: i64, j: u32, eps: f64) -> Result<Complex64> {
    let p = ArcPoint::new(theta, phi, a, b, q)?;
    let lo = 2f64.powi(-(j as i32));
    if !(lo..=2.0 * lo).contains(&y) {
        return Err(Error::Precondition(format!("y = {y} outside [2^-{j}, 2^-{}]", j as i32 - 1)));
    }
    if !p.satisfies_hypotheses(j) {
        return Err(Error::Precondition(format!("(θ, φ) = ({theta}, {phi:?}) is not within the level-{j} arc of {a}/{q}")));
    }
    Ok(remainder_unchecked(form, &p, y, eps)?.value)
}

/// The m ≠ 0 inversion sum without hypothesis checks.
pub fn remainder_unchecked(form: &QuadraticForm, point: &ArcPoint, y: f64, eps: f64) -> Result<ThetaEval> {
    Ok(InversionSeries::new(form, point, y, y, eps)?.remainder(y))
}

/// The scale y^{-k/4} q^{k/2} (y²+α²)^{k/4} governing the m ≠ 0 tail.
pub fn remainder_tail_scale(k: usize, y: f64, alpha: f64, q: i64) -> f64 {
    let kf = k as f64;
    y.powf(-kf / 4.0) * (q as f64).powf(kf / 2.0) * (y * y + alpha * alpha).powf(kf / 4.0)
}

/// Trapezoid quadrature of ∫ e^{-2πQ*(φ)/(y+iθ)} e^{-2πiφ·η} dφ against the
/// closed form |A|^{1/2} (y+iθ)^{k/2} e^{-2πQ(η)(y+iθ)}. Returns (lhs, rhs).
pub fn gaussian_fourier_check(form: &QuadraticForm, y: f64, theta: f64, eta: &[i64], grid_n: usize) -> Result<(Complex64, Complex64)> {
    let k = form.dim();
    if k > 2 {
        return Err(Error::Unsupported("gaussian_fourier_check supports k <= 2".into()));
    }
    if eta.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: eta.len() });
    }
    if !(y > 0.0) {
        return Err(Error::Domain(format!("y must be positive, got {y}")));
    }
    if !grid_n.is_power_of_two() {
        return Err(Error::Precondition("grid_n must be a power of two".into()));
    }
    let z = Complex64::new(y, theta);
    let u = y / z.norm_sqr();
    // |integrand| ≤ e^{-π u |φ|² / eig_max}
    let l = (40.0 * form.eig_max() / (PI * u)).sqrt();
    let h = 2.0 * l / grid_n as f64;
    let adj = form.adjoint();
    let w = -2.0 * PI / z;
    let nodes: Vec<f64> = (0..grid_n).map(|i| -l + h * i as f64).collect();
    let mut s = NeumaierSum::new();
    if k == 1 {
        for &x in &nodes {
            s.add((w * adj.eval_f64(&[x])).exp() * cis_neg(x * eta[0] as f64));
        }
    } else {
        for &x1 in &nodes {
            for &x2 in &nodes {
                let ph = x1 * eta[0] as f64 + x2 * eta[1] as f64;
                s.add((w * adj.eval_f64(&[x1, x2])).exp() * cis_neg(ph));
            }
        }
    }
    let lhs = s.value() * h.powi(k as i32);
    let qe = form.evaluate(eta)? as f64;
    let rhs = (form.det() as f64).sqrt() * half_power(z, k) * (-2.0 * PI * qe * z).exp();
    Ok((lhs, rhs))
}

/// One sampled point of the direct-vs-inversion comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckRow {
    pub y: f64,
    pub theta: f64,
    pub phi: Vec<f64>,
    pub a: i64,
    pub b: Vec<i64>,
    pub q: i64,
    pub direct: Complex64,
    pub inversion: Complex64,
    pub abs_diff: f64,
    /// Sum of the two truncation tail bounds.
    pub tail_bound: f64,
}

/// Compare [`theta_direct`] with [`theta_via_inversion`] at `points`
/// quasi-random samples: y log-uniform in [y_lo, y_hi], q ≤ q_max, a coprime
/// to q, θ = a/q + α with |α| ≤ 1/(64q), φ = b/q + β with |β_i| ≤ 1/(2q).
pub fn cross_check(form: &QuadraticForm, points: usize, y_lo: f64, y_hi: f64, q_max: i64, seed: u64, eps: f64) -> Result<Vec<CrossCheckRow>> {
    if !(y_lo > 0.0 && y_hi >= y_lo) || q_max < 1 {
        return Err(Error::Precondition("need 0 < y_lo <= y_hi and q_max >= 1".into()));
    }
    let k = form.dim();
    let mut seq = crate::numerics::Kronecker::new(2 * k + 4, seed);
    let samples: Vec<Vec<f64>> = (0..points).map(|_| seq.next_point()).collect();
    samples
        .par_iter()
        .map(|u| {
            let y = y_lo * (y_hi / y_lo).powf(u[0]);
            let q = 1 + ((u[1] * q_max as f64) as i64).min(q_max - 1);
            let start = ((u[2] * q as f64) as i64).min(q - 1);
            let a = if q == 1 { 0 } else { (0..q).map(|d| (start + d) % q + 1).find(|&a| gcd(a, q) == 1).unwrap_or(1) };
            let b: Vec<i64> = (0..k).map(|i| ((u[3 + i] * q as f64) as i64).min(q - 1)).collect();
            let alpha = (2.0 * u[3 + k] - 1.0) / (64.0 * q as f64);
            let theta = a as f64 / q as f64 + alpha;
            let phi: Vec<f64> = (0..k).map(|i| b[i] as f64 / q as f64 + (u[4 + k + i] - 0.5) / q as f64).collect();
            let d = theta_direct(form, y, theta, &phi, eps)?;
            let inv = theta_via_inversion(form, y, theta, &phi, a, &b, q, eps)?;
            Ok(CrossCheckRow {
                y,
                theta,
                phi,
                a,
                b,
                q,
                direct: d.value,
                inversion: inv.value,
                abs_diff: (d.value - inv.value).norm(),
                tail_bound: d.tail_bound + inv.tail_bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x2() -> QuadraticForm {
        QuadraticForm::new(vec![vec![2]]).unwrap()
    }

    #[test]
    fn diagonal_factorizes() {
        let one = theta_direct(&x2(), 0.07, 0.0, &[0.0], 1e-14).unwrap().value;
        let two = theta_direct(&QuadraticForm::sum_of_squares(2), 0.07, 0.0, &[0.0, 0.0], 1e-14).unwrap().value;
        assert!((one * one - two).norm() < 1e-12);
    }

    #[test]
    fn large_y_is_one() {
        let q = QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let v = theta_direct(&q, 10.0, 0.3, &[0.1, 0.7], 1e-15).unwrap().value;
        let bound = (-2.0 * PI * q.eig_min() * 10.0 / 2.0).exp() * 8.0;
        assert!((v - 1.0).norm() <= bound);
    }

    #[test]
    fn cross_oracle_small_example() {
        let d = theta_direct(&x2(), 0.1, 0.25, &[0.5], 1e-13).unwrap();
        let i = theta_via_inversion(&x2(), 0.1, 0.25, &[0.5], 1, &[0], 1, 1e-13).unwrap();
        assert!((d.value - i.value).norm() < 1e-10);
        let th = 1.0 / 3.0 + 1e-4;
        let ph = 2.0 / 3.0 + 1e-3;
        let d = theta_direct(&x2(), 0.01, th, &[ph], 1e-13).unwrap();
        let i = theta_via_inversion(&x2(), 0.01, th, &[ph], 1, &[2], 3, 1e-13).unwrap();
        assert!((d.value - i.value).norm() < 1e-9);
    }

    #[test]
    fn main_term_examples() {
        let v = approx_main_term(&x2(), 0.3, 0.0, &[0.0], 1, &[0], 1).unwrap();
        assert!((v - 1.0 / (2f64.sqrt() * 0.3f64.sqrt())).norm() < 1e-14);
        let y = 2f64.powi(-10);
        let v = approx_main_term(&x2(), y, 0.0, &[0.0], 1, &[3], 3).unwrap();
        let expect = Complex64::new(0.0, -3f64.sqrt()) / (3.0 * 2f64.sqrt()) * y.powf(-0.5);
        assert!((v - expect).norm() < 1e-12 * expect.norm());
    }

    #[test]
    fn remainder_small_sum() {
        let y = 0.1;
        let e = remainder_e(&x2(), y, 1.0, &[1.0], 1, &[0], 1, 3, 1e-15);
        // y = 0.1 lies in [2^-4, 2^-3]
        assert!(e.is_err());
        let e = remainder_e(&x2(), y, 1.0, &[1.0], 1, &[0], 1, 4, 1e-15).unwrap();
        let oracle: f64 = (1..20).map(|m| 2.0 * (-2.0 * PI * (m * m) as f64 / 4.0 / y).exp()).sum::<f64>() / (2f64.sqrt() * y.sqrt());
        assert!((e - oracle).norm() < 1e-14, "{e} vs {oracle}");
    }

    #[test]
    fn remainder_is_inversion_minus_main() {
        let q = QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let (th, ph) = (2.0 / 5.0 + 3e-4, [1.0 / 5.0 - 0.01, 0.02]);
        let p = ArcPoint::new(th, &ph, 2, &[1, 0], 5).unwrap();
        let y = 2f64.powi(-12);
        let inv = theta_via_inversion(&q, y, th, &ph, 2, &[1, 0], 5, 1e-14).unwrap().value;
        let main = approx_main_term(&q, y, p.alpha, &p.beta, 2, &[1, 0], 5).unwrap();
        let e = remainder_unchecked(&q, &p, y, 1e-14).unwrap().value;
        assert!((inv - main - e).norm() < 1e-10 * inv.norm().max(1.0));
    }

    #[test]
    fn gaussian_transform_examples() {
        let (l, r) = gaussian_fourier_check(&x2(), 0.5, 0.0, &[0], 1024).unwrap();
        assert!((r - 1.0).norm() < 1e-14 && (l - r).norm() < 1e-12);
        let (l, r) = gaussian_fourier_check(&x2(), 0.5, 0.0, &[20], 1024).unwrap();
        assert!(l.norm() < 1e-12 && r.norm() < 1e-12);
        let hex = QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let (l, r) = gaussian_fourier_check(&hex, 0.3, 0.1, &[1, 0], 512).unwrap();
        assert!((l - r).norm() < 1e-8, "{l} {r}");
    }
}
