//! Sup-norm scans of the multiplier pieces over dyadic indices, and the
//! least-squares slope fits of log₂ sup against the index.

use super::coefficients::coefficients_from_grid;
use super::{analytic_factor, b_lambda_s, e_coefficient, e_multiplier_j, fourier_coeff_closed_form, minor_nu_j, nu_rs, nu_rs_coefficient, NuJSampler};
use crate::arcs::{arc_half_width, classify, half, ArcKind};
use crate::error::{Error, Result};
use crate::exponential_sums::{gauss_sum_table, gcd};
use crate::numerics::{ols, Kronecker};
use crate::quadform::QuadraticForm;
use crate::theta::{remainder_unchecked, ArcPoint};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// One sampled value with the bound shape 2^{slope·index} it is compared to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupRecord {
    pub piece: String,
    pub indices: String,
    pub point: Vec<f64>,
    pub value: Complex64,
    pub error: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub label: String,
    pub index: Vec<i64>,
    pub sup: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scan {
    pub records: Vec<SupRecord>,
    pub fit: FitSummary,
}

/// OLS of log₂ sup against the index; passes when the slope lies in [lo, hi].
pub fn fit_sups(label: &str, index: &[i64], sup: &[f64], lo: f64, hi: f64) -> Result<FitSummary> {
    if index.len() < 6 {
        return Err(Error::DegenerateFit(format!("{label}: need at least 6 indices, got {}", index.len())));
    }
    if let Some(bad) = sup.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::DegenerateFit(format!("{label}: non-positive sup {bad}")));
    }
    let xs: Vec<f64> = index.iter().map(|&i| i as f64).collect();
    let ys: Vec<f64> = sup.iter().map(|v| v.log2()).collect();
    let f = ols(&xs, &ys)?;
    Ok(FitSummary {
        label: label.to_string(),
        index: index.to_vec(),
        sup: sup.to_vec(),
        slope: f.slope,
        intercept: f.intercept,
        window_lo: lo,
        window_hi: hi,
        pass: (lo..=hi).contains(&f.slope),
    })
}

/// Samples per index, quasi-random with a fixed seed per (experiment, index).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Sampling {
    pub points: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { points: 64, seed: 7, tol: 1e-10 }
    }
}

fn points(dim: usize, seed: u64, index: i64, n: usize) -> Vec<Vec<f64>> {
    let mut k = Kronecker::new(dim, seed.wrapping_mul(0x100_0193).wrapping_add(index as u64));
    (0..n).map(|_| k.next_point()).collect()
}

fn coprime_from(q: i64, u: f64) -> i64 {
    let start = 1 + ((u * q as f64) as i64).min(q - 1);
    (0..q).map(|d| (start - 1 + d) % q + 1).find(|&a| gcd(a, q) == 1).unwrap_or(1)
}

/// Collect per-index records in order, then fit log₂ of the per-index sup of |value|.
fn finish(label: &str, slope: f64, lo: f64, hi: f64, per_index: Vec<(i64, Vec<SupRecord>)>) -> Result<Scan> {
    let mut records = Vec::new();
    let mut index = Vec::new();
    let mut sup = Vec::new();
    for (i, mut recs) in per_index {
        let bound = 2f64.powf(slope * i as f64);
        let mut m = 0f64;
        for r in &mut recs {
            r.bound = bound;
            r.ratio = r.value.norm() / bound;
            m = m.max(r.value.norm());
        }
        index.push(i);
        sup.push(m);
        records.extend(recs);
    }
    Ok(Scan { fit: fit_sups(label, &index, &sup, lo, hi)?, records })
}

fn record(piece: &str, indices: String, point: Vec<f64>, value: Complex64, error: f64) -> SupRecord {
    SupRecord { piece: piece.into(), indices, point, value, error, bound: 0.0, ratio: 0.0 }
}

fn par_collect<T: Send, F: Fn(usize) -> Result<T> + Sync + Send>(n: usize, f: F) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

/// sup |E_{a,b,q}(y+iθ, φ)|·y^{k/4} over level-j arc points with q ≤ min(q_cap, 2^{⌊j/2⌋}),
/// |α| ≤ 1/(q 2^{⌊j/2⌋}), |β_i| ≤ 3/(4q), y ∈ [2^{-j}, 2^{1-j}]; target slope 0.
pub fn remainder_scan(form: &QuadraticForm, j_range: std::ops::RangeInclusive<u32>, q_cap: i64, sampling: Sampling, window: f64) -> Result<Scan> {
    let k = form.dim();
    let mut per_index = Vec::new();
    for j in j_range {
        let n = 1i64 << half(j);
        let q_max = q_cap.min(n);
        let pts = points(k + 4, sampling.seed, j as i64, sampling.points);
        let recs = par_collect(pts.len(), |i| {
            let u = &pts[i];
            let q = 1 + ((u[0] * q_max as f64) as i64).min(q_max - 1);
            let a = coprime_from(q, u[1]);
            let alpha = (2.0 * u[2] - 1.0) / (q as f64 * n as f64);
            let y = 2f64.powi(-(j as i32)) * (1.0 + u[3]);
            let beta: Vec<f64> = u[4..].iter().map(|v| (2.0 * v - 1.0) * 0.75 / q as f64).collect();
            let theta = (a as f64 / q as f64 + alpha).rem_euclid(1.0);
            let phi: Vec<f64> = beta.iter().map(|b| b.rem_euclid(1.0)).collect();
            let mut p = ArcPoint::new(theta, &phi, a, &vec![0; k], q)?;
            p.alpha = alpha;
            p.beta = beta;
            let e = remainder_unchecked(form, &p, y, 1e-13)?;
            let scale = y.powf(k as f64 / 4.0);
            let mut pt = vec![y, theta];
            pt.extend(phi);
            Ok(record("e_theta", format!("j={j};q={q}"), pt, e.value * scale, e.tail_bound * scale))
        })?;
        per_index.push((j as i64, recs));
    }
    finish("remainder_theta_scaled", 0.0, -window, window, per_index)
}

/// b maximizing |S(1, b; q)|.
fn best_b(form: &QuadraticForm, q: i64) -> Result<Vec<i64>> {
    let t = gauss_sum_table(form, 1, q)?;
    let (idx, _) = t.iter().enumerate().fold((0, -1.0), |acc, (i, v)| if v.norm() > acc.1 + 1e-9 { (i, v.norm()) } else { acc });
    let k = form.dim();
    let mut b = vec![0i64; k];
    let mut rest = idx as i64;
    for i in (0..k).rev() {
        b[i] = rest % q;
        rest /= q;
    }
    Ok(b)
}

/// Shell-r points of the level-(j, s) arcs around 1/q, j ∈ {J0, J0+1}, with the
/// dominant b and |β| within the Gaussian width 2^{(r-j)/2}.
fn shell_points(form: &QuadraticForm, r: u32, s: u32, seed: u64, index: i64, n: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let k = form.dim();
    let j0 = (2 * s + 20).max((2 * s + 2 * r).saturating_sub(1));
    let width = 1i64 << s;
    let mut bs = Vec::new();
    for d in 0..width {
        bs.push(best_b(form, width + d)?);
    }
    Ok(points(k + 3, seed, index, n)
        .into_iter()
        .map(|u| {
            let d = ((u[0] * width as f64) as i64).min(width - 1);
            let q = width + d;
            let j = j0 + (u[1] < 0.5) as u32;
            let sign = if u[2] < 0.5 { -1.0 } else { 1.0 };
            let mag = if r == 0 { 2f64.powi(-(j as i32)) * u[2] } else { 2f64.powi(r as i32 - j as i32) * (0.5 + 0.5 * u[3].max(1e-9)) };
            let theta = (1.0 / q as f64 + sign * mag).rem_euclid(1.0);
            let gw = 2f64.powf((r as f64 - j as f64) / 2.0);
            let phi = bs[d as usize].iter().zip(&u[3..]).map(|(b, v)| (*b as f64 / q as f64 + (v - 0.5) * gw).rem_euclid(1.0)).collect();
            (theta, phi)
        })
        .collect())
}

/// Which index of ν_{r,s} varies in a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanAxis {
    R,
    S,
}

/// sup |ν_{r,s}| on Re λ = 1 along r (s fixed) or s (r fixed); target slope −k/2.
pub fn nu_rs_scan(
    form: &QuadraticForm,
    lambda: Complex64,
    axis: ScanAxis,
    fixed: u32,
    range: std::ops::RangeInclusive<u32>,
    sampling: Sampling,
    window: f64,
) -> Result<Scan> {
    let k = form.dim() as f64;
    let mut per_index = Vec::new();
    for v in range {
        let (r, s) = match axis {
            ScanAxis::R => (v, fixed),
            ScanAxis::S => (fixed, v),
        };
        let pts = shell_points(form, r, s, sampling.seed, v as i64, sampling.points)?;
        let recs = par_collect(pts.len(), |i| {
            let (theta, phi) = &pts[i];
            let m = nu_rs(form, lambda, r, s, *theta, phi, sampling.tol)?;
            let mut pt = vec![*theta];
            pt.extend(phi);
            Ok(record("nu_rs", format!("r={r};s={s}"), pt, m.value, m.quadrature_error))
        })?;
        per_index.push((v as i64, recs));
    }
    let label = match axis {
        ScanAxis::R => "nu_rs_in_r",
        ScanAxis::S => "nu_rs_in_s",
    };
    finish(label, -k / 2.0, -k / 2.0 - window, -k / 2.0 + window, per_index)
}

/// sup |B_λ(s)| over 2^{-40-2s} ≤ |α| ≤ 2^{-10-2s} (log-uniform); target slope −k/2.
pub fn b_lambda_scan(form: &QuadraticForm, lambda: Complex64, range: std::ops::RangeInclusive<u32>, sampling: Sampling, window: f64) -> Result<Scan> {
    let k = form.dim();
    let mut per_index = Vec::new();
    for s in range {
        let width = 1i64 << s;
        let mut bs = Vec::new();
        for d in 0..width {
            bs.push(best_b(form, width + d)?);
        }
        let pts = points(k + 3, sampling.seed, s as i64, sampling.points);
        let recs = par_collect(pts.len(), |i| {
            let u = &pts[i];
            let d = ((u[0] * width as f64) as i64).min(width - 1);
            let q = width + d;
            let alpha = 2f64.powf(-10.0 - 2.0 * s as f64 - 30.0 * u[1]) * if u[2] < 0.5 { -1.0 } else { 1.0 };
            let theta = (1.0 / q as f64 + alpha).rem_euclid(1.0);
            let phi: Vec<f64> =
                bs[d as usize].iter().zip(&u[3..]).map(|(b, v)| (*b as f64 / q as f64 + (v - 0.5) * alpha.abs().sqrt()).rem_euclid(1.0)).collect();
            let m = b_lambda_s(form, lambda, s, theta, &phi, sampling.tol)?;
            let mut pt = vec![theta];
            pt.extend(&phi);
            Ok(record("b_s", format!("s={s}"), pt, m.value, m.quadrature_error))
        })?;
        per_index.push((s as i64, recs));
    }
    let k = k as f64;
    finish("b_lambda_in_s", -k / 2.0, -k / 2.0 - window, -k / 2.0 + window, per_index)
}

/// sup |E_{λ,j}| over level-j major-arc points; target slope −k/4.
pub fn e_multiplier_scan(form: &QuadraticForm, lambda: Complex64, range: std::ops::RangeInclusive<u32>, sampling: Sampling, window: f64) -> Result<Scan> {
    let k = form.dim();
    let mut per_index = Vec::new();
    for j in range {
        if j < 20 {
            return Err(Error::Precondition("E_{λ,j} vanishes for j < 20".into()));
        }
        let q_max = 1i64 << (half(j) - 10);
        let pts = points(k + 3, sampling.seed, j as i64, sampling.points);
        let recs = par_collect(pts.len(), |i| {
            let u = &pts[i];
            let q = 1 + ((u[0] * q_max as f64) as i64).min(q_max - 1);
            let s = 63 - q.leading_zeros();
            let a = coprime_from(q, u[1]);
            let alpha = (2.0 * u[2] - 1.0) * arc_half_width(j, s);
            let theta = (a as f64 / q as f64 + alpha).rem_euclid(1.0);
            let phi: Vec<f64> = u[3..].iter().map(|v| v.rem_euclid(1.0)).collect();
            let m = e_multiplier_j(form, lambda, j, theta, &phi, sampling.tol)?;
            let mut pt = vec![theta];
            pt.extend(&phi);
            Ok(record("e_j", format!("j={j}"), pt, m.value, m.quadrature_error))
        })?;
        per_index.push((j as i64, recs));
    }
    let k = k as f64;
    finish("e_multiplier_in_j", -k / 4.0, -k / 4.0 - window, -k / 4.0 + window, per_index)
}

/// sup |χ_minor ν_{λ,j}| over two families of minor-arc points: denominators just
/// above 2^{⌊j/2⌋−10} with |α| ≤ 2^{-j}, and points just outside the widest major
/// arcs. Target slope −k/4.
pub fn minor_scan(form: &QuadraticForm, lambda: Complex64, range: std::ops::RangeInclusive<u32>, sampling: Sampling, window: f64) -> Result<Scan> {
    let k = form.dim();
    let mut per_index = Vec::new();
    for j in range {
        let q0 = if j >= 20 { (1i64 << (half(j) - 10)) + 1 } else { 1 };
        let mut bs = Vec::new();
        for d in 0..4 {
            bs.push(best_b(form, q0 + d)?);
        }
        let pts = points(k + 3, sampling.seed, j as i64, sampling.points);
        let recs = par_collect(pts.len(), |i| {
            let u = &pts[i];
            let (theta, phi) = if i % 2 == 0 {
                let d = ((u[0] * 4.0) as i64).min(3);
                let q = q0 + d;
                let a = coprime_from(q, u[1]);
                let alpha = (2.0 * u[2] - 1.0) * 2f64.powi(-(j as i32));
                let phi: Vec<f64> = bs[d as usize]
                    .iter()
                    .zip(&u[3..])
                    .map(|(b, v)| (*b as f64 / q as f64 + (v - 0.5) * 2f64.powi(-(half(j) as i32))).rem_euclid(1.0))
                    .collect();
                ((a as f64 / q as f64 + alpha).rem_euclid(1.0), phi)
            } else {
                let w = if j >= 20 { arc_half_width(j, 0) } else { 2f64.powi(-(half(j) as i32)) };
                let alpha = w * (1.0 + u[2]) * if u[1] < 0.5 { -1.0 } else { 1.0 };
                let phi: Vec<f64> = u[3..].iter().map(|v| (v - 0.5) * 2f64.powi(-(half(j) as i32))).map(|x| x.rem_euclid(1.0)).collect();
                (alpha.rem_euclid(1.0), phi)
            };
            if classify(theta, &phi, j)?.kind != ArcKind::Minor {
                return Ok(None);
            }
            let m = minor_nu_j(form, lambda, j, theta, &phi, sampling.tol)?;
            let mut pt = vec![theta];
            pt.extend(&phi);
            Ok(Some(record("minor_j", format!("j={j}"), pt, m.value, m.quadrature_error)))
        })?;
        per_index.push((j as i64, recs.into_iter().flatten().collect()));
    }
    let k = k as f64;
    finish("minor_in_j", -k / 4.0, -k / 4.0 - window, -k / 4.0 + window, per_index)
}

/// The box |l1| ≤ l1_max, |l2_i| ≤ l2_max.
fn l_box(k: usize, l1_max: i64, l2_max: i64) -> Vec<(i64, Vec<i64>)> {
    let side = (2 * l2_max + 1) as usize;
    let mut out = Vec::new();
    for idx in 0..side.pow(k as u32) {
        let mut rest = idx;
        let mut l2 = vec![0i64; k];
        for i in (0..k).rev() {
            l2[i] = (rest % side) as i64 - l2_max;
            rest /= side;
        }
        for l1 in -l1_max..=l1_max {
            out.push((l1, l2.clone()));
        }
    }
    out
}

/// sup over the l-box of |c_l(𝒜(λ) ν_{r,s})| on Re λ = −2/k; passes when the
/// slope is at most `cap`.
#[allow(clippy::too_many_arguments)]
pub fn nu_rs_coefficient_scan(
    form: &QuadraticForm,
    lambda: Complex64,
    axis: ScanAxis,
    fixed: u32,
    range: std::ops::RangeInclusive<u32>,
    l1_max: i64,
    l2_max: i64,
    cap: f64,
) -> Result<Scan> {
    let ls = l_box(form.dim(), l1_max, l2_max);
    let mut per_index = Vec::new();
    for v in range {
        let (r, s) = match axis {
            ScanAxis::R => (v, fixed),
            ScanAxis::S => (fixed, v),
        };
        let recs = par_collect(ls.len(), |i| {
            let (l1, l2) = &ls[i];
            let c = nu_rs_coefficient(form, lambda, r, s, *l1, l2)?;
            let mut pt = vec![*l1 as f64];
            pt.extend(l2.iter().map(|x| *x as f64));
            Ok(record("coeff_nu_rs", format!("r={r};s={s}"), pt, c.value, c.error))
        })?;
        per_index.push((v as i64, recs));
    }
    let label = match axis {
        ScanAxis::R => "coeff_nu_rs_in_r",
        ScanAxis::S => "coeff_nu_rs_in_s",
    };
    finish(label, cap, f64::NEG_INFINITY, cap, per_index)
}

/// Frequencies probed for the E-piece coefficients at level j (k = 1). The
/// coefficients concentrate near |l2| ≈ 2^{⌊j/2⌋} with l1 + l2² a multiple of
/// every admissible q and |l1 + l2²| ≲ 2^{⌊j/2⌋}, so l2 runs over a half-octave
/// grid in [2^{⌊j/2⌋-3}, 2^{⌊j/2⌋+1}] and ξ = l1 + l2² over multiples of lcm(1..q_max).
pub fn e_coefficient_frequencies(j: u32) -> Vec<(i64, Vec<i64>)> {
    let h = half(j) as i32;
    let q_max = if j >= 20 { 1i64 << (half(j) - 10) } else { 1 };
    let lcm = (1..=q_max).fold(1i64, |acc, q| acc / gcd(acc, q) * q);
    let mut out = Vec::new();
    for i in 0..9 {
        let l2 = 2f64.powf(h as f64 - 3.0 + 0.5 * i as f64).round() as i64;
        for f in [0.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0] {
            let xi = lcm * (f * 2f64.powi(h) / lcm as f64).round() as i64;
            out.push((xi - l2 * l2, vec![l2]));
        }
    }
    out.dedup();
    out
}

/// sup over [`e_coefficient_frequencies`] of |c_l(𝒜(λ) E_{λ,j})| (k = 1);
/// passes when the slope is at most `cap`.
pub fn e_coefficient_scan(form: &QuadraticForm, lambda: Complex64, range: std::ops::RangeInclusive<u32>, cap: f64) -> Result<Scan> {
    let a = analytic_factor(form.dim(), lambda, false);
    let mut per_index = Vec::new();
    for j in range {
        let ls = e_coefficient_frequencies(j);
        let recs = par_collect(ls.len(), |i| {
            let (l1, l2) = &ls[i];
            let c = e_coefficient(form, lambda, j, *l1, l2)?;
            let mut pt = vec![*l1 as f64];
            pt.extend(l2.iter().map(|x| *x as f64));
            Ok(record("coeff_e_j", format!("j={j}"), pt, c.value * a, c.error * a.norm()))
        })?;
        per_index.push((j as i64, recs));
    }
    finish("coeff_e_in_j", cap, f64::NEG_INFINITY, cap, per_index)
}

/// Grid-DFT estimates of c_l(ν_{λ,j}) against the closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCheck {
    pub j: u32,
    pub n_theta: usize,
    pub n_phi: usize,
    /// max |estimate − closed form| over l1 = −Q(l2).
    pub max_err_on: f64,
    /// max |estimate| over l1 ≠ −Q(l2).
    pub max_off: f64,
    pub max_closed: f64,
}

/// Compare the DFT of ν_{λ,j} sampled on an n_theta × n_phi^k grid with the closed form.
#[allow(clippy::too_many_arguments)]
pub fn grid_check(form: &QuadraticForm, lambda: Complex64, j: u32, n_theta: usize, n_phi: usize, l1_max: i64, l2_max: i64) -> Result<GridCheck> {
    let sampler = NuJSampler::new(form, lambda, j, 1e-17)?;
    let co = coefficients_from_grid(sampler.grid(n_theta, n_phi)?, form.dim(), n_theta, n_phi, l1_max, l2_max)?;
    let mut out = GridCheck { j, n_theta, n_phi, max_err_on: 0.0, max_off: 0.0, max_closed: 0.0 };
    for c in &co {
        let exact = fourier_coeff_closed_form(form, lambda, j, c.l1, &c.l2)?;
        if c.l1 == -form.eval(&c.l2) {
            out.max_err_on = out.max_err_on.max((c.value - exact).norm());
            out.max_closed = out.max_closed.max(exact.norm());
        } else {
            out.max_off = out.max_off.max(c.value.norm());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_windows() {
        let idx: Vec<i64> = (0..6).collect();
        let sup: Vec<f64> = idx.iter().map(|&i| 3.0 * 2f64.powf(-0.5 * i as f64)).collect();
        let f = fit_sups("x", &idx, &sup, -0.6, -0.4).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12 && f.pass);
        assert!(!fit_sups("x", &idx, &sup, -0.4, 0.0).unwrap().pass);
        assert!(fit_sups("x", &idx[..5], &sup[..5], -1.0, 1.0).is_err());
    }

    #[test]
    fn l_box_size() {
        assert_eq!(l_box(2, 3, 1).len(), 7 * 9);
        assert_eq!(l_box(1, 0, 0), vec![(0, vec![0])]);
    }

    #[test]
    fn grid_check_small() {
        let q = QuadraticForm::sum_of_squares(1);
        let g = grid_check(&q, Complex64::new(0.8, 0.0), 4, 1024, 32, 16, 4).unwrap();
        assert!(g.max_err_on < 1e-12 && g.max_off < 1e-12, "{g:?}");
    }
}
