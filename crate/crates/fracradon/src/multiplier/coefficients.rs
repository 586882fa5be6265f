//! Fourier coefficients c_l = ∫∫ ν(θ,φ) e^{-2πi(l1θ + l2·φ)} dθ dφ of the
//! multiplier pieces: the closed form for ν_{λ,j}, grid DFT estimates, and
//! semi-analytic formulas for ν_{r,s}, E_{λ,j} and the minor-arc piece.
//!
//! Notation: ξ = l1 + Q(l2), c_q(n) the Ramanujan sum, Y_j(c) = ∫_{2^{-j}}^{2^{1-j}}
//! y^{κ-1} e^{-2πcy} dy with κ = kλ/2, and Ψ̂ the Fourier transform of the
//! bump profile behind ψ_q.

use super::{analytic_factor, pow2_m1_over, ypow};
use crate::arcs::{arc_half_width, half, psi_profile};
use crate::error::{Error, Result};
use crate::exponential_sums::ramanujan_sum;
use crate::numerics::{cis_neg, frac_prod, gauss_kronrod_adaptive, gauss_legendre, sinc, transform_axes, NeumaierSum};
use crate::quadform::QuadraticForm;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientEstimate {
    pub value: Complex64,
    pub error: f64,
}

fn check_l(form: &QuadraticForm, l2: &[i64]) -> Result<i64> {
    if l2.len() != form.dim() {
        return Err(Error::DimensionMismatch { expected: form.dim(), got: l2.len() });
    }
    form.evaluate(l2)
}

/// g(x) = ∫_1^2 u^{κ-1} e^{-2πxu} du and friends, so that Y_j(c) = 2^{-jκ} g(c 2^{-j}).
pub(crate) struct Moments {
    kappa: Complex64,
    nodes: Vec<(f64, Complex64)>,
    taylor: Vec<Complex64>,
    g0: Complex64,
}

impl Moments {
    pub(crate) fn new(kappa: Complex64) -> Self {
        let rule = gauss_legendre(64);
        let nodes = rule.0.iter().zip(&rule.1).map(|(x, w)| {
            let u = 1.5 + 0.5 * x;
            (u, ypow(u, kappa - 1.0) * (0.5 * w))
        });
        // m_n = ∫_1^2 u^{κ-1+n} du
        let taylor = (0..40).map(|n| (ypow(2.0, kappa + n as f64) - 1.0) / (kappa + n as f64)).collect::<Vec<_>>();
        let taylor: Vec<Complex64> =
            taylor.iter().enumerate().map(|(n, m)| if (kappa + n as f64).norm() < 1e-12 { Complex64::new(LN_2, 0.0) } else { *m }).collect();
        Self { kappa, nodes: nodes.collect(), g0: pow2_m1_over(kappa), taylor }
    }

    /// g(x) − g(0).
    pub(crate) fn g_defect(&self, x: f64) -> Complex64 {
        if x > 12.0 {
            return self.g(x) - self.g0;
        }
        if x == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if 4.0 * PI * x <= 1.0 {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut p = 1.0;
            for (n, m) in self.taylor.iter().enumerate().skip(1) {
                p *= -2.0 * PI * x / n as f64;
                acc += m * p;
                if p.abs() < 1e-19 {
                    break;
                }
            }
            acc
        } else {
            self.nodes.iter().map(|(u, w)| w * (-2.0 * PI * x * u).exp_m1()).sum()
        }
    }

    pub(crate) fn g(&self, x: f64) -> Complex64 {
        if x <= 12.0 {
            return self.g0 + self.g_defect(x);
        }
        let e = self.kappa - 1.0;
        gauss_kronrod_adaptive(|u| ypow(u, e) * (-2.0 * PI * x * u).exp(), 1.0, 2.0, 1e-300f64.max(1e-17 * (-2.0 * PI * x).exp()), 400).0
    }

    pub(crate) fn y_j(&self, j: u32, c: f64) -> Complex64 {
        let t = 2f64.powi(-(j as i32));
        (-(j as f64) * LN_2 * self.kappa).exp() * self.g(c * t)
    }
}

/// c_l(ν_{λ,j}): ∫_{2^{-j}}^{2^{1-j}} y^{κ-1} e^{-2πQ(l2)y} dy when l1 = −Q(l2), else 0.
pub fn fourier_coeff_closed_form(form: &QuadraticForm, lambda: Complex64, j: u32, l1: i64, l2: &[i64]) -> Result<Complex64> {
    let c = check_l(form, l2)?;
    if l1 != -c {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let lo = 2f64.powi(-(j as i32));
    let e = kappa - 1.0;
    let scale = lo.powf(kappa.re) * (-2.0 * PI * c as f64 * lo).exp();
    let (v, _) = gauss_kronrod_adaptive(|y| ypow(y, e) * (-2.0 * PI * c as f64 * y).exp(), lo, 2.0 * lo, 1e-15 * scale, 400);
    Ok(v)
}

/// ν_{λ,j} written as Σ_m W_m e^{-2πi(Q(m)θ + m·φ)} with W_m = Y_j(Q(m)),
/// truncated where W_m falls below `eps`.
#[derive(Debug, Clone)]
pub struct NuJSampler {
    k: usize,
    terms: Vec<(Vec<i64>, i64, Complex64)>,
}

impl NuJSampler {
    pub fn new(form: &QuadraticForm, lambda: Complex64, j: u32, eps: f64) -> Result<Self> {
        let k = form.dim();
        let kappa = lambda * (k as f64 / 2.0);
        let weight = super::dyadic_weight(kappa.re, j);
        let scale = 2f64.powi(j as i32);
        let n_cut = (scale * (weight * 1e6 / eps).ln().max(1.0) / (2.0 * PI)).ceil() as i64;
        let mom = Moments::new(kappa);
        let mut terms = Vec::new();
        form.for_each_lattice_point(n_cut, |m, n| terms.push((m.to_vec(), n, mom.y_j(j, n as f64))));
        if terms.len() > 50_000_000 {
            return Err(Error::Budget(format!("{} lattice terms", terms.len())));
        }
        Ok(Self { k, terms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, theta: f64, phi: &[f64]) -> Complex64 {
        let mut acc = NeumaierSum::new();
        for (m, n, w) in &self.terms {
            let mut t = frac_prod(*n as f64, theta);
            for (mi, p) in m.iter().zip(phi) {
                t += frac_prod(*mi as f64, *p);
            }
            acc.add(w * cis_neg(t));
        }
        acc.value()
    }

    /// Samples on θ_u = u/N_θ, φ_v = v/N_φ, stored row-major as [u][v_1]..[v_k].
    pub fn grid(&self, n_theta: usize, n_phi: usize) -> Result<Vec<Complex64>> {
        check_grid(self.k, n_theta, n_phi)?;
        let row = n_phi.pow(self.k as u32);
        let mut out = vec![Complex64::new(0.0, 0.0); n_theta * row];
        let roots: Vec<Complex64> = (0..n_theta).map(|u| cis_neg(u as f64 / n_theta as f64)).collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n_phi);
        out.par_chunks_mut(row).enumerate().for_each(|(u, chunk)| {
            for (m, n, w) in &self.terms {
                let ph = roots[((*n as i128 * u as i128).rem_euclid(n_theta as i128)) as usize];
                let mut idx = 0usize;
                for mi in m {
                    idx = idx * n_phi + mi.rem_euclid(n_phi as i64) as usize;
                }
                chunk[idx] += w * ph;
            }
            let dims = vec![n_phi; self.k];
            transform_axes(chunk, &dims, |_, line| fft.process(line));
        });
        Ok(out)
    }
}

fn check_grid(k: usize, n_theta: usize, n_phi: usize) -> Result<()> {
    if k > 2 {
        return Err(Error::Unsupported("grid DFT is limited to k <= 2".into()));
    }
    if !n_theta.is_power_of_two() || !n_phi.is_power_of_two() {
        return Err(Error::Precondition("grid sizes must be powers of two".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCoefficient {
    pub l1: i64,
    pub l2: Vec<i64>,
    pub value: Complex64,
}

/// c_l ≈ N^{-1} Σ_x ν(x) e^{-2πi l·x} for |l1| ≤ l1_max, |l2_i| ≤ l2_max from samples
/// laid out as in [`NuJSampler::grid`]. Aliasing adds c_{l'} for l' ≡ l modulo
/// the grid, so the estimate improves as the grid doubles.
pub fn coefficients_from_grid(mut grid: Vec<Complex64>, k: usize, n_theta: usize, n_phi: usize, l1_max: i64, l2_max: i64) -> Result<Vec<GridCoefficient>> {
    check_grid(k, n_theta, n_phi)?;
    let row = n_phi.pow(k as u32);
    if grid.len() != n_theta * row {
        return Err(Error::DimensionMismatch { expected: n_theta * row, got: grid.len() });
    }
    if 2 * l1_max >= n_theta as i64 || 2 * l2_max >= n_phi as i64 {
        return Err(Error::Precondition(format!("l-range ({l1_max}, {l2_max}) exceeds the Nyquist limit of a {n_theta} x {n_phi} grid")));
    }
    let mut planner = FftPlanner::new();
    let ft = planner.plan_fft_forward(n_theta);
    let fp = planner.plan_fft_forward(n_phi);
    let mut dims = vec![n_theta];
    dims.extend(std::iter::repeat_n(n_phi, k));
    // φ axes per row, then θ
    grid.par_chunks_mut(row).for_each(|chunk| transform_axes(chunk, &dims[1..], |_, l| fp.process(l)));
    let mut line = vec![Complex64::new(0.0, 0.0); n_theta];
    let norm = (n_theta * row) as f64;
    let mut out = Vec::new();
    let l2_count = (2 * l2_max + 1) as usize;
    let mut l2 = vec![-l2_max; k];
    for _ in 0..l2_count.pow(k as u32) {
        let mut col = 0usize;
        for x in &l2 {
            col = col * n_phi + x.rem_euclid(n_phi as i64) as usize;
        }
        for u in 0..n_theta {
            line[u] = grid[u * row + col];
        }
        ft.process(&mut line);
        for l1 in -l1_max..=l1_max {
            out.push(GridCoefficient { l1, l2: l2.clone(), value: line[l1.rem_euclid(n_theta as i64) as usize] / norm });
        }
        for i in (0..k).rev() {
            l2[i] += 1;
            if l2[i] <= l2_max {
                break;
            }
            l2[i] = -l2_max;
        }
    }
    out.sort_by(|a, b| (&a.l2, a.l1).cmp(&(&b.l2, b.l1)));
    Ok(out)
}

/// Grid DFT estimate of the coefficients of an arbitrary sampler ν(θ, φ).
pub fn fourier_coeff_grid<F>(k: usize, n_theta: usize, n_phi: usize, l1_max: i64, l2_max: i64, sampler: F) -> Result<Vec<GridCoefficient>>
where
    F: Fn(f64, &[f64]) -> Complex64 + Sync,
{
    check_grid(k, n_theta, n_phi)?;
    let row = n_phi.pow(k as u32);
    let mut grid = vec![Complex64::new(0.0, 0.0); n_theta * row];
    grid.par_chunks_mut(row).enumerate().for_each(|(u, chunk)| {
        let theta = u as f64 / n_theta as f64;
        let mut phi = vec![0.0; k];
        for (idx, v) in chunk.iter_mut().enumerate() {
            let mut rest = idx;
            for i in (0..k).rev() {
                phi[i] = (rest % n_phi) as f64 / n_phi as f64;
                rest /= n_phi;
            }
            *v = sampler(theta, &phi);
        }
    });
    coefficients_from_grid(grid, k, n_theta, n_phi, l1_max, l2_max)
}

/// sinc(x) − 1 without cancellation.
fn sinc_m1(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let x2 = x * x;
        let mut term = -x2 / 6.0;
        let mut acc = term;
        for n in 2..12 {
            term *= -x2 / ((2 * n) * (2 * n + 1)) as f64;
            acc += term;
        }
        acc
    } else {
        x.sin() / x - 1.0
    }
}

/// ∫ over shell r of e^{-2πiξα} dα with t = 2^{-j}: r = 0 is |α| ≤ t,
/// r ≥ 1 is 2^{r-1}t < |α| ≤ 2^r t.
fn shell_transform(r: u32, xi: f64, t: f64) -> f64 {
    if r == 0 {
        2.0 * t * sinc(2.0 * PI * xi * t)
    } else {
        let a = 2f64.powi(r as i32) * t;
        2.0 * a * sinc(2.0 * PI * xi * a) - a * sinc(PI * xi * a)
    }
}

/// shell_transform − L_r t with L_0 = 2, L_r = 2^r.
fn shell_transform_defect(r: u32, xi: f64, t: f64) -> f64 {
    if r == 0 {
        2.0 * t * sinc_m1(2.0 * PI * xi * t)
    } else {
        let a = 2f64.powi(r as i32) * t;
        2.0 * a * sinc_m1(2.0 * PI * xi * a) - a * sinc_m1(PI * xi * a)
    }
}

fn ramanujan_real(q: i64, n: i64) -> f64 {
    ramanujan_sum(q, n.rem_euclid(q)).re
}

/// Relative size of the error made by replacing ψ_q by 1 in a shell-r piece:
/// the main-term Gaussian at the plateau edge |β| = 1/(4q).
pub fn psi_plateau_defect(form: &QuadraticForm, r: u32) -> f64 {
    (-0.0982 * 2f64.powi(18 - 2 * r as i32) / form.eig_max()).exp()
}

/// c_l(𝒜(λ) ν_{r,s}) with ψ_q replaced by its plateau value 1. The sum over
/// levels j ≥ J0 is continued analytically: its leading geometric part is summed
/// in closed form and absorbs the factor 𝒜(λ), so the result is finite on
/// Re λ = −2/k.
pub fn nu_rs_coefficient(form: &QuadraticForm, lambda: Complex64, r: u32, s: u32, l1: i64, l2: &[i64]) -> Result<CoefficientEstimate> {
    let c = check_l(form, l2)? as f64;
    let xi = l1 + c as i64;
    let k = form.dim();
    let kappa = lambda * (k as f64 / 2.0);
    let mom = Moments::new(kappa);
    let (cs, cs_abs) = (1i64 << s..1i64 << (s + 1)).fold((0.0, 0.0), |acc, q| {
        let v = ramanujan_real(q, xi);
        (acc.0 + v, acc.1 + v.abs())
    });
    let j0 = if r >= 1 { (2 * s + 20).max(2 * s + 2 * r - 1) } else { 2 * s + 20 };
    let big_l = if r == 0 { 2.0 } else { 2f64.powi(r as i32) };
    let d0 = mom.g0 * big_l;
    let lead = d0 * (-(kappa + 1.0) * ((j0 - 1) as f64 * LN_2)).exp();
    let mut rem = NeumaierSum::new();
    let mut abs_sum = 0.0;
    let mut small = 0;
    for j in j0..j0 + 400 {
        let t = 2f64.powi(-(j as i32));
        let h = mom.g(c * t) * shell_transform_defect(r, xi as f64, t) + mom.g_defect(c * t) * (big_l * t);
        let term = (-(j as f64) * LN_2 * kappa).exp() * h;
        rem.add(term);
        abs_sum += term.norm();
        if term.norm() <= 1e-18 * (rem.value().norm() + lead.norm()) {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    let a = analytic_factor(k, lambda, false);
    let value = (a * rem.value() + lead) * cs;
    let error = psi_plateau_defect(form, r) * cs_abs * (a.norm() * abs_sum + lead.norm()) + 1e-14 * value.norm();
    Ok(CoefficientEstimate { value, error })
}

/// Quadrature nodes (t, weight·Ψ̂(t)) on [−128, 128] with panels of width `h`.
struct PsiHatTable {
    nodes: Vec<(f64, f64)>,
}

fn psi_hat_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| {
        let rule = gauss_legendre(384);
        let u: Vec<f64> = rule.0.iter().map(|x| 0.5 + 0.25 * x).collect();
        let w: Vec<f64> = rule.1.iter().zip(&u).map(|(w, &u)| 0.25 * w * psi_profile(u)).collect();
        (u, w)
    })
}

/// Ψ̂(t) = ∫ Ψ(u) e^{-2πitu} du for the bump profile Ψ (Ψ̂(0) = 1, Ψ̂(n) = 0 for n ≠ 0).
pub fn psi_hat(t: f64) -> f64 {
    let plateau = if t == 0.0 { 0.5 } else { (0.5 * PI * t).sin() / (PI * t) };
    let (u, w) = psi_hat_rule();
    let ramp: f64 = u.iter().zip(w).map(|(u, w)| w * (2.0 * PI * t * u).cos()).sum();
    plateau + 2.0 * ramp
}

impl PsiHatTable {
    fn build(h: f64) -> Self {
        const T: f64 = 128.0;
        let rule = gauss_legendre(16);
        let panels = (2.0 * T / h).round() as usize;
        let mut nodes = Vec::with_capacity(panels * 16);
        for p in 0..panels {
            let a = -T + p as f64 * h;
            for (x, w) in rule.0.iter().zip(&rule.1) {
                let t = a + 0.5 * h * (x + 1.0);
                let v = psi_hat(t);
                if v.abs() > 1e-20 {
                    nodes.push((t, 0.5 * h * w * v));
                }
            }
        }
        Self { nodes }
    }

    fn fine() -> &'static Self {
        static F: OnceLock<PsiHatTable> = OnceLock::new();
        F.get_or_init(|| Self::build(0.25))
    }

    fn coarse() -> &'static Self {
        static C: OnceLock<PsiHatTable> = OnceLock::new();
        C.get_or_init(|| Self::build(0.5))
    }

    /// ∫ Ψ̂(t) [h(qt − l2) − h(−l2)] dt.
    fn smear<F: Fn(f64) -> Complex64>(&self, q: i64, l2: f64, h: F) -> Complex64 {
        let h0 = h(-l2);
        let mut acc = NeumaierSum::new();
        for &(t, w) in &self.nodes {
            acc.add((h(q as f64 * t - l2) - h0) * w);
        }
        acc.value()
    }
}

fn require_k1(form: &QuadraticForm, what: &str) -> Result<()> {
    if form.dim() != 1 {
        return Err(Error::Unsupported(format!("{what} is implemented for k = 1")));
    }
    Ok(())
}

/// c_l of the single-level piece Σ_{(a,q)=1} Σ_b χ̃(2^{j-r}|α|) ψ_q(φ − b/q) ∫ y^{κ-1} M_{a,b,q} dy
/// for one q (no constraint tying j to q). With `exact_psi` (k = 1) the smooth
/// cut-off is kept; otherwise it is replaced by 1.
#[allow(clippy::too_many_arguments)]
pub fn nu_jrs_coefficient(form: &QuadraticForm, lambda: Complex64, j: u32, r: u32, q: i64, l1: i64, l2: &[i64], exact_psi: bool) -> Result<Complex64> {
    let c = check_l(form, l2)? as f64;
    let xi = l1 as f64 + c;
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let mom = Moments::new(kappa);
    let cq = ramanujan_real(q, l1 + c as i64);
    let t = 2f64.powi(-(j as i32));
    let plateau = mom.y_j(j, c) * shell_transform(r, xi, t);
    if !exact_psi {
        return Ok(plateau * cq);
    }
    require_k1(form, "the exact-cutoff coefficient")?;
    let h = |eta: f64| {
        let qe = form.eval_f64(&[eta]);
        mom.y_j(j, qe) * shell_transform(r, qe + l1 as f64, t)
    };
    let defect = PsiHatTable::fine().smear(q, l2[0] as f64, h);
    Ok((plateau + defect) * cq)
}

/// c_l of the remainder piece of one arc family: denominator q, half-width w in θ,
/// smooth cut-off ψ_q in φ, level j (k = 1). Returns (value, error estimate).
#[allow(clippy::too_many_arguments)]
pub fn e_arc_coefficient(form: &QuadraticForm, lambda: Complex64, j: u32, q: i64, w: f64, l1: i64, l2: &[i64]) -> Result<CoefficientEstimate> {
    require_k1(form, "the remainder coefficient")?;
    let c = check_l(form, l2)?;
    let kappa = lambda * 0.5;
    let mom = Moments::new(kappa);
    let cq = ramanujan_real(q, l1 + c);
    let h = |eta: f64| {
        let qe = form.eval_f64(&[eta]);
        mom.y_j(j, qe) * (2.0 * w * sinc(2.0 * PI * (qe + l1 as f64) * w))
    };
    let fine = PsiHatTable::fine().smear(q, l2[0] as f64, h);
    let coarse = PsiHatTable::coarse().smear(q, l2[0] as f64, h);
    Ok(CoefficientEstimate { value: -fine * cq, error: ((fine - coarse) * cq).norm() })
}

/// c_l(E_{λ,j}) summed over the level-j major arcs (k = 1).
pub fn e_coefficient(form: &QuadraticForm, lambda: Complex64, j: u32, l1: i64, l2: &[i64]) -> Result<CoefficientEstimate> {
    require_k1(form, "the remainder coefficient")?;
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    if j < 20 {
        return Ok(CoefficientEstimate { value, error });
    }
    for s in 0..=half(j) - 10 {
        let w = arc_half_width(j, s);
        for q in 1i64 << s..(1i64 << (s + 1)).min((1i64 << (half(j) - 10)) + 1) {
            let e = e_arc_coefficient(form, lambda, j, q, w, l1, l2)?;
            value += e.value;
            error += e.error;
        }
    }
    Ok(CoefficientEstimate { value, error })
}

/// c_l(χ_{major} ν_{λ,j}) = Σ_{s,q} c_q(ξ) Y_j(Q(l2)) 2w sinc(2πξw).
pub fn major_coefficient(form: &QuadraticForm, lambda: Complex64, j: u32, l1: i64, l2: &[i64]) -> Result<Complex64> {
    let c = check_l(form, l2)?;
    if j < 20 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let y = Moments::new(kappa).y_j(j, c as f64);
    let xi = (l1 + c) as f64;
    let mut acc = 0.0;
    for s in 0..=half(j) - 10 {
        let w = arc_half_width(j, s);
        let cs: f64 = (1i64 << s..(1i64 << (s + 1)).min((1i64 << (half(j) - 10)) + 1)).map(|q| ramanujan_real(q, l1 + c)).sum();
        acc += cs * 2.0 * w * sinc(2.0 * PI * xi * w);
    }
    Ok(y * acc)
}

/// c_l(χ_{minor} ν_{λ,j}) = c_l(ν_{λ,j}) − c_l(χ_{major} ν_{λ,j}).
pub fn minor_coefficient(form: &QuadraticForm, lambda: Complex64, j: u32, l1: i64, l2: &[i64]) -> Result<CoefficientEstimate> {
    let full = fourier_coeff_closed_form(form, lambda, j, l1, l2)?;
    let major = major_coefficient(form, lambda, j, l1, l2)?;
    let value = full - major;
    Ok(CoefficientEstimate { value, error: 1e-13 * (full.norm() + major.norm()) })
}

/// Y_j(c) by adaptive quadrature (reference for the series used above).
pub fn dyadic_moment(lambda: Complex64, k: usize, j: u32, c: f64) -> Complex64 {
    let kappa = lambda * (k as f64 / 2.0);
    let lo = 2f64.powi(-(j as i32));
    let e = kappa - 1.0;
    let scale = lo.powf(kappa.re) * (-2.0 * PI * c * lo).exp();
    gauss_kronrod_adaptive(|y| ypow(y, e) * (-2.0 * PI * c * y).exp(), lo, 2.0 * lo, 1e-16 * scale, 400).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponential_sums::gcd;
    use crate::numerics::gl_doubling;
    use crate::theta::{approx_main_term, ArcPoint, InversionSeries};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn closed_form_examples() {
        let q = QuadraticForm::sum_of_squares(1);
        let lam = c(0.8, 0.0);
        for j in [2u32, 5, 9] {
            let v = fourier_coeff_closed_form(&q, lam, j, 0, &[0]).unwrap();
            let kl = 0.4;
            let exact = (2.0 / 0.8) * 2f64.powf(-(j as f64) * kl) * (2f64.powf(kl) - 1.0);
            assert!((v.re - exact).abs() < 1e-14 * exact && v.im.abs() < 1e-15);
        }
        assert_eq!(fourier_coeff_closed_form(&q, lam, 4, 3, &[1]).unwrap(), c(0.0, 0.0));
        assert!(fourier_coeff_closed_form(&q, lam, 4, -1, &[1]).unwrap().norm() > 0.0);
    }

    #[test]
    fn moments_match_quadrature() {
        for lam in [c(0.8, 0.0), c(-2.0, 1.3), c(1.0, -4.0)] {
            let m = Moments::new(lam * 0.5);
            for (j, cc) in [(4u32, 0.0), (4, 1.0), (6, 3.0), (20, 5e4), (3, 200.0), (22, 1e3)] {
                let a = m.y_j(j, cc);
                let b = dyadic_moment(lam, 1, j, cc);
                assert!((a - b).norm() <= 1e-13 * b.norm().max(1e-300), "{lam} {j} {cc}: {a} {b}");
            }
        }
    }

    #[test]
    fn psi_hat_properties() {
        assert!((psi_hat(0.0) - 1.0).abs() < 1e-14);
        for n in 1..20 {
            assert!(psi_hat(n as f64).abs() < 1e-13, "n={n}");
        }
        assert!(psi_hat(100.5).abs() < 1e-11);
        let total: f64 = PsiHatTable::fine().nodes.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn sampler_matches_theta_quadrature() {
        let q = QuadraticForm::sum_of_squares(1);
        let lam = c(0.8, 0.5);
        let j = 5;
        let s = NuJSampler::new(&q, lam, j, 1e-15).unwrap();
        for (theta, phi) in [(0.1, 0.3), (0.77, -0.2)] {
            let a = s.eval(theta, &[phi]);
            let b = super::super::nu_lambda_j(&q, lam, j, theta, &[phi], 1e-13).unwrap().value;
            assert!((a - b).norm() < 1e-11, "{a} {b}");
        }
    }

    #[test]
    fn grid_dft_recovers_closed_form() {
        let q = QuadraticForm::sum_of_squares(1);
        let lam = c(0.8, 0.0);
        let j = 4;
        let s = NuJSampler::new(&q, lam, j, 1e-16).unwrap();
        let (nt, np) = (1024, 64);
        let co = coefficients_from_grid(s.grid(nt, np).unwrap(), 1, nt, np, 20, 4).unwrap();
        for e in &co {
            let exact = fourier_coeff_closed_form(&q, lam, j, e.l1, &e.l2).unwrap();
            assert!((e.value - exact).norm() < 1e-12, "{:?} {}", e, exact);
        }
        let direct = fourier_coeff_grid(1, 256, 16, 5, 2, |t, p| s.eval(t, p)).unwrap();
        for e in &direct {
            let exact = fourier_coeff_closed_form(&q, lam, j, e.l1, &e.l2).unwrap();
            assert!((e.value - exact).norm() < 1e-12);
        }
        assert!(coefficients_from_grid(vec![c(0.0, 0.0); 64 * 16], 1, 64, 16, 40, 2).is_err());
    }

    #[test]
    fn grid_dft_two_dimensional() {
        let q = QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let lam = c(1.0, 1.0);
        let s = NuJSampler::new(&q, lam, 3, 1e-16).unwrap();
        let co = coefficients_from_grid(s.grid(256, 32).unwrap(), 2, 256, 32, 6, 2).unwrap();
        for e in &co {
            let exact = fourier_coeff_closed_form(&q, lam, 3, e.l1, &e.l2).unwrap();
            assert!((e.value - exact).norm() < 1e-12);
        }
    }

    /// Brute force: Σ_a Σ_b ∫_α ∫_β ∫_y e(−l1 θ − l2 φ) · (integrand), with
    /// θ = a/q + α and φ = b/q + β over the real line (k = 1).
    fn brute<F: Fn(i64, i64, f64, f64, f64) -> Complex64>(q: i64, alpha_lo: f64, alpha_hi: f64, j: u32, l1: i64, l2: i64, kappa: Complex64, f: F) -> Complex64 {
        let lo = 2f64.powi(-(j as i32));
        let mut total = c(0.0, 0.0);
        for a in (1..=q).filter(|&a| gcd(a, q) == 1) {
            for b in 0..q {
                let beta_int = |alpha: f64| {
                    gl_doubling(
                        |beta| {
                            let w = psi_profile(q as f64 * beta);
                            if w == 0.0 {
                                return c(0.0, 0.0);
                            }
                            let theta = a as f64 / q as f64 + alpha;
                            let phi = b as f64 / q as f64 + beta;
                            let y_int = gl_doubling(|y| f(a, b, alpha, beta, y) * ypow(y, kappa - 1.0), lo, 2.0 * lo, 16, 256, 1e-15).value;
                            y_int * w * cis_neg(l1 as f64 * theta + l2 as f64 * phi)
                        },
                        -0.75 / q as f64,
                        0.75 / q as f64,
                        32,
                        256,
                        1e-13,
                    )
                    .value
                };
                for (s0, s1) in [(alpha_lo, alpha_hi), (-alpha_hi, -alpha_lo)] {
                    total += gl_doubling(beta_int, s0, s1, 16, 128, 1e-12).value;
                }
            }
        }
        total
    }

    #[test]
    fn exact_shell_coefficient_matches_brute_force() {
        let form = QuadraticForm::sum_of_squares(1);
        let lam = c(0.6, 0.8);
        let kappa = lam * 0.5;
        let (j, r, q) = (4u32, 2u32, 2i64);
        let t = 2f64.powi(-(j as i32));
        for (l1, l2) in [(0i64, 0i64), (-1, 1), (2, -1)] {
            let exact = nu_jrs_coefficient(&form, lam, j, r, q, l1, &[l2], true).unwrap();
            let bf = brute(q, 2f64.powi(r as i32 - 1) * t, 2f64.powi(r as i32) * t, j, l1, l2, kappa, |a, b, al, be, y| {
                approx_main_term(&form, y, al, &[be], a, &[b], q).unwrap()
            });
            assert!((exact - bf).norm() < 1e-8, "l=({l1},{l2}) {exact} {bf}");
        }
    }

    #[test]
    fn remainder_arc_coefficient_matches_brute_force() {
        let form = QuadraticForm::sum_of_squares(1);
        let lam = c(0.6, -0.5);
        let kappa = lam * 0.5;
        let (j, q, w) = (4u32, 2i64, 1.0 / 16.0);
        for (l1, l2) in [(0i64, 0i64), (-1, 1), (1, 0)] {
            let est = e_arc_coefficient(&form, lam, j, q, w, l1, &[l2]).unwrap();
            let bf = brute(q, 0.0, w, j, l1, l2, kappa, |a, b, al, be, y| {
                let theta = a as f64 / q as f64 + al;
                let phi = b as f64 / q as f64 + be;
                let mut p = ArcPoint::new(theta, &[phi], a, &[b], q).unwrap();
                p.beta = vec![be];
                InversionSeries::new(&form, &p, y, y, 1e-15).unwrap().remainder(y).value
            });
            assert!((est.value - bf).norm() < 1e-8, "l=({l1},{l2}) {} {bf}", est.value);
        }
    }

    #[test]
    fn plateau_and_exact_cutoff_agree_at_high_levels() {
        let form = QuadraticForm::sum_of_squares(1);
        let lam = c(-2.0, 0.7);
        for (j, r, q) in [(22u32, 1u32, 2i64), (24, 3, 3), (26, 5, 5)] {
            let a = nu_jrs_coefficient(&form, lam, j, r, q, 1, &[2], true).unwrap();
            let b = nu_jrs_coefficient(&form, lam, j, r, q, 1, &[2], false).unwrap();
            assert!((a - b).norm() <= psi_plateau_defect(&form, r) * b.norm() + 1e-12 * b.norm(), "{j} {r}: {a} {b}");
        }
    }

    #[test]
    fn continued_sum_matches_direct_sum_inside_strip() {
        // for Re λ > −2/k the level sum converges and must equal the continuation
        let form = QuadraticForm::sum_of_squares(1);
        for lam in [c(-1.0, 0.4), c(0.5, 0.0)] {
            let (r, s) = (2u32, 1u32);
            // ξ = 3: c_2 + c_3 = 1
            let est = nu_rs_coefficient(&form, lam, r, s, 2, &[1]).unwrap();
            let a = analytic_factor(1, lam, false);
            let mut direct = c(0.0, 0.0);
            for j in 22..1200 {
                for q in 2..4 {
                    direct += nu_jrs_coefficient(&form, lam, j, r, q, 2, &[1], false).unwrap();
                }
            }
            assert!((est.value - a * direct).norm() < 1e-9 * est.value.norm(), "{lam}: {} {}", est.value, a * direct);
        }
    }

    #[test]
    fn minor_is_full_minus_major() {
        let form = QuadraticForm::sum_of_squares(1);
        let lam = c(-2.0, 1.0);
        let m = minor_coefficient(&form, lam, 22, -4, &[2]).unwrap();
        let f = fourier_coeff_closed_form(&form, lam, 22, -4, &[2]).unwrap();
        let g = major_coefficient(&form, lam, 22, -4, &[2]).unwrap();
        assert!((m.value - (f - g)).norm() < 1e-15 * f.norm());
        let low = fourier_coeff_closed_form(&form, lam, 10, -4, &[2]).unwrap();
        assert_eq!(minor_coefficient(&form, lam, 10, -4, &[2]).unwrap().value, low);
    }
}
