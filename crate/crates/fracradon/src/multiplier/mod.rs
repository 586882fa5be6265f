//! The Fourier multiplier m_λ(θ,φ) = Σ_{m≠0} Q(m)^{-kλ/2} e^{-2πi(Q(m)θ + m·φ)},
//! its integral form ν_λ = ∫_0^1 Θ(y+iθ, φ) y^{kλ/2-1} dy, and the dyadic pieces
//! ν_{λ,j} over [2^{-j}, 2^{1-j}].

mod coefficients;
pub mod experiments;
mod pieces;

pub use coefficients::*;
pub use pieces::*;

use crate::arcs::{dirichlet_approx, half};
use crate::error::{Error, Result};
use crate::numerics::{cis_neg, frac_prod, gamma, gauss_kronrod_adaptive, gl_doubling, NeumaierSum};
use crate::quadform::QuadraticForm;
use crate::theta::{ArcPoint, DirectSeries, InversionSeries, ThetaEval};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};

/// Largest box (2R+1)^k enumerated by [`m_lambda_direct`].
pub const M_DIRECT_BUDGET: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Re λ > 1.
    AbsConvergent,
    /// Re λ = 1.
    LineOne,
    /// 0 < Re λ < 1.
    Interior,
    /// Re λ = −2/k.
    LineNeg,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambda {
    pub value: Complex64,
    pub region: Region,
}

impl Lambda {
    pub fn new(value: Complex64, k: usize) -> Self {
        const TOL: f64 = 1e-12;
        let re = value.re;
        let region = if (re - 1.0).abs() <= TOL {
            Region::LineOne
        } else if (re + 2.0 / k as f64).abs() <= TOL {
            Region::LineNeg
        } else if re > 1.0 {
            Region::AbsConvergent
        } else if re > 0.0 && re < 1.0 {
            Region::Interior
        } else {
            Region::Other
        };
        Self { value, region }
    }

    /// κ = kλ/2.
    pub fn kappa(&self, k: usize) -> Complex64 {
        self.value * (k as f64 / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    MDirect,
    MIntegral,
    Nu,
    NuJ {
        j: u32,
    },
    #[serde(rename = "b_s")]
    BS {
        s: u32,
    },
    NuRs {
        r: u32,
        s: u32,
    },
    NuJrs {
        j: u32,
        r: u32,
        s: u32,
    },
    MainJ {
        j: u32,
    },
    #[serde(rename = "e_j")]
    EJ {
        j: u32,
    },
    MinorJ {
        j: u32,
    },
}

impl Piece {
    pub fn name(&self) -> &'static str {
        match self {
            Piece::MDirect => "m_direct",
            Piece::MIntegral => "m_integral",
            Piece::Nu => "nu",
            Piece::NuJ { .. } => "nu_j",
            Piece::BS { .. } => "b_s",
            Piece::NuRs { .. } => "nu_rs",
            Piece::NuJrs { .. } => "nu_jrs",
            Piece::MainJ { .. } => "main_j",
            Piece::EJ { .. } => "e_j",
            Piece::MinorJ { .. } => "minor_j",
        }
    }

    /// Index string such as "j=5" or "r=1;s=2".
    pub fn indices(&self) -> String {
        match *self {
            Piece::MDirect | Piece::MIntegral | Piece::Nu => String::new(),
            Piece::NuJ { j } | Piece::MainJ { j } | Piece::EJ { j } | Piece::MinorJ { j } => format!("j={j}"),
            Piece::BS { s } => format!("s={s}"),
            Piece::NuRs { r, s } => format!("r={r};s={s}"),
            Piece::NuJrs { j, r, s } => format!("j={j};r={r};s={s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierSample {
    pub lambda: Lambda,
    pub theta: f64,
    pub phi: Vec<f64>,
    pub value: Complex64,
    pub piece: Piece,
    pub quadrature_error: f64,
}

impl MultiplierSample {
    pub(crate) fn new(form: &QuadraticForm, lambda: Complex64, theta: f64, phi: &[f64], piece: Piece, value: Complex64, err: f64) -> Self {
        Self { lambda: Lambda::new(lambda, form.dim()), theta, phi: phi.to_vec(), value, piece, quadrature_error: err }
    }
}

pub(crate) fn check_point(form: &QuadraticForm, phi: &[f64], tol: f64) -> Result<()> {
    if phi.len() != form.dim() {
        return Err(Error::DimensionMismatch { expected: form.dim(), got: phi.len() });
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if form.dim() > 3 {
        return Err(Error::Unsupported("multiplier work is limited to k <= 3".into()));
    }
    Ok(())
}

/// y^e for real y > 0 (principal branch).
#[inline]
pub(crate) fn ypow(y: f64, e: Complex64) -> Complex64 {
    (e * y.ln()).exp()
}

/// e^z − 1 without cancellation for small |z|.
pub(crate) fn exp_m1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let mut term = z;
        let mut sum = z;
        for n in 2..12 {
            term *= z / n as f64;
            sum += term;
        }
        sum
    } else {
        z.exp() - 1.0
    }
}

/// (2^x − 1)/x, continuous at x = 0.
pub(crate) fn pow2_m1_over(x: Complex64) -> Complex64 {
    if x.norm() < 1e-12 {
        Complex64::new(LN_2, 0.0)
    } else {
        exp_m1(x * LN_2) / x
    }
}

/// c_{k,λ} = (2π)^{kλ/2} / Γ(kλ/2).
pub fn gamma_constant(k: usize, lambda: Complex64) -> Result<Complex64> {
    let kappa = lambda * (k as f64 / 2.0);
    let g = gamma(kappa).ok_or_else(|| Error::Domain(format!("Gamma has a pole at kλ/2 = {kappa}")))?;
    Ok((kappa * (2.0 * PI).ln()).exp() / g)
}

/// 𝒜(λ) = 2^{1+kλ/2} − 1, optionally times (1 − λ).
pub fn analytic_factor(k: usize, lambda: Complex64, with_one_minus_lambda: bool) -> Complex64 {
    let a = exp_m1((1.0 + lambda * (k as f64 / 2.0)) * LN_2);
    if with_one_minus_lambda {
        a * (1.0 - lambda)
    } else {
        a
    }
}

/// A truncated lattice sum with its truncation data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectPartialSum {
    pub value: Complex64,
    pub radius: u64,
    /// Bound on the omitted terms; present only for Re λ > 1.
    pub tail_bound: Option<f64>,
    pub certified: bool,
}

/// Partial sum of m_λ over 0 < Q(m), |m|∞ ≤ R. For Re λ ≤ 1 the value is
/// returned uncertified.
pub fn m_lambda_direct(form: &QuadraticForm, lambda: Complex64, theta: f64, phi: &[f64], radius: u64) -> Result<DirectPartialSum> {
    check_point(form, phi, 1.0)?;
    let k = form.dim();
    let side = 2.0 * radius as f64 + 1.0;
    if side.powi(k as i32) > M_DIRECT_BUDGET {
        return Err(Error::Budget(format!("box of radius {radius} in dimension {k}")));
    }
    let kappa = lambda * (k as f64 / 2.0);
    let r = radius as i64;
    let rows: Vec<Complex64> = (-r..=r)
        .into_par_iter()
        .map(|m0| {
            let mut acc = NeumaierSum::new();
            let mut m = vec![0i64; k];
            m[0] = m0;
            let mut rest = vec![-r; k - 1];
            loop {
                m[1..].copy_from_slice(&rest);
                let n = form.eval(&m);
                if n > 0 {
                    let mut t = frac_prod(n as f64, theta);
                    for (mi, p) in m.iter().zip(phi) {
                        t += frac_prod(*mi as f64, *p);
                    }
                    acc.add((-kappa * (n as f64).ln()).exp() * cis_neg(t));
                }
                let mut i = k - 1;
                loop {
                    if i == 0 {
                        return acc.value();
                    }
                    i -= 1;
                    rest[i] += 1;
                    if rest[i] <= r {
                        break;
                    }
                    rest[i] = -r;
                }
            }
        })
        .collect();
    let value = NeumaierSum::sum_iter(rows);
    let sigma = lambda.re;
    let tail_bound = if sigma > 1.0 && radius > 0 {
        let kf = k as f64;
        let c = 2.0 * kf * 3f64.powi(k as i32 - 1) * (2.0 / form.eig_min()).powf(kf * sigma / 2.0);
        Some(c * (radius as f64).powf(kf * (1.0 - sigma)) / (kf * (sigma - 1.0)))
    } else {
        None
    };
    Ok(DirectPartialSum { value, radius, tail_bound, certified: tail_bound.is_some() })
}

/// Theta on one dyadic interval, by the cheaper feasible mode.
pub(crate) enum ThetaSource {
    Direct(DirectSeries),
    Inversion(InversionSeries),
}

impl ThetaSource {
    pub(crate) fn for_interval(form: &QuadraticForm, theta: f64, phi: &[f64], j: u32, eps: f64) -> Result<Self> {
        let lo = 2f64.powi(-(j as i32));
        let direct = || DirectSeries::new(form, lo, theta, phi, eps).map(ThetaSource::Direct);
        if j <= 12 {
            return direct();
        }
        // candidate anchors: the continued-fraction convergents with q ≤ 2^{⌊j/2⌋}
        let mut anchors: Vec<(f64, i64, i64)> = Vec::new();
        for e in 0..=half(j).min(62) {
            let d = dirichlet_approx(theta, 1u64 << e)?;
            if anchors.iter().all(|x| x.2 != d.q) {
                anchors.push((inversion_cost(form.dim(), d.q, d.alpha, lo), d.a, d.q));
            }
        }
        anchors.sort_by(|x, y| x.0.total_cmp(&y.0));
        let direct_cost = (6.0 / lo.sqrt() + 1.0).powi(form.dim() as i32);
        let mut last = None;
        for (cost, a, q) in anchors.into_iter().take(3) {
            if cost > direct_cost {
                if let Ok(d) = direct() {
                    return Ok(d);
                }
            }
            let p = ArcPoint::nearest_b(theta, phi, a, q)?;
            match InversionSeries::new(form, &p, lo, 2.0 * lo, eps) {
                Ok(s) => return Ok(ThetaSource::Inversion(s)),
                Err(e) => last = Some(e),
            }
        }
        direct().map_err(|e| last.unwrap_or(e))
    }

    pub(crate) fn eval(&self, y: f64) -> ThetaEval {
        match self {
            ThetaSource::Direct(d) => d.eval(y),
            ThetaSource::Inversion(i) => i.eval(y),
        }
    }
}

/// Rough operation count of the inversion series around a/q at y = 2^{-j}:
/// Gaussian terms (q|z|/√y)^k, each distinct residue costing a Gauss sum q^k.
fn inversion_cost(k: usize, q: i64, alpha: f64, y: f64) -> f64 {
    let z = (y * y + alpha * alpha).sqrt();
    let terms = (6.0 * q as f64 * z / y.sqrt() + 1.0).powi(k as i32);
    let qk = (q as f64).powi(k as i32);
    terms + terms.min(qk) * qk
}

/// ∫ y^{σ−1} dy over [2^{-j}, 2^{1-j}].
pub(crate) fn dyadic_weight(sigma: f64, j: u32) -> f64 {
    let lo = 2f64.powi(-(j as i32));
    if sigma.abs() < 1e-12 {
        LN_2
    } else {
        ((2.0 * lo).powf(sigma) - lo.powf(sigma)) / sigma
    }
}

/// Gauss–Legendre with doubling on [2^{-j}, 2^{1-j}]; fails if `tol` is not
/// reached (up to rounding of the value itself).
pub(crate) fn integrate_dyadic<F: FnMut(f64) -> Complex64>(f: F, j: u32, tol: f64) -> Result<(Complex64, f64)> {
    let lo = 2f64.powi(-(j as i32));
    let r = gl_doubling(f, lo, 2.0 * lo, 8, 8192, tol);
    if r.converged || r.error <= 1e-13 * r.value.norm() {
        Ok((r.value, r.error))
    } else {
        Err(Error::Budget(format!("quadrature on level {j} stalled at error {:.3e} (tol {tol:.3e})", r.error)))
    }
}

fn nu_interval(form: &QuadraticForm, kappa: Complex64, j: u32, theta: f64, phi: &[f64], tol: f64) -> Result<(Complex64, f64)> {
    let weight = dyadic_weight(kappa.re, j);
    let eps = (tol / (4.0 * weight)).clamp(1e-16, 1e-3);
    let src = ThetaSource::for_interval(form, theta, phi, j, eps)?;
    let e = kappa - 1.0;
    let mut tail = 0f64;
    let (v, err) = integrate_dyadic(
        |y| {
            let t = src.eval(y);
            tail = tail.max(t.tail_bound);
            t.value * ypow(y, e)
        },
        j,
        tol / 2.0,
    )?;
    Ok((v, err + tail * weight))
}

/// ν_{λ,j}(θ, φ) = ∫_{2^{-j}}^{2^{1-j}} Θ(y+iθ, φ) y^{kλ/2-1} dy.
pub fn nu_lambda_j(form: &QuadraticForm, lambda: Complex64, j: u32, theta: f64, phi: &[f64], tol: f64) -> Result<MultiplierSample> {
    check_point(form, phi, tol)?;
    if j == 0 {
        return Err(Error::Precondition("j must be >= 1".into()));
    }
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let (v, err) = nu_interval(form, kappa, j, theta, phi, tol)?;
    Ok(MultiplierSample::new(form, lambda, theta, phi, Piece::NuJ { j }, v, err))
}

/// Bound on |Σ_{j>J} ν_{λ,j}| from |Θ(y+iθ,φ)| ≤ Θ(y,0) ≤ (2/√(λ_min y))^k.
/// Requires Re λ > 1 and 2^{-J} ≤ 1/λ_min.
pub fn nu_lambda_tail_bound(form: &QuadraticForm, lambda: Complex64, big_j: u32) -> Option<f64> {
    let k = form.dim() as f64;
    let sigma = lambda.re;
    let y = 2f64.powi(-(big_j as i32));
    if sigma <= 1.0 || y * form.eig_min() > 1.0 {
        return None;
    }
    let a = k * (sigma - 1.0) / 2.0;
    Some(2f64.powf(k) * form.eig_min().powf(-k / 2.0) * y.powf(a) / a)
}

fn tol_for_level(tol: f64, j: u32) -> f64 {
    tol / 2.0 * (1.0 - 0.5f64.sqrt()) * 2f64.powf(-((j - 1) as f64) / 2.0)
}

/// ν_λ with a certified j-truncation; needs Re λ > 1.
pub fn nu_lambda(form: &QuadraticForm, lambda: Complex64, theta: f64, phi: &[f64], tol: f64) -> Result<MultiplierSample> {
    check_point(form, phi, tol)?;
    if lambda.re <= 0.0 {
        return Err(Error::Domain("nu_lambda needs Re(lambda) > 0".into()));
    }
    let big_j = (1..=64).find(|&j| nu_lambda_tail_bound(form, lambda, j).is_some_and(|b| b <= tol / 2.0)).ok_or_else(|| {
        if lambda.re <= 1.0 {
            Error::Precondition("the dyadic tail of nu_lambda is only certified for Re(lambda) > 1".into())
        } else {
            Error::Budget(format!("tolerance {tol} needs more than 64 dyadic levels"))
        }
    })?;
    let tail = nu_lambda_tail_bound(form, lambda, big_j).unwrap();
    let s = nu_lambda_truncated(form, lambda, theta, phi, big_j, tol)?;
    Ok(MultiplierSample { piece: Piece::Nu, quadrature_error: s.quadrature_error + tail, ..s })
}

/// Σ_{j=1}^{J} ν_{λ,j} (no tail term; any Re λ).
pub fn nu_lambda_truncated(form: &QuadraticForm, lambda: Complex64, theta: f64, phi: &[f64], big_j: u32, tol: f64) -> Result<MultiplierSample> {
    check_point(form, phi, tol)?;
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let mut acc = NeumaierSum::new();
    let mut err = 0.0;
    for j in 1..=big_j {
        let (v, e) = nu_interval(form, kappa, j, theta, phi, tol_for_level(tol, j))?;
        acc.add(v);
        err += e;
    }
    Ok(MultiplierSample::new(form, lambda, theta, phi, Piece::Nu, acc.value(), err))
}

/// ∫_1^∞ Θ₀(y+iθ, φ) y^{κ-1} dy with Θ₀ = Θ − 1.
fn theta0_upper(form: &QuadraticForm, kappa: Complex64, theta: f64, phi: &[f64], tol: f64) -> Result<(Complex64, f64)> {
    let zero = vec![0.0; form.dim()];
    let bound = DirectSeries::new(form, 1.0, 0.0, &zero, 1e-17)?.eval(1.0).value.re - 1.0;
    let grow = (kappa.re - 1.0).max(0.0);
    // |Θ₀(y)| ≤ Θ₀(1,0) e^{-2π(y-1)} for y ≥ 1
    let tail = |y_end: f64| bound * y_end.powf(grow) * (-2.0 * PI * (y_end - 1.0)).exp() / (2.0 * PI - grow / y_end).max(1.0);
    let mut y_end = 2.0;
    while tail(y_end) > tol / 4.0 {
        y_end += 0.5;
    }
    let ds = DirectSeries::new(form, 1.0, theta, phi, tol * 1e-3)?;
    let e = kappa - 1.0;
    let (v, err) = gauss_kronrod_adaptive(|y| (ds.eval(y).value - 1.0) * ypow(y, e), 1.0, y_end, tol / 4.0, 2000);
    Ok((v, err + tail(y_end) + tol * 1e-3 * y_end.powf(grow) * y_end))
}

/// m_λ = c_{k,λ}(∫_0^1 Θ₀ y^{κ-1} dy + ∫_1^∞ Θ₀ y^{κ-1} dy), with the first
/// integral equal to ν_λ − 1/κ. Needs Re λ > 1.
pub fn m_lambda_via_integral(form: &QuadraticForm, lambda: Complex64, theta: f64, phi: &[f64], tol: f64) -> Result<MultiplierSample> {
    let c = gamma_constant(form.dim(), lambda)?;
    let scaled = tol / c.norm().max(1e-300);
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let nu = nu_lambda(form, lambda, theta, phi, scaled / 2.0)?;
    let (up, up_err) = theta0_upper(form, kappa, theta, phi, scaled / 2.0)?;
    let value = c * (nu.value - 1.0 / kappa + up);
    let err = c.norm() * (nu.quadrature_error + up_err);
    Ok(MultiplierSample::new(form, lambda, theta, phi, Piece::MIntegral, value, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gauss_kronrod_adaptive;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_constant_examples() {
        assert!((gamma_constant(2, c(1.0, 0.0)).unwrap() - 2.0 * PI).norm() < 1e-12);
        assert!((gamma_constant(1, c(1.0, 0.0)).unwrap() - 2f64.sqrt()).norm() < 1e-12);
        assert!(gamma_constant(2, c(-1.0, 0.0)).is_err());
        assert!(gamma_constant(1, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn gamma_constant_mellin_identity() {
        // c ∫_0^∞ e^{-2π n y} y^{κ-1} dy = n^{-κ} with n = Q(2) = 4, κ = 0.35
        let lam = c(0.7, 0.0);
        let cst = gamma_constant(1, lam).unwrap();
        let e = c(0.35 - 1.0, 0.0);
        let f = |y: f64| (-8.0 * PI * y).exp() * ypow(y, e);
        // y = u^{1/κ} removes the endpoint singularity
        let (v, _) = gauss_kronrod_adaptive(
            |u: f64| {
                if u == 0.0 {
                    return c(0.0, 0.0);
                }
                let y = u.powf(1.0 / 0.35);
                f(y) * y / (0.35 * u)
            },
            0.0,
            3.0,
            1e-14,
            4000,
        );
        assert!((cst * v - 4f64.powf(-0.35)).norm() < 1e-9);
    }

    #[test]
    fn analytic_factor_examples() {
        assert_eq!(analytic_factor(2, c(-1.0, 0.0), false), c(0.0, 0.0));
        assert!(analytic_factor(1, c(-2.0, 0.3), false).norm() > 0.0);
        assert_eq!(analytic_factor(1, c(-2.0, 0.0), false), c(0.0, 0.0));
        assert!((analytic_factor(2, c(1.0, 0.0), false) - 3.0).norm() < 1e-15);
        assert_eq!(analytic_factor(2, c(1.0, 0.0), true), c(0.0, 0.0));
    }

    #[test]
    fn lambda_regions() {
        assert_eq!(Lambda::new(c(1.0, 3.0), 2).region, Region::LineOne);
        assert_eq!(Lambda::new(c(-1.0, 3.0), 2).region, Region::LineNeg);
        assert_eq!(Lambda::new(c(-2.0, 0.0), 1).region, Region::LineNeg);
        assert_eq!(Lambda::new(c(1.5, 0.0), 1).region, Region::AbsConvergent);
        assert_eq!(Lambda::new(c(0.5, 0.0), 1).region, Region::Interior);
        assert_eq!(Lambda::new(c(-0.5, 0.0), 1).region, Region::Other);
    }

    #[test]
    fn direct_sum_zeta_value() {
        let q = QuadraticForm::sum_of_squares(1);
        let s = m_lambda_direct(&q, c(2.0, 0.0), 0.0, &[0.0], 10_000).unwrap();
        let exact = PI * PI / 3.0;
        assert!((s.value.re - exact).abs() < 2e-4);
        assert!(s.certified && s.tail_bound.unwrap() >= exact - s.value.re);
        let u = m_lambda_direct(&q, c(0.8, 0.0), 0.1, &[0.2], 10).unwrap();
        assert!(!u.certified && u.tail_bound.is_none());
    }

    #[test]
    fn direct_sum_conjugation() {
        let q = QuadraticForm::new(vec![vec![2, 1], vec![1, 2]]).unwrap();
        let a = m_lambda_direct(&q, c(1.7, 0.0), 0.23, &[0.1, -0.4], 30).unwrap().value;
        let b = m_lambda_direct(&q, c(1.7, 0.0), -0.23, &[-0.1, 0.4], 30).unwrap().value;
        assert!((a - b.conj()).norm() < 1e-13);
    }

    #[test]
    fn nu_j_small_levels_match_termwise() {
        // θ = φ = 0: ν_j = Σ_m ∫ e^{-2π m² y} y^{λ/2-1} dy
        let q = QuadraticForm::sum_of_squares(1);
        let lam = c(0.9, 0.0);
        for j in [1u32, 3, 6] {
            let v = nu_lambda_j(&q, lam, j, 0.0, &[0.0], 1e-12).unwrap();
            let lo = 2f64.powi(-(j as i32));
            let mut s = 0.0;
            for m in -400i64..=400 {
                let (t, _) = gauss_kronrod_adaptive(|y| c((-2.0 * PI * (m * m) as f64 * y).exp() * y.powf(0.45 - 1.0), 0.0), lo, 2.0 * lo, 1e-16, 200);
                s += t.re;
            }
            assert!((v.value.re - s).abs() < 1e-10 * s.abs().max(1.0), "j={j}");
        }
    }

    #[test]
    fn nu_j_direct_and_inversion_agree() {
        let q = QuadraticForm::sum_of_squares(1);
        let lam = c(1.0, 2.0);
        let j = 14;
        let (theta, phi) = (3.0 / 7.0 + 1e-5, [0.31]);
        let kappa = lam * 0.5;
        let weight = dyadic_weight(kappa.re, j);
        let lo = 2f64.powi(-14);
        let ds = DirectSeries::new(&q, lo, theta, &phi, 1e-14).unwrap();
        let (a, _) = integrate_dyadic(|y| ds.eval(y).value * ypow(y, kappa - 1.0), j, 1e-13).unwrap();
        let b = nu_lambda_j(&q, lam, j, theta, &phi, 1e-12 * weight).unwrap();
        assert!(matches!(ThetaSource::for_interval(&q, theta, &phi, j, 1e-12).unwrap(), ThetaSource::Inversion(_)));
        assert!((a - b.value).norm() < 1e-10 * a.norm().max(weight));
    }

    #[test]
    fn nu_conjugation_and_periodicity() {
        let q = QuadraticForm::sum_of_squares(2);
        let lam = c(2.5, 0.0);
        let a = nu_lambda(&q, lam, 0.21, &[0.3, -0.1], 1e-8).unwrap();
        let b = nu_lambda(&q, lam, -0.21, &[-0.3, 0.1], 1e-8).unwrap();
        let d = nu_lambda(&q, lam, 1.21, &[1.3, -2.1], 1e-8).unwrap();
        assert!((a.value - b.value.conj()).norm() < 1e-8);
        assert!((a.value - d.value).norm() < 1e-8);
        assert!(a.quadrature_error <= 1e-8);
    }

    #[test]
    fn nu_needs_certifiable_tail() {
        let q = QuadraticForm::sum_of_squares(1);
        assert!(matches!(nu_lambda(&q, c(0.9, 0.0), 0.0, &[0.0], 1e-6), Err(Error::Precondition(_))));
        assert!(nu_lambda(&q, c(-0.5, 0.0), 0.0, &[0.0], 1e-6).is_err());
    }

    #[test]
    fn integral_route_matches_direct_sum() {
        let q = QuadraticForm::sum_of_squares(1);
        let lam = c(3.0, 0.5);
        let (theta, phi) = (0.137, [0.61]);
        let via = m_lambda_via_integral(&q, lam, theta, &phi, 1e-8).unwrap();
        let direct = m_lambda_direct(&q, lam, theta, &phi, 20_000).unwrap();
        let budget = via.quadrature_error + direct.tail_bound.unwrap();
        assert!((via.value - direct.value).norm() <= budget.max(1e-8), "{} vs {}", via.value, direct.value);
    }
}
