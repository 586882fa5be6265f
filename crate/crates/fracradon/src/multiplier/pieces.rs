//! Arc-localized pieces of ν_λ: the shell pieces ν_{j,r,s} and ν_{r,s}, the
//! summed-in-j piece B_λ(s), the main and remainder pieces on level-j major
//! arcs, and the minor-arc piece.
//!
//! Across φ every piece is cut off by the smooth partition Σ_b Ψ(qφ − b) = 1,
//! except B_λ(s), which uses the box |φ − b/q| ≤ 1/(2q).

use super::{check_point, integrate_dyadic, nu_lambda_j, ypow, MultiplierSample, Piece};
use crate::arcs::{classify, find_major_arc, in_shell, max_shell, psi_translates, rho, ArcKind, RationalApprox, Rho};
use crate::error::{Error, Result};
use crate::exponential_sums::{gauss_sum_of, gcd};
use crate::numerics::{rational_offset, NeumaierSum};
use crate::quadform::QuadraticForm;
use crate::theta::{half_power, ArcPoint, InversionSeries};
use num_complex::Complex64;
use std::f64::consts::PI;

/// The anchor a/q with 2^s ≤ q < 2^{s+1} and |θ − a/q| ≤ 2^{-2s-10}, the widest
/// any level-(j, s) arc can be. Unique when it exists.
pub fn level_s_anchor(theta: f64, s: u32) -> Option<RationalApprox> {
    let width = 2f64.powi(-(2 * s as i32) - 10);
    (1i64 << s..1i64 << (s + 1)).find_map(|q| {
        let a = ((theta * q as f64).round() as i64 - 1).rem_euclid(q) + 1;
        if gcd(a, q) != 1 {
            return None;
        }
        let alpha = rational_offset(theta, a, q);
        (alpha.abs() <= width).then_some(RationalApprox { a, q, alpha })
    })
}

/// The levels j ≥ 2s+20 at which α lies in shell r and shell r exists.
pub fn active_levels(alpha: f64, r: u32, s: u32) -> Vec<u32> {
    if alpha == 0.0 && r > 0 {
        return Vec::new();
    }
    let j_lo = 2 * s + 20;
    let j_hi = if alpha == 0.0 { j_lo + 64 } else { (r as f64 - alpha.abs().log2()).ceil() as u32 + 2 };
    (j_lo..=j_hi.max(j_lo)).filter(|&j| in_shell(alpha, j, r) && max_shell(j, s).is_some_and(|m| r <= m)).collect()
}

/// Σ_b w_b S(a,b;q) q^{-k}|A|^{-1/2} z^{-k/2} e^{-2πQ*(β_b)/z} at z = y + iα.
pub(crate) struct MainTerms {
    k: usize,
    alpha: f64,
    terms: Vec<(Complex64, f64)>,
}

impl MainTerms {
    pub(crate) fn new(form: &QuadraticForm, a: i64, q: i64, alpha: f64, translates: &[(Vec<i64>, Vec<f64>, f64)]) -> Result<Self> {
        let k = form.dim();
        let adj = form.adjoint();
        let norm = (q as f64).powi(k as i32) * (form.det() as f64).sqrt();
        let mut terms = Vec::with_capacity(translates.len());
        for (b, beta, w) in translates {
            let s = gauss_sum_of(form, a, b, q)?;
            terms.push((s * (*w / norm), adj.eval_f64(beta)));
        }
        Ok(Self { k, alpha, terms })
    }

    pub(crate) fn eval(&self, y: f64) -> Complex64 {
        let z = Complex64::new(y, self.alpha);
        let mut s = Complex64::new(0.0, 0.0);
        for (c, qs) in &self.terms {
            s += c * (-2.0 * PI * qs / z).exp();
        }
        s / half_power(z, self.k)
    }

    fn coeff_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.0.norm()).sum()
    }

    fn min_qstar(&self) -> f64 {
        self.terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min)
    }
}

fn dyadic_tol(tol: f64, j: u32, j_lo: u32) -> f64 {
    tol / 2.0 * (1.0 - 0.5f64.sqrt()) * 2f64.powf(-((j - j_lo) as f64) / 2.0)
}

/// ∫ y^{κ-1} main(y) dy over ∪_{j_lo ≤ j ≤ j_hi} [2^{-j}, 2^{1-j}]; with
/// `j_hi = None` the range extends to 0 (requires α = 0) and is cut once a
/// certified tail falls below tol/2.
fn integrate_main(mt: &MainTerms, kappa: Complex64, j_lo: u32, j_hi: Option<u32>, tol: f64) -> Result<(Complex64, f64)> {
    let e = kappa - 1.0;
    let mut acc = NeumaierSum::new();
    let mut err = 0.0;
    let mut j = j_lo;
    loop {
        if let Some(hi) = j_hi {
            if j > hi {
                break;
            }
        } else {
            let y = 2f64.powi(-(j as i32));
            let a = mt.k as f64 * (kappa.re - 1.0) / 2.0;
            let c = 2.0 * PI * mt.min_qstar();
            let mut bound = f64::INFINITY;
            if a > 0.0 {
                bound = y.powf(a) / a;
            }
            if c > 0.0 && (a >= 1.0 || y <= c / (1.0 - a)) {
                bound = bound.min(y.powf(a) * (-c / y).exp());
            }
            if !bound.is_finite() {
                return Err(Error::Domain("the arc integral diverges at y = 0 (alpha = beta = 0, Re(lambda) <= 1)".into()));
            }
            let bound = bound * mt.coeff_sum();
            if bound <= tol / 2.0 {
                err += bound;
                break;
            }
            if j > 1100 {
                return Err(Error::Budget("arc integral tail did not settle".into()));
            }
        }
        let (v, e2) = integrate_dyadic(|y| mt.eval(y) * ypow(y, e), j, dyadic_tol(tol, j, j_lo))?;
        acc.add(v);
        err += e2;
        j += 1;
    }
    Ok((acc.value(), err))
}

fn zero(form: &QuadraticForm, lambda: Complex64, theta: f64, phi: &[f64], piece: Piece) -> MultiplierSample {
    MultiplierSample::new(form, lambda, theta, phi, piece, Complex64::new(0.0, 0.0), 0.0)
}

/// ν_{j,r,s}: the level-j main term on shell r of the level-(j, s) arcs.
#[allow(clippy::too_many_arguments)]
pub fn nu_jrs(form: &QuadraticForm, lambda: Complex64, j: u32, r: u32, s: u32, theta: f64, phi: &[f64], tol: f64) -> Result<MultiplierSample> {
    check_point(form, phi, tol)?;
    let piece = Piece::NuJrs { j, r, s };
    let Some(anchor) = level_s_anchor(theta, s) else { return Ok(zero(form, lambda, theta, phi, piece)) };
    if j < 2 * s + 20 || max_shell(j, s).is_none_or(|m| r > m) || !in_shell(anchor.alpha, j, r) {
        return Ok(zero(form, lambda, theta, phi, piece));
    }
    let mt = MainTerms::new(form, anchor.a, anchor.q, anchor.alpha, &psi_translates(phi, anchor.q))?;
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let (v, err) = integrate_main(&mt, kappa, j, Some(j), tol)?;
    Ok(MultiplierSample::new(form, lambda, theta, phi, piece, v, err))
}

/// ν_{r,s} = Σ_j ν_{j,r,s}. For r ≥ 1 at most one level contributes; more
/// than one is reported as an inconsistency.
pub fn nu_rs(form: &QuadraticForm, lambda: Complex64, r: u32, s: u32, theta: f64, phi: &[f64], tol: f64) -> Result<MultiplierSample> {
    check_point(form, phi, tol)?;
    let piece = Piece::NuRs { r, s };
    let Some(anchor) = level_s_anchor(theta, s) else { return Ok(zero(form, lambda, theta, phi, piece)) };
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let j_lo = 2 * s + 20;
    let (j_lo, j_hi) = if r >= 1 {
        let levels = active_levels(anchor.alpha, r, s);
        match levels.as_slice() {
            [] => return Ok(zero(form, lambda, theta, phi, piece)),
            [j] => (*j, Some(*j)),
            _ => return Err(Error::Inconsistent(format!("{} active levels for r = {r}", levels.len()))),
        }
    } else if anchor.alpha == 0.0 {
        (j_lo, None)
    } else {
        // |α| ≤ 2^{-j}
        let top = (-anchor.alpha.abs().log2()).floor() as i64;
        let top = (top.max(0) as u32..=top.max(0) as u32 + 1).rev().find(|&j| in_shell(anchor.alpha, j, 0)).unwrap_or(0);
        if top < j_lo {
            return Ok(zero(form, lambda, theta, phi, piece));
        }
        (j_lo, Some(top))
    };
    let mt = MainTerms::new(form, anchor.a, anchor.q, anchor.alpha, &psi_translates(phi, anchor.q))?;
    let (v, err) = integrate_main(&mt, kappa, j_lo, j_hi, tol)?;
    Ok(MultiplierSample::new(form, lambda, theta, phi, piece, v, err))
}

/// B_λ(s): the level-s main terms summed in j from ρ(s, α) to 2^{-2s-19},
/// with the box cut-off in φ.
pub fn b_lambda_s(form: &QuadraticForm, lambda: Complex64, s: u32, theta: f64, phi: &[f64], tol: f64) -> Result<MultiplierSample> {
    check_point(form, phi, tol)?;
    let piece = Piece::BS { s };
    let Some(anchor) = level_s_anchor(theta, s) else { return Ok(zero(form, lambda, theta, phi, piece)) };
    let j_hi = match rho(s, anchor.alpha) {
        Rho::Vacuous => return Ok(zero(form, lambda, theta, phi, piece)),
        Rho::Zero => None,
        Rho::Value(v) => Some((-v.log2()).round() as u32),
    };
    let q = anchor.q;
    let b: Vec<i64> = phi.iter().map(|p| (p * q as f64).round() as i64).collect();
    let beta: Vec<f64> = phi.iter().zip(&b).map(|(&p, &bb)| rational_offset(p, bb, q)).collect();
    let mt = MainTerms::new(form, anchor.a, q, anchor.alpha, &[(b, beta, 1.0)])?;
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let (v, err) = integrate_main(&mt, kappa, 2 * s + 20, j_hi, tol)?;
    Ok(MultiplierSample::new(form, lambda, theta, phi, piece, v, err))
}

/// The level-j main-term piece Σ_r ν_{j,r,s} on the level-j major arcs.
pub fn main_term_j(form: &QuadraticForm, lambda: Complex64, j: u32, theta: f64, phi: &[f64], tol: f64) -> Result<MultiplierSample> {
    check_point(form, phi, tol)?;
    let piece = Piece::MainJ { j };
    let Some((_, anchor)) = find_major_arc(theta, j) else { return Ok(zero(form, lambda, theta, phi, piece)) };
    let mt = MainTerms::new(form, anchor.a, anchor.q, anchor.alpha, &psi_translates(phi, anchor.q))?;
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let (v, err) = integrate_main(&mt, kappa, j, Some(j), tol)?;
    Ok(MultiplierSample::new(form, lambda, theta, phi, piece, v, err))
}

/// E_{λ,j}: ∫ y^{κ-1} Σ_b ψ_q(φ − b/q) E_{a,b,q}(y+iθ, φ) dy over [2^{-j}, 2^{1-j}]
/// on the level-j major arcs (zero elsewhere and for j < 20).
pub fn e_multiplier_j(form: &QuadraticForm, lambda: Complex64, j: u32, theta: f64, phi: &[f64], tol: f64) -> Result<MultiplierSample> {
    check_point(form, phi, tol)?;
    let piece = Piece::EJ { j };
    let Some((_, anchor)) = find_major_arc(theta, j) else { return Ok(zero(form, lambda, theta, phi, piece)) };
    let lo = 2f64.powi(-(j as i32));
    let kappa = lambda * (form.dim() as f64 / 2.0);
    let e = kappa - 1.0;
    let weight = super::dyadic_weight(kappa.re, j);
    let mut series = Vec::new();
    for (b, beta, w) in psi_translates(phi, anchor.q) {
        let mut p = ArcPoint::new(theta, phi, anchor.a, &b, anchor.q)?;
        p.beta = beta;
        series.push((w, InversionSeries::new(form, &p, lo, 2.0 * lo, (tol / (4.0 * weight)).clamp(1e-16, 1e-3))?));
    }
    let mut tail = 0f64;
    let (v, err) = integrate_dyadic(
        |y| {
            let mut s = Complex64::new(0.0, 0.0);
            for (w, ser) in &series {
                let t = ser.remainder(y);
                tail = tail.max(t.tail_bound);
                s += t.value * *w;
            }
            s * ypow(y, e)
        },
        j,
        tol / 2.0,
    )?;
    Ok(MultiplierSample::new(form, lambda, theta, phi, piece, v, err + tail * weight))
}

/// χ_{minor}(θ) ν_{λ,j}(θ, φ).
pub fn minor_nu_j(form: &QuadraticForm, lambda: Complex64, j: u32, theta: f64, phi: &[f64], tol: f64) -> Result<MultiplierSample> {
    check_point(form, phi, tol)?;
    let label = classify(theta, phi, j)?;
    if label.kind == ArcKind::Major {
        return Ok(zero(form, lambda, theta, phi, Piece::MinorJ { j }));
    }
    let s = nu_lambda_j(form, lambda, j, theta, phi, tol)?;
    Ok(MultiplierSample { piece: Piece::MinorJ { j }, ..s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arcs::arc_half_width;
    use crate::multiplier::nu_lambda_j;
    use crate::numerics::Kronecker;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn anchor_is_unique_and_sized() {
        let a = level_s_anchor(2.0 / 5.0 + 1e-9, 2).unwrap();
        assert_eq!((a.a, a.q), (2, 5));
        assert!(level_s_anchor(2.0 / 5.0 + 1e-3, 2).is_none());
        assert!(level_s_anchor(0.5 + 1e-9, 2).is_none());
        assert_eq!(level_s_anchor(1e-12, 0).map(|x| x.q), Some(1));
    }

    #[test]
    fn one_active_level_per_shell() {
        let mut g = Kronecker::new(2, 11);
        for _ in 0..2000 {
            let p = g.next_point();
            let s = (p[0] * 3.0) as u32;
            let alpha = (p[1] - 0.5) * 2f64.powi(-(2 * s as i32) - 10);
            let r0 = crate::arcs::shell_index(alpha, 2 * s + 20);
            for r in 1..=r0 + 2 {
                assert!(active_levels(alpha, r, s).len() <= 1);
            }
        }
    }

    #[test]
    fn off_arc_pieces_vanish() {
        let q = QuadraticForm::sum_of_squares(1);
        let lam = c(1.0, 1.0);
        let theta = 0.1234567;
        assert_eq!(nu_rs(&q, lam, 1, 0, theta, &[0.2], 1e-8).unwrap().value, c(0.0, 0.0));
        assert_eq!(b_lambda_s(&q, lam, 1, theta, &[0.2], 1e-8).unwrap().value, c(0.0, 0.0));
        assert_eq!(e_multiplier_j(&q, lam, 24, theta, &[0.2], 1e-8).unwrap().value, c(0.0, 0.0));
        assert_eq!(e_multiplier_j(&q, lam, 12, 0.0, &[0.0], 1e-8).unwrap().value, c(0.0, 0.0));
    }

    #[test]
    fn major_arc_level_splits_into_main_and_remainder() {
        let q = QuadraticForm::sum_of_squares(2);
        let lam = c(1.0, 0.7);
        let j = 22;
        let theta = 1.0 / 2.0 + 0.3 * arc_half_width(j, 1);
        let phi = [0.2, 0.61];
        let tol = 1e-9 * super::super::dyadic_weight(1.0, j);
        let nu = nu_lambda_j(&q, lam, j, theta, &phi, tol).unwrap();
        let main = main_term_j(&q, lam, j, theta, &phi, tol).unwrap();
        let e = e_multiplier_j(&q, lam, j, theta, &phi, tol).unwrap();
        let budget = nu.quadrature_error + main.quadrature_error + e.quadrature_error;
        assert!((nu.value - main.value - e.value).norm() <= 4.0 * budget.max(1e-12), "{}", (nu.value - main.value - e.value).norm());
        assert!(main.value.norm() > 0.0);
        assert_eq!(minor_nu_j(&q, lam, j, theta, &phi, tol).unwrap().value, c(0.0, 0.0));
    }

    #[test]
    fn shells_sum_to_main_term() {
        let q = QuadraticForm::sum_of_squares(1);
        let lam = c(1.0, -0.4);
        let j = 24;
        let theta = 2.0 / 3.0 - 3e-6;
        let phi = [0.35];
        let main = main_term_j(&q, lam, j, theta, &phi, 1e-12).unwrap().value;
        let total: Complex64 = (0..=12).map(|r| nu_jrs(&q, lam, j, r, 1, theta, &phi, 1e-12).unwrap().value).sum();
        assert!((main - total).norm() < 1e-11);
    }

    #[test]
    fn b_at_exact_rational_is_dyadic_sum() {
        let q = QuadraticForm::sum_of_squares(1);
        let lam = c(1.0, 2.0);
        let phi = [0.5 + 0.01];
        let b = b_lambda_s(&q, lam, 1, 0.5, &phi, 1e-10).unwrap();
        let mut sum = c(0.0, 0.0);
        for j in 22..200 {
            sum += nu_jrs(&q, lam, j, 0, 1, 0.5, &phi, 1e-13).unwrap().value;
        }
        assert!((b.value - sum).norm() < 1e-9, "{} {}", b.value, sum);
        assert!(matches!(b_lambda_s(&q, lam, 1, 0.5, &[0.5], 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn nu_rs_r0_is_lower_shell_sum() {
        let q = QuadraticForm::sum_of_squares(1);
        let lam = c(1.0, 0.5);
        let theta = 1.0 / 2.0 + 2f64.powi(-30);
        let v = nu_rs(&q, lam, 0, 1, theta, &[0.49], 1e-11).unwrap().value;
        let s: Complex64 = (22..=30).map(|j| nu_jrs(&q, lam, j, 0, 1, theta, &[0.49], 1e-13).unwrap().value).sum();
        assert!((v - s).norm() < 1e-10);
        let v1 = nu_rs(&q, lam, 1, 1, theta, &[0.49], 1e-11).unwrap().value;
        assert!((v1 - nu_jrs(&q, lam, 31, 1, 1, theta, &[0.49], 1e-11).unwrap().value).norm() < 1e-12);
    }
}
