//! Dirichlet approximation and the major/minor arc dissection of the torus,
//! with the dyadic shells in |θ − a/q| and the smooth partition ψ_q.
//!
//! Conventions: every "j/2" threshold is ⌊j/2⌋, except the outermost shell
//! index, which is ⌈j/2⌉ − s so that the shells cover the whole arc of
//! half-width 2^{-s-⌊j/2⌋}. θ lives on the torus; a/q = 0/1 is written (1, 1).

use crate::error::{Error, Result};
use crate::exponential_sums::gcd;
use crate::numerics::rational_offset;
use rayon::prelude::*;
use serde::Serialize;

/// Half level ⌊j/2⌋.
#[inline]
pub fn half(j: u32) -> u32 {
    j / 2
}

/// Largest shell index ⌈j/2⌉ − s at level (j, s).
#[inline]
pub fn max_shell(j: u32, s: u32) -> Option<u32> {
    (j - half(j)).checked_sub(s)
}

/// Half-width 2^{-s-⌊j/2⌋} of a level-(j, s) major arc in θ.
#[inline]
pub fn arc_half_width(j: u32, s: u32) -> f64 {
    2f64.powi(-((s + half(j)) as i32))
}

/// Smallest integer e with x ≤ 2^e (x > 0).
fn ceil_log2(x: f64) -> i32 {
    let mut e = x.log2().ceil() as i32;
    while x > 2f64.powi(e) {
        e += 1;
    }
    while x <= 2f64.powi(e - 1) {
        e -= 1;
    }
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RationalApprox {
    pub a: i64,
    pub q: i64,
    pub alpha: f64,
}

/// Best rational approximation with denominator ≤ n from the continued
/// fraction of θ (mod 1): the convergent with the largest q ≤ n. Satisfies
/// |θ − a/q| ≤ 1/(q n) on the torus.
pub fn dirichlet_approx(theta: f64, n: u64) -> Result<RationalApprox> {
    if n == 0 {
        return Err(Error::Precondition("N must be positive".into()));
    }
    if !theta.is_finite() {
        return Err(Error::Domain("theta must be finite".into()));
    }
    let t = theta - theta.floor();
    let t = if t >= 1.0 { 0.0 } else { t };
    let (p, q) = if t < 2f64.powi(-70) {
        (0i128, 1i128)
    } else {
        // t = num / 2^e exactly
        let bits = t.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let mant = (bits & ((1 << 52) - 1)) | (1 << 52);
        let e = 1075 - exp;
        let (mut num, mut den) = (mant as i128, 1i128 << e);
        let g = {
            let (mut x, mut y) = (num, den);
            while y != 0 {
                (x, y) = (y, x % y);
            }
            x
        };
        num /= g;
        den /= g;
        let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
        let (mut x, mut y) = (num, den);
        let nn = n as i128;
        loop {
            let c = x / y;
            let q2 = match c.checked_mul(q1).and_then(|v| v.checked_add(q0)) {
                Some(v) if v <= nn => v,
                _ => break,
            };
            let p2 = c * p1 + p0;
            (p0, q0, p1, q1) = (p1, q1, p2, q2);
            let r = x - c * y;
            if r == 0 {
                break;
            }
            (x, y) = (y, r);
        }
        (p1, q1)
    };
    let q = q as i64;
    let a = ((p as i64) - 1).rem_euclid(q) + 1;
    Ok(RationalApprox { a, q, alpha: rational_offset(t, p as i64, q) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    Major,
    Minor,
}

/// Arc identity of a spectral point (θ, φ) at level j.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcLabel {
    pub j: u32,
    pub s: Option<u32>,
    pub r: Option<u32>,
    pub a: i64,
    pub q: i64,
    pub b: Vec<i64>,
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub kind: ArcKind,
}

fn nearest_b(phi: &[f64], q: i64) -> (Vec<i64>, Vec<f64>) {
    let b: Vec<i64> = phi.iter().map(|p| ((p * q as f64).round() as i64 - 1).rem_euclid(q) + 1).collect();
    let beta = phi.iter().zip(&b).map(|(&p, &bb)| rational_offset(p, bb, q)).collect();
    (b, beta)
}

/// Exhaustive search for a level-j major arc containing θ: some q ≤ 2^{⌊j/2⌋−10}
/// with |θ − a/q| ≤ 2^{-s-⌊j/2⌋}, s = ⌊log₂ q⌋. Arcs are disjoint, so at most
/// one exists.
pub fn find_major_arc(theta: f64, j: u32) -> Option<(u32, RationalApprox)> {
    if j < 20 {
        return None;
    }
    let q_max = 1i64 << (half(j) - 10);
    for q in 1..=q_max {
        let s = 63 - q.leading_zeros();
        let a = ((theta * q as f64).round() as i64 - 1).rem_euclid(q) + 1;
        if gcd(a, q) != 1 {
            continue;
        }
        let alpha = rational_offset(theta, a, q);
        if alpha.abs() <= arc_half_width(j, s) {
            return Some((s, RationalApprox { a, q, alpha }));
        }
    }
    None
}

/// Major/minor label at level j. The Dirichlet approximant with N = 2^{⌊j/2⌋}
/// is tried first; if it does not certify a major arc, the small denominators
/// are searched exhaustively, so a point is labelled major exactly when it
/// lies in some M_{j,s}.
pub fn classify(theta: f64, phi: &[f64], j: u32) -> Result<ArcLabel> {
    if j == 0 {
        return Err(Error::Precondition("j must be >= 1".into()));
    }
    let d = dirichlet_approx(theta, 1u64 << half(j).min(62))?;
    let found = if j >= 20 {
        let s = 63 - d.q.leading_zeros();
        if d.q <= 1i64 << (half(j) - 10) && d.alpha.abs() <= arc_half_width(j, s) {
            Some((s, d))
        } else {
            find_major_arc(theta, j)
        }
    } else {
        None
    };
    let (s, approx, kind) = match found {
        Some((s, r)) => (Some(s), r, ArcKind::Major),
        None => (None, d, ArcKind::Minor),
    };
    let (b, beta) = nearest_b(phi, approx.q);
    Ok(ArcLabel { j, s, r: None, a: approx.a, q: approx.q, b, alpha: approx.alpha, beta, kind })
}

/// Whether |α| lies in shell r at level j: r = 0 ⇔ |α| ≤ 2^{-j};
/// r ≥ 1 ⇔ 2^{r-1-j} < |α| ≤ 2^{r-j}.
pub fn in_shell(alpha: f64, j: u32, r: u32) -> bool {
    let a = alpha.abs();
    let upper = 2f64.powi(r as i32 - j as i32);
    if r == 0 {
        a <= upper
    } else {
        a > 0.5 * upper && a <= upper
    }
}

/// Shell index of α at level j (no upper limit).
pub fn shell_index(alpha: f64, j: u32) -> u32 {
    let a = alpha.abs();
    if a <= 2f64.powi(-(j as i32)) {
        0
    } else {
        (ceil_log2(a) + j as i32) as u32
    }
}

/// Attach the shell index r to a major-arc label.
pub fn double_label(label: &ArcLabel) -> Result<ArcLabel> {
    let s = match (label.kind, label.s) {
        (ArcKind::Major, Some(s)) => s,
        _ => return Err(Error::Precondition("double_label needs a major-arc label".into())),
    };
    let r = shell_index(label.alpha, label.j);
    let r_max = max_shell(label.j, s).ok_or_else(|| Error::Inconsistent("s exceeds j/2".into()))?;
    if r > r_max {
        return Err(Error::Inconsistent(format!("|alpha| = {} lies outside the level ({}, {s}) arc", label.alpha.abs(), label.j)));
    }
    Ok(ArcLabel { r: Some(r), ..label.clone() })
}

/// Value of ρ(s, α).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Rho {
    Zero,
    Value(f64),
    Vacuous,
}

/// ρ(s, α) = 2^{-J} for the largest J with 2^{-J} ≥ 2^{2s}α², provided J ≥ 2s+20.
pub fn rho(s: u32, alpha: f64) -> Rho {
    if alpha == 0.0 {
        return Rho::Zero;
    }
    let x = alpha * alpha * 4f64.powi(s as i32);
    let big_j = -ceil_log2(x);
    if big_j < 2 * s as i32 + 20 {
        Rho::Vacuous
    } else {
        Rho::Value(2f64.powi(-big_j))
    }
}

/// r(α): the smallest power of two ≥ |α| (0 at α = 0).
pub fn r_of_alpha(alpha: f64) -> f64 {
    if alpha == 0.0 {
        0.0
    } else {
        2f64.powi(ceil_log2(alpha.abs()))
    }
}

fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let f = |t: f64| (-1.0 / t).exp();
    let (a, b) = (f(u), f(1.0 - u));
    a / (a + b)
}

fn psi_base(x: f64, q: i64) -> f64 {
    let qf = q as f64;
    let ax = x.abs();
    if ax <= 0.25 / qf {
        1.0
    } else if ax >= 0.75 / qf {
        0.0
    } else {
        smooth_step((0.75 / qf - ax) * 2.0 * qf)
    }
}

/// The unscaled bump Ψ with ψ_q(x) = Σ_n Ψ(q(x − n)): 1 on |u| ≤ 1/4, 0 for |u| ≥ 3/4.
pub fn psi_profile(u: f64) -> f64 {
    psi_base(u, 1)
}

/// The translates b ∈ Z^k with Π_i Ψ(qφ_i − b_i) > 0, as (b, β = φ − b/q, weight).
/// β is not reduced mod 1, so for q = 1 two translates of one residue may appear.
/// The weights sum to 1.
pub fn psi_translates(phi: &[f64], q: i64) -> Vec<(Vec<i64>, Vec<f64>, f64)> {
    let qf = q as f64;
    let per_axis: Vec<Vec<(i64, f64, f64)>> = phi
        .iter()
        .map(|&p| {
            let base = p.floor();
            let frac = p - base;
            let x = frac * qf;
            let mut v = Vec::new();
            for b in (x - 0.75).ceil() as i64..=(x + 0.75).floor() as i64 {
                let w = psi_profile(x - b as f64);
                if w > 0.0 {
                    let shift = base as i64 * q;
                    v.push((b + shift, (x - b as f64) / qf, w));
                }
            }
            v
        })
        .collect();
    let mut out = vec![(Vec::new(), Vec::new(), 1.0)];
    for axis in per_axis {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for (b, beta, w) in &out {
            for &(bi, be, wi) in &axis {
                let mut b2 = b.clone();
                b2.push(bi);
                let mut be2 = beta.clone();
                be2.push(be);
                next.push((b2, be2, w * wi));
            }
        }
        out = next;
    }
    out
}

/// One-dimensional ψ_q on the torus: 1 on |x| ≤ 1/(4q), 0 for |x| ≥ 3/(4q),
/// C^∞, even, and Σ_{b mod q} ψ_q(x − b/q) = 1.
pub fn psi_q_1d(x: f64, q: i64) -> f64 {
    let xc = x - x.round();
    psi_base(xc, q) + psi_base(xc - 1.0, q) + psi_base(xc + 1.0, q)
}

/// Tensor product Π_i ψ_q(φ_i).
pub fn psi_q(phi: &[f64], q: i64) -> f64 {
    phi.iter().map(|&x| psi_q_1d(x, q)).product()
}

/// A level-(j, s) major arc projected to θ: [a/q − w, a/q + w].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcInterval {
    pub j: u32,
    pub s: u32,
    pub q: i64,
    pub a: i64,
    pub left: f64,
    pub right: f64,
}

/// All θ-intervals of level-j major arcs, ordered by (s, q, a).
pub fn major_arc_intervals(j: u32) -> Vec<ArcInterval> {
    let mut out = Vec::new();
    if j < 20 {
        return out;
    }
    for s in 0..=half(j) - 10 {
        let w = arc_half_width(j, s);
        for q in 1i64 << s..1i64 << (s + 1) {
            for a in 1..=q {
                if gcd(a, q) == 1 {
                    let c = a as f64 / q as f64;
                    out.push(ArcInterval { j, s, q, a, left: c - w, right: c + w });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DisjointnessMode {
    /// Fixed j, all admissible s.
    FixedJ { j: u32 },
    /// Fixed s, levels j in [j_lo, j_hi] with j ≥ 2s+20.
    FixedS { s: u32, j_lo: u32, j_hi: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisjointnessReport {
    pub disjoint: bool,
    pub intervals: usize,
    pub violation: Option<(ArcInterval, ArcInterval)>,
}

/// Exact endpoint: (numerator, q) with the point equal to numerator / (q·2^E).
#[derive(Clone, Copy)]
struct Exact {
    num: i128,
    q: i128,
}

fn cmp_exact(x: Exact, y: Exact) -> std::cmp::Ordering {
    (x.num * y.q).cmp(&(y.num * x.q))
}

/// Sweep for overlapping closed intervals, each given by (a, q, width exponent e:
/// half-width 2^{-e}·widen). Returns the first overlapping pair with distinct (a, q).
fn sweep(items: &[(ArcInterval, u32)], widen_log2: u32) -> Option<(ArcInterval, ArcInterval)> {
    const E: u32 = 60;
    let ends = |it: &(ArcInterval, u32)| {
        let (iv, e) = it;
        let half_w = 1i128 << (E - e + widen_log2);
        let c = (iv.a as i128) << E;
        (Exact { num: c - iv.q as i128 * half_w, q: iv.q as i128 }, Exact { num: c + iv.q as i128 * half_w, q: iv.q as i128 })
    };
    // add the copy of 1/1 at 0 to account for the torus
    let mut list: Vec<(ArcInterval, Exact, Exact)> = Vec::with_capacity(items.len() + 1);
    for it in items {
        let (l, r) = ends(it);
        list.push((it.0, l, r));
        if it.0.q == 1 {
            let shift = 1i128 << E;
            list.push((it.0, Exact { num: l.num - shift, q: 1 }, Exact { num: r.num - shift, q: 1 }));
        }
    }
    list.sort_by(|x, y| cmp_exact(x.1, y.1));
    let mut best: Option<(ArcInterval, Exact)> = None;
    for (iv, l, r) in list {
        if let Some((biv, br)) = best {
            if cmp_exact(l, br) != std::cmp::Ordering::Greater && (biv.a, biv.q) != (iv.a, iv.q) {
                return Some((biv, iv));
            }
            if cmp_exact(r, br) == std::cmp::Ordering::Greater {
                best = Some((iv, r));
            }
        } else {
            best = Some((iv, r));
        }
    }
    None
}

/// Check that distinct major arcs do not intersect. `widen_log2` scales every
/// half-width by 2^{widen_log2} (0 for the genuine arcs; positive values give
/// negative controls).
pub fn verify_disjointness(mode: DisjointnessMode, widen_log2: u32) -> Result<DisjointnessReport> {
    let items: Vec<(ArcInterval, u32)> = match mode {
        DisjointnessMode::FixedJ { j } => {
            if j > 60 {
                return Err(Error::Budget("j must be <= 60".into()));
            }
            major_arc_intervals(j).into_iter().map(|iv| (iv, iv.s + half(iv.j))).collect()
        }
        DisjointnessMode::FixedS { s, j_lo, j_hi } => {
            if j_hi > 60 || j_lo > j_hi {
                return Err(Error::Budget("need j_lo <= j_hi <= 60".into()));
            }
            let j0 = j_lo.max(2 * s + 20);
            if j0 > j_hi {
                return Ok(DisjointnessReport { disjoint: true, intervals: 0, violation: None });
            }
            // arcs of one (a, q) are nested in j, so the widest level decides
            let w = arc_half_width(j0, s);
            let mut v = Vec::new();
            for q in 1i64 << s..1i64 << (s + 1) {
                for a in (1..=q).filter(|&a| gcd(a, q) == 1) {
                    let c = a as f64 / q as f64;
                    v.push((ArcInterval { j: j0, s, q, a, left: c - w, right: c + w }, s + half(j0)));
                }
            }
            v
        }
    };
    let violation = sweep(&items, widen_log2);
    Ok(DisjointnessReport { disjoint: violation.is_none(), intervals: items.len(), violation })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellTilingReport {
    pub samples: usize,
    /// Samples that landed on a major arc.
    pub major: usize,
    /// Major-arc samples claimed by zero or by several shells.
    pub violations: usize,
    pub first_violation: Option<(u32, f64)>,
}

/// Sample θ = a/q + α near level-j major arcs (j drawn from `j_levels`, with
/// |α| log-uniform up to twice the arc width, plus exact centres) and count
/// the shells r ∈ [0, ⌈j/2⌉−s] that claim α. Each major-arc sample must be
/// claimed exactly once.
pub fn shell_tiling_check(j_levels: &[u32], samples: usize, seed: u64) -> Result<ShellTilingReport> {
    if j_levels.iter().any(|&j| !(20..=60).contains(&j)) || j_levels.is_empty() {
        return Err(Error::Precondition("shell levels must lie in [20, 60]".into()));
    }
    let mut seq = crate::numerics::Kronecker::new(5, seed);
    let pts: Vec<Vec<f64>> = (0..samples).map(|_| seq.next_point()).collect();
    let outcomes: Vec<Option<(u32, f64, usize)>> = pts
        .par_iter()
        .map(|u| {
            let j = j_levels[((u[0] * j_levels.len() as f64) as usize).min(j_levels.len() - 1)];
            let s_top = half(j) - 10;
            let s = ((u[1] * (s_top + 1) as f64) as u32).min(s_top);
            let q = (1i64 << s) + ((u[2] * (1i64 << s) as f64) as i64).min((1i64 << s) - 1);
            let start = ((u[3] * q as f64) as i64).min(q - 1);
            let a = (0..q).map(|d| (start + d) % q + 1).find(|&a| gcd(a, q) == 1).unwrap_or(1);
            let w = arc_half_width(j, s);
            let alpha = if u[4] < 0.05 { 0.0 } else { (2.0 * w) * 2f64.powf(-(j as f64 + 4.0) * (u[4] - 0.05) / 0.95) * if u[3] < 0.5 { -1.0 } else { 1.0 } };
            let theta = (a as f64 / q as f64 + alpha).rem_euclid(1.0);
            let label = classify(theta, &[0.0], j)?;
            if label.kind != ArcKind::Major {
                return Ok(None);
            }
            let ls = label.s.unwrap_or(0);
            let r_max = max_shell(j, ls).unwrap_or(0);
            let claims = (0..=r_max).filter(|&r| in_shell(label.alpha, j, r)).count();
            Ok(Some((j, label.alpha, claims)))
        })
        .collect::<Result<_>>()?;
    let mut report = ShellTilingReport { samples, major: 0, violations: 0, first_violation: None };
    for (j, alpha, claims) in outcomes.into_iter().flatten() {
        report.major += 1;
        if claims != 1 {
            report.violations += 1;
            report.first_violation.get_or_insert((j, alpha));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_examples() {
        let d = dirichlet_approx(1.0 / 3.0, 10).unwrap();
        assert_eq!((d.a, d.q), (1, 3));
        assert!(d.alpha.abs() < 1e-16);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let d = dirichlet_approx(g, 10).unwrap();
        assert_eq!((d.a, d.q), (5, 8));
        assert!((d.alpha - (g - 0.625)).abs() < 1e-16 && d.alpha.abs() <= 1.0 / 80.0);
        let d = dirichlet_approx(0.0, 1000).unwrap();
        assert_eq!((d.a, d.q, d.alpha), (1, 1, 0.0));
        let d = dirichlet_approx(0.9999, 10).unwrap();
        assert_eq!((d.a, d.q), (1, 1));
        assert!((d.alpha + 1e-4).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let l = classify(1.0 / 3.0 + 2f64.powi(-30), &[2.0 / 3.0], 40).unwrap();
        assert_eq!((l.kind, l.q, l.s, l.b.clone()), (ArcKind::Major, 3, Some(1), vec![2]));
        assert_eq!(classify(0.0, &[0.0], 18).unwrap().kind, ArcKind::Minor);
        let th = 12345.0 / 32768.0 + 1e-9;
        assert_eq!(classify(th, &[0.5], 40).unwrap().kind, ArcKind::Minor);
    }

    #[test]
    fn double_label_examples() {
        let j = 40;
        let base = |alpha: f64| ArcLabel { j, s: Some(1), r: None, a: 1, q: 3, b: vec![1], alpha, beta: vec![0.0], kind: ArcKind::Major };
        assert_eq!(double_label(&base(0.0)).unwrap().r, Some(0));
        assert_eq!(double_label(&base(1.5 * 2f64.powi(-40))).unwrap().r, Some(1));
        assert_eq!(double_label(&base(arc_half_width(j, 1))).unwrap().r, Some(19));
        assert!(double_label(&base(2.0 * arc_half_width(j, 1))).is_err());
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(0, 2f64.powi(-12)), Rho::Value(2f64.powi(-24)));
        assert_eq!(rho(3, 0.0), Rho::Zero);
        assert_eq!(rho(0, 0.5), Rho::Vacuous);
        assert_eq!(r_of_alpha(0.3), 0.5);
        assert_eq!(r_of_alpha(2f64.powi(-7)), 2f64.powi(-7));
        assert_eq!(r_of_alpha(0.0), 0.0);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_q(&[2.0 / 7.0 - 2.0 / 7.0], 7), 1.0);
        let total: f64 = (1..=7).map(|b| psi_q_1d(0.3 - b as f64 / 7.0, 7)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let q = 4;
        let mid = 0.5 / q as f64 + 0.03;
        assert!((psi_q_1d(mid, q) + psi_q_1d(mid - 1.0 / q as f64, q) - 1.0).abs() < 1e-15);
        assert_eq!(psi_q_1d(0.76 / 3.0, 3), 0.0);
        assert!((0..1000).all(|i| (psi_q_1d(i as f64 / 1000.0, 1) - 1.0).abs() < 1e-15));
    }

    #[test]
    fn translates_partition_unity() {
        for (phi, q) in [(vec![0.4], 1i64), (vec![0.13, -0.61], 3), (vec![2.3], 5), (vec![0.0], 1)] {
            let t = psi_translates(&phi, q);
            let total: f64 = t.iter().map(|x| x.2).sum();
            assert!((total - 1.0).abs() < 1e-14, "{phi:?} {q}");
            for (b, beta, _) in &t {
                for i in 0..phi.len() {
                    assert!((phi[i] - b[i] as f64 / q as f64 - beta[i]).abs() < 1e-14);
                    assert!(beta[i].abs() < 0.75 / q as f64);
                }
            }
        }
        assert_eq!(psi_translates(&[0.4], 1).len(), 2);
    }

    #[test]
    fn shells_tile_small_sample() {
        let r = shell_tiling_check(&[20, 24, 31], 2000, 3).unwrap();
        assert!(r.major > 1000);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn disjoint_small_levels() {
        for j in 20..=30 {
            assert!(verify_disjointness(DisjointnessMode::FixedJ { j }, 0).unwrap().disjoint);
        }
        let r = verify_disjointness(DisjointnessMode::FixedJ { j: 30 }, 12).unwrap();
        assert!(!r.disjoint && r.violation.is_some());
    }
}
