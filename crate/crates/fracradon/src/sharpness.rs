//! Witness families for the two necessary conditions on (p, q): the delta
//! function (condition ii) and the annulus-supported power function
//! f(n, t) = |t|^{-α} χ(n / |t|^{1/2}) (condition i).

use crate::error::{Error, Result};
use crate::numerics::{ols, NeumaierSum};
use crate::operator::{apply_direct_at, LatticeFunction};
use crate::quadform::QuadraticForm;
use crate::representations::rep_table;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Largest support of f_T that [`condition_i_probe`] will build.
pub const ANNULUS_BUDGET: f64 = 2e7;

fn default_delta() -> f64 {
    0.125
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_tolerance() -> f64 {
    0.05
}
fn default_c_min() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessConfig {
    pub form: QuadraticForm,
    pub lambda: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    pub q: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub t_list: Vec<u64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_c_min")]
    pub c_min: f64,
}

fn default_p() -> f64 {
    2.0
}

/// 2^lo, 2^{lo+1}, ..., 2^hi.
pub fn dyadic_list(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|e| 1u64 << e).collect()
}

impl SharpnessConfig {
    pub fn new(form: QuadraticForm, lambda: f64, p: f64, q: f64, t_list: Vec<u64>) -> Self {
        Self { form, lambda, p, q, epsilon: default_epsilon(), delta: default_delta(), t_list, tolerance: default_tolerance(), c_min: default_c_min() }
    }

    pub fn k(&self) -> usize {
        self.form.dim()
    }

    /// α = (k+2)/(2p) + ε.
    pub fn alpha(&self) -> f64 {
        (self.k() as f64 + 2.0) / (2.0 * self.p) + self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_list.len() < 3 || self.t_list[0] < 2 || self.t_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("t_list must hold at least 3 strictly increasing levels >= 2".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return Err(Error::Config("p and q must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) || !(self.lambda.is_finite()) || !(self.tolerance > 0.0) {
            return Err(Error::Config("epsilon and tolerance must be positive, lambda finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpnessRow {
    #[serde(rename = "T")]
    pub t: u64,
    pub norm_f_p: f64,
    pub norm_jf_q: f64,
    pub ratio: f64,
    pub fitted_exponent: f64,
    pub target: f64,
    pub pass: bool,
}

pub fn write_rows_csv<W: Write>(rows: &[SharpnessRow], mut w: W) -> Result<()> {
    writeln!(w, "T,norm_f_p,norm_Jf_q,ratio,fitted_exponent,target,pass")?;
    for r in rows {
        writeln!(w, "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}", r.t, r.norm_f_p, r.norm_jf_q, r.ratio, r.fitted_exponent, r.target, r.pass)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Divergent,
    Boundary,
    Convergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionIiReport {
    pub regime: Regime,
    /// (k/2)(1 − λq).
    pub target: f64,
    /// log-log slope of the dyadic increments S(T) − S(⌊T/2⌋).
    pub fitted_exponent: f64,
    /// log-log slope of S(T) itself.
    pub raw_exponent: f64,
    /// r² of S(T) against ln T.
    pub log_fit_r2: f64,
    pub increments: Vec<f64>,
    pub pass: bool,
    pub rows: Vec<SharpnessRow>,
}

/// S(T) = Σ_{1≤t≤T} r(t) t^{-kλq/2}, the q-th power of ‖J δ‖ restricted to t ≤ T.
pub fn condition_ii_probe(cfg: &SharpnessConfig) -> Result<ConditionIiReport> {
    cfg.validate()?;
    let k = cfg.k() as f64;
    let t_max = *cfg.t_list.last().unwrap();
    let table = rep_table(&cfg.form, t_max as usize)?;
    let s_exp = k * cfg.lambda * cfg.q / 2.0;
    let mut partial = vec![0.0f64; t_max as usize + 1];
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    for t in 1..=t_max as usize {
        let term = table.counts[t] as f64 * (t as f64).powf(-s_exp);
        let s = acc + term;
        comp += if acc.abs() >= term.abs() { (acc - s) + term } else { (term - s) + acc };
        acc = s;
        partial[t] = acc + comp;
    }
    let target = k / 2.0 * (1.0 - cfg.lambda * cfg.q);
    let lq = cfg.lambda * cfg.q;
    let regime = if (lq - 1.0).abs() <= 1e-12 {
        Regime::Boundary
    } else if lq < 1.0 {
        Regime::Divergent
    } else {
        Regime::Convergent
    };
    let ts = &cfg.t_list;
    let xs: Vec<f64> = ts.iter().map(|&t| (t as f64).ln()).collect();
    let increments: Vec<f64> = ts.iter().map(|&t| partial[t as usize] - partial[(t / 2) as usize]).collect();
    if increments.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::DegenerateFit("a dyadic shell of the partial sums is empty".into()));
    }
    let fitted = ols(&xs, &increments.iter().map(|d| d.ln()).collect::<Vec<_>>())?.slope;
    let s_vals: Vec<f64> = ts.iter().map(|&t| partial[t as usize]).collect();
    let raw = ols(&xs, &s_vals.iter().map(|s| s.ln()).collect::<Vec<_>>())?.slope;
    let log_fit = ols(&xs, &s_vals)?;
    let pass = match regime {
        Regime::Divergent => (fitted - target).abs() <= cfg.tolerance,
        Regime::Boundary => fitted.abs() <= cfg.tolerance && log_fit.slope > 0.0 && log_fit.r2 >= 0.999,
        Regime::Convergent => fitted < 0.0 && increments.last() < increments.first(),
    };
    let rows = ts
        .iter()
        .zip(&s_vals)
        .map(|(&t, &s)| {
            let nq = s.powf(1.0 / cfg.q);
            SharpnessRow { t, norm_f_p: 1.0, norm_jf_q: nq, ratio: nq, fitted_exponent: fitted, target, pass }
        })
        .collect();
    Ok(ConditionIiReport { regime, target, fitted_exponent: fitted, raw_exponent: raw, log_fit_r2: log_fit.r2, increments, pass, rows })
}

/// Strict square-annulus membership 1/2 < |x_j| < 2 for x = n/|t|^{1/2}, in integers.
pub fn in_annulus(n: &[i64], t: i64) -> bool {
    let a = t.unsigned_abs() as i128;
    a > 0
        && n.iter().all(|&x| {
            let x2 = (x as i128) * (x as i128);
            4 * x2 > a && x2 < 4 * a
        })
}

/// Number of integers x with |t| < 4x² and x² < 4|t|.
fn annulus_count_1d(t: i64) -> u64 {
    let a = t.unsigned_abs() as i128;
    let mut count = 0;
    let mut x: i128 = 1;
    while x * x < 4 * a {
        if 4 * x * x > a {
            count += 2;
        }
        x += 1;
    }
    count
}

/// Sorted coordinates x with 1/2 < |x|/|t|^{1/2} < 2.
fn annulus_coords(t: i64) -> Vec<i64> {
    let a = t.unsigned_abs() as i128;
    let mut out = Vec::new();
    let mut x: i128 = 1;
    while x * x < 4 * a {
        if 4 * x * x > a {
            out.push(-(x as i64));
            out.push(x as i64);
        }
        x += 1;
    }
    out.sort_unstable();
    out
}

/// Spatial points n with χ(n/|t|^{1/2}) = 1, lexicographic.
fn annulus_points(k: usize, t: i64) -> Vec<Vec<i64>> {
    let c = annulus_coords(t);
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out.into_iter().flat_map(|p| c.iter().map(move |&x| [p.clone(), vec![x]].concat())).collect();
    }
    out
}

/// f_T(n, t) = |t|^{-α} χ(n/|t|^{1/2}) for 1 ≤ |t| ≤ T.
pub fn annulus_function(k: usize, alpha: f64, t_max: u64) -> Result<LatticeFunction> {
    let size: f64 = (1..=t_max as i64).map(|t| 2.0 * (annulus_count_1d(t) as f64).powi(k as i32)).sum();
    if size > ANNULUS_BUDGET {
        return Err(Error::Budget(format!("annulus function with {size:.3e} points")));
    }
    let mut f = LatticeFunction::new(k);
    for t in 1..=t_max as i64 {
        let v = Complex64::new((t as f64).powf(-alpha), 0.0);
        for n in annulus_points(k, t) {
            f.set(&n, t, v)?;
            f.set(&n, -t, v)?;
        }
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionIReport {
    pub alpha: f64,
    /// (kq/2)(1−λ) − αq + k/2 + 1.
    pub target: f64,
    /// log-log slope of the dyadic shells of ‖J f_T‖_q^q.
    pub fitted_exponent: f64,
    pub predicted_divergent: bool,
    pub condition_i_holds: bool,
    /// Smallest δ-restricted sum over |t|^{-α+(k/2)(1−λ)} on the sampled annulus.
    pub min_ratio_restricted: f64,
    pub min_ratio_full: f64,
    pub max_ratio_full: f64,
    /// J f ≥ δ-restricted sum at every sampled point.
    pub restricted_below_full: bool,
    pub sampled_points: usize,
    /// Range of #annulus(t) / (3^k |t|^{k/2}) over t > 16.
    pub count_ratio_range: (f64, f64),
    /// ‖f_T‖_p^p / Σ_{1≤|t|≤T} 3^k |t|^{k/2−αp}.
    pub norm_ratio_range: (f64, f64),
    pub pass: bool,
    pub rows: Vec<SharpnessRow>,
}

/// Runs on the largest level T of the config: f = f_T, the pointwise lower
/// bound is sampled for |t| ∈ [T/4, T/2], and ‖J f‖_q^q is accumulated over
/// the annulus points with 1 ≤ t ≤ T' for each T' in the list.
pub fn condition_i_probe(cfg: &SharpnessConfig) -> Result<ConditionIReport> {
    cfg.validate()?;
    let k = cfg.k();
    let kf = k as f64;
    let alpha = cfg.alpha();
    let t_max = *cfg.t_list.last().unwrap();
    let f = annulus_function(k, alpha, t_max)?;
    let q1 = &cfg.form;
    let lam = Complex64::new(cfg.lambda, 0.0);

    // ‖f_T'‖_p for each level
    let mut fp_partial = vec![0.0f64; t_max as usize + 1];
    let mut model_partial = vec![0.0f64; t_max as usize + 1];
    let mut count_lo: f64 = f64::INFINITY;
    let mut count_hi: f64 = 0.0;
    for t in 1..=t_max as usize {
        let c = (annulus_count_1d(t as i64) as f64).powi(k as i32);
        let tf = t as f64;
        fp_partial[t] = fp_partial[t - 1] + 2.0 * c * tf.powf(-alpha * cfg.p);
        model_partial[t] = model_partial[t - 1] + 2.0 * 3f64.powi(k as i32) * tf.powf(kf / 2.0 - alpha * cfg.p);
        if t > 16 {
            let r = c / (3f64.powi(k as i32) * tf.powf(kf / 2.0));
            count_lo = count_lo.min(r);
            count_hi = count_hi.max(r);
        }
    }
    let norm_ratio_range = (17..=t_max as usize).map(|t| fp_partial[t] / model_partial[t]).fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));

    // J f on the annulus with 1 ≤ t ≤ T
    let window: Vec<(Vec<i64>, i64)> = (1..=t_max as i64).flat_map(|t| annulus_points(k, t).into_iter().map(move |n| (n, t))).collect();
    let jf = apply_direct_at(q1, q1, lam, &f, &window)?;
    let mut shell = vec![0.0f64; t_max as usize + 1];
    for ((_, t), v) in window.iter().zip(&jf) {
        shell[*t as usize] += v.norm().powf(cfg.q);
    }
    let jq_partial: Vec<f64> = shell
        .iter()
        .scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        })
        .collect();

    // pointwise lower bound on |t| ∈ [T/4, T/2]
    let lo = (t_max / 4).max(1) as i64;
    let hi = (t_max / 2).max(1) as i64;
    let sample: Vec<(Vec<i64>, i64)> = (lo..=hi).flat_map(|t| [t, -t]).flat_map(|t| annulus_points(k, t).into_iter().map(move |n| (n, t))).collect();
    let full = apply_direct_at(q1, q1, lam, &f, &sample)?;
    let kappa = kf * cfg.lambda / 2.0;
    let restricted: Vec<f64> = sample
        .par_iter()
        .map(|(n, t)| {
            let cap = (cfg.delta * t.unsigned_abs() as f64).floor() as i64;
            let mut acc = NeumaierSum::new();
            let mut src = vec![0i64; k];
            q1.for_each_lattice_point(cap, |m, qm| {
                if qm == 0 {
                    return;
                }
                let ts = t - qm;
                if ts == 0 || ts.unsigned_abs() > t_max {
                    return;
                }
                for i in 0..k {
                    src[i] = n[i] - m[i];
                }
                if in_annulus(&src, ts) {
                    acc.add(Complex64::new((ts.unsigned_abs() as f64).powf(-alpha) * (qm as f64).powf(-kappa), 0.0));
                }
            });
            acc.value().re
        })
        .collect();
    let scale = |t: i64| (t.unsigned_abs() as f64).powf(-alpha + kf / 2.0 * (1.0 - cfg.lambda));
    let mut min_r = f64::INFINITY;
    let mut min_f = f64::INFINITY;
    let mut max_f: f64 = 0.0;
    let mut below = true;
    for (((_, t), jv), rv) in sample.iter().zip(&full).zip(&restricted) {
        let s = scale(*t);
        min_r = min_r.min(rv / s);
        min_f = min_f.min(jv.re / s);
        max_f = max_f.max(jv.re / s);
        below &= *rv <= jv.re * (1.0 + 1e-12) && jv.im.abs() <= 1e-12 * jv.re;
    }

    let target = kf * cfg.q / 2.0 * (1.0 - cfg.lambda) - alpha * cfg.q + kf / 2.0 + 1.0;
    let levels: Vec<u64> = cfg.t_list.clone();
    let incs: Vec<f64> = levels.iter().map(|&t| jq_partial[t as usize] - jq_partial[(t / 2) as usize]).collect();
    let xs: Vec<f64> = levels.iter().map(|&t| (t as f64).ln()).collect();
    if incs.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::DegenerateFit("empty dyadic shell of ‖J f‖_q^q".into()));
    }
    let fitted = ols(&xs, &incs.iter().map(|d| d.ln()).collect::<Vec<_>>())?.slope;
    let region = theorem_region(k, cfg.lambda, cfg.p, cfg.q);
    let pass = min_r >= cfg.c_min && below && (fitted - target).abs() <= cfg.tolerance;
    let rows = levels
        .iter()
        .map(|&t| {
            let nf = fp_partial[t as usize].powf(1.0 / cfg.p);
            let nj = jq_partial[t as usize].powf(1.0 / cfg.q);
            SharpnessRow { t, norm_f_p: nf, norm_jf_q: nj, ratio: nj / nf, fitted_exponent: fitted, target, pass }
        })
        .collect();
    Ok(ConditionIReport {
        alpha,
        target,
        fitted_exponent: fitted,
        predicted_divergent: target > 0.0,
        condition_i_holds: region.condition_i,
        min_ratio_restricted: min_r,
        min_ratio_full: min_f,
        max_ratio_full: max_f,
        restricted_below_full: below,
        sampled_points: sample.len(),
        count_ratio_range: (count_lo, count_hi),
        norm_ratio_range,
        pass,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    ConditionI,
    ConditionIi,
    Both,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Inside => "inside",
            Region::Boundary => "boundary",
            Region::Outside => "outside",
        }
    }
}

impl Binding {
    pub fn as_str(&self) -> &'static str {
        match self {
            Binding::ConditionI => "i",
            Binding::ConditionIi => "ii",
            Binding::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub region: Region,
    pub condition_i: bool,
    pub condition_ii: bool,
    /// 1/p − k(1−λ)/(k+2), the largest 1/q allowed by condition (i).
    pub condition_i_edge: f64,
    /// condition_i_edge − 1/q.
    pub slack_i: f64,
    /// min(λ − 1/q, 1/p − (1 − λ)).
    pub slack_ii: f64,
    /// The failing condition(s) when outside, otherwise the one with less slack.
    pub binding: Binding,
    /// λ = 2/(k+4).
    pub crossover: f64,
}

pub fn theorem_region(k: usize, lambda: f64, p: f64, q: f64) -> RegionReport {
    let kf = k as f64;
    let edge = 1.0 / p - kf * (1.0 - lambda) / (kf + 2.0);
    let slack_i = edge - 1.0 / q;
    let slack_ii = (lambda - 1.0 / q).min(1.0 / p - (1.0 - lambda));
    let tol = 1e-12;
    let cond_i = slack_i >= -tol;
    let cond_ii = slack_ii > tol;
    let region = match (cond_i, cond_ii) {
        (true, true) if slack_i <= tol => Region::Boundary,
        (true, true) => Region::Inside,
        _ => Region::Outside,
    };
    let binding = match (cond_i, cond_ii) {
        (false, false) => Binding::Both,
        (false, true) => Binding::ConditionI,
        (true, false) => Binding::ConditionIi,
        (true, true) if slack_i < slack_ii => Binding::ConditionI,
        (true, true) if slack_ii < slack_i => Binding::ConditionIi,
        _ => Binding::Both,
    };
    RegionReport { region, condition_i: cond_i, condition_ii: cond_ii, condition_i_edge: edge, slack_i, slack_ii, binding, crossover: 2.0 / (kf + 4.0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_examples() {
        let r = theorem_region(2, 0.75, 2.0, 8.0 / 3.0);
        assert!((r.condition_i_edge - 0.375).abs() < 1e-15);
        assert_eq!(r.region, Region::Boundary);
        assert!((theorem_region(1, 0.5, 2.0, 4.0).crossover - 0.4).abs() < 1e-15);
        let one = theorem_region(3, 1.0, 2.0, 3.0);
        assert!((one.condition_i_edge - 0.5).abs() < 1e-15);
        let out = theorem_region(1, 0.5, 1.8, 2.2);
        assert_eq!((out.region, out.binding), (Region::Outside, Binding::ConditionI));
        let out2 = theorem_region(1, 0.3, 1.2, 1.5);
        assert!(!out2.condition_ii);
    }

    #[test]
    fn annulus_membership_is_strict() {
        assert!(!in_annulus(&[2], 16));
        assert!(in_annulus(&[3], 16));
        assert!(!in_annulus(&[8], 16));
        assert!(in_annulus(&[-7, 3], 16));
        assert!(!in_annulus(&[3], 0));
        for t in 1..300i64 {
            let brute = (-100..=100).filter(|&x| in_annulus(&[x], t)).count() as u64;
            assert_eq!(annulus_count_1d(t), brute);
            assert_eq!(annulus_coords(t).len() as u64, brute);
        }
    }

    #[test]
    fn condition_ii_small() {
        let q = QuadraticForm::sum_of_squares(2);
        let cfg = SharpnessConfig::new(q.clone(), 0.4, 1.0, 1.0, dyadic_list(6, 13));
        let r = condition_ii_probe(&cfg).unwrap();
        assert_eq!(r.regime, Regime::Divergent);
        assert!((r.fitted_exponent - 0.6).abs() < 0.05, "{r:?}");
        let conv = condition_ii_probe(&SharpnessConfig::new(q, 0.6, 1.0, 2.0, dyadic_list(6, 13))).unwrap();
        assert_eq!(conv.regime, Regime::Convergent);
        assert!(conv.pass && conv.fitted_exponent < 0.0);
    }

    #[test]
    fn condition_i_small() {
        let cfg = SharpnessConfig::new(QuadraticForm::sum_of_squares(1), 0.5, 2.0, 2.0, dyadic_list(6, 9));
        let r = condition_i_probe(&cfg).unwrap();
        assert!(r.restricted_below_full && r.min_ratio_restricted > 0.1);
        assert!(r.count_ratio_range.0 >= 0.5 && r.count_ratio_range.1 <= 2.0);
        assert!(r.norm_ratio_range.0 >= 0.5 && r.norm_ratio_range.1 <= 2.0);
        assert!(r.predicted_divergent && !r.condition_i_holds);
    }

    #[test]
    fn config_validation() {
        let q = QuadraticForm::sum_of_squares(1);
        assert!(condition_ii_probe(&SharpnessConfig::new(q.clone(), 0.4, 1.0, 1.0, vec![64, 32, 128])).is_err());
        let mut c = SharpnessConfig::new(q, 0.4, 1.0, 1.0, dyadic_list(6, 8));
        c.delta = 1.5;
        assert!(c.validate().is_err());
    }
}
