//! Config-driven experiment runner. Each experiment writes CSV tables (17
//! significant digits) and a `manifest.json` into the output directory.
//!
//! Exit codes: 0 all assertions pass, 1 an assertion failed, 2 invalid
//! config or arguments, 3 runtime error (budget, domain, io).

use crate::arcs::{shell_tiling_check, verify_disjointness, DisjointnessMode};
use crate::error::{Error, Result};
use crate::exponential_sums::gauss_sweep;
use crate::multiplier::experiments::{
    b_lambda_scan, e_coefficient_scan, e_multiplier_scan, grid_check, minor_scan, nu_rs_coefficient_scan, nu_rs_scan, remainder_scan, Sampling, Scan, ScanAxis,
};
use crate::operator::{apply_spectral_periodic, cyclic_convolution_direct, PeriodicGrid};
use crate::quadform::QuadraticForm;
use crate::representations::{asymptotic_fit, rep_table};
use crate::sharpness::{condition_i_probe, condition_ii_probe, dyadic_list, theorem_region, SharpnessConfig, SharpnessRow};
use crate::theta::cross_check;
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "fracradon", version, about = "Experiments for discrete fractional Radon transforms along quadratic-form paraboloids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: ExperimentKind,
    /// JSON experiment config; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config's `output`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Multiplies every configured tolerance and fit window.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Subcommand)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Gauss-sum bounds and averaged sums.
    Gauss,
    /// Direct theta sums against the inversion law.
    ThetaCheck,
    /// Major-arc disjointness and shell tiling.
    Arcs,
    /// Sup and Fourier-coefficient scans of the multiplier pieces.
    Multiplier,
    /// Spectral against direct cyclic application of the operator.
    Operator,
    /// Representation numbers and their asymptotics.
    Representations,
    /// Necessity probes and the exponent region.
    Sharpness,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gauss => "gauss",
            Self::ThetaCheck => "theta-check",
            Self::Arcs => "arcs",
            Self::Multiplier => "multiplier",
            Self::Operator => "operator",
            Self::Representations => "representations",
            Self::Sharpness => "sharpness",
        }
    }
}

fn default_seed() -> u64 {
    7
}

/// The JSON document accepted by `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    /// Symmetric integer matrix with even diagonal; x² when absent.
    #[serde(default)]
    pub form: Option<QuadraticForm>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: Value,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { experiment: None, form: None, seed: default_seed(), output: None, params: Value::Null }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn form(&self) -> QuadraticForm {
        self.form.clone().unwrap_or_else(|| QuadraticForm::sum_of_squares(1))
    }
}

/// A CSV artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&'static str]) -> Self {
        Self { name: name.into(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub binaries: Vec<(String, Vec<u8>)>,
    pub pass: bool,
    pub summary: Value,
    /// The parameter block with defaults filled in.
    pub params: Value,
}

/// Scientific notation with 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn params<T: DeserializeOwned + Default + Serialize>(v: &Value) -> Result<T> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("params: {e}")))
}

fn complex(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussParams {
    pub q_max: i64,
    pub l1_values: Vec<i64>,
    pub tol: f64,
}

impl Default for GaussParams {
    fn default() -> Self {
        Self { q_max: 20, l1_values: vec![-1, 0, 1, 2], tol: 1e-9 }
    }
}

fn run_gauss(form: &QuadraticForm, p: &GaussParams, scale: f64) -> Result<Outcome> {
    let rows = gauss_sweep(form, p.q_max, &p.l1_values, p.tol * scale)?;
    let mut t = Table::new("gauss.csv", &["q", "max_abs", "bound", "ratio", "avg_max_rel_gap", "avg_max_over_bound", "pass"]);
    for r in &rows {
        t.rows.push(vec![
            r.q.to_string(),
            fmt_f(r.max_abs),
            fmt_f(r.bound),
            fmt_f(r.ratio),
            fmt_f(r.avg_max_rel_gap),
            fmt_f(r.avg_max_over_bound),
            r.pass.to_string(),
        ]);
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let max_gap = rows.iter().map(|r| r.avg_max_rel_gap).fold(0.0, f64::max);
    Ok(Outcome {
        pass: rows.iter().all(|r| r.pass),
        tables: vec![t],
        binaries: vec![],
        summary: json!({"max_ratio": max_ratio, "max_avg_rel_gap": max_gap}),
        params: serde_json::to_value(p).unwrap_or_default(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaParams {
    pub points: usize,
    pub y_lo: f64,
    pub y_hi: f64,
    pub q_max: i64,
    pub eps: f64,
    pub tol: f64,
}

impl Default for ThetaParams {
    fn default() -> Self {
        Self { points: 100, y_lo: 2f64.powi(-20), y_hi: 0.5, q_max: 64, eps: 1e-13, tol: 1e-9 }
    }
}

fn run_theta(form: &QuadraticForm, seed: u64, p: &ThetaParams, scale: f64) -> Result<Outcome> {
    let rows = cross_check(form, p.points, p.y_lo, p.y_hi, p.q_max, seed, p.eps)?;
    let tol = p.tol * scale;
    let k = form.dim();
    let mut header = vec!["y", "theta"];
    let phi_names = ["phi1", "phi2", "phi3", "phi4", "phi5", "phi6", "phi7", "phi8"];
    let b_names = ["b1", "b2", "b3", "b4", "b5", "b6", "b7", "b8"];
    header.extend(&phi_names[..k.min(8)]);
    header.extend(["a", "q"]);
    header.extend(&b_names[..k.min(8)]);
    header.extend(["direct_re", "direct_im", "inversion_re", "inversion_im", "abs_diff", "tail_bound", "pass"]);
    let mut t = Table::new("theta_check.csv", &header);
    let mut max_diff = 0f64;
    for r in &rows {
        max_diff = max_diff.max(r.abs_diff);
        let mut row = vec![fmt_f(r.y), fmt_f(r.theta)];
        row.extend(r.phi.iter().map(|x| fmt_f(*x)));
        row.extend([r.a.to_string(), r.q.to_string()]);
        row.extend(r.b.iter().map(|x| x.to_string()));
        row.extend([
            fmt_f(r.direct.re),
            fmt_f(r.direct.im),
            fmt_f(r.inversion.re),
            fmt_f(r.inversion.im),
            fmt_f(r.abs_diff),
            fmt_f(r.tail_bound),
            (r.abs_diff <= tol).to_string(),
        ]);
        t.rows.push(row);
    }
    Ok(Outcome {
        pass: max_diff <= tol,
        tables: vec![t],
        binaries: vec![],
        summary: json!({"max_abs_diff": max_diff, "points": rows.len()}),
        params: serde_json::to_value(p).unwrap_or_default(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArcsParams {
    /// Fixed-j mode for every j in [1, j_max].
    pub j_max: u32,
    /// Fixed-s mode for every s in [0, s_max], levels up to `s_j_hi`.
    pub s_max: u32,
    pub s_j_hi: u32,
    pub shell_samples: usize,
    pub shell_levels: Vec<u32>,
}

impl Default for ArcsParams {
    fn default() -> Self {
        Self { j_max: 40, s_max: 8, s_j_hi: 60, shell_samples: 100_000, shell_levels: (20..=40).collect() }
    }
}

fn run_arcs(seed: u64, p: &ArcsParams) -> Result<Outcome> {
    let mut t = Table::new("arcs.csv", &["mode", "level", "intervals", "disjoint"]);
    let mut pass = true;
    for j in 1..=p.j_max {
        let r = verify_disjointness(DisjointnessMode::FixedJ { j }, 0)?;
        pass &= r.disjoint;
        t.rows.push(vec!["fixed_j".into(), j.to_string(), r.intervals.to_string(), r.disjoint.to_string()]);
    }
    for s in 0..=p.s_max {
        let r = verify_disjointness(DisjointnessMode::FixedS { s, j_lo: 2 * s + 20, j_hi: p.s_j_hi }, 0)?;
        pass &= r.disjoint;
        t.rows.push(vec!["fixed_s".into(), s.to_string(), r.intervals.to_string(), r.disjoint.to_string()]);
    }
    let shells = shell_tiling_check(&p.shell_levels, p.shell_samples, seed)?;
    pass &= shells.violations == 0;
    let mut st = Table::new("shells.csv", &["samples", "major", "violations"]);
    st.rows.push(vec![shells.samples.to_string(), shells.major.to_string(), shells.violations.to_string()]);
    Ok(Outcome { pass, tables: vec![t, st], binaries: vec![], summary: json!({"shells": shells}), params: serde_json::to_value(p).unwrap_or_default() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierScan {
    Remainder,
    NuRs,
    BLambda,
    EMultiplier,
    Minor,
    NuRsCoefficients,
    ECoefficients,
    Grid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiplierParams {
    pub scan: MultiplierScan,
    pub lambda: [f64; 2],
    /// Inclusive index range (j, r or s depending on the scan).
    pub range: [u32; 2],
    pub axis: ScanAxis,
    pub fixed: u32,
    pub points: usize,
    pub tol: f64,
    /// Half-width of the accepted slope window around the target.
    pub window: f64,
    pub q_cap: i64,
    pub l1_max: i64,
    pub l2_max: i64,
    /// Largest accepted coefficient growth slope.
    pub cap: f64,
    pub j: u32,
    pub n_theta: usize,
    pub n_phi: usize,
    pub grid_tol: f64,
}

impl Default for MultiplierParams {
    fn default() -> Self {
        Self {
            scan: MultiplierScan::NuRs,
            lambda: [1.0, 1.0],
            range: [1, 6],
            axis: ScanAxis::R,
            fixed: 0,
            points: 64,
            tol: 1e-10,
            window: 0.2,
            q_cap: 64,
            l1_max: 20,
            l2_max: 4,
            cap: 1.2,
            j: 4,
            n_theta: 1024,
            n_phi: 64,
            grid_tol: 1e-3,
        }
    }
}

fn scan_tables(scan: &Scan) -> Vec<Table> {
    let mut t = Table::new("multiplier.csv", &["piece", "indices", "point", "value_re", "value_im", "abs", "error", "bound", "ratio"]);
    for r in &scan.records {
        let pt: Vec<String> = r.point.iter().map(|x| fmt_f(*x)).collect();
        t.rows.push(vec![
            r.piece.clone(),
            r.indices.clone(),
            pt.join(";"),
            fmt_f(r.value.re),
            fmt_f(r.value.im),
            fmt_f(r.value.norm()),
            fmt_f(r.error),
            fmt_f(r.bound),
            fmt_f(r.ratio),
        ]);
    }
    let mut f = Table::new("fits.csv", &["label", "index", "sup", "fitted_slope", "window_lo", "window_hi", "pass"]);
    let fit = &scan.fit;
    for (i, s) in fit.index.iter().zip(&fit.sup) {
        f.rows.push(vec![fit.label.clone(), i.to_string(), fmt_f(*s), fmt_f(fit.slope), fmt_f(fit.window_lo), fmt_f(fit.window_hi), fit.pass.to_string()]);
    }
    vec![t, f]
}

fn run_multiplier(form: &QuadraticForm, seed: u64, p: &MultiplierParams, scale: f64) -> Result<Outcome> {
    let lam = complex(p.lambda);
    let range = p.range[0]..=p.range[1];
    let sampling = Sampling { points: p.points, seed, tol: p.tol };
    let window = p.window * scale;
    let scan = match p.scan {
        MultiplierScan::Remainder => remainder_scan(form, range, p.q_cap, sampling, window)?,
        MultiplierScan::NuRs => nu_rs_scan(form, lam, p.axis, p.fixed, range, sampling, window)?,
        MultiplierScan::BLambda => b_lambda_scan(form, lam, range, sampling, window)?,
        MultiplierScan::EMultiplier => e_multiplier_scan(form, lam, range, sampling, window)?,
        MultiplierScan::Minor => minor_scan(form, lam, range, sampling, window)?,
        MultiplierScan::NuRsCoefficients => nu_rs_coefficient_scan(form, lam, p.axis, p.fixed, range, p.l1_max, p.l2_max, p.cap)?,
        MultiplierScan::ECoefficients => e_coefficient_scan(form, lam, range, p.cap)?,
        MultiplierScan::Grid => {
            let g = grid_check(form, lam, p.j, p.n_theta, p.n_phi, p.l1_max, p.l2_max)?;
            let pass = g.max_err_on <= p.grid_tol * scale && g.max_off <= 1e-6 * scale;
            let mut t = Table::new("grid.csv", &["j", "n_theta", "n_phi", "max_err_on", "max_off", "max_closed", "pass"]);
            t.rows.push(vec![
                g.j.to_string(),
                g.n_theta.to_string(),
                g.n_phi.to_string(),
                fmt_f(g.max_err_on),
                fmt_f(g.max_off),
                fmt_f(g.max_closed),
                pass.to_string(),
            ]);
            return Ok(Outcome {
                pass,
                tables: vec![t],
                binaries: vec![],
                summary: serde_json::to_value(&g).unwrap_or_default(),
                params: serde_json::to_value(p).unwrap_or_default(),
            });
        }
    };
    Ok(Outcome {
        pass: scan.fit.pass,
        tables: scan_tables(&scan),
        binaries: vec![],
        summary: json!({"label": scan.fit.label, "slope": scan.fit.slope, "window": [scan.fit.window_lo, scan.fit.window_hi]}),
        params: serde_json::to_value(p).unwrap_or_default(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorParams {
    pub n: usize,
    pub m: usize,
    pub radius: usize,
    pub lambdas: Vec<[f64; 2]>,
    pub tol: f64,
}

impl Default for OperatorParams {
    fn default() -> Self {
        Self { n: 16, m: 64, radius: 7, lambdas: vec![[0.6, 0.0]], tol: 1e-10 }
    }
}

fn run_operator(form: &QuadraticForm, seed: u64, p: &OperatorParams, scale: f64) -> Result<Outcome> {
    let k = form.dim();
    let mut grid = PeriodicGrid::zeros(k, p.n, p.m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in &mut grid.values {
        *v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    let mut t = Table::new("operator.csv", &["k", "N", "M", "R", "lambda_re", "lambda_im", "max_abs_diff", "max_abs", "pass"]);
    let mut pass = true;
    let mut binaries = Vec::new();
    let mut input = Vec::new();
    grid.write_binary(&mut input)?;
    binaries.push(("input_grid.bin".to_string(), input));
    let mut worst = 0f64;
    for (i, l) in p.lambdas.iter().enumerate() {
        let lam = complex(*l);
        let spec = apply_spectral_periodic(form, lam, &grid, p.radius)?;
        let direct = cyclic_convolution_direct(form, lam, &grid, p.radius)?;
        let diff = spec.max_abs_diff(&direct)?;
        let max_abs = direct.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let ok = diff <= p.tol * scale * max_abs.max(1.0);
        pass &= ok;
        worst = worst.max(diff);
        t.rows.push(vec![
            k.to_string(),
            p.n.to_string(),
            p.m.to_string(),
            p.radius.to_string(),
            fmt_f(l[0]),
            fmt_f(l[1]),
            fmt_f(diff),
            fmt_f(max_abs),
            ok.to_string(),
        ]);
        let mut out = Vec::new();
        spec.write_binary(&mut out)?;
        binaries.push((format!("spectral_{i}.bin"), out));
    }
    Ok(Outcome { pass, tables: vec![t], binaries, summary: json!({"max_abs_diff": worst}), params: serde_json::to_value(p).unwrap_or_default() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepresentationsParams {
    pub upto: usize,
    /// Accepted |exponent − k/2| relative to k/2.
    pub exponent_tol: f64,
    /// Accepted |constant / volume − 1|.
    pub constant_tol: f64,
}

impl Default for RepresentationsParams {
    fn default() -> Self {
        Self { upto: 100_000, exponent_tol: 0.01, constant_tol: 0.01 }
    }
}

fn run_representations(form: &QuadraticForm, p: &RepresentationsParams, scale: f64) -> Result<Outcome> {
    let table = rep_table(form, p.upto)?;
    let mut t = Table::new("representations.csv", &["n", "r", "A"]);
    for n in 1..=table.upto {
        t.rows.push(vec![n.to_string(), table.counts[n].to_string(), table.cumulative[n].to_string()]);
    }
    let half_k = form.dim() as f64 / 2.0;
    let (pass, summary, tables) = if table.upto >= 1000 {
        let fit = asymptotic_fit(&table)?;
        let pass =
            (fit.exponent - half_k).abs() <= p.exponent_tol * scale * half_k && (fit.constant / fit.predicted_constant - 1.0).abs() <= p.constant_tol * scale;
        let mut ft = Table::new("fit.csv", &["N", "A", "model", "rel_err", "fitted_exponent", "constant", "predicted_constant", "pass"]);
        for &n in &fit.samples {
            let a = table.a(n as usize) as f64;
            let model = fit.constant * (n as f64).powf(half_k);
            ft.rows.push(vec![
                n.to_string(),
                fmt_f(a),
                fmt_f(model),
                fmt_f((a - model) / model),
                fmt_f(fit.exponent),
                fmt_f(fit.constant),
                fmt_f(fit.predicted_constant),
                pass.to_string(),
            ]);
        }
        (pass, serde_json::to_value(&fit).unwrap_or_default(), vec![t, ft])
    } else {
        (true, json!({"note": "fit skipped below N = 1000"}), vec![t])
    };
    Ok(Outcome { pass, tables, binaries: vec![], summary, params: serde_json::to_value(p).unwrap_or_default() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharpnessProbe {
    ConditionI,
    ConditionIi,
    Region,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpnessParams {
    pub probe: SharpnessProbe,
    pub lambdas: Vec<f64>,
    pub ps: Vec<f64>,
    pub qs: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub t_lo_exp: u32,
    pub t_hi_exp: u32,
    pub tolerance: f64,
    pub c_min: f64,
}

impl Default for SharpnessParams {
    fn default() -> Self {
        Self {
            probe: SharpnessProbe::ConditionIi,
            lambdas: vec![0.4],
            ps: vec![2.0],
            qs: vec![1.0],
            epsilon: 0.05,
            delta: 0.125,
            t_lo_exp: 6,
            t_hi_exp: 14,
            tolerance: 0.05,
            c_min: 0.1,
        }
    }
}

fn sharpness_rows(t: &mut Table, lam: f64, p: f64, q: f64, rows: &[SharpnessRow]) {
    for r in rows {
        t.rows.push(vec![
            fmt_f(lam),
            fmt_f(p),
            fmt_f(q),
            r.t.to_string(),
            fmt_f(r.norm_f_p),
            fmt_f(r.norm_jf_q),
            fmt_f(r.ratio),
            fmt_f(r.fitted_exponent),
            fmt_f(r.target),
            r.pass.to_string(),
        ]);
    }
}

fn run_sharpness(form: &QuadraticForm, p: &SharpnessParams, scale: f64) -> Result<Outcome> {
    let k = form.dim();
    let mut pass = true;
    let mut reports = Vec::new();
    let header = ["lambda", "p", "q", "T", "norm_f_p", "norm_Jf_q", "ratio", "fitted_exponent", "target", "pass"];
    let table = match p.probe {
        SharpnessProbe::Region => {
            let mut t =
                Table::new("region.csv", &["k", "lambda", "p", "q", "region", "condition_i", "condition_ii", "condition_i_edge", "binding", "crossover"]);
            for &lam in &p.lambdas {
                for &pp in &p.ps {
                    for &q in &p.qs {
                        if !(pp > 1.0 && q > 1.0 && pp.is_finite() && q.is_finite()) {
                            return Err(Error::Config("region probe needs p, q in (1, ∞)".into()));
                        }
                        let r = theorem_region(k, lam, pp, q);
                        t.rows.push(vec![
                            k.to_string(),
                            fmt_f(lam),
                            fmt_f(pp),
                            fmt_f(q),
                            r.region.as_str().into(),
                            r.condition_i.to_string(),
                            r.condition_ii.to_string(),
                            fmt_f(r.condition_i_edge),
                            r.binding.as_str().into(),
                            fmt_f(r.crossover),
                        ]);
                        reports.push(serde_json::to_value(&r).unwrap_or_default());
                    }
                }
            }
            t
        }
        probe => {
            let mut t = Table::new("sharpness.csv", &header);
            for &lam in &p.lambdas {
                for &pp in &p.ps {
                    for &q in &p.qs {
                        let mut cfg = SharpnessConfig::new(form.clone(), lam, pp, q, dyadic_list(p.t_lo_exp, p.t_hi_exp));
                        cfg.epsilon = p.epsilon;
                        cfg.delta = p.delta;
                        cfg.tolerance = p.tolerance * scale;
                        cfg.c_min = p.c_min;
                        cfg.validate()?;
                        if probe == SharpnessProbe::ConditionI {
                            let r = condition_i_probe(&cfg)?;
                            pass &= r.pass;
                            sharpness_rows(&mut t, lam, pp, q, &r.rows);
                            reports.push(serde_json::to_value(&r).map(strip_rows).unwrap_or_default());
                        } else {
                            let r = condition_ii_probe(&cfg)?;
                            pass &= r.pass;
                            sharpness_rows(&mut t, lam, pp, q, &r.rows);
                            reports.push(serde_json::to_value(&r).map(strip_rows).unwrap_or_default());
                        }
                    }
                }
            }
            t
        }
    };
    Ok(Outcome { pass, tables: vec![table], binaries: vec![], summary: Value::Array(reports), params: serde_json::to_value(p).unwrap_or_default() })
}

fn strip_rows(mut v: Value) -> Value {
    if let Some(o) = v.as_object_mut() {
        o.remove("rows");
    }
    v
}

/// Run one experiment without touching the filesystem.
pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig, tolerance_scale: f64) -> Result<Outcome> {
    if let Some(k) = cfg.experiment {
        if k != kind {
            return Err(Error::Config(format!("config is for experiment '{}', not '{}'", k.name(), kind.name())));
        }
    }
    if !(tolerance_scale > 0.0 && tolerance_scale.is_finite()) {
        return Err(Error::Config("tolerance scale must be positive".into()));
    }
    let form = cfg.form();
    let s = tolerance_scale;
    match kind {
        ExperimentKind::Gauss => run_gauss(&form, &params(&cfg.params)?, s),
        ExperimentKind::ThetaCheck => run_theta(&form, cfg.seed, &params(&cfg.params)?, s),
        ExperimentKind::Arcs => run_arcs(cfg.seed, &params(&cfg.params)?),
        ExperimentKind::Multiplier => run_multiplier(&form, cfg.seed, &params(&cfg.params)?, s),
        ExperimentKind::Operator => run_operator(&form, cfg.seed, &params(&cfg.params)?, s),
        ExperimentKind::Representations => run_representations(&form, &params(&cfg.params)?, s),
        ExperimentKind::Sharpness => run_sharpness(&form, &params(&cfg.params)?, s),
    }
}

fn write_artifacts(dir: &Path, outcome: &Outcome, manifest: &Value) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in &outcome.tables {
        std::fs::write(dir.join(&t.name), t.to_csv())?;
    }
    for (name, bytes) in &outcome.binaries {
        std::fs::write(dir.join(name), bytes)?;
    }
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidForm(_) => 2,
        _ => 3,
    }
}

/// Parse arguments, run, write artifacts; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    let started = Instant::now();
    let cfg = match &cli.config {
        Some(path) => match std::fs::read_to_string(path).map_err(Error::from).and_then(|t| ExperimentConfig::from_json(&t)) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        },
        None => ExperimentConfig::default(),
    };
    let dir = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("fracradon-out"));
    let threads = cli.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 3;
        }
    };
    let kind = cli.command;
    let result = pool.install(|| run_experiment(kind, &cfg, cli.tolerance_scale));
    let mut echo = cfg.clone();
    echo.experiment = Some(kind);
    echo.form = Some(cfg.form());
    let base = json!({
        "experiment": kind.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "threads": pool.current_num_threads(),
        "tolerance_scale": cli.tolerance_scale,
    });
    match result {
        Ok(outcome) => {
            echo.params = outcome.params.clone();
            let mut manifest = base;
            manifest["config"] = serde_json::to_value(&echo).unwrap_or_default();
            manifest["pass"] = json!(outcome.pass);
            manifest["summary"] = outcome.summary.clone();
            manifest["artifacts"] =
                json!(outcome.tables.iter().map(|t| t.name.clone()).chain(outcome.binaries.iter().map(|b| b.0.clone())).collect::<Vec<_>>());
            manifest["wall_time_s"] = json!(started.elapsed().as_secs_f64());
            if let Err(e) = write_artifacts(&dir, &outcome, &manifest) {
                eprintln!("error: {e}");
                return 3;
            }
            println!("{}: {} ({})", kind.name(), if outcome.pass { "PASS" } else { "FAIL" }, dir.display());
            if outcome.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code(&e);
            if code == 3 {
                let mut manifest = base;
                manifest["config"] = serde_json::to_value(&echo).unwrap_or_default();
                manifest["pass"] = json!(false);
                manifest["error"] = json!(e.to_string());
                manifest["wall_time_s"] = json!(started.elapsed().as_secs_f64());
                let empty = Outcome { tables: vec![], binaries: vec![], pass: false, summary: Value::Null, params: Value::Null };
                let _ = write_artifacts(&dir, &empty, &manifest);
            }
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "theta-check", "form": [[2]], "seed": 3, "params": {"points": 5}}"#).unwrap();
        assert_eq!(c.experiment, Some(ExperimentKind::ThetaCheck));
        let p: ThetaParams = params(&c.params).unwrap();
        assert_eq!((p.points, p.q_max), (5, 64));
        let bad = ExperimentConfig::from_json(r#"{"form": [[3]]}"#).unwrap_err();
        assert!(matches!(bad, Error::Config(_)));
        assert!(ExperimentConfig::from_json(r#"{"frm": [[2]]}"#).is_err());
        assert!(params::<ThetaParams>(&json!({"pointz": 3})).is_err());
    }

    #[test]
    fn mismatched_experiment_is_config_error() {
        let c = ExperimentConfig { experiment: Some(ExperimentKind::Gauss), ..Default::default() };
        assert!(matches!(run_experiment(ExperimentKind::Arcs, &c, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn operator_and_region_outcomes() {
        let o = run_experiment(ExperimentKind::Operator, &ExperimentConfig::default(), 1.0).unwrap();
        assert!(o.pass);
        assert_eq!(o.tables[0].rows.len(), 1);
        let cfg = ExperimentConfig {
            params: json!({"probe": "region", "lambdas": [0.75], "ps": [2.0], "qs": [2.0, 4.0]}),
            form: Some(QuadraticForm::sum_of_squares(2)),
            ..Default::default()
        };
        let o = run_experiment(ExperimentKind::Sharpness, &cfg, 1.0).unwrap();
        assert_eq!(o.tables[0].rows.len(), 2);
        assert_eq!(o.tables[0].rows[0][4], "outside");
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_f(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
