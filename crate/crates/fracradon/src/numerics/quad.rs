//! Gauss–Legendre rules with order doubling, and adaptive Gauss–Kronrod (7/15).

use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn compute_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for l in 2..=n {
                let p2 = ((2 * l - 1) as f64 * z * p1 - (l - 1) as f64 * p0) / l as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1] (cached).
pub fn gauss_legendre(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let r = Arc::new(compute_rule(n));
    cache.lock().unwrap().insert(n, r.clone());
    r
}

/// Apply the n-point rule to f on [a, b].
pub fn gl_apply<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64, n: usize) -> Complex64 {
    let rule = gauss_legendre(n);
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    let mut s = Complex64::new(0.0, 0.0);
    for (x, w) in rule.0.iter().zip(rule.1.iter()) {
        s += f(c + h * x) * *w;
    }
    s * h
}

#[derive(Debug, Clone, Copy)]
pub struct GlResult {
    pub value: Complex64,
    pub error: f64,
    pub order: usize,
    pub converged: bool,
}

/// Gauss–Legendre with order doubling from `n0` until successive estimates
/// differ by at most `tol` or `n_max` is reached. The error estimate is the
/// last difference.
pub fn gl_doubling<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, n0: usize, n_max: usize, tol: f64) -> GlResult {
    let mut n = n0.max(2);
    let mut prev = gl_apply(&mut f, a, b, n);
    loop {
        let next_n = 2 * n;
        let cur = gl_apply(&mut f, a, b, next_n);
        let err = (cur - prev).norm();
        if err <= tol || next_n >= n_max {
            return GlResult { value: cur, error: err, order: next_n, converged: err <= tol };
        }
        prev = cur;
        n = next_n;
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] =
    [0.129484966168869693270611432679082, 0.279705391489276667901467771423780, 0.381830050505118944950369775488975, 0.417959183673469387755102040816327];

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let d = h * XGK[i];
        let s = f(c - d) + f(c + d);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Globally adaptive G7K15 quadrature on [a, b] to absolute tolerance `tol`.
/// Returns (value, error estimate).
pub fn gauss_kronrod_adaptive<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, tol: f64, max_intervals: usize) -> (Complex64, f64) {
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= tol || parts.len() >= max_intervals {
            let value = parts.iter().fold(Complex64::new(0.0, 0.0), |s, p| s + p.2);
            return (value, total_err);
        }
        let (idx, _) = parts.iter().enumerate().fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (l, r, _, _) = parts.swap_remove(idx);
        let m = 0.5 * (l + r);
        let (v1, e1) = gk15(&mut f, l, m);
        let (v2, e2) = gk15(&mut f, m, r);
        parts.push((l, m, v1, e1));
        parts.push((m, r, v2, e2));
        // keep deterministic ordering by left endpoint
        parts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 8, 33] {
            let r = gauss_legendre(n);
            let wsum: f64 = r.1.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n}");
            let deg = 2 * n - 1;
            let s: f64 = r.0.iter().zip(&r.1).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((s - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn gk_matches_exponential() {
        let (v, e) = gauss_kronrod_adaptive(|x| Complex64::new(0.0, 3.0 * x).exp(), 0.0, 2.0, 1e-13, 200);
        let exact = (Complex64::new(0.0, 6.0).exp() - 1.0) / Complex64::new(0.0, 3.0);
        assert!((v - exact).norm() < 1e-12 && e < 1e-12);
    }

    #[test]
    fn doubling_converges() {
        let r = gl_doubling(|x| Complex64::new(x.sqrt(), 0.0), 1.0, 4.0, 4, 1024, 1e-14);
        assert!(r.converged);
        assert!((r.value.re - 14.0 / 3.0).abs() < 1e-13);
    }
}
