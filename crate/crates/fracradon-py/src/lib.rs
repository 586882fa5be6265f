//! Python bindings for `fracradon`.

use fracradon::{arcs, cli, exponential_sums, multiplier, operator, representations, sharpness, theta, Error};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidForm(_) | Error::DimensionMismatch { .. } | Error::Precondition(_) | Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Positive definite form Q(x) = ½ xᵀAx with even diagonal.
#[pyclass(name = "QuadraticForm", module = "fracradon_py", from_py_object)]
#[derive(Clone)]
struct PyForm {
    inner: fracradon::QuadraticForm,
}

#[pymethods]
impl PyForm {
    #[new]
    fn new(rows: Vec<Vec<i64>>) -> PyResult<Self> {
        Ok(Self { inner: fracradon::QuadraticForm::new(rows).map_err(err)? })
    }

    #[staticmethod]
    fn sum_of_squares(k: usize) -> Self {
        Self { inner: fracradon::QuadraticForm::sum_of_squares(k) }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn det(&self) -> i64 {
        self.inner.det()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<i64>> {
        self.inner.rows()
    }

    fn __call__(&self, m: Vec<i64>) -> PyResult<i64> {
        self.inner.evaluate(&m).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("QuadraticForm({:?})", self.inner.rows())
    }
}

/// Finitely supported function on Z^k × Z.
#[pyclass(name = "LatticeFunction", module = "fracradon_py", from_py_object)]
#[derive(Clone)]
struct PyLatticeFunction {
    inner: operator::LatticeFunction,
}

#[pymethods]
impl PyLatticeFunction {
    #[new]
    fn new(k: usize) -> Self {
        Self { inner: operator::LatticeFunction::new(k) }
    }

    #[staticmethod]
    fn delta(k: usize) -> Self {
        Self { inner: operator::LatticeFunction::delta(k) }
    }

    fn set(&mut self, n: Vec<i64>, t: i64, value: Complex64) -> PyResult<()> {
        self.inner.set(&n, t, value).map_err(err)
    }

    fn get(&self, n: Vec<i64>, t: i64) -> Complex64 {
        self.inner.get(&n, t)
    }

    fn items(&self) -> Vec<(Vec<i64>, i64, Complex64)> {
        self.inner.iter().map(|(n, t, v)| (n.to_vec(), t, v)).collect()
    }

    fn norm(&self, p: f64) -> PyResult<f64> {
        self.inner.norm(p).map_err(err)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self { inner: operator::LatticeFunction::read_csv(text.as_bytes()).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
fn gauss_sum(form: &PyForm, a: i64, b: Vec<i64>, q: i64) -> PyResult<Complex64> {
    exponential_sums::gauss_sum_of(&form.inner, a, &b, q).map_err(err)
}

#[pyfunction]
fn averaged_gauss_sum(form: &PyForm, q: i64, l1: i64, l2: Vec<i64>) -> PyResult<(Complex64, Complex64)> {
    let v = exponential_sums::averaged_gauss_sum(&form.inner, q, l1, &l2).map_err(err)?;
    Ok((v.direct, v.closed_form))
}

#[pyfunction]
#[pyo3(signature = (form, y, theta, phi, eps=1e-13))]
fn theta_direct(form: &PyForm, y: f64, theta: f64, phi: Vec<f64>, eps: f64) -> PyResult<Complex64> {
    Ok(theta::theta_direct(&form.inner, y, theta, &phi, eps).map_err(err)?.value)
}

#[pyfunction]
#[pyo3(signature = (form, y, theta, phi, a, b, q, eps=1e-13))]
#[allow(clippy::too_many_arguments)]
fn theta_via_inversion(form: &PyForm, y: f64, theta: f64, phi: Vec<f64>, a: i64, b: Vec<i64>, q: i64, eps: f64) -> PyResult<Complex64> {
    Ok(theta::theta_via_inversion(&form.inner, y, theta, &phi, a, &b, q, eps).map_err(err)?.value)
}

/// Arc label at level j as a dict.
#[pyfunction]
fn classify<'py>(py: Python<'py>, theta: f64, phi: Vec<f64>, j: u32) -> PyResult<Bound<'py, PyDict>> {
    let l = arcs::classify(theta, &phi, j).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("major", l.kind == arcs::ArcKind::Major)?;
    d.set_item("s", l.s)?;
    d.set_item("a", l.a)?;
    d.set_item("q", l.q)?;
    d.set_item("b", l.b)?;
    d.set_item("alpha", l.alpha)?;
    d.set_item("beta", l.beta)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (form, lam, j, theta, phi, tol=1e-10))]
fn nu_lambda_j(form: &PyForm, lam: Complex64, j: u32, theta: f64, phi: Vec<f64>, tol: f64) -> PyResult<Complex64> {
    Ok(multiplier::nu_lambda_j(&form.inner, lam, j, theta, &phi, tol).map_err(err)?.value)
}

#[pyfunction]
#[pyo3(signature = (form, lam, theta, phi, tol=1e-10))]
fn nu_lambda(form: &PyForm, lam: Complex64, theta: f64, phi: Vec<f64>, tol: f64) -> PyResult<Complex64> {
    Ok(multiplier::nu_lambda(&form.inner, lam, theta, &phi, tol).map_err(err)?.value)
}

#[pyfunction]
fn fourier_coeff_closed_form(form: &PyForm, lam: Complex64, j: u32, l1: i64, l2: Vec<i64>) -> PyResult<Complex64> {
    multiplier::fourier_coeff_closed_form(&form.inner, lam, j, l1, &l2).map_err(err)
}

/// J f on the box n_lo ≤ n ≤ n_hi, t_lo ≤ t ≤ t_hi.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn apply_direct(
    q1: &PyForm,
    q2: &PyForm,
    lam: Complex64,
    f: &PyLatticeFunction,
    n_lo: Vec<i64>,
    n_hi: Vec<i64>,
    t_lo: i64,
    t_hi: i64,
) -> PyResult<PyLatticeFunction> {
    let w = operator::Window { n_lo, n_hi, t_lo, t_hi };
    Ok(PyLatticeFunction { inner: operator::apply_direct(&q1.inner, &q2.inner, lam, &f.inner, &w).map_err(err)? })
}

fn grid(k: usize, n: usize, m: usize, values: Vec<Complex64>) -> PyResult<operator::PeriodicGrid> {
    let g = operator::PeriodicGrid::zeros(k, n, m).map_err(err)?;
    if values.len() != g.values.len() {
        return Err(PyValueError::new_err(format!("expected {} values, got {}", g.values.len(), values.len())));
    }
    Ok(operator::PeriodicGrid { values, ..g })
}

/// Cyclic J on a flat (Z/N)^k × Z/M grid via the DFT.
#[pyfunction]
fn apply_spectral_periodic(form: &PyForm, lam: Complex64, n: usize, m: usize, values: Vec<Complex64>, radius: usize) -> PyResult<Vec<Complex64>> {
    let g = grid(form.inner.dim(), n, m, values)?;
    Ok(operator::apply_spectral_periodic(&form.inner, lam, &g, radius).map_err(err)?.values)
}

#[pyfunction]
fn cyclic_convolution_direct(form: &PyForm, lam: Complex64, n: usize, m: usize, values: Vec<Complex64>, radius: usize) -> PyResult<Vec<Complex64>> {
    let g = grid(form.inner.dim(), n, m, values)?;
    Ok(operator::cyclic_convolution_direct(&form.inner, lam, &g, radius).map_err(err)?.values)
}

/// (r(0..=N), A(0..=N)).
#[pyfunction]
fn rep_table(form: &PyForm, upto: usize) -> PyResult<(Vec<u64>, Vec<u64>)> {
    let t = representations::rep_table(&form.inner, upto).map_err(err)?;
    Ok((t.counts, t.cumulative))
}

/// (constant, exponent, max_rel_err).
#[pyfunction]
fn asymptotic_fit(form: &PyForm, upto: usize) -> PyResult<(f64, f64, f64)> {
    let t = representations::rep_table(&form.inner, upto).map_err(err)?;
    let f = representations::asymptotic_fit(&t).map_err(err)?;
    Ok((f.constant, f.exponent, f.max_rel_err))
}

#[pyfunction]
fn theorem_region<'py>(py: Python<'py>, k: usize, lam: f64, p: f64, q: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = sharpness::theorem_region(k, lam, p, q);
    let d = PyDict::new(py);
    d.set_item("region", r.region.as_str())?;
    d.set_item("condition_i", r.condition_i)?;
    d.set_item("condition_ii", r.condition_ii)?;
    d.set_item("condition_i_edge", r.condition_i_edge)?;
    d.set_item("binding", r.binding.as_str())?;
    d.set_item("crossover", r.crossover)?;
    Ok(d)
}

/// (fitted_exponent, target, pass) for the delta witness.
#[pyfunction]
fn condition_ii_probe(form: &PyForm, lam: f64, q: f64, t_lo_exp: u32, t_hi_exp: u32) -> PyResult<(f64, f64, bool)> {
    let cfg = sharpness::SharpnessConfig::new(form.inner.clone(), lam, 2.0, q, sharpness::dyadic_list(t_lo_exp, t_hi_exp));
    let r = sharpness::condition_ii_probe(&cfg).map_err(err)?;
    Ok((r.fitted_exponent, r.target, r.pass))
}

/// Run a CLI experiment in-process: (pass, {csv name: text}).
#[pyfunction]
#[pyo3(signature = (experiment, config_json="{}", tolerance_scale=1.0))]
fn run_experiment(experiment: &str, config_json: &str, tolerance_scale: f64) -> PyResult<(bool, Vec<(String, String)>)> {
    let kind: cli::ExperimentKind = experiment_kind(experiment)?;
    let cfg = cli::ExperimentConfig::from_json(config_json).map_err(err)?;
    let o = cli::run_experiment(kind, &cfg, tolerance_scale).map_err(err)?;
    Ok((o.pass, o.tables.iter().map(|t| (t.name.clone(), t.to_csv())).collect()))
}

fn experiment_kind(name: &str) -> PyResult<cli::ExperimentKind> {
    let all = [
        cli::ExperimentKind::Gauss,
        cli::ExperimentKind::ThetaCheck,
        cli::ExperimentKind::Arcs,
        cli::ExperimentKind::Multiplier,
        cli::ExperimentKind::Operator,
        cli::ExperimentKind::Representations,
        cli::ExperimentKind::Sharpness,
    ];
    all.into_iter().find(|k| k.name() == name).ok_or_else(|| PyValueError::new_err(format!("unknown experiment '{name}'")))
}

#[pymodule]
pub fn fracradon_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyForm>()?;
    m.add_class::<PyLatticeFunction>()?;
    m.add_function(wrap_pyfunction!(gauss_sum, m)?)?;
    m.add_function(wrap_pyfunction!(averaged_gauss_sum, m)?)?;
    m.add_function(wrap_pyfunction!(theta_direct, m)?)?;
    m.add_function(wrap_pyfunction!(theta_via_inversion, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(nu_lambda_j, m)?)?;
    m.add_function(wrap_pyfunction!(nu_lambda, m)?)?;
    m.add_function(wrap_pyfunction!(fourier_coeff_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(apply_direct, m)?)?;
    m.add_function(wrap_pyfunction!(apply_spectral_periodic, m)?)?;
    m.add_function(wrap_pyfunction!(cyclic_convolution_direct, m)?)?;
    m.add_function(wrap_pyfunction!(rep_table, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_fit, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_region, m)?)?;
    m.add_function(wrap_pyfunction!(condition_ii_probe, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for name in ["gauss", "theta-check", "arcs", "multiplier", "operator", "representations", "sharpness"] {
            assert_eq!(experiment_kind(name).unwrap().name(), name);
        }
    }
}
