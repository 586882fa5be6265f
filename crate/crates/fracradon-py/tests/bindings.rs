use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(&Bound<'_, PyAny>)>(f: F) {
    static INIT: std::sync::Once = std::sync::Once::new();
    INIT.call_once(|| {
        pyo3::append_to_inittab!(fracradon_py);
        Python::initialize();
    });
    Python::attach(|py| {
        let m = py.import("fracradon_py").unwrap();
        f(m.as_any());
    });
}

use fracradon_py::fracradon_py;

#[test]
fn forms_and_counts() {
    with_module(|m| {
        let form = m.getattr("QuadraticForm").unwrap().call1((vec![vec![2i64, 0], vec![0, 2]],)).unwrap();
        assert_eq!(form.getattr("det").unwrap().extract::<i64>().unwrap(), 4);
        let (counts, cum): (Vec<u64>, Vec<u64>) = m.getattr("rep_table").unwrap().call1((&form, 100usize)).unwrap().extract().unwrap();
        assert_eq!((counts[5], cum[100]), (8, 316));
        let err = m.getattr("QuadraticForm").unwrap().call1((vec![vec![3i64]],)).unwrap_err();
        Python::attach(|py| assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py)));
    });
}

#[test]
fn region_dict_and_experiment() {
    with_module(|m| {
        let d = m.getattr("theorem_region").unwrap().call1((1usize, 0.5, 1.8, 2.2)).unwrap();
        let d = d.cast::<PyDict>().unwrap();
        assert_eq!(d.get_item("region").unwrap().unwrap().extract::<String>().unwrap(), "outside");
        let (pass, tables): (bool, Vec<(String, String)>) =
            m.getattr("run_experiment").unwrap().call1(("gauss", r#"{"params": {"q_max": 6}}"#)).unwrap().extract().unwrap();
        assert!(pass);
        assert_eq!(tables[0].0, "gauss.csv");
    });
}
