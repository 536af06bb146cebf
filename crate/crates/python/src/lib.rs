//! Python bindings: algebras, modules, the chiral complex, Ext¹ and the
//! job runner. Reports come back as plain dicts and lists, scalars as
//! "p/q" strings.

use std::sync::Arc;

use chiralis::complex::{d_squared_check, homology, ComplexData, WeightIndex};
use chiralis::ext::{pairing_matrix, solve_ext1, ExtContext, ExtOptions};
use chiralis::jobs::{self, Command, JobConfig};
use chiralis::linalg::SparseVec;
use chiralis::vertex::axioms::{axiom_check_algebra, axiom_check_module, AxiomKind};
use chiralis::vertex::{self, ModuleData, VertexAlgebraData};
use chiralis::Scalar;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

fn err(e: chiralis::Error) -> PyErr {
    match e {
        chiralis::Error::Parse(_) | chiralis::Error::InvalidArgument(_) | chiralis::Error::Config(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(xs) => {
            let items = xs.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(map) => {
            let d = PyDict::new(py);
            for (k, x) in map {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn scalar(text: &str) -> PyResult<Scalar> {
    text.parse().map_err(err)
}

fn vector_dict(space: &chiralis::linalg::GradedSpace, v: &SparseVec) -> Vec<(String, String)> {
    v.iter().map(|(i, x)| (space.label(i).to_string(), x.to_string())).collect()
}

/// A truncated vertex algebra.
#[pyclass(name = "VertexAlgebra", frozen)]
struct PyAlgebra {
    inner: Arc<VertexAlgebraData>,
}

#[pymethods]
impl PyAlgebra {
    #[staticmethod]
    fn heisenberg(cap: i64) -> PyResult<Self> {
        Ok(PyAlgebra { inner: vertex::heisenberg_va(cap).map_err(err)? })
    }

    #[staticmethod]
    fn trivial() -> Self {
        PyAlgebra { inner: vertex::trivial_va().0 }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn cap(&self) -> i64 {
        self.inner.cap
    }

    fn labels(&self) -> Vec<String> {
        self.inner.space.labels().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.dim()
    }

    /// `a_(m) b` as a list of (label, coefficient) pairs.
    fn mode(&self, a: &str, m: i64, b: &str) -> PyResult<Vec<(String, String)>> {
        let a = self.inner.basis_index(a).map_err(err)?;
        let b = self.inner.basis_index(b).map_err(err)?;
        let r = self.inner.mode_apply(&SparseVec::unit(a), m, &SparseVec::unit(b));
        Ok(vector_dict(&self.inner.space, &r))
    }

    /// One axiom report (borcherds, vacuum, translation, virasoro, admissible).
    #[pyo3(signature = (kind, bound = 3))]
    fn check<'py>(&self, py: Python<'py>, kind: &str, bound: i64) -> PyResult<Bound<'py, PyAny>> {
        let kind: AxiomKind = kind.parse().map_err(err)?;
        let report = py.detach(|| axiom_check_algebra(&self.inner, kind, bound)).map_err(err)?;
        json_to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("VertexAlgebra({}, cap={})", self.inner.name, self.inner.cap)
    }
}

/// A truncated module over a vertex algebra.
#[pyclass(name = "Module", frozen)]
struct PyModuleData {
    inner: Arc<ModuleData>,
}

#[pymethods]
impl PyModuleData {
    /// Fock module with highest weight `lam` ("p/q"), truncated at level `cap`.
    #[staticmethod]
    fn fock(algebra: &PyAlgebra, lam: &str, cap: i64) -> PyResult<Self> {
        let m = vertex::fock_module(&algebra.inner, &scalar(lam)?, cap).map_err(err)?;
        Ok(PyModuleData { inner: Arc::new(m) })
    }

    #[staticmethod]
    fn trivial(algebra: &PyAlgebra) -> Self {
        PyModuleData { inner: Arc::new(vertex::trivial_module(&algebra.inner)) }
    }

    #[getter]
    fn cap(&self) -> i64 {
        self.inner.cap
    }

    fn labels(&self) -> Vec<String> {
        self.inner.space.labels().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.dim()
    }

    fn mode(&self, a: &str, m: i64, v: &str) -> PyResult<Vec<(String, String)>> {
        let a = self.inner.algebra.basis_index(a).map_err(err)?;
        let v = self
            .inner
            .space
            .index_of(v)
            .ok_or_else(|| PyValueError::new_err(format!("no basis vector {v:?}")))?;
        let r = self.inner.mode_apply(&SparseVec::unit(a), m, &SparseVec::unit(v));
        Ok(vector_dict(&self.inner.space, &r))
    }

    #[pyo3(signature = (kind, bound = 3))]
    fn check<'py>(&self, py: Python<'py>, kind: &str, bound: i64) -> PyResult<Bound<'py, PyAny>> {
        let kind: AxiomKind = kind.parse().map_err(err)?;
        let report = py.detach(|| axiom_check_module(&self.inner, kind, bound)).map_err(err)?;
        json_to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("Module({}, {:?}, cap={})", self.inner.name, self.inner.params, self.inner.cap)
    }
}

/// The chiral complex of a pair of modules `(A, C)`.
#[pyclass(name = "Complex", frozen)]
struct PyComplex {
    inner: Arc<ComplexData>,
}

#[pymethods]
impl PyComplex {
    #[new]
    fn new(a: &PyModuleData, c: &PyModuleData) -> PyResult<Self> {
        let cx = ComplexData::new((*a.inner).clone(), (*c.inner).clone()).map_err(err)?;
        Ok(PyComplex { inner: Arc::new(cx) })
    }

    /// `H_0`, `H_1` and leakage of one weight slice.
    #[pyo3(signature = (window, pole_cap, weight = 0))]
    fn homology<'py>(
        &self,
        py: Python<'py>,
        window: (i64, i64),
        pole_cap: u32,
        weight: i64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let caps = self.inner.caps(window, pole_cap);
        let h = py.detach(|| homology(&self.inner, &WeightIndex { weight, caps })).map_err(err)?;
        json_to_py(py, &h)
    }

    /// Differential of a chain given in text form.
    fn differential(&self, chain: &str, arity: usize) -> PyResult<String> {
        let x = self.inner.parse_chain(chain, arity).map_err(err)?;
        let d = self.inner.differential(&x).map_err(err)?;
        Ok(self.inner.format_chain(&d.chain))
    }

    #[pyo3(signature = (n, window, pole_cap, weight = 0, limit = None))]
    fn d_squared<'py>(
        &self,
        py: Python<'py>,
        n: usize,
        window: (i64, i64),
        pole_cap: u32,
        weight: i64,
        limit: Option<usize>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let caps = self.inner.caps(window, pole_cap);
        let r = py.detach(|| d_squared_check(&self.inner, n, &WeightIndex { weight, caps }, limit)).map_err(err)?;
        json_to_py(py, &r)
    }

    /// Weight-0 graded Ext¹(C, A) with its pairing against `H_1`.
    #[pyo3(signature = (window, pole_cap, bound = 3))]
    fn ext1<'py>(&self, py: Python<'py>, window: (i64, i64), pole_cap: u32, bound: i64) -> PyResult<Bound<'py, PyAny>> {
        let cx = &self.inner;
        let caps = cx.caps(window, pole_cap);
        let out = py
            .detach(|| -> chiralis::Result<Value> {
                let hom = homology(cx, &WeightIndex { weight: 0, caps })?;
                let ctx = ExtContext::from_complex(cx)?;
                let opts = ExtOptions { bound, certify_bound: bound, max_constraints: None };
                let e = solve_ext1(&ctx, &caps, &opts)?;
                let p = pairing_matrix(&ctx, &e, &hom)?;
                let classes: Vec<_> = e.classes.iter().map(|c| c.representative.entries(&ctx)).collect();
                Ok(serde_json::json!({
                    "caps": caps,
                    "dimExt1": e.dim,
                    "classes": classes,
                    "pairing": p,
                }))
            })
            .map_err(err)?;
        to_py(py, &out)
    }
}

/// Runs a job (axioms, homology, ext, pairing, stabilize) from a TOML
/// config string and returns the report.
#[pyfunction]
#[pyo3(signature = (command, config = ""))]
fn run<'py>(py: Python<'py>, command: &str, config: &str) -> PyResult<Bound<'py, PyAny>> {
    let command: Command = command.parse().map_err(err)?;
    let cfg: JobConfig = if config.trim().is_empty() {
        JobConfig::default()
    } else {
        toml::from_str(config).map_err(|e| PyValueError::new_err(e.to_string()))?
    };
    let report = py.detach(|| jobs::run(command, &cfg)).map_err(err)?;
    json_to_py(py, &report)
}

#[pymodule]
fn chiralis_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAlgebra>()?;
    m.add_class::<PyModuleData>()?;
    m.add_class::<PyComplex>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
