//! Python module `orlicz_lab_py`: Orlicz functions, sampled functions,
//! norms, ψ construction, indices and the criteria verdict.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use orlicz_lab::criteria;
use orlicz_lab::indices::{self, IndexEstimate};
use orlicz_lab::measure_ops::{ClosedForm, CoeffSeq, Domain, SampledRealFunction};
use orlicz_lab::norms;
use orlicz_lab::orlicz_core::{OrliczSpec, Regime};
use orlicz_lab::{presets, span_builder, LabError};

fn err(e: LabError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn regime(name: &str) -> PyResult<Regime> {
    match name {
        "zero" | "at-zero" => Ok(Regime::AtZero),
        "infinity" | "at-infinity" => Ok(Regime::AtInfinity),
        "global" => Ok(Regime::Global),
        _ => Err(PyValueError::new_err(format!("unknown regime {name:?}; use zero, infinity or global"))),
    }
}

/// `(point, uncertainty)` for each of α and β.
type IndexPair = ((f64, f64), (f64, f64));

fn pair_of((a, b): (IndexEstimate, IndexEstimate)) -> IndexPair {
    ((a.point, a.uncertainty), (b.point, b.uncertainty))
}

/// An Orlicz function.
#[pyclass(name = "OrliczSpec", module = "orlicz_lab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySpec {
    pub inner: OrliczSpec,
}

#[pymethods]
impl PySpec {
    #[staticmethod]
    fn power(p: f64) -> PyResult<PySpec> {
        let inner = OrliczSpec::power(p);
        inner.validate().map_err(err)?;
        Ok(PySpec { inner })
    }

    /// `u^p ln^a(e/u)` near zero, normalized to 1 at 1.
    #[staticmethod]
    fn power_log(p: f64, a: f64) -> PyResult<PySpec> {
        let inner = OrliczSpec::power_log(p, a);
        inner.validate().map_err(err)?;
        Ok(PySpec { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<PySpec> {
        OrliczSpec::from_json(text).map(|inner| PySpec { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __call__(&self, u: f64) -> PyResult<f64> {
        self.inner.try_eval(u).map_err(err)
    }

    fn inverse(&self, v: f64) -> f64 {
        self.inner.inverse(v)
    }

    /// Young conjugate; `None` where the supremum diverges.
    fn conjugate(&self, u: f64) -> Option<f64> {
        self.inner.conjugate(u).finite()
    }

    #[pyo3(signature = (regime_name = "global", decades = 12))]
    fn delta2(&self, regime_name: &str, decades: u32) -> PyResult<f64> {
        Ok(self.inner.delta2_constant(regime(regime_name)?, decades).constant)
    }

    /// `((α, unc), (β, unc))` at zero.
    fn indices_at_zero(&self) -> IndexPair {
        pair_of(indices::index_at_zero(&self.inner))
    }

    /// `((α, unc), (β, unc))` at infinity.
    fn indices_at_infinity(&self) -> IndexPair {
        pair_of(indices::index_at_infinity(&self.inner))
    }

    /// Norm of `(a_k)` in the Orlicz sequence space of this function.
    fn sequence_norm(&self, a: Vec<f64>) -> f64 {
        norms::sequence_norm(&self.inner, &CoeffSeq(a)).value
    }

    /// `1/ψ^{-1}(1/n)`.
    fn fundamental(&self, n: u64) -> f64 {
        norms::fundamental_seq(&self.inner, n)
    }

    fn __repr__(&self) -> String {
        format!("OrliczSpec({})", serde_json::to_string(&self.inner).unwrap_or_default())
    }
}

/// A nonnegative function on (0, 1].
#[pyclass(name = "Function", module = "orlicz_lab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyFunction {
    pub inner: SampledRealFunction,
}

#[pymethods]
impl PyFunction {
    /// `c · t^{-r} · ln^b(e/t)`.
    #[staticmethod]
    fn power_log(c: f64, r: f64, b: f64) -> PyFunction {
        PyFunction { inner: SampledRealFunction::unit(ClosedForm::power_log(c, r, b)) }
    }

    #[staticmethod]
    fn constant(c: f64) -> PyFunction {
        PyFunction { inner: SampledRealFunction::unit(ClosedForm::Constant { c }) }
    }

    /// `levels[i]` on `(edges[i], edges[i+1]]`.
    #[staticmethod]
    fn steps(edges: Vec<f64>, levels: Vec<f64>) -> PyResult<PyFunction> {
        let cf = ClosedForm::steps(edges, levels).map_err(err)?;
        Ok(PyFunction { inner: SampledRealFunction::unit(cf) })
    }

    /// Two-column CSV `t,value`.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<PyFunction> {
        SampledRealFunction::from_csv(text, Domain::UnitInterval).map(|inner| PyFunction { inner }).map_err(err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __call__(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    /// Nonincreasing rearrangement.
    fn rearrangement(&self) -> PyFunction {
        PyFunction { inner: orlicz_lab::measure_ops::rearrangement(&self.inner) }
    }

    /// Measure of `{|f| > tau}`.
    fn distribution(&self, tau: f64) -> f64 {
        orlicz_lab::measure_ops::distribution(&self.inner).n(tau)
    }
}

/// Luxemburg norm of `f` in `L_M` on [0, 1]; `inf` when `f` is not in the space.
#[pyfunction]
fn luxemburg_norm(m: &PySpec, f: &PyFunction) -> f64 {
    norms::luxemburg_norm(&m.inner, &f.inner).value
}

/// ψ generated by `f` in `L_M`.
#[pyfunction]
fn build_psi(py: Python<'_>, m: &PySpec, f: &PyFunction) -> PyResult<PySpec> {
    let (m, f) = (m.inner.clone(), f.inner.clone());
    py.detach(move || span_builder::build_psi(&m, &f)).map(|inner| PySpec { inner }).map_err(err)
}

/// Strong-embedding and equicontinuity verdict, as a JSON string.
#[pyfunction]
fn verdict(py: Python<'_>, m: &PySpec, f: &PyFunction) -> PyResult<String> {
    let (m, f) = (m.inner.clone(), f.inner.clone());
    let v = py.detach(move || criteria::strongly_embedded_verdict(&m, &f)).map_err(err)?;
    serde_json::to_string(&v).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// `(M, f)` of the first worked example.
#[pyfunction]
#[pyo3(signature = (p = presets::EXAMPLE1_P))]
fn example1(p: f64) -> (PySpec, PyFunction) {
    let (m, f) = presets::example1(p);
    (PySpec { inner: m }, PyFunction { inner: f })
}

/// `(M, f)` of the second worked example.
#[pyfunction]
#[pyo3(signature = (p = presets::EXAMPLE2_P, alpha = presets::EXAMPLE2_ALPHA))]
fn example2(p: f64, alpha: f64) -> (PySpec, PyFunction) {
    let (m, f) = presets::example2(p, alpha);
    (PySpec { inner: m }, PyFunction { inner: f })
}

#[pymodule]
fn orlicz_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", orlicz_lab::VERSION)?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyFunction>()?;
    m.add_function(wrap_pyfunction!(luxemburg_norm, m)?)?;
    m.add_function(wrap_pyfunction!(build_psi, m)?)?;
    m.add_function(wrap_pyfunction!(verdict, m)?)?;
    m.add_function(wrap_pyfunction!(example1, m)?)?;
    m.add_function(wrap_pyfunction!(example2, m)?)?;
    Ok(())
}
