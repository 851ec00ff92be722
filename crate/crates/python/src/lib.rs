//! Python bindings: `import coherence_lab`.
//!
//! States, channels and measures are wrapped as classes; criterion reports
//! and witnesses come back as plain dictionaries.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;

use coherence_core::channels as ch;
use coherence_core::harness::{self, Criterion, TrialConfig};
use coherence_core::mcs;
use coherence_core::measures::{self as ms, DiagonalObservable, Measure, OptimizerConfig};
use coherence_core::numerics::ComplexMatrix;
use coherence_core::states::{self as st, StateFile};
use coherence_core::CoherenceError;

fn py_err(e: CoherenceError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn check_dim(dim: usize) -> PyResult<usize> {
    if dim == 0 {
        return Err(py_err(CoherenceError::BadDim(dim)));
    }
    Ok(dim)
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> Result<ComplexMatrix, CoherenceError> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CoherenceError::Format("ragged matrix rows".into()));
    }
    ComplexMatrix::from_row_major(n, cols, rows.into_iter().flatten().collect())
}

fn matrix_to_rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn to_python<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(
    name = "PureState",
    module = "coherence_lab",
    frozen,
    skip_from_py_object
)]
struct PyPureState {
    inner: st::PureState,
}

#[pymethods]
impl PyPureState {
    /// Amplitudes must already be normalized unless `normalize=True`.
    #[new]
    #[pyo3(signature = (amplitudes, normalize = false))]
    fn new(amplitudes: Vec<Complex64>, normalize: bool) -> PyResult<Self> {
        let inner = if normalize {
            st::PureState::normalized(amplitudes)
        } else {
            st::PureState::new(amplitudes)
        };
        inner.map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn uniform(dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: st::PureState::uniform(check_dim(dim)?),
        })
    }

    #[staticmethod]
    fn basis(dim: usize, index: usize) -> PyResult<Self> {
        if index >= dim {
            return Err(PyValueError::new_err("basis index out of range"));
        }
        Ok(Self {
            inner: st::PureState::basis(dim, index),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, seed = 0))]
    fn random(dim: usize, seed: u64) -> PyResult<Self> {
        st::random_pure(dim, seed)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    fn populations(&self) -> Vec<f64> {
        self.inner.populations()
    }

    fn to_density(&self) -> PyDensityMatrix {
        PyDensityMatrix {
            inner: st::from_pure(&self.inner),
        }
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&StateFile::from_pure(&self.inner)).map_err(json_err)
    }

    fn __repr__(&self) -> String {
        format!("PureState(dim={})", self.inner.dim())
    }
}

#[pyclass(
    name = "DensityMatrix",
    module = "coherence_lab",
    frozen,
    skip_from_py_object
)]
struct PyDensityMatrix {
    inner: st::DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    /// Row-major nested list of complex entries.
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let m = matrix_from_rows(rows).map_err(py_err)?;
        st::DensityMatrix::new(m)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn maximally_mixed(dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: st::DensityMatrix::maximally_mixed(check_dim(dim)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, rank = None, seed = 0))]
    fn random(dim: usize, rank: Option<usize>, seed: u64) -> PyResult<Self> {
        st::random_density(dim, rank.unwrap_or(dim), seed)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Accepts both `"pure"` and `"density"` state files.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: StateFile = serde_json::from_str(text).map_err(json_err)?;
        let state = file.to_state().map_err(py_err)?;
        Ok(Self {
            inner: state.to_density(),
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&StateFile::from_density(&self.inner)).map_err(json_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        matrix_to_rows(self.inner.matrix())
    }

    fn diagonal(&self) -> Vec<f64> {
        self.inner.diagonal()
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn spectrum(&self) -> Vec<f64> {
        self.inner.spectrum()
    }

    fn dephase(&self) -> Self {
        Self {
            inner: st::dephase(&self.inner),
        }
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn is_incoherent(&self, tol: f64) -> bool {
        st::is_incoherent(&self.inner, tol)
    }

    /// `λ·self + (1−λ)·other`.
    fn mix(&self, other: &PyDensityMatrix, weight: f64) -> PyResult<Self> {
        self.inner
            .mix(&other.inner, weight)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn fidelity(&self, target: &PyPureState) -> f64 {
        self.inner.fidelity_with(&target.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "DensityMatrix(dim={}, purity={:.6})",
            self.inner.dim(),
            self.inner.purity()
        )
    }
}

#[pyclass(
    name = "KrausChannel",
    module = "coherence_lab",
    frozen,
    skip_from_py_object
)]
struct PyKrausChannel {
    inner: ch::KrausChannel,
}

#[pymethods]
impl PyKrausChannel {
    /// List of square Kraus operators, each a row-major nested list.
    #[new]
    fn new(kraus: Vec<Vec<Vec<Complex64>>>) -> PyResult<Self> {
        let ops = kraus
            .into_iter()
            .map(matrix_from_rows)
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?;
        ch::KrausChannel::new(ops)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn identity(dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ch::KrausChannel::identity(check_dim(dim)?),
        })
    }

    #[staticmethod]
    fn projective_measurement(dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ch::KrausChannel::projective_measurement(check_dim(dim)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, n_kraus = 2, seed = 0))]
    fn random_incoherent(dim: usize, n_kraus: usize, seed: u64) -> PyResult<Self> {
        ch::random_incoherent_channel(dim, n_kraus, seed)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: ch::ChannelFile = serde_json::from_str(text).map_err(json_err)?;
        file.to_channel()
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&ch::ChannelFile::from_channel(&self.inner)).map_err(json_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn kraus(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.inner.kraus().iter().map(matrix_to_rows).collect()
    }

    fn completeness_defect(&self) -> f64 {
        self.inner.completeness_defect()
    }

    fn apply(&self, rho: &PyDensityMatrix) -> PyResult<PyDensityMatrix> {
        ch::apply(&self.inner, &rho.inner)
            .map(|inner| PyDensityMatrix { inner })
            .map_err(py_err)
    }

    /// `[(p_n, ρ_n)]` for the outcomes with nonzero probability.
    fn apply_selective(&self, rho: &PyDensityMatrix) -> PyResult<Vec<(f64, PyDensityMatrix)>> {
        let outs = ch::apply_selective(&self.inner, &rho.inner).map_err(py_err)?;
        Ok(outs
            .into_iter()
            .map(|o| (o.probability, PyDensityMatrix { inner: o.state }))
            .collect())
    }

    #[pyo3(signature = (tol = 1e-10))]
    fn is_incoherent(&self, tol: f64) -> bool {
        ch::is_incoherent_channel(&self.inner, tol)
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn is_cpo(&self, tol: f64) -> bool {
        ch::is_cpo(&self.inner, tol)
    }

    /// Canonical incoherent form as a dictionary.
    fn canonical_form<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let form = ch::canonical_form(&self.inner).map_err(py_err)?;
        to_python(py, &form)
    }

    fn __repr__(&self) -> String {
        format!(
            "KrausChannel(dim={}, kraus={})",
            self.inner.dim(),
            self.inner.kraus().len()
        )
    }
}

#[pyclass(
    name = "IncoherentUnitary",
    module = "coherence_lab",
    frozen,
    skip_from_py_object
)]
struct PyIncoherentUnitary {
    inner: ch::IncoherentUnitary,
}

#[pymethods]
impl PyIncoherentUnitary {
    /// `|j⟩ → e^{iθ_j} |perm[j]⟩`.
    #[new]
    fn new(perm: Vec<usize>, phases: Vec<f64>) -> PyResult<Self> {
        ch::IncoherentUnitary::new(perm, phases)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn cyclic(dim: usize, shift: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ch::IncoherentUnitary::cyclic(check_dim(dim)?, shift),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, seed = 0))]
    fn random(dim: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: ch::IncoherentUnitary::random(check_dim(dim)?, seed),
        })
    }

    fn perm(&self) -> Vec<usize> {
        self.inner.perm().to_vec()
    }

    fn phases(&self) -> Vec<f64> {
        self.inner.phases().to_vec()
    }

    fn inverse(&self) -> Self {
        Self {
            inner: self.inner.inverse(),
        }
    }

    fn apply(&self, rho: &PyDensityMatrix) -> PyResult<PyDensityMatrix> {
        self.inner
            .apply(&rho.inner)
            .map(|inner| PyDensityMatrix { inner })
            .map_err(py_err)
    }

    fn to_channel(&self) -> PyKrausChannel {
        PyKrausChannel {
            inner: self.inner.to_channel(),
        }
    }
}

fn measure_from(
    name: &str,
    restarts: Option<usize>,
    seed: Option<u64>,
    k: Option<Vec<f64>>,
) -> PyResult<Measure> {
    let mut m: Measure = name.parse().map_err(py_err)?;
    match &mut m {
        Measure::IntRand(opt) => {
            if let Some(r) = restarts {
                opt.restarts = r;
            }
            if let Some(s) = seed {
                opt.seed = s;
            }
        }
        Measure::Skew(obs) => {
            if let Some(values) = k {
                *obs = Some(DiagonalObservable::new(values).map_err(py_err)?);
            }
        }
        _ => {}
    }
    Ok(m)
}

/// Evaluates a measure by name: `l1`, `rel_ent`, `int_rand`, `skew` or `trivial`.
///
/// `restarts`/`seed` tune `int_rand`; `k` sets the skew observable's diagonal.
#[pyfunction]
#[pyo3(signature = (measure, rho, restarts = None, seed = None, k = None))]
fn evaluate(
    measure: &str,
    rho: &PyDensityMatrix,
    restarts: Option<usize>,
    seed: Option<u64>,
    k: Option<Vec<f64>>,
) -> PyResult<f64> {
    measure_from(measure, restarts, seed, k)?
        .evaluate(&rho.inner)
        .map_err(py_err)
}

#[pyfunction]
fn c_l1(rho: &PyDensityMatrix) -> f64 {
    ms::c_l1(&rho.inner)
}

#[pyfunction]
fn c_rel_ent(rho: &PyDensityMatrix) -> f64 {
    ms::c_rel_ent(&rho.inner)
}

#[pyfunction]
fn c_trivial(rho: &PyDensityMatrix) -> f64 {
    ms::c_trivial(&rho.inner)
}

#[pyfunction]
#[pyo3(signature = (rho, restarts = 32, seed = 0))]
fn c_int_rand(rho: &PyDensityMatrix, restarts: usize, seed: u64) -> PyResult<f64> {
    let opt = OptimizerConfig {
        restarts,
        seed,
        ..OptimizerConfig::default()
    };
    ms::c_int_rand(&rho.inner, &opt).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (rho, k = None))]
fn c_skew(rho: &PyDensityMatrix, k: Option<Vec<f64>>) -> PyResult<f64> {
    let obs = match k {
        Some(values) => DiagonalObservable::new(values).map_err(py_err)?,
        None => DiagonalObservable::ladder(rho.inner.dim()),
    };
    ms::c_skew(&rho.inner, &obs).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (rho, tol = 1e-8))]
fn is_mcs(rho: &PyDensityMatrix, tol: f64) -> bool {
    mcs::is_mcs(&rho.inner, tol)
}

#[pyfunction]
#[pyo3(signature = (dim, seed = 0))]
fn mcs_sample(dim: usize, seed: u64) -> PyResult<PyPureState> {
    mcs::mcs_sample(dim, seed)
        .map(|inner| PyPureState { inner })
        .map_err(py_err)
}

/// Incoherent channel taking `|Ψ_d⟩` to `target` (a `PureState` or `DensityMatrix`).
#[pyfunction]
fn transform_mcs_to(target: &Bound<'_, PyAny>) -> PyResult<PyKrausChannel> {
    let inner = if let Ok(psi) = target.cast::<PyPureState>() {
        mcs::transform_mcs_to(&psi.get().inner)
    } else if let Ok(rho) = target.cast::<PyDensityMatrix>() {
        mcs::transform_mcs_to_mixed(&rho.get().inner)
    } else {
        return Err(PyValueError::new_err(
            "target must be a PureState or DensityMatrix",
        ));
    };
    inner.map(|inner| PyKrausChannel { inner }).map_err(py_err)
}

/// Runs one criterion check and returns the report as a dictionary.
#[pyfunction]
#[pyo3(signature = (criterion, measure = None, dim = 3, trials = 1000, seed = 0, tol = None))]
fn verify<'py>(
    py: Python<'py>,
    criterion: &str,
    measure: Option<&str>,
    dim: usize,
    trials: usize,
    seed: u64,
    tol: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let c: Criterion = criterion.parse().map_err(py_err)?;
    let m = match measure {
        Some(name) => measure_from(name, None, None, None)?,
        None if c.takes_measure() => {
            return Err(PyValueError::new_err("this criterion needs a measure"))
        }
        None => Measure::L1,
    };
    let mut cfg = TrialConfig::for_measure(&m, dim, trials, seed);
    if let Some(t) = tol {
        cfg.tol = t;
    }
    let report = py
        .detach(|| harness::run_criterion(c, &m, &cfg))
        .map_err(py_err)?;
    to_python(py, &report)
}

/// Deterministic skew-information counterexample (`dim ≥ 3`) as a dictionary.
#[pyfunction]
fn skew_violation_witness<'py>(py: Python<'py>, dim: usize) -> PyResult<Bound<'py, PyAny>> {
    let w = harness::skew_violation_witness(dim).map_err(py_err)?;
    to_python(py, &w)
}

#[pymodule]
fn coherence_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPureState>()?;
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyKrausChannel>()?;
    m.add_class::<PyIncoherentUnitary>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(c_l1, m)?)?;
    m.add_function(wrap_pyfunction!(c_rel_ent, m)?)?;
    m.add_function(wrap_pyfunction!(c_trivial, m)?)?;
    m.add_function(wrap_pyfunction!(c_int_rand, m)?)?;
    m.add_function(wrap_pyfunction!(c_skew, m)?)?;
    m.add_function(wrap_pyfunction!(is_mcs, m)?)?;
    m.add_function(wrap_pyfunction!(mcs_sample, m)?)?;
    m.add_function(wrap_pyfunction!(transform_mcs_to, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(skew_violation_witness, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_rows_round_trip() {
        let rows = vec![
            vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.5)],
            vec![Complex64::new(0.0, -0.5), Complex64::new(0.5, 0.0)],
        ];
        let m = matrix_from_rows(rows.clone()).unwrap();
        assert_eq!(matrix_to_rows(&m), rows);
        assert!(st::DensityMatrix::new(m).is_ok());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let rows = vec![vec![Complex64::new(1.0, 0.0)], vec![]];
        assert!(matches!(
            matrix_from_rows(rows),
            Err(CoherenceError::Format(_))
        ));
    }

    #[test]
    fn measure_options_are_applied() {
        match measure_from("int_rand", Some(4), Some(9), None).unwrap() {
            Measure::IntRand(opt) => assert_eq!((opt.restarts, opt.seed), (4, 9)),
            other => panic!("unexpected {other}"),
        }
        match measure_from("skew", None, None, Some(vec![0.0, 2.0, 5.0])).unwrap() {
            Measure::Skew(Some(k)) => assert_eq!(k.values(), &[0.0, 2.0, 5.0]),
            other => panic!("unexpected {other}"),
        }
        assert!(measure_from("skew", None, None, Some(vec![1.0, 1.0])).is_err());
        assert!(measure_from("bogus", None, None, None).is_err());
    }
}
