//! Python bindings: systems, Painlevé extraction, coherent states, measures
//! and the verification suites.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pivcs::coherent::{self, Label, MeasureFamily, MeasureFn, MAX_LEVELS};
use pivcs::document::{self, SystemDocument};
use pivcs::ladder::LadderCoeffs;
use pivcs::painleve::{self, Assignment, Root, GUARD_BAND, WIDE_GUARD_BAND};
use pivcs::susy::{build_system, DEFAULT_N_MAX};
use pivcs::verify::{self, Suite};
use pivcs::{Error, Family, Grid, SystemSpec};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } | Error::Construction { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A label given as a Python complex or as `"R@theta"` / `"re,im"`.
#[derive(FromPyObject)]
enum LabelArg {
    Complex(Complex64),
    Text(String),
}

impl LabelArg {
    fn label(&self) -> PyResult<Label> {
        match self {
            LabelArg::Complex(z) => Ok(Label::from_complex(*z)),
            LabelArg::Text(s) => s.parse().map_err(py_err),
        }
    }
}

/// A k-SUSY partner of the oscillator with its eigenfunctions on a grid.
#[pyclass(name = "System", frozen)]
struct PySystem {
    inner: pivcs::SusySystem,
}

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (k, eps_top, nu, xmin = -8.0, xmax = 8.0, n = 1601, n_max = DEFAULT_N_MAX))]
    fn new(k: usize, eps_top: f64, nu: f64, xmin: f64, xmax: f64, n: usize, n_max: usize) -> PyResult<Self> {
        let spec = SystemSpec::new(k, eps_top, nu).with_grid(Grid::new(xmin, xmax, n).map_err(py_err)?);
        Ok(Self {
            inner: build_system(&spec, n_max).map_err(py_err)?,
        })
    }

    /// Loads a system document and checks it against a rebuild.
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: document::read_system(&path).map_err(py_err)?,
        })
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        document::write_system(&path, &self.inner).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        let value = serde_json::to_value(SystemDocument::from_system(&self.inner))
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(document::canonical_json(&value))
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.spec.k
    }

    #[getter]
    fn eps_top(&self) -> f64 {
        self.inner.spec.eps_top
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.inner.spec.nu
    }

    #[getter]
    fn eps0(&self) -> f64 {
        self.inner.spec.eps0()
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max
    }

    #[getter]
    fn xs(&self) -> Vec<f64> {
        self.inner.xs.clone()
    }

    #[getter]
    fn potential(&self) -> Vec<f64> {
        self.inner.potential.clone()
    }

    /// New levels then iso levels.
    fn spectrum(&self) -> Vec<f64> {
        self.inner.spectrum()
    }

    /// Eigenfunction values of level `n` in subspace `"iso"` or `"new"`.
    fn state(&self, subspace: &str, n: usize) -> PyResult<Vec<f64>> {
        let states = match subspace {
            "iso" => &self.inner.iso_states,
            "new" => &self.inner.new_states,
            other => return Err(PyValueError::new_err(format!("unknown subspace '{other}' (use iso or new)"))),
        };
        states
            .get(n)
            .map(|s| s.values.clone())
            .ok_or_else(|| PyValueError::new_err(format!("{subspace} level {n} not stored")))
    }

    fn __repr__(&self) -> String {
        let s = &self.inner.spec;
        format!("System(k={}, eps_top={}, nu={}, n_max={})", s.k, s.eps_top, s.nu, self.inner.n_max)
    }
}

/// g(x) with its Painlevé IV parameters and residual.
#[pyclass(name = "PainleveSolution", frozen, get_all)]
struct PyPainleve {
    a: f64,
    b: f64,
    xs: Vec<f64>,
    /// NaN where masked.
    g: Vec<f64>,
    residual: Vec<f64>,
    max_residual: f64,
    mean_residual: f64,
}

#[pymethods]
impl PyPainleve {
    fn passes(&self, tol: f64) -> bool {
        self.max_residual < tol
    }
}

/// Extracts g(x); `first` picks ε₁ among "eps0" (default), "half", "top+1".
#[pyfunction]
#[pyo3(signature = (system, first = "eps0", perturb_a = 0.0, band = None))]
fn painleve_solve(system: &PySystem, first: &str, perturb_a: f64, band: Option<usize>) -> PyResult<PyPainleve> {
    let root: Root = first.parse().map_err(py_err)?;
    let assignment = Assignment::cyclic(&system.inner.spec, root);
    let band = band.unwrap_or(if root == Root::Half { WIDE_GUARD_BAND } else { GUARD_BAND });
    let s = painleve::solve_with_band(&system.inner, assignment, perturb_a, band).map_err(py_err)?;
    Ok(PyPainleve {
        a: s.a,
        b: s.b,
        xs: s.xs(),
        max_residual: s.stats.max,
        mean_residual: s.stats.mean,
        g: s.g,
        residual: s.residual,
    })
}

/// A coherent state of one family, stored by its level coefficients.
#[pyclass(name = "CoherentState", frozen)]
struct PyCoherentState {
    inner: coherent::CoherentState,
}

#[pymethods]
impl PyCoherentState {
    #[new]
    fn new(family: &str, z: LabelArg, system: &PySystem) -> PyResult<Self> {
        let family: Family = family.parse().map_err(py_err)?;
        let params = LadderCoeffs::from_spec(&system.inner.spec);
        Ok(Self {
            inner: coherent::construct(family, z.label()?, &params, MAX_LEVELS).map_err(py_err)?,
        })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family.name()
    }

    #[getter]
    fn z(&self) -> Complex64 {
        self.inner.z.complex()
    }

    #[getter]
    fn coefficients(&self) -> Vec<Complex64> {
        self.inner.coeffs.clone()
    }

    #[getter]
    fn normalization(&self) -> f64 {
        self.inner.normalization
    }

    #[getter]
    fn truncation_tail(&self) -> f64 {
        self.inner.truncation_tail
    }

    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    fn mean_energy(&self) -> PyResult<f64> {
        self.inner.mean_energy().map_err(py_err)
    }

    /// Returns the evolved state and the global phase e^{−iE_b t}.
    fn evolve(&self, t: f64) -> PyResult<(Self, Complex64)> {
        let (cs, phase) = self.inner.evolve(t).map_err(py_err)?;
        Ok((Self { inner: cs }, phase))
    }

    fn annihilation_residual(&self) -> PyResult<f64> {
        self.inner.annihilation_residual().map_err(py_err)
    }

    /// (xs, |ψ|², ψ) on the system grid.
    fn wavefunction(&self, system: &PySystem) -> PyResult<(Vec<f64>, Vec<f64>, Vec<Complex64>)> {
        let wf = coherent::wavefunction(&self.inner, &system.inner).map_err(py_err)?;
        Ok((wf.xs, wf.density, wf.psi))
    }

    fn to_json(&self, system: &PySystem) -> PyResult<String> {
        let provenance = document::Provenance::new(&system.inner.spec, system.inner.n_max);
        let doc = document::coherent_document(&self.inner, &provenance, None, None).map_err(py_err)?;
        Ok(document::canonical_json(&doc))
    }

    fn __repr__(&self) -> String {
        format!("CoherentState({}, z={})", self.inner.family, self.inner.z)
    }
}

/// ⟨z′|z⟩ for one family.
#[pyfunction]
fn kernel(family: &str, zp: LabelArg, z: LabelArg, system: &PySystem) -> PyResult<Complex64> {
    let family: Family = family.parse().map_err(py_err)?;
    let params = LadderCoeffs::from_spec(&system.inner.spec);
    coherent::kernel(family, zp.label()?, z.label()?, &params).map_err(py_err)
}

/// Measure density f(r²) for "mu1", "mu2" or "mu3".
#[pyfunction]
fn measure_density(measure: &str, r: f64, system: &PySystem) -> PyResult<f64> {
    let family: MeasureFamily = measure.parse().map_err(py_err)?;
    MeasureFn::new(family, LadderCoeffs::from_spec(&system.inner.spec))
        .density(r)
        .map_err(py_err)
}

/// Runs the named suites (all when omitted). Returns (passed, checks) with
/// each check as (suite, name, value, tolerance, passed).
#[pyfunction]
#[pyo3(signature = (system, suites = None))]
#[allow(clippy::type_complexity)]
fn run_verify(
    system: &PySystem,
    suites: Option<Vec<String>>,
) -> PyResult<(bool, Vec<(String, String, f64, f64, bool)>)> {
    let suites: Vec<Suite> = match suites {
        Some(names) => names.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(py_err)?,
        None => Suite::ALL.to_vec(),
    };
    let report = verify::run(&system.inner, &suites);
    let checks = report
        .checks
        .into_iter()
        .map(|c| (c.suite.to_string(), c.name, c.value, c.tolerance, c.passed))
        .collect();
    Ok((report.passed, checks))
}

#[pymodule]
#[pyo3(name = "pivcs")]
fn pivcs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyPainleve>()?;
    m.add_class::<PyCoherentState>()?;
    m.add_function(wrap_pyfunction!(painleve_solve, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(measure_density, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    m.add("SCHEMA_VERSION", document::SCHEMA_VERSION)?;
    Ok(())
}
