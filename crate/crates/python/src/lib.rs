//! Python bindings. Everything is in units of `omega_a`; `System.from_json`
//! converts absolute-unit model files on load.

use nmkerr::config::ModelSpec;
use nmkerr::dynamics::{self, Trajectory, TwoModeState};
use nmkerr::noise::{variance_adiabatic, variance_exact, LinearizedPoint, NoiseResult, QuadConfig};
use nmkerr::stability::{classify, default_epsilon};
use nmkerr::steadystate::{self, Drive};
use nmkerr::{FanoMirror, KernelModel, Parity, SystemParams};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parity(sigma: &str) -> PyResult<Parity> {
    match sigma {
        "even" | "+1" => Ok(Parity::Even),
        "odd" | "-1" => Ok(Parity::Odd),
        _ => Err(PyValueError::new_err(format!(
            "sigma must be 'even' or 'odd', got {sigma:?}"
        ))),
    }
}

fn drive(omega_p: f64, flux: f64) -> PyResult<Drive> {
    Drive::new(omega_p, flux).map_err(value_err)
}

/// A Kerr resonator coupled through a memory kernel.
#[pyclass(name = "System", module = "nmkerr_py", frozen)]
struct PySystem {
    inner: SystemParams,
}

#[pymethods]
impl PySystem {
    /// Two-mode (Friedrich-Wintgen) kernel.
    #[staticmethod]
    #[pyo3(signature = (kappa, gamma, omega_d, beta, background = 0.0))]
    fn fw(kappa: f64, gamma: f64, omega_d: f64, beta: f64, background: f64) -> PyResult<Self> {
        let k = KernelModel::friedrich_wintgen(kappa, gamma, omega_d).map_err(value_err)?;
        Self::build(k, beta, background)
    }

    #[staticmethod]
    #[pyo3(signature = (gamma, beta, background = 0.0))]
    fn markov(gamma: f64, beta: f64, background: f64) -> PyResult<Self> {
        Self::build(KernelModel::markovian(gamma).map_err(value_err)?, beta, background)
    }

    /// Lossless Fano mirror with reflectivity `r_d` and round trip `round_trip` (1/omega_a).
    #[staticmethod]
    #[pyo3(signature = (kappa, r_d, sigma, round_trip, beta, background = 0.0))]
    fn fano(kappa: f64, r_d: f64, sigma: &str, round_trip: f64, beta: f64, background: f64) -> PyResult<Self> {
        let m = FanoMirror::lossless(kappa, r_d, parity(sigma)?, round_trip).map_err(value_err)?;
        Self::build(KernelModel::fano(m), beta, background)
    }

    /// Parses a model description in the JSON format used by the command-line tool.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let m = ModelSpec::from_json(text)
            .and_then(|s| s.resolve(None))
            .map_err(value_err)?;
        Ok(Self { inner: m.system })
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    fn __repr__(&self) -> String {
        format!("System(beta={}, kernel={:?})", self.inner.beta, self.inner.kernel)
    }

    /// Loss kernel `K_l(omega)`.
    fn loss(&self, omega: f64) -> Complex64 {
        self.inner.kernel.loss_at(omega)
    }

    /// Coupling kernel `K_c(omega)`.
    fn coupling(&self, omega: f64) -> Complex64 {
        self.inner.kernel.coupling_at(omega)
    }

    /// Steady states for pump frequency `omega_p` and flux `|s|^2`, lowest `n` first.
    /// `alpha` is quoted for a real pump amplitude, as in the simulators.
    fn steady_roots<'py>(&self, py: Python<'py>, omega_p: f64, flux: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let d = drive(omega_p, flux)?;
        steadystate::steady_roots(&self.inner, &d)
            .into_iter()
            .map(|s| {
                let class = classify(&self.inner, omega_p, s.n, default_epsilon(&self.inner)).class;
                let out = PyDict::new(py);
                out.set_item("n", s.n)?;
                let alpha = if s.pump.norm() > 0.0 {
                    s.alpha0 * (flux.sqrt() / s.pump)
                } else {
                    s.alpha0
                };
                out.set_item("alpha", alpha)?;
                out.set_item("omega_ap", s.omega_ap)?;
                out.set_item("stability", class.label())?;
                Ok(out)
            })
            .collect()
    }

    /// Flux that holds the cavity at photon number `n`.
    fn pump_for_n(&self, omega_p: f64, n: f64) -> PyResult<f64> {
        steadystate::pump_for_n(&self.inner, omega_p, n).map_err(value_err)
    }

    /// Linear stability of the steady state with photon number `n`.
    #[pyo3(signature = (omega_p, n, epsilon = None))]
    fn classify<'py>(
        &self,
        py: Python<'py>,
        omega_p: f64,
        n: f64,
        epsilon: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = classify(
            &self.inner,
            omega_p,
            n,
            epsilon.unwrap_or_else(|| default_epsilon(&self.inner)),
        );
        let out = PyDict::new(py);
        out.set_item("class", r.class.label())?;
        out.set_item("eigenvalues", r.eigenvalues.to_vec())?;
        out.set_item("mi_gain", r.mi_gain)?;
        out.set_item("re_lambda_max", r.re_lambda_max)?;
        out.set_item("pulse_freq", r.pulse_freq_prediction)?;
        Ok(out)
    }

    /// Quadrature variances (coherent state = 1) by `"exact"` integration or the
    /// `"adiabatic"` closed form.
    #[pyo3(signature = (omega_p, n, method = "exact"))]
    fn noise<'py>(&self, py: Python<'py>, omega_p: f64, n: f64, method: &str) -> PyResult<Bound<'py, PyDict>> {
        let point = LinearizedPoint::new(&self.inner, omega_p, n).map_err(value_err)?;
        let r: NoiseResult = match method {
            "exact" => variance_exact(&point, &QuadConfig::default()),
            "adiabatic" => variance_adiabatic(&point),
            _ => return Err(PyValueError::new_err(format!("unknown method {method:?}"))),
        }
        .map_err(runtime_err)?;
        let out = PyDict::new(py);
        out.set_item("var_x", r.var_x)?;
        out.set_item("var_y", r.var_y)?;
        out.set_item("fano", r.fano)?;
        out.set_item("adiabatic_regime", r.adiabatic_regime)?;
        Ok(out)
    }

    /// RK4 integration of the two-mode model from `(alpha0, d0)`.
    #[pyo3(signature = (omega_p, flux, t_end, dt, alpha0 = Complex64::new(0.0, 0.0), d0 = Complex64::new(0.0, 0.0)))]
    #[allow(clippy::too_many_arguments)]
    fn simulate_two_mode(
        &self,
        py: Python<'_>,
        omega_p: f64,
        flux: f64,
        t_end: f64,
        dt: f64,
        alpha0: Complex64,
        d0: Complex64,
    ) -> PyResult<PyTrajectory> {
        let d = drive(omega_p, flux)?;
        let init = TwoModeState { alpha: alpha0, d: d0 };
        let sys = &self.inner;
        py.detach(|| dynamics::simulate_two_mode(sys, &d, t_end, dt, init))
            .map(PyTrajectory)
            .map_err(runtime_err)
    }

    /// Split-step integration of the memory-kernel equation (any kernel).
    #[pyo3(signature = (omega_p, flux, t_end, dt, alpha0 = Complex64::new(0.0, 0.0)))]
    fn simulate_split_step(
        &self,
        py: Python<'_>,
        omega_p: f64,
        flux: f64,
        t_end: f64,
        dt: f64,
        alpha0: Complex64,
    ) -> PyResult<PyTrajectory> {
        let d = drive(omega_p, flux)?;
        let sys = &self.inner;
        py.detach(|| dynamics::simulate_split_step(sys, &d, t_end, dt, alpha0))
            .map(PyTrajectory)
            .map_err(runtime_err)
    }
}

impl PySystem {
    fn build(kernel: KernelModel, beta: f64, background: f64) -> PyResult<Self> {
        let kernel = if background != 0.0 {
            kernel.with_background(background).map_err(value_err)?
        } else {
            kernel
        };
        let inner = SystemParams::new(1.0, beta, kernel).map_err(value_err)?;
        Ok(Self { inner })
    }
}

/// Sampled field record returned by the integrators.
#[pyclass(name = "Trajectory", module = "nmkerr_py", frozen)]
struct PyTrajectory(Trajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn n(&self) -> Vec<f64> {
        self.0.n.clone()
    }

    #[getter]
    fn alpha(&self) -> Vec<Complex64> {
        self.0.alpha.clone()
    }

    fn __len__(&self) -> usize {
        self.0.times.len()
    }
}

/// Looks for sustained oscillation in the last `window_fraction` of a trajectory.
#[pyfunction]
#[pyo3(signature = (trajectory, window_fraction = 0.5))]
fn diagnose_pulsing<'py>(
    py: Python<'py>,
    trajectory: &PyTrajectory,
    window_fraction: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = dynamics::diagnose_pulsing(&trajectory.0, window_fraction).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("is_pulsing", p.is_pulsing)?;
    out.set_item("dominant_freq", p.dominant_freq)?;
    out.set_item("swing_fraction", p.swing_fraction)?;
    out.set_item("decay_rate", p.decay_rate)?;
    out.set_item("mean_n", p.mean_n)?;
    Ok(out)
}

#[pymodule]
pub fn nmkerr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(diagnose_pulsing, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
