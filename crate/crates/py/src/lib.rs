//! Python bindings: `import spin_holstein`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use holstein_core::perturbation::{self, EnergyOrder, FinalSector, InitialSpin};
use holstein_core::spin::table1_eigensystem;
use holstein_core::sweep::{self, parse_axis, SweepObservable, SweepSpec};
use holstein_core::tables::verify_all;
use holstein_core::vibronic::VibronicModel;
use holstein_core::{validate_params, ModelParams, PhononCutoff};

fn err(e: holstein_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn initial_spin(s: &str) -> PyResult<InitialSpin> {
    match s {
        "triplet" => Ok(InitialSpin::Triplet),
        "singlet" => Ok(InitialSpin::Singlet),
        _ => Err(PyValueError::new_err(format!("initial must be 'triplet' or 'singlet', got {s:?}"))),
    }
}

fn energy_order(s: &str) -> PyResult<EnergyOrder> {
    match s {
        "second" => Ok(EnergyOrder::Second),
        "zeroth" => Ok(EnergyOrder::Zeroth),
        _ => Err(PyValueError::new_err(format!("energy_order must be 'second' or 'zeroth', got {s:?}"))),
    }
}

/// Model parameters in SI units and eV. Defaults are the published set.
/// `phonon_cutoff=None` selects the automatic cutoff.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
struct PyParams {
    #[pyo3(get, set)]
    epsilon1: f64,
    #[pyo3(get, set)]
    epsilon2: f64,
    #[pyo3(get, set)]
    tunneling_j: f64,
    #[pyo3(get, set)]
    omega: f64,
    #[pyo3(get, set)]
    phi: f64,
    #[pyo3(get, set)]
    b0: f64,
    #[pyo3(get, set)]
    theta: f64,
    #[pyo3(get, set)]
    g1: f64,
    #[pyo3(get, set)]
    g2: f64,
    #[pyo3(get, set)]
    temperature: f64,
    #[pyo3(get, set)]
    phonon_cutoff: Option<usize>,
    #[pyo3(get, set)]
    broadening_eta: f64,
    #[pyo3(get, set)]
    max_cutoff: usize,
}

impl From<&ModelParams> for PyParams {
    fn from(p: &ModelParams) -> Self {
        Self {
            epsilon1: p.epsilon1,
            epsilon2: p.epsilon2,
            tunneling_j: p.tunneling_j,
            omega: p.omega,
            phi: p.phi,
            b0: p.b0,
            theta: p.theta,
            g1: p.g1,
            g2: p.g2,
            temperature: p.temperature,
            phonon_cutoff: match p.phonon_cutoff {
                PhononCutoff::Auto => None,
                PhononCutoff::Fixed(n) => Some(n),
            },
            broadening_eta: p.broadening_eta,
            max_cutoff: p.max_cutoff,
        }
    }
}

impl PyParams {
    fn to_core(&self) -> ModelParams {
        ModelParams {
            epsilon1: self.epsilon1,
            epsilon2: self.epsilon2,
            tunneling_j: self.tunneling_j,
            omega: self.omega,
            phi: self.phi,
            b0: self.b0,
            theta: self.theta,
            g1: self.g1,
            g2: self.g2,
            temperature: self.temperature,
            phonon_cutoff: self.phonon_cutoff.map_or(PhononCutoff::Auto, PhononCutoff::Fixed),
            broadening_eta: self.broadening_eta,
            max_cutoff: self.max_cutoff,
            cutoff_capped: false,
        }
    }

    fn model(&self) -> PyResult<VibronicModel> {
        VibronicModel::new(&self.to_core()).map_err(err)
    }
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut p = PyParams::from(&ModelParams::paper());
        if let Some(kw) = kwargs {
            let obj = Bound::new(kw.py(), p)?;
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                if !obj.hasattr(key.as_str())? {
                    return Err(PyValueError::new_err(format!("unknown parameter {key:?}")));
                }
                obj.setattr(key.as_str(), v)?;
            }
            p = obj.borrow().clone();
        }
        Ok(p)
    }

    /// Parses a JSON config (same keys as the CLI `--config` file).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ModelParams::from_json_str(text).map(|p| PyParams::from(&p)).map_err(err)
    }

    fn to_json(&self) -> String {
        self.to_core().to_json_value().to_string()
    }

    /// Resolved phonon cutoff and whether the automatic choice hit `max_cutoff`.
    fn resolved_cutoff(&self) -> PyResult<(usize, bool)> {
        let p = validate_params(self.to_core()).map_err(err)?;
        Ok((p.cutoff(), p.cutoff_capped))
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(B0={:e} T, theta={}, J={:e} eV, omega={:e} rad/s, phi={}, T={} K, cutoff={})",
            self.b0,
            self.theta,
            self.tunneling_j,
            self.omega,
            self.phi,
            self.temperature,
            self.phonon_cutoff.map_or("auto".to_string(), |n| n.to_string())
        )
    }
}

/// Thermally averaged reaction probability after time `t` (seconds).
/// Returns `(value, unreliable)`.
#[pyfunction]
#[pyo3(signature = (params, t, initial="triplet", final_sector="acceptor"))]
fn reaction_probability(
    py: Python<'_>,
    params: &PyParams,
    t: f64,
    initial: &str,
    final_sector: &str,
) -> PyResult<(f64, bool)> {
    let initial = initial_spin(initial)?;
    let sector: FinalSector = final_sector.parse().map_err(err)?;
    let model = params.model()?;
    let prob = py.detach(|| perturbation::reaction_probability(&model, initial, t, sector)).map_err(err)?;
    Ok((prob.value, prob.unreliable))
}

/// Golden-rule reaction rate in 1/s.
#[pyfunction]
#[pyo3(signature = (params, initial="triplet"))]
fn reaction_rate(py: Python<'_>, params: &PyParams, initial: &str) -> PyResult<f64> {
    let initial = initial_spin(initial)?;
    let model = params.model()?;
    py.detach(|| perturbation::reaction_rate(&model, initial)).map(|r| r.rate).map_err(err)
}

/// Triplet-to-singlet conversion probability at each time in `times`.
#[pyfunction]
#[pyo3(signature = (params, times, energy_order="second"))]
fn triplet_to_singlet(py: Python<'_>, params: &PyParams, times: Vec<f64>, energy_order: &str) -> PyResult<Vec<f64>> {
    let order = self::energy_order(energy_order)?;
    let model = params.model()?;
    py.detach(|| perturbation::triplet_to_singlet_series(&model, &times, order)).map_err(err)
}

/// The 24 spin eigenpairs as `(energies_ev, vectors)` with `vectors[q]`
/// the q-th eigenvector in the product basis.
#[pyfunction]
fn spin_eigensystem(params: &PyParams) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = validate_params(params.to_core()).map_err(err)?;
    let sys = table1_eigensystem(&p);
    let vectors = (0..sys.energies.len()).map(|q| sys.state(q).iter().copied().collect()).collect();
    Ok((sys.energies.to_vec(), vectors))
}

/// Runs a grid sweep and returns the CSV text the CLI would write.
/// `sweeps` holds `AXIS=START:STOP:COUNT` strings.
#[pyfunction]
#[pyo3(signature = (params, observable="pt", sweeps=Vec::new(), final_sector="acceptor", energy_order="second", time_in_inverse_omega=false, workers=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    params: &PyParams,
    observable: &str,
    sweeps: Vec<String>,
    final_sector: &str,
    energy_order: &str,
    time_in_inverse_omega: bool,
    workers: Option<usize>,
) -> PyResult<String> {
    let observable: SweepObservable = observable.parse().map_err(err)?;
    let mut spec = SweepSpec::new(observable);
    for text in &sweeps {
        let (name, axis) = parse_axis(text).map_err(err)?;
        spec.set_axis(name, axis);
    }
    spec.final_sector = final_sector.parse().map_err(err)?;
    spec.energy_order = self::energy_order(energy_order)?;
    spec.time_in_inverse_omega = time_in_inverse_omega;
    spec.validate().map_err(err)?;
    let p = params.to_core();
    let result = py
        .detach(|| match workers {
            Some(w) => sweep::run_sweep_with_workers(&spec, &p, w),
            None => sweep::run_sweep(&spec, &p),
        })
        .map_err(err)?;
    Ok(result.to_csv())
}

/// Table reconciliation report as CSV text.
#[pyfunction]
fn verify_tables(py: Python<'_>, params: &PyParams) -> PyResult<String> {
    let p = validate_params(params.to_core()).map_err(err)?;
    py.detach(|| verify_all(&p)).map(|r| r.to_csv()).map_err(err)
}

#[pymodule]
fn spin_holstein(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(reaction_probability, m)?)?;
    m.add_function(wrap_pyfunction!(reaction_rate, m)?)?;
    m.add_function(wrap_pyfunction!(triplet_to_singlet, m)?)?;
    m.add_function(wrap_pyfunction!(spin_eigensystem, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify_tables, m)?)?;
    Ok(())
}
