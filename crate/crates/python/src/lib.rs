//! Python bindings for the `rcreadout` core crate.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use rcreadout::eval::{accuracy_curve_filter, accuracy_curve_rc, empirical_filter, EvaluationReport};
use rcreadout::filters::{boxcar_kernel, build_matched_kernel_analytic, fit_bins, BinReference};
use rcreadout::io::{read_dataset, write_dataset};
use rcreadout::kerr::{integrate, quadratures, sample_network, KerrNetwork, RcHyperParams, DEFAULT_SUBSTEPS};
use rcreadout::qsim::{
    analytic_cavity_amplitude, generate_dataset, steady_state_amplitude, MeasurementDataset, Model,
    QuantumSystemSpec, Timing, TrajectoryOptions,
};
use rcreadout::seed::{seed_derive, SeedTag};
use rcreadout::trainer::{train, ReadoutHead, Responses, TrainConfig};

create_exception!(pyrcreadout, RcReadoutError, PyException);

fn err(e: rcreadout::Error) -> PyErr {
    RcReadoutError::new_err(format!("{}: {e}", e.code()))
}

fn json_err(e: serde_json::Error) -> PyErr {
    RcReadoutError::new_err(format!("E_CONFIG: {e}"))
}

fn parse_tag(tag: &str) -> PyResult<SeedTag> {
    serde_json::from_value(serde_json::Value::String(tag.to_string())).map_err(json_err)
}

#[pyclass(name = "SystemSpec", module = "pyrcreadout", frozen)]
struct PySpec(QuantumSystemSpec);

#[pymethods]
impl PySpec {
    /// `model` is "dispersive" or "jaynes_cummings".
    #[new]
    #[pyo3(signature = (model = "dispersive", n_fock = None))]
    fn new(model: &str, n_fock: Option<usize>) -> PyResult<Self> {
        let model: Model = serde_json::from_value(serde_json::Value::String(model.into())).map_err(json_err)?;
        let mut spec = QuantumSystemSpec::two_qubit_readout(model);
        if let Some(n) = n_fock {
            spec.n_fock = n;
        }
        spec.validate().map_err(err)?;
        Ok(Self(spec))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: QuantumSystemSpec = serde_json::from_str(text).map_err(json_err)?;
        spec.validate().map_err(err)?;
        Ok(Self(spec))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).unwrap()
    }

    #[getter]
    fn n_fock(&self) -> usize {
        self.0.n_fock
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.0.n_qubit_states()
    }

    /// Steady cavity amplitude for basis state `z` as `(re, im)`.
    fn steady_state_amplitude(&self, z: usize) -> PyResult<(f64, f64)> {
        let a = steady_state_amplitude(&self.0, z).map_err(err)?;
        Ok((a.re, a.im))
    }

    fn cavity_amplitude(&self, z: usize, t: f64) -> PyResult<(f64, f64)> {
        let a = analytic_cavity_amplitude(&self.0, z, t).map_err(err)?;
        Ok((a.re, a.im))
    }

    fn __repr__(&self) -> String {
        format!("SystemSpec({})", self.to_json())
    }
}

#[pyclass(name = "Dataset", module = "pyrcreadout", frozen)]
struct PyDataset(MeasurementDataset);

#[pymethods]
impl PyDataset {
    /// Simulates `m_per_class` records per basis state. `tag` is one of
    /// "train_data", "test_data".
    #[staticmethod]
    #[pyo3(signature = (spec, m_per_class, master_seed = 0, tag = "train_data", dt_int = 1e-3, dt_record = 1e-2, tau_m = 10.0))]
    fn generate(
        py: Python<'_>,
        spec: &PySpec,
        m_per_class: usize,
        master_seed: u64,
        tag: &str,
        dt_int: f64,
        dt_record: f64,
        tau_m: f64,
    ) -> PyResult<Self> {
        let tag = parse_tag(tag)?;
        let timing = Timing::new(dt_int, dt_record, tau_m).map_err(err)?;
        let spec = spec.0.clone();
        py.detach(|| generate_dataset(&spec, m_per_class, master_seed, tag, timing, TrajectoryOptions::default()))
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        read_dataset(&dir).map(Self).map_err(err)
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        std::fs::create_dir_all(&dir)?;
        write_dataset(&dir, &self.0, "").map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.0.n_samples()
    }

    #[getter]
    fn dt_record(&self) -> f64 {
        self.0.dt_record
    }

    #[getter]
    fn spec(&self) -> PySpec {
        PySpec(self.0.spec.clone())
    }

    fn labels(&self) -> Vec<usize> {
        self.0.labels().into_iter().map(usize::from).collect()
    }

    /// Integrated-current samples, one list per trajectory.
    fn records(&self) -> Vec<Vec<f64>> {
        self.0.trajectories.iter().map(|t| t.j_record.clone()).collect()
    }

    fn prefix(&self, q: usize) -> PyResult<Self> {
        self.0.prefix(q).map(Self).map_err(err)
    }
}

#[pyclass(name = "KerrNetwork", module = "pyrcreadout", frozen)]
struct PyNetwork(KerrNetwork);

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    #[pyo3(signature = (seed, k_nodes = 5, gamma = 0.35, alpha = 1.9, lambda_bar = 5e-2, mu = 5.0))]
    fn sample(seed: u64, k_nodes: usize, gamma: f64, alpha: f64, lambda_bar: f64, mu: f64) -> PyResult<Self> {
        let hp = RcHyperParams {
            k_nodes,
            gamma,
            alpha,
            lambda_bar,
            mu,
        };
        sample_network(&hp, seed).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let net: KerrNetwork = serde_json::from_str(text).map_err(json_err)?;
        net.validate().map_err(err)?;
        Ok(Self(net))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).unwrap()
    }

    fn with_uniform_lambda(&self, value: f64) -> Self {
        Self(self.0.with_uniform_lambda(value))
    }

    #[getter]
    fn k_nodes(&self) -> usize {
        self.0.k_nodes()
    }

    #[getter]
    fn lambda_(&self) -> Vec<f64> {
        self.0.lambda.clone()
    }

    fn largest_singular_value(&self) -> f64 {
        self.0.largest_singular_value()
    }

    /// Drives the network with one record and returns the quadrature
    /// vector `√2 (Re β_j, Im β_j)` at every sample.
    #[pyo3(signature = (u, dt_record, substeps = DEFAULT_SUBSTEPS))]
    fn integrate(&self, u: Vec<f64>, dt_record: f64, substeps: usize) -> PyResult<Vec<Vec<f64>>> {
        let traj = integrate(&self.0, &u, dt_record, substeps).map_err(err)?;
        let w = 2 * self.0.k_nodes();
        Ok(quadratures(&traj).chunks(w).map(<[f64]>::to_vec).collect())
    }
}

#[pyclass(name = "ReadoutHead", module = "pyrcreadout", frozen)]
struct PyHead(ReadoutHead);

#[pymethods]
impl PyHead {
    /// Fits the readout to the network's response to `dataset`. `config` is
    /// a JSON object of training options; missing keys take defaults.
    #[staticmethod]
    #[pyo3(signature = (network, dataset, config = None, init_seed = 0))]
    fn train(py: Python<'_>, network: &PyNetwork, dataset: &PyDataset, config: Option<&str>, init_seed: u64) -> PyResult<Self> {
        let cfg: TrainConfig = match config {
            Some(text) => serde_json::from_str(text).map_err(json_err)?,
            None => TrainConfig::default(),
        };
        cfg.validate().map_err(err)?;
        let (net, ds) = (&network.0, &dataset.0);
        py.detach(|| {
            let r = Responses::from_network(net, ds, DEFAULT_SUBSTEPS)?;
            train(&r, &ds.labels(), ds.n_classes(), &cfg, init_seed)
        })
        .map(Self)
        .map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(json_err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).unwrap()
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.0.phi.clone()
    }

    #[getter]
    fn w_out(&self) -> Vec<Vec<f64>> {
        self.0.w_out.chunks(self.0.k_nodes()).map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn final_loss(&self) -> Option<f64> {
        self.0.train_meta.as_ref().map(|m| m.final_loss)
    }

    /// Class of one quadrature vector as returned by `KerrNetwork.integrate`.
    fn classify(&self, x: Vec<f64>) -> PyResult<u8> {
        if x.len() != 2 * self.0.k_nodes() {
            return Err(err(rcreadout::Error::Dimension(format!(
                "expected {} quadratures, got {}",
                2 * self.0.k_nodes(),
                x.len()
            ))));
        }
        Ok(self.0.classify(&x))
    }
}

#[pyclass(name = "EvaluationReport", module = "pyrcreadout", frozen)]
struct PyReport(EvaluationReport);

#[pymethods]
impl PyReport {
    #[getter]
    fn fidelity(&self) -> f64 {
        self.0.fidelity
    }

    #[getter]
    fn t_opt(&self) -> f64 {
        self.0.t_opt
    }

    #[getter]
    fn accuracy_curve(&self) -> Vec<f64> {
        self.0.accuracy_curve.clone()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times()
    }

    #[getter]
    fn confusion(&self) -> Vec<Vec<usize>> {
        self.0.confusion.clone()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).unwrap()
    }

    fn __repr__(&self) -> String {
        format!(
            "EvaluationReport(fidelity={:.4}, t_opt={:.2}, n_test={})",
            self.0.fidelity, self.0.t_opt, self.0.n_test
        )
    }
}

/// Accuracy curve of a trained network on `test`.
#[pyfunction]
fn evaluate(py: Python<'_>, network: &PyNetwork, head: &PyHead, test: &PyDataset) -> PyResult<PyReport> {
    py.detach(|| accuracy_curve_rc(&network.0, &head.0, &test.0)).map(PyReport).map_err(err)
}

/// Linear-filter baseline. `kind` is "matched" (kernel and bins from
/// `train`), "matched_analytic" or "boxcar" (bins from `train`, or from the
/// pointer-state model when `train` is None).
#[pyfunction]
#[pyo3(signature = (kind, test, train = None))]
fn baseline(kind: &str, test: &PyDataset, train: Option<&PyDataset>) -> PyResult<PyReport> {
    let test = &test.0;
    let reference = match train {
        Some(t) => BinReference::Dataset(&t.0),
        None => BinReference::Analytic(&test.spec),
    };
    let (kernel, bins) = match kind {
        "matched" => {
            let t = train.ok_or_else(|| RcReadoutError::new_err("E_CONFIG: matched baseline needs train"))?;
            empirical_filter(&t.0).map_err(err)?
        }
        "matched_analytic" => {
            let k = build_matched_kernel_analytic(&test.spec, test.dt_record, test.n_samples()).map_err(err)?;
            let b = fit_bins(&k, reference).map_err(err)?;
            (k, b)
        }
        "boxcar" => {
            let k = boxcar_kernel(test.n_samples(), test.dt_record);
            let b = fit_bins(&k, reference).map_err(err)?;
            (k, b)
        }
        other => return Err(RcReadoutError::new_err(format!("E_CONFIG: unknown baseline '{other}'"))),
    };
    accuracy_curve_filter(&kernel, &bins, test).map(PyReport).map_err(err)
}

/// Derived seed for `(master, tag, index)`; `tag` is one of "train_data",
/// "test_data", "network", "head_init".
#[pyfunction(name = "seed_derive")]
fn py_seed_derive(master: u64, tag: &str, index: u64) -> PyResult<u64> {
    Ok(seed_derive(master, parse_tag(tag)?, index))
}

#[pymodule]
fn pyrcreadout(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RcReadoutError", m.py().get_type::<RcReadoutError>())?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyHead>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(baseline, m)?)?;
    m.add_function(wrap_pyfunction!(py_seed_derive, m)?)?;
    Ok(())
}
