//! Python bindings: lattices, the Hamiltonian, the backflow-Jastrow ansatz,
//! sampling, exact diagonalization, fits and the CLI commands.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use bosonic_vmc::ansatz::{AnsatzShape, BackflowJastrow};
use bosonic_vmc::cli::commands;
use bosonic_vmc::constructions;
use bosonic_vmc::estimators::{self, CriticalExponents, EntropyPoint, LogTerm, ScalingPoint};
use bosonic_vmc::hamiltonian;
use bosonic_vmc::lattice::{self, LatticeKind};
use bosonic_vmc::oracle;
use bosonic_vmc::sampler::{run_sampling, SamplerConfig};
use bosonic_vmc::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::InvalidArgument(_)
        | Error::Config(_)
        | Error::Shape(_)
        | Error::LatticeSize(_)
        | Error::SiteIndex { .. }
        | Error::EmptySource(_)
        | Error::DimensionGuard { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Converts a serializable report into plain Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_kind(kind: &str) -> PyResult<LatticeKind> {
    match kind {
        "square" => Ok(LatticeKind::Square),
        "chain" => Ok(LatticeKind::Chain),
        "open_chain" => Ok(LatticeKind::OpenChain),
        other => Err(PyValueError::new_err(format!(
            "lattice kind must be square, chain or open_chain, got {other}"
        ))),
    }
}

#[pyclass(frozen)]
struct Lattice {
    inner: lattice::Lattice,
}

#[pymethods]
impl Lattice {
    #[new]
    #[pyo3(signature = (kind, size))]
    fn new(kind: &str, size: usize) -> PyResult<Self> {
        Ok(Self {
            inner: lattice::Lattice::new(parse_kind(kind)?, size).map_err(py_err)?,
        })
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites()
    }

    fn neighbors(&self, site: usize) -> PyResult<Vec<usize>> {
        if site >= self.inner.n_sites() {
            return Err(PyValueError::new_err(format!("site {site} out of range")));
        }
        Ok(self.inner.neighbors(site).to_vec())
    }

    fn distance(&self, i: usize, j: usize) -> PyResult<u32> {
        self.inner.min_image_l1_distance(i, j).map_err(py_err)
    }

    fn half_partition(&self) -> Vec<usize> {
        self.inner.half_partition()
    }

    fn __repr__(&self) -> String {
        format!("Lattice({:?}, L={})", self.inner.kind(), self.inner.linear_size())
    }
}

#[pyclass(frozen)]
struct BoseHubbard {
    inner: hamiltonian::BoseHubbard,
}

#[pymethods]
impl BoseHubbard {
    #[new]
    fn new(lattice: &Lattice, hopping: f64, interaction: f64) -> PyResult<Self> {
        Ok(Self {
            inner: hamiltonian::BoseHubbard::new(lattice.inner.clone(), hopping, interaction).map_err(py_err)?,
        })
    }

    fn diagonal_energy(&self, occ: Vec<u32>) -> PyResult<f64> {
        if occ.len() != self.inner.lattice().n_sites() {
            return Err(PyValueError::new_err("configuration length differs from the lattice"));
        }
        Ok(self.inner.diagonal_energy(&occ))
    }

    fn mean_field_energy(&self, mean_density: f64) -> f64 {
        self.inner.mean_field_energy(mean_density)
    }

    /// Exact ground state at `n_particles`: energy, dimension, residual,
    /// condensate fraction, OBDM and half-system Rényi-2 entropy.
    fn exact_ground_state<'py>(&self, py: Python<'py>, n_particles: u32) -> PyResult<Bound<'py, PyAny>> {
        let lattice = self.inner.lattice();
        let (m, ed) = oracle::solve(&self.inner, n_particles).map_err(py_err)?;
        let obs = oracle::exact_observables(&ed, &m, lattice).map_err(py_err)?;
        let s2 = oracle::exact_renyi2(&ed, &lattice.half_partition()).ok();
        #[derive(Serialize)]
        struct Report {
            energy: f64,
            dimension: usize,
            residual: f64,
            energy_variance: f64,
            condensate_fraction: f64,
            obdm: Vec<f64>,
            renyi2_half: Option<f64>,
        }
        to_py(
            py,
            &Report {
                energy: ed.ground_energy,
                dimension: ed.dimension,
                residual: ed.residual,
                energy_variance: obs.energy_variance,
                condensate_fraction: obs.condensate_fraction,
                obdm: obs.obdm,
                renyi2_half: s2,
            },
        )
    }
}

/// Backflow-Jastrow wavefunction; parameters are passed as flat lists.
#[pyclass(frozen)]
struct Ansatz {
    inner: BackflowJastrow,
}

#[pymethods]
impl Ansatz {
    #[new]
    #[pyo3(signature = (lattice, n_particles, depth=0, channels=0, kernel_radius=1, mean_field_prior=false))]
    fn new(
        lattice: &Lattice,
        n_particles: u32,
        depth: usize,
        channels: usize,
        kernel_radius: usize,
        mean_field_prior: bool,
    ) -> PyResult<Self> {
        let shape = AnsatzShape {
            depth,
            channels,
            kernel_radius: if depth == 0 { 0 } else { kernel_radius },
            mean_field_prior,
        };
        Ok(Self {
            inner: BackflowJastrow::new(lattice.inner.clone(), n_particles, shape).map_err(py_err)?,
        })
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    fn init_params(&self, seed: u64) -> PyResult<Vec<f64>> {
        self.inner
            .init_params(&mut ChaCha8Rng::seed_from_u64(seed), None)
            .map_err(py_err)
    }

    fn log_psi(&self, params: Vec<f64>, occ: Vec<u32>) -> PyResult<f64> {
        self.inner.log_psi(&params, &occ).map_err(py_err)
    }

    fn log_grad(&self, params: Vec<f64>, occ: Vec<u32>) -> PyResult<Vec<f64>> {
        self.inner.log_grad(&params, &occ).map_err(py_err)
    }

    fn backflow_features(&self, params: Vec<f64>, occ: Vec<u32>) -> PyResult<Vec<f64>> {
        self.inner.backflow_features(&params, &occ).map_err(py_err)
    }

    fn local_energy(&self, hamiltonian: &BoseHubbard, params: Vec<f64>, occ: Vec<u32>) -> PyResult<f64> {
        let wf = self.inner.bind(&params).map_err(py_err)?;
        hamiltonian.inner.local_energy(&wf, &occ).map_err(py_err)
    }

    /// Born samples from `n_chains` Metropolis chains, chain-major.
    #[pyo3(signature = (params, samples, seed=0, n_chains=4, burn_in_sweeps=100, sweeps_per_sample=1))]
    fn sample(
        &self,
        params: Vec<f64>,
        samples: usize,
        seed: u64,
        n_chains: usize,
        burn_in_sweeps: usize,
        sweeps_per_sample: usize,
    ) -> PyResult<Vec<Vec<u32>>> {
        let cfg = SamplerConfig {
            n_chains,
            burn_in_sweeps,
            sweeps_per_sample,
            samples_total: samples,
            seed,
            warm_start_sweeps: 0,
            born_exponent: 1.0,
        };
        let wf = self.inner.bind(&params).map_err(py_err)?;
        let set = run_sampling(&cfg, &wf, self.inner.lattice(), self.inner.n_particles(), None).map_err(py_err)?;
        Ok(set.configs)
    }
}

#[pyfunction]
fn vscore(energy: f64, variance: f64, mean_field_energy: f64, n_sites: usize) -> PyResult<f64> {
    estimators::vscore(energy, variance, mean_field_energy, n_sites).map_err(py_err)
}

/// Fit of `S_2 = a L + b ln L + c`; `log_term` is "free", "absent" or a number.
#[pyfunction]
#[pyo3(signature = (sizes, s2, errors, log_term="free"))]
fn fit_entropy<'py>(
    py: Python<'py>,
    sizes: Vec<f64>,
    s2: Vec<f64>,
    errors: Vec<f64>,
    log_term: &str,
) -> PyResult<Bound<'py, PyAny>> {
    if sizes.len() != s2.len() || sizes.len() != errors.len() {
        return Err(PyValueError::new_err("sizes, s2 and errors must have equal length"));
    }
    let term = match log_term {
        "free" => LogTerm::Free,
        "absent" => LogTerm::Absent,
        other => LogTerm::Fixed(
            other
                .parse()
                .map_err(|_| PyValueError::new_err(format!("bad log_term {other}")))?,
        ),
    };
    let points: Vec<EntropyPoint> = sizes
        .iter()
        .zip(&s2)
        .zip(&errors)
        .map(|((&l, &s2), &error)| EntropyPoint { l, s2, error })
        .collect();
    to_py(py, &estimators::fit_entropy_scaling(&points, term).map_err(py_err)?)
}

/// Finite-size scaling fit of `rho_0 / N` against `J / U`.
#[pyfunction]
#[pyo3(signature = (sizes, couplings, values, errors, beta_over_nu=None, inv_nu=None))]
fn fit_scaling<'py>(
    py: Python<'py>,
    sizes: Vec<f64>,
    couplings: Vec<f64>,
    values: Vec<f64>,
    errors: Vec<f64>,
    beta_over_nu: Option<f64>,
    inv_nu: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let n = sizes.len();
    if couplings.len() != n || values.len() != n || errors.len() != n {
        return Err(PyValueError::new_err("all columns must have equal length"));
    }
    let base = CriticalExponents::default();
    let exps = CriticalExponents {
        beta_over_nu: beta_over_nu.unwrap_or(base.beta_over_nu),
        inv_nu: inv_nu.unwrap_or(base.inv_nu),
    };
    let points: Vec<ScalingPoint> = (0..n)
        .map(|k| ScalingPoint {
            l: sizes[k],
            coupling: couplings[k],
            value: values[k],
            error: errors[k],
        })
        .collect();
    to_py(py, &estimators::fit_scaling_function(&points, exps).map_err(py_err)?)
}

/// Holon-doublon confinement potential of a configuration.
#[pyfunction]
fn confinement_energy(potential: Vec<f64>, lattice: &Lattice, occ: Vec<u32>) -> PyResult<f64> {
    let spec = constructions::ConfinementSpec { potential };
    if occ.len() != lattice.inner.n_sites() {
        return Err(PyValueError::new_err("configuration length differs from the lattice"));
    }
    let direct = constructions::confinement_direct(&spec, &lattice.inner, &occ).map_err(py_err)?;
    Ok(direct)
}

/// Same value computed by the two-layer CNN.
#[pyfunction]
fn confinement_energy_cnn(potential: Vec<f64>, lattice: &Lattice, occ: Vec<u32>) -> PyResult<f64> {
    let spec = constructions::ConfinementSpec { potential };
    if occ.len() != lattice.inner.n_sites() {
        return Err(PyValueError::new_err("configuration length differs from the lattice"));
    }
    let cnn = constructions::build_confinement_cnn(&spec, &lattice.inner).map_err(py_err)?;
    Ok(cnn.evaluate(&lattice.inner, &occ))
}

/// `bosonic-vmc optimize`; returns the run summary.
#[pyfunction]
#[pyo3(signature = (config, output=None, resume=false))]
fn optimize<'py>(
    py: Python<'py>,
    config: PathBuf,
    output: Option<PathBuf>,
    resume: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let summary = commands::cmd_optimize(&commands::OptimizeOptions { config, output, resume }).map_err(py_err)?;
    to_py(py, &summary)
}

/// `bosonic-vmc ed`; returns the report.
#[pyfunction]
#[pyo3(signature = (config, output=None))]
fn ed<'py>(py: Python<'py>, config: PathBuf, output: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &commands::cmd_ed(&config, output.as_deref()).map_err(py_err)?)
}

/// `bosonic-vmc measure`; returns the report.
#[pyfunction]
#[pyo3(signature = (config, checkpoint, output=None))]
fn measure<'py>(
    py: Python<'py>,
    config: PathBuf,
    checkpoint: PathBuf,
    output: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &commands::cmd_measure(&config, &checkpoint, output.as_deref()).map_err(py_err)?)
}

#[pymodule]
fn bosonic_vmc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Lattice>()?;
    m.add_class::<BoseHubbard>()?;
    m.add_class::<Ansatz>()?;
    m.add_function(wrap_pyfunction!(vscore, m)?)?;
    m.add_function(wrap_pyfunction!(fit_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(fit_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(confinement_energy, m)?)?;
    m.add_function(wrap_pyfunction!(confinement_energy_cnn, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(ed, m)?)?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    Ok(())
}
