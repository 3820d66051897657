//! The `optimize`, `measure`, `ed` and `fit` subcommands.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{load_config, sha256_hex, LoadedConfig, Mode};
use crate::ansatz::{read_checkpoint, write_checkpoint, Activations, BackflowJastrow};
use crate::error::{Error, Result};
use crate::estimators::{
    collapse_quality, data_collapse_transform, fit_entropy_scaling, fit_scaling_function, renyi2_swap, vscore,
    CollapsedPoint, CriticalExponents, EntropyPoint, LogTerm, Renyi2Estimate, ScalingPoint,
};
use crate::hamiltonian::one_body_density_matrix;
use crate::lattice::LatticeKind;
use crate::optimizer::{train, TraceRow, TrainObserver};
use crate::oracle::{build_hamiltonian_matrix, exact_observables, exact_renyi2, ground_state};
use crate::sampler::{run_sampling, ChainSnapshot, Sampler, SamplerConfig};
use crate::stats::{estimate_chains, ObservableEstimate};
use crate::wavefunction::Wavefunction;

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// RNG stream for the initial parameters, disjoint from the chain streams.
const PARAM_INIT_STREAM: u64 = u64::MAX;

fn io<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    io(path, fs::write(path, text + "\n"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub program: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub param_init_stream: u64,
    pub threads: usize,
    /// Steps at which the run was resumed.
    #[serde(default)]
    pub resumed_at: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainCheckpoint {
    /// Last completed step.
    pub step: usize,
    pub chains: Vec<ChainSnapshot>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub n_sites: usize,
    pub n_particles: u32,
    pub energy: f64,
    pub energy_error: f64,
    /// `E / (J L^d)`; `E / L^d` when `J = 0`.
    pub energy_per_site: f64,
    pub variance: f64,
    pub vscore: f64,
    pub acceptance: f64,
}

#[derive(Clone, Debug)]
pub struct OptimizeOptions {
    pub config: PathBuf,
    /// Overrides `output.directory`.
    pub output: Option<PathBuf>,
    pub resume: bool,
}

fn step_stem(step: usize) -> String {
    format!("step_{step:08}")
}

/// Latest step with both a parameter checkpoint and chain snapshots.
pub fn latest_checkpoint(run_dir: &Path) -> Result<Option<usize>> {
    let dir = run_dir.join(CHECKPOINT_DIR);
    if !dir.exists() {
        return Ok(None);
    }
    let mut best = None;
    for entry in io(&dir, fs::read_dir(&dir))? {
        let name = io(&dir, entry)?.file_name();
        let name = name.to_string_lossy();
        let Some(step) = name
            .strip_prefix("step_")
            .and_then(|s| s.strip_suffix(".ckpt"))
            .and_then(|s| s.parse::<usize>().ok())
        else {
            continue;
        };
        if dir.join(format!("{}.chains.json", step_stem(step))).exists() && best.is_none_or(|b| step > b) {
            best = Some(step);
        }
    }
    Ok(best)
}

fn energy_scale(loaded: &LoadedConfig, n_sites: usize) -> f64 {
    let j = loaded.config.model.hopping;
    n_sites as f64 * if j > 0.0 { j } else { 1.0 }
}

struct RunObserver<'a> {
    model: &'a BackflowJastrow,
    dir: PathBuf,
    trace: File,
    interval: usize,
    last_step: usize,
}

impl RunObserver<'_> {
    fn save(&self, step: usize, params: &[f64], sampler: &Sampler<Activations>) -> Result<()> {
        let ckpt = self.dir.join(CHECKPOINT_DIR);
        let stem = step_stem(step);
        // Chains last, so a half-written pair is never picked up on resume.
        write_checkpoint(ckpt.join(format!("{stem}.ckpt")), self.model, params)?;
        write_json(
            &ckpt.join(format!("{stem}.chains.json")),
            &ChainCheckpoint {
                step,
                chains: sampler.snapshots(),
            },
        )
    }
}

impl TrainObserver for RunObserver<'_> {
    fn on_step(&mut self, row: &TraceRow, params: &[f64], sampler: &Sampler<Activations>) -> Result<()> {
        let path = self.dir.join(TRACE_FILE);
        io(&path, writeln!(self.trace, "{}", row.to_csv()))?;
        io(&path, self.trace.flush())?;
        if (row.step + 1) % self.interval == 0 || row.step == self.last_step {
            self.save(row.step, params, sampler)?;
        }
        Ok(())
    }
}

/// Keeps the header and the rows up to and including `last_step`.
fn truncate_trace(path: &Path, last_step: usize) -> Result<Vec<TraceRow>> {
    let f = io(path, File::open(path))?;
    let mut kept = vec![TraceRow::CSV_HEADER.to_string()];
    let mut rows = Vec::new();
    for line in BufReader::new(f).lines().skip(1) {
        let line = io(path, line)?;
        let row = parse_trace_row(&line)
            .ok_or_else(|| Error::Checkpoint(format!("malformed trace row in {}: {line}", path.display())))?;
        if row.step <= last_step {
            kept.push(line);
            rows.push(row);
        }
    }
    io(path, fs::write(path, kept.join("\n") + "\n"))?;
    Ok(rows)
}

pub fn parse_trace_row(line: &str) -> Option<TraceRow> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 9 {
        return None;
    }
    let num = |k: usize| f[k].parse::<f64>().ok();
    Some(TraceRow {
        step: f[0].parse().ok()?,
        stage: f[1].parse().ok()?,
        energy: num(2)?,
        energy_error: num(3)?,
        variance: num(4)?,
        vscore: num(5)?,
        acceptance: num(6)?,
        solver_residual: num(7)?,
        wall_time: num(8)?,
    })
}

/// Two-stage SR training into a run directory.
pub fn cmd_optimize(opts: &OptimizeOptions) -> Result<RunSummary> {
    let loaded = load_config(&opts.config)?;
    let cfg = &loaded.config;
    cfg.check_mode(Mode::Optimize)?;
    let dir = opts.output.clone().unwrap_or_else(|| cfg.output.directory.clone());
    let lattice = cfg.model.lattice()?;
    let n = cfg.model.particles()?;
    let h = cfg.model.hamiltonian()?;
    let model = BackflowJastrow::new(lattice.clone(), n, cfg.ansatz)?;
    let total = cfg.optimizer.total_steps();
    if total == 0 {
        return Err(Error::Config("the optimization schedule has no steps".into()));
    }

    let manifest_path = dir.join(MANIFEST_FILE);
    let trace_path = dir.join(TRACE_FILE);
    let (params, mut sampler, start, mut trace) = if opts.resume {
        let text = io(&manifest_path, fs::read_to_string(&manifest_path))?;
        let mut manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("manifest: {e}")))?;
        if manifest.config_sha256 != loaded.sha256 {
            return Err(Error::Config(format!(
                "configuration differs from the one {} was started with",
                dir.display()
            )));
        }
        let step = latest_checkpoint(&dir)?
            .ok_or_else(|| Error::Checkpoint(format!("no checkpoint in {}", dir.display())))?;
        let ckpt_dir = dir.join(CHECKPOINT_DIR);
        let stem = step_stem(step);
        let ckpt = read_checkpoint(ckpt_dir.join(format!("{stem}.ckpt")))?;
        if ckpt.header.shape != *model.shape() || ckpt.params.len() != model.n_params() {
            return Err(Error::Checkpoint("checkpoint does not match the configured ansatz".into()));
        }
        let chains_path = ckpt_dir.join(format!("{stem}.chains.json"));
        let chains: ChainCheckpoint = serde_json::from_str(&io(&chains_path, fs::read_to_string(&chains_path))?)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", chains_path.display())))?;
        let sampler = Sampler::from_snapshots(cfg.sampler.clone(), &model.bind(&ckpt.params)?, chains.chains)?;
        let trace = truncate_trace(&trace_path, step)?;
        manifest.resumed_at.push(step + 1);
        write_json(&manifest_path, &manifest)?;
        log::info!("resuming {} after step {step}", dir.display());
        (ckpt.params, sampler, step + 1, trace)
    } else {
        if manifest_path.exists() {
            return Err(Error::Config(format!(
                "{} already holds a run; pass --resume or choose another directory",
                dir.display()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.sampler.seed);
        rng.set_stream(PARAM_INIT_STREAM);
        let params = model.init_params(&mut rng, None)?;
        let sampler = Sampler::new(cfg.sampler.clone(), &model.bind(&params)?, n, None)?;
        io(&dir, fs::create_dir_all(dir.join(CHECKPOINT_DIR)))?;
        io(&dir, fs::write(dir.join(CONFIG_FILE), &loaded.text))?;
        write_json(
            &manifest_path,
            &Manifest {
                program: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                config_sha256: loaded.sha256.clone(),
                seed: cfg.sampler.seed,
                param_init_stream: PARAM_INIT_STREAM,
                threads: rayon::current_num_threads(),
                resumed_at: Vec::new(),
            },
        )?;
        io(&trace_path, fs::write(&trace_path, format!("{}\n", TraceRow::CSV_HEADER)))?;
        (params, sampler, 0, Vec::new())
    };

    if start < total {
        let trace_file = io(&trace_path, OpenOptions::new().append(true).open(&trace_path))?;
        let mut observer = RunObserver {
            model: &model,
            dir: dir.clone(),
            trace: trace_file,
            interval: cfg.output.checkpoint_interval,
            last_step: total - 1,
        };
        let result = train(&model, &h, params, &mut sampler, &cfg.optimizer, start, &mut observer)?;
        trace.extend(result.trace);
    }
    let last = trace
        .last()
        .ok_or_else(|| Error::Checkpoint("finished run has an empty trace".into()))?;
    let summary = RunSummary {
        steps: trace.len(),
        n_sites: lattice.n_sites(),
        n_particles: n,
        energy: last.energy,
        energy_error: last.energy_error,
        energy_per_site: last.energy / energy_scale(&loaded, lattice.n_sites()),
        variance: last.variance,
        vscore: last.vscore,
        acceptance: last.acceptance,
    };
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasureReport {
    pub lattice: LatticeKind,
    pub size: usize,
    pub n_particles: u32,
    pub hopping: f64,
    pub interaction: f64,
    pub n_samples: usize,
    pub energy: ObservableEstimate,
    pub energy_per_site: f64,
    pub variance: f64,
    pub vscore: Option<f64>,
    pub acceptance: f64,
    pub condensate_fraction: ObservableEstimate,
    /// Translation-averaged `<a†_{j+v} a_j>` indexed by displacement.
    pub obdm: Vec<ObservableEstimate>,
    pub renyi2_half: Option<Renyi2Estimate>,
}

/// Samples a trained checkpoint and writes the observables as JSON.
pub fn cmd_measure(config: &Path, checkpoint: &Path, output: Option<&Path>) -> Result<MeasureReport> {
    let loaded = load_config(config)?;
    let cfg = &loaded.config;
    cfg.check_mode(Mode::Measure)?;
    let ckpt = read_checkpoint(checkpoint)?;
    let model = ckpt.model()?;
    let n = cfg.model.particles()?;
    if ckpt.header.lattice != cfg.model.lattice
        || ckpt.header.linear_size as usize != cfg.model.size
        || ckpt.header.n_particles != n
    {
        return Err(Error::Config(format!(
            "checkpoint is for {:?} L = {} N = {}, configuration for {:?} L = {} N = {n}",
            ckpt.header.lattice, ckpt.header.linear_size, ckpt.header.n_particles, cfg.model.lattice, cfg.model.size
        )));
    }
    let out = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output.directory.join("measurement.json"));
    let h = cfg.model.hamiltonian()?;
    let lattice = model.lattice().clone();
    let wf = model.bind(&ckpt.params)?;
    // Observables are estimated from Born samples whatever the training used.
    let born = SamplerConfig {
        born_exponent: 1.0,
        ..cfg.sampler.clone()
    };
    let set = run_sampling(&born, &wf, &lattice, n, None)?;
    let e_loc = set
        .configs
        .par_iter()
        .map(|occ| h.local_energy_with(&wf, occ, &wf.init_state(occ)))
        .collect::<Result<Vec<f64>>>()?;
    let energy = estimate_chains(&e_loc, set.n_chains);
    let e_mf = h.mean_field_energy(model.mean_density());
    let obdm = one_body_density_matrix(&lattice, &wf, &set.configs, set.n_chains)?;
    let renyi2_half = if cfg.measure.renyi {
        Some(renyi2_swap(&wf, &lattice, n, &lattice.half_partition(), &born)?)
    } else {
        None
    };
    let report = MeasureReport {
        lattice: cfg.model.lattice,
        size: cfg.model.size,
        n_particles: n,
        hopping: h.hopping(),
        interaction: h.interaction(),
        n_samples: set.len(),
        energy,
        energy_per_site: energy.mean / energy_scale(&loaded, lattice.n_sites()),
        variance: energy.variance,
        vscore: vscore(energy.mean, energy.variance, e_mf, lattice.n_sites()).ok(),
        acceptance: set.mean_acceptance(),
        condensate_fraction: obdm.condensate_fraction,
        obdm: obdm.by_displacement,
        renyi2_half,
    };
    if let Some(parent) = out.parent() {
        io(parent, fs::create_dir_all(parent))?;
    }
    write_json(&out, &report)?;
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdReport {
    pub lattice: LatticeKind,
    pub size: usize,
    pub n_particles: u32,
    pub hopping: f64,
    pub interaction: f64,
    pub dimension: usize,
    pub ground_energy: f64,
    pub energy_per_site: f64,
    pub residual: f64,
    pub energy_variance: f64,
    pub mean_field_energy: f64,
    pub condensate_fraction: f64,
    /// Row-major `<a†_i a_j>`.
    pub obdm: Vec<f64>,
    pub renyi2_half: Option<f64>,
}

/// Exact ground state of the configured model.
pub fn cmd_ed(config: &Path, output: Option<&Path>) -> Result<EdReport> {
    let loaded = load_config(config)?;
    let cfg = &loaded.config;
    cfg.check_mode(Mode::Ed)?;
    let h = cfg.model.hamiltonian()?;
    let n = cfg.model.particles()?;
    let lattice = h.lattice().clone();
    let out = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output.directory.join("ed.json"));
    let matrix = build_hamiltonian_matrix(&h, n)?;
    let ed = ground_state(&matrix)?;
    let obs = exact_observables(&ed, &matrix, &lattice)?;
    let renyi2_half = match exact_renyi2(&ed, &lattice.half_partition()) {
        Ok(s) => Some(s),
        Err(Error::DimensionGuard { .. }) => None,
        Err(e) => return Err(e),
    };
    let report = EdReport {
        lattice: cfg.model.lattice,
        size: cfg.model.size,
        n_particles: n,
        hopping: h.hopping(),
        interaction: h.interaction(),
        dimension: ed.dimension,
        ground_energy: ed.ground_energy,
        energy_per_site: ed.ground_energy / energy_scale(&loaded, lattice.n_sites()),
        residual: ed.residual,
        energy_variance: obs.energy_variance,
        mean_field_energy: h.mean_field_energy(n as f64 / lattice.n_sites() as f64),
        condensate_fraction: obs.condensate_fraction,
        obdm: obs.obdm,
        renyi2_half,
    };
    if let Some(parent) = out.parent() {
        io(parent, fs::create_dir_all(parent))?;
    }
    write_json(&out, &report)?;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMode {
    Scaling,
    Entropy,
    Collapse,
}

#[derive(Clone, Debug, Default)]
pub struct FitOptions {
    pub exponents: CriticalExponents,
    pub log_term: Option<LogTerm>,
    /// Collapse point; fitted from the data when absent.
    pub critical: Option<f64>,
}

#[derive(Deserialize)]
struct ScalingRow {
    #[serde(alias = "L")]
    l: f64,
    #[serde(alias = "J/U")]
    coupling: f64,
    value: f64,
    error: f64,
}

#[derive(Deserialize)]
struct EntropyRow {
    #[serde(alias = "L")]
    l: f64,
    #[serde(alias = "S2")]
    s2: f64,
    error: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>>(inputs: &[PathBuf]) -> Result<Vec<T>> {
    if inputs.is_empty() {
        return Err(Error::Config("no input files".into()));
    }
    let mut rows = Vec::new();
    for path in inputs {
        let f = io(path, File::open(path))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(f);
        for r in reader.deserialize() {
            rows.push(r.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?);
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollapseReport {
    pub critical_coupling: f64,
    pub exponents: CriticalExponents,
    pub quality: f64,
    pub points: Vec<CollapsedPoint>,
}

/// Runs one of the fits on CSV inputs and writes the result as JSON.
pub fn cmd_fit(mode: FitMode, inputs: &[PathBuf], output: &Path, opts: &FitOptions) -> Result<serde_json::Value> {
    let value = match mode {
        FitMode::Scaling | FitMode::Collapse => {
            let points: Vec<ScalingPoint> = read_rows::<ScalingRow>(inputs)?
                .into_iter()
                .map(|r| ScalingPoint {
                    l: r.l,
                    coupling: r.coupling,
                    value: r.value,
                    error: r.error,
                })
                .collect();
            if mode == FitMode::Scaling {
                serde_json::to_value(fit_scaling_function(&points, opts.exponents)?)
            } else {
                let critical = match opts.critical {
                    Some(c) => c,
                    None => fit_scaling_function(&points, opts.exponents)?.critical_coupling,
                };
                let collapsed = data_collapse_transform(&points, critical, opts.exponents);
                serde_json::to_value(CollapseReport {
                    critical_coupling: critical,
                    exponents: opts.exponents,
                    quality: collapse_quality(&collapsed)?,
                    points: collapsed,
                })
            }
        }
        FitMode::Entropy => {
            let points: Vec<EntropyPoint> = read_rows::<EntropyRow>(inputs)?
                .into_iter()
                .map(|r| EntropyPoint {
                    l: r.l,
                    s2: r.s2,
                    error: r.error,
                })
                .collect();
            serde_json::to_value(fit_entropy_scaling(&points, opts.log_term.unwrap_or(LogTerm::Free))?)
        }
    }
    .expect("fit result serializes");
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        io(parent, fs::create_dir_all(parent))?;
    }
    write_json(output, &value)?;
    Ok(value)
}

/// Hash of a file's bytes, for comparing artifacts.
pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&io(path, fs::read(path))?))
}
