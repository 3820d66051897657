//! Stochastic reconfiguration and the two-stage training loop.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Activations, AnsatzShape, BackflowJastrow};
use crate::error::{Error, Result};
use crate::estimators::vscore;
use crate::fock::FockBasis;
use crate::hamiltonian::BoseHubbard;
use crate::sampler::{SampleSet, Sampler};
use crate::stats::{estimate_chains, ObservableEstimate};
use crate::wavefunction::Wavefunction;

/// Parameter counts above this use conjugate gradients instead of Cholesky.
pub const DENSE_SOLVE_LIMIT: usize = 20_000;

/// Local energies and log-derivatives over a set of configurations.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub configs: Vec<Vec<u32>>,
    pub log_psi: Vec<f64>,
    pub e_loc: Vec<f64>,
    /// `O_k(n) = d log psi(n) / d theta_k`, one row per sample.
    pub o: DMatrix<f64>,
    /// Normalized probabilities for exact enumeration or reweighted samples;
    /// `None` means equal weights (Born samples).
    pub weights: Option<Vec<f64>>,
    pub n_chains: usize,
    /// Every basis state is present, so estimates carry no statistical error.
    pub enumerated: bool,
}

impl SampleBatch {
    pub fn from_samples(model: &BackflowJastrow, params: &[f64], h: &BoseHubbard, samples: &SampleSet) -> Result<Self> {
        let mut b = Self::evaluate(model, params, h, samples.configs.clone())?;
        b.n_chains = samples.n_chains;
        if samples.born_exponent != 1.0 {
            // Samples follow |psi|^(2q); reweight to |psi|^2.
            let q = samples.born_exponent;
            b.weights = Some(normalized_weights(&b.log_psi, 2.0 * (1.0 - q)));
        }
        Ok(b)
    }

    /// Every basis state weighted by `|psi|^2 / Z`.
    pub fn exact(model: &BackflowJastrow, params: &[f64], h: &BoseHubbard, basis: &FockBasis) -> Result<Self> {
        let configs: Vec<Vec<u32>> = basis.iter().map(<[u32]>::to_vec).collect();
        let mut b = Self::evaluate(model, params, h, configs)?;
        b.weights = Some(normalized_weights(&b.log_psi, 2.0));
        b.enumerated = true;
        Ok(b)
    }

    fn evaluate(model: &BackflowJastrow, params: &[f64], h: &BoseHubbard, configs: Vec<Vec<u32>>) -> Result<Self> {
        if configs.is_empty() {
            return Err(Error::InvalidArgument("empty sample batch".into()));
        }
        let wf = model.bind(params)?;
        let p = model.n_params();
        let rows: Vec<(f64, f64, Vec<f64>)> = configs
            .par_iter()
            .map(|occ| -> Result<_> {
                let act: Activations = wf.init_state(occ);
                let e = h.local_energy_with(&wf, occ, &act)?;
                let mut g = vec![0.0; p];
                model.backward(params, &act, &mut g);
                Ok((act.log_psi(), e, g))
            })
            .collect::<Result<_>>()?;
        let mut o = DMatrix::zeros(rows.len(), p);
        let mut log_psi = Vec::with_capacity(rows.len());
        let mut e_loc = Vec::with_capacity(rows.len());
        for (r, (l, e, g)) in rows.into_iter().enumerate() {
            if !e.is_finite() || g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("sample {r}: local energy {e} or gradient")));
            }
            log_psi.push(l);
            e_loc.push(e);
            o.set_row(r, &DVector::from_vec(g).transpose());
        }
        Ok(Self {
            configs,
            log_psi,
            e_loc,
            o,
            weights: None,
            n_chains: 1,
            enumerated: false,
        })
    }

    pub fn len(&self) -> usize {
        self.e_loc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e_loc.is_empty()
    }

    fn weight(&self, s: usize) -> f64 {
        self.weights.as_ref().map_or(1.0 / self.len() as f64, |w| w[s])
    }

    pub fn energy_mean(&self) -> f64 {
        (0..self.len()).map(|s| self.weight(s) * self.e_loc[s]).sum()
    }

    /// Variance of the local energy under the batch weights.
    pub fn energy_variance(&self) -> f64 {
        let m = self.energy_mean();
        (0..self.len()).map(|s| self.weight(s) * (self.e_loc[s] - m).powi(2)).sum()
    }

    pub fn energy_estimate(&self) -> ObservableEstimate {
        match &self.weights {
            None => estimate_chains(&self.e_loc, self.n_chains),
            Some(_) if self.enumerated => ObservableEstimate {
                variance: self.energy_variance(),
                n_samples: self.len(),
                ..ObservableEstimate::exact(self.energy_mean())
            },
            Some(w) => {
                let mean = self.energy_mean();
                let variance = self.energy_variance();
                ObservableEstimate {
                    mean,
                    error: weighted_error(w, &self.e_loc, mean, variance, self.n_chains),
                    variance,
                    tau: 0.5,
                    n_samples: self.len(),
                }
            }
        }
    }

    /// Centered log-derivatives of the selected columns and centered local
    /// energies, each row scaled by `sqrt(w_s)` for weighted batches. `S` and
    /// `F` are `scale * Y^T Y` and `scale * Y^T e`.
    fn centered(&self, columns: &[usize]) -> (DMatrix<f64>, DVector<f64>, f64) {
        let n = self.len();
        let row_scale = |s: usize| self.weights.as_ref().map_or(1.0, |w| w[s].sqrt());
        let mut y = DMatrix::zeros(n, columns.len());
        for (c, &k) in columns.iter().enumerate() {
            let col = self.o.column(k);
            let mean: f64 = (0..n).map(|s| self.weight(s) * col[s]).sum();
            for s in 0..n {
                y[(s, c)] = row_scale(s) * (col[s] - mean);
            }
        }
        let em = self.energy_mean();
        let e = DVector::from_fn(n, |s, _| row_scale(s) * (self.e_loc[s] - em));
        let scale = if self.weights.is_some() { 1.0 } else { 1.0 / n as f64 };
        (y, e, scale)
    }
}

/// `exp(power * log_psi)`, normalized to unit sum.
fn normalized_weights(log_psi: &[f64], power: f64) -> Vec<f64> {
    let max = log_psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = log_psi.iter().map(|l| (power * (l - max)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

/// Error of a self-normalized weighted mean from the spread of per-chain
/// estimates, or from the effective sample size with a single chain.
fn weighted_error(w: &[f64], values: &[f64], mean: f64, variance: f64, n_chains: usize) -> f64 {
    let n = values.len();
    if n_chains < 2 || n % n_chains != 0 {
        let ess = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
        return (variance / ess).sqrt();
    }
    let per = n / n_chains;
    let chain_means: Vec<f64> = (0..n_chains)
        .map(|c| {
            let r = c * per..(c + 1) * per;
            let z: f64 = w[r.clone()].iter().sum();
            w[r.clone()].iter().zip(&values[r]).map(|(a, b)| a * b).sum::<f64>() / z
        })
        .collect();
    let c = n_chains as f64;
    (chain_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (c * (c - 1.0))).sqrt()
}

fn all_columns(batch: &SampleBatch) -> Vec<usize> {
    (0..batch.o.ncols()).collect()
}

fn check_finite_matrix(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

/// `S_kk' = <O_k O_k'> - <O_k><O_k'>`.
pub fn estimate_qgt(batch: &SampleBatch) -> Result<DMatrix<f64>> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let (y, _, scale) = batch.centered(&all_columns(batch));
    let s = y.tr_mul(&y) * scale;
    check_finite_matrix(&s, "quantum geometric tensor")?;
    Ok(s)
}

/// `F_k = <O_k E_loc> - <O_k><E_loc>`.
pub fn estimate_forces(batch: &SampleBatch) -> Result<DVector<f64>> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let (y, e, scale) = batch.centered(&all_columns(batch));
    let f = y.tr_mul(&e) * scale;
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("forces".into()));
    }
    Ok(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Cholesky up to [`DENSE_SOLVE_LIMIT`] parameters, CG above.
    Auto,
    Cholesky,
    Cg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageParams {
    /// Jastrow weights only.
    Jastrow,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub params: StageParams,
    pub steps: usize,
    pub diag_shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrConfig {
    pub learning_rate: f64,
    pub solver: SolverKind,
    /// Relative residual target of the CG solver.
    pub cg_tolerance: f64,
    pub cg_max_iter: usize,
    pub stages: Vec<StageConfig>,
    /// Steps per window of the divergence guard; 0 disables it.
    pub divergence_window: usize,
    /// Abort when a window's mean energy exceeds the best window mean by
    /// this fraction of `max(|best|, 1)`.
    pub divergence_factor: f64,
}

impl Default for SrConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            solver: SolverKind::Auto,
            cg_tolerance: 1e-10,
            cg_max_iter: 1000,
            stages: vec![
                StageConfig {
                    params: StageParams::Jastrow,
                    steps: 2000,
                    diag_shift: 5e-4,
                },
                StageConfig {
                    params: StageParams::All,
                    steps: 5000,
                    diag_shift: 1e-3,
                },
            ],
            divergence_window: 50,
            divergence_factor: 0.5,
        }
    }
}

impl SrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if self.stages.is_empty() {
            return Err(Error::Config("at least one optimization stage is required".into()));
        }
        for s in &self.stages {
            if !(s.diag_shift >= 0.0 && s.diag_shift.is_finite()) {
                return Err(Error::Config(format!("diagonal shift must be >= 0, got {}", s.diag_shift)));
            }
        }
        if !(self.cg_tolerance > 0.0) || self.cg_max_iter == 0 {
            return Err(Error::Config("CG tolerance and iteration cap must be positive".into()));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.stages.iter().map(|s| s.steps).sum()
    }

    /// Stage index of global step `step`.
    pub fn stage_of(&self, step: usize) -> Option<usize> {
        let mut end = 0;
        for (i, s) in self.stages.iter().enumerate() {
            end += s.steps;
            if step < end {
                return Some(i);
            }
        }
        None
    }
}

#[derive(Clone, Debug)]
pub struct SrSolution {
    pub delta: Vec<f64>,
    /// `|(S + lambda I) delta - F| / |F|` (0 when `F = 0`).
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `(S + lambda I) delta = F`.
pub fn solve_sr(s: &DMatrix<f64>, f: &DVector<f64>, diag_shift: f64, solver: SolverKind, cg_tol: f64, cg_max_iter: usize) -> Result<SrSolution> {
    let p = f.len();
    if s.nrows() != p || s.ncols() != p {
        return Err(Error::Shape(format!("S is {}x{}, F has {p} entries", s.nrows(), s.ncols())));
    }
    let mut a = s.clone();
    for k in 0..p {
        a[(k, k)] += diag_shift;
    }
    let dense = match solver {
        SolverKind::Auto => p <= DENSE_SOLVE_LIMIT,
        SolverKind::Cholesky => true,
        SolverKind::Cg => false,
    };
    if dense {
        let chol = a.clone().cholesky().ok_or_else(|| Error::Solver {
            reason: "S + lambda I is not positive definite".into(),
            residual: f64::NAN,
        })?;
        let delta = chol.solve(f);
        let residual = relative_residual(&(&a * &delta), f);
        Ok(SrSolution {
            delta: delta.as_slice().to_vec(),
            residual,
            iterations: 1,
        })
    } else {
        cg(|v, out| out.copy_from(&(&a * v)), f, cg_tol, cg_max_iter)
    }
}

fn relative_residual(ax: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let nb = b.norm();
    if nb == 0.0 {
        (ax).norm()
    } else {
        (ax - b).norm() / nb
    }
}

/// Conjugate gradients for an SPD operator.
pub fn cg(apply: impl Fn(&DVector<f64>, &mut DVector<f64>), b: &DVector<f64>, tol: f64, max_iter: usize) -> Result<SrSolution> {
    let p = b.len();
    let nb = b.norm();
    let mut x = DVector::zeros(p);
    if nb == 0.0 {
        return Ok(SrSolution {
            delta: vec![0.0; p],
            residual: 0.0,
            iterations: 0,
        });
    }
    let mut r = b.clone();
    let mut d = r.clone();
    let mut ad = DVector::zeros(p);
    let mut rr = r.dot(&r);
    for it in 0..max_iter {
        if rr.sqrt() <= tol * nb {
            return Ok(SrSolution {
                delta: x.as_slice().to_vec(),
                residual: rr.sqrt() / nb,
                iterations: it,
            });
        }
        apply(&d, &mut ad);
        let dad = d.dot(&ad);
        if !(dad > 0.0) {
            return Err(Error::Solver {
                reason: "operator is not positive definite".into(),
                residual: rr.sqrt() / nb,
            });
        }
        let alpha = rr / dad;
        x.axpy(alpha, &d, 1.0);
        r.axpy(-alpha, &ad, 1.0);
        let rr_new = r.dot(&r);
        d = &r + (rr_new / rr) * &d;
        rr = rr_new;
    }
    if rr.sqrt() <= tol * nb {
        return Ok(SrSolution {
            delta: x.as_slice().to_vec(),
            residual: rr.sqrt() / nb,
            iterations: max_iter,
        });
    }
    Err(Error::Solver {
        reason: format!("CG did not converge in {max_iter} iterations"),
        residual: rr.sqrt() / nb,
    })
}

/// `theta <- theta - eta delta` with `(S + lambda I) delta = F`.
pub fn sr_step(params: &[f64], s: &DMatrix<f64>, f: &DVector<f64>, cfg: &SrConfig, diag_shift: f64) -> Result<(Vec<f64>, f64)> {
    if params.len() != f.len() {
        return Err(Error::Shape("parameter and force lengths differ".into()));
    }
    let sol = solve_sr(s, f, diag_shift, cfg.solver, cfg.cg_tolerance, cfg.cg_max_iter)?;
    let next = params
        .iter()
        .zip(&sol.delta)
        .map(|(t, d)| t - cfg.learning_rate * d)
        .collect();
    Ok((next, sol.residual))
}

/// Solves the SR system restricted to `columns` directly from the batch.
/// Large systems use matrix-free CG on `Y^T Y + lambda`.
fn masked_update(batch: &SampleBatch, columns: &[usize], cfg: &SrConfig, diag_shift: f64) -> Result<SrSolution> {
    let (y, e, scale) = batch.centered(columns);
    let f = y.tr_mul(&e) * scale;
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("forces".into()));
    }
    let dense = match cfg.solver {
        SolverKind::Auto => columns.len() <= DENSE_SOLVE_LIMIT,
        SolverKind::Cholesky => true,
        SolverKind::Cg => false,
    };
    if dense {
        let s = y.tr_mul(&y) * scale;
        check_finite_matrix(&s, "quantum geometric tensor")?;
        solve_sr(&s, &f, diag_shift, SolverKind::Cholesky, cfg.cg_tolerance, cfg.cg_max_iter)
    } else {
        cg(
            |v, out| {
                let yv = &y * v;
                out.copy_from(&y.tr_mul(&yv));
                *out *= scale;
                out.axpy(diag_shift, v, 1.0);
            },
            &f,
            cfg.cg_tolerance,
            cfg.cg_max_iter,
        )
    }
}

/// One line of the training trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub stage: usize,
    pub energy: f64,
    pub energy_error: f64,
    pub variance: f64,
    pub vscore: f64,
    pub acceptance: f64,
    pub solver_residual: f64,
    pub wall_time: f64,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str =
        "step,stage,E_mean,E_err,VarE,vscore,acceptance_rate,solver_residual,wall_time";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.6e},{:.3}",
            self.step,
            self.stage,
            self.energy,
            self.energy_error,
            self.variance,
            self.vscore,
            self.acceptance,
            self.solver_residual,
            self.wall_time
        )
    }
}

/// Callbacks invoked by [`train`] after each completed step.
pub trait TrainObserver {
    fn on_step(&mut self, _row: &TraceRow, _params: &[f64], _sampler: &Sampler<Activations>) -> Result<()> {
        Ok(())
    }
}

impl TrainObserver for () {}

/// Outcome of a training run.
#[derive(Clone, Debug)]
pub struct TrainResult {
    pub params: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

/// Bare-Jastrow twin of `model` used while the backflow is inert.
fn bare_twin(model: &BackflowJastrow) -> Result<BackflowJastrow> {
    let shape = AnsatzShape {
        mean_field_prior: model.shape().mean_field_prior,
        ..AnsatzShape::bare_jastrow()
    };
    BackflowJastrow::new(model.lattice().clone(), model.n_particles(), shape)
}

/// Runs the staged SR schedule from global step `start_step`.
///
/// Stage masks restrict both the linear system and the update. While only
/// the Jastrow weights are trained and every mixing weight is zero, the
/// backflow cannot change `psi`, and sampling uses the bare Jastrow instead.
pub fn train(
    model: &BackflowJastrow,
    hamiltonian: &BoseHubbard,
    params: Vec<f64>,
    sampler: &mut Sampler<Activations>,
    sr: &SrConfig,
    start_step: usize,
    observer: &mut dyn TrainObserver,
) -> Result<TrainResult> {
    sr.validate()?;
    if params.len() != model.n_params() {
        return Err(Error::Shape(format!(
            "expected {} parameters, got {}",
            model.n_params(),
            params.len()
        )));
    }
    let layout = model.layout().clone();
    let bare = bare_twin(model)?;
    let e_mf = hamiltonian.mean_field_energy(model.mean_density());
    let n_sites = model.lattice().n_sites();
    let mut params = params;
    let mut trace = Vec::new();
    let mut guard = DivergenceGuard::new(sr.divergence_window, sr.divergence_factor);
    let t0 = Instant::now();

    for step in start_step..sr.total_steps() {
        let stage_idx = sr.stage_of(step).expect("step within the schedule");
        let stage = &sr.stages[stage_idx];
        let inert = model.shape().has_backflow()
            && stage.params == StageParams::Jastrow
            && params[layout.mixing.clone()].iter().all(|&a| a == 0.0);

        let (batch, columns) = if inert || !model.shape().has_backflow() {
            let jp = &params[layout.jastrow.clone()];
            let set = sampler.sample(&bare.bind(jp)?, model.lattice())?;
            let batch = SampleBatch::from_samples(&bare, jp, hamiltonian, &set)?;
            (batch, (0..layout.jastrow.len()).collect::<Vec<_>>())
        } else {
            let set = sampler.sample(&model.bind(&params)?, model.lattice())?;
            let batch = SampleBatch::from_samples(model, &params, hamiltonian, &set)?;
            let columns = match stage.params {
                StageParams::Jastrow => layout.jastrow.clone().collect(),
                StageParams::All => (0..model.n_params()).collect(),
            };
            (batch, columns)
        };
        // The bare twin's parameters coincide with the leading Jastrow block.
        debug_assert_eq!(layout.jastrow.start, 0);

        let energy = batch.energy_estimate();
        let variance = energy.variance;
        let acceptance = sampler_acceptance(sampler);
        let sol = masked_update(&batch, &columns, sr, stage.diag_shift)?;
        for (&k, d) in columns.iter().zip(&sol.delta) {
            params[k] -= sr.learning_rate * d;
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence(format!("non-finite parameters after step {step}")));
        }
        let row = TraceRow {
            step,
            stage: stage_idx,
            energy: energy.mean,
            energy_error: energy.error,
            variance,
            vscore: vscore(energy.mean, variance, e_mf, n_sites).unwrap_or(f64::NAN),
            acceptance,
            solver_residual: sol.residual,
            wall_time: t0.elapsed().as_secs_f64(),
        };
        log::info!(
            "step {step} stage {stage_idx}: E = {:.6} +- {:.6}, var = {:.4e}, acc = {:.3}",
            row.energy,
            row.energy_error,
            row.variance,
            row.acceptance
        );
        guard.push(energy.mean, step)?;
        observer.on_step(&row, &params, sampler)?;
        trace.push(row);
    }
    Ok(TrainResult { params, trace })
}

fn sampler_acceptance(sampler: &Sampler<Activations>) -> f64 {
    let (a, p) = sampler
        .chains
        .iter()
        .fold((0u64, 0u64), |(a, p), c| (a + c.accepted, p + c.proposed));
    a as f64 / p.max(1) as f64
}

struct DivergenceGuard {
    window: usize,
    factor: f64,
    current: Vec<f64>,
    best: f64,
}

impl DivergenceGuard {
    fn new(window: usize, factor: f64) -> Self {
        Self {
            window,
            factor,
            current: Vec::new(),
            best: f64::INFINITY,
        }
    }

    fn push(&mut self, energy: f64, step: usize) -> Result<()> {
        if !energy.is_finite() {
            return Err(Error::Divergence(format!("energy {energy} at step {step}")));
        }
        if self.window == 0 {
            return Ok(());
        }
        self.current.push(energy);
        if self.current.len() < self.window {
            return Ok(());
        }
        let mean = self.current.iter().sum::<f64>() / self.window as f64;
        self.current.clear();
        if mean - self.best > self.factor * self.best.abs().max(1.0) {
            return Err(Error::Divergence(format!(
                "window mean energy {mean:.6} at step {step} exceeds the best window {:.6}",
                self.best
            )));
        }
        self.best = self.best.min(mean);
        Ok(())
    }
}
