//! Bose-Hubbard Hamiltonian: local energies, the one-body density matrix
//! estimator, condensate fraction and the mean-field reference energy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{hop_amplitude, FockBasis};
use crate::lattice::Lattice;
use crate::stats::{estimate_chains, ObservableEstimate};
use crate::wavefunction::{LogValue, Wavefunction};

/// `H = -J sum_<ij> (a†_i a_j + h.c.) + U/2 sum_i n_i (n_i - 1)`.
#[derive(Clone, Debug)]
pub struct BoseHubbard {
    lattice: Lattice,
    hopping: f64,
    interaction: f64,
}

impl BoseHubbard {
    /// `hopping` is J, `interaction` is U. Both must be finite and
    /// non-negative; J = 0 gives the atomic limit.
    pub fn new(lattice: Lattice, hopping: f64, interaction: f64) -> Result<Self> {
        if !(hopping.is_finite() && hopping >= 0.0) {
            return Err(Error::InvalidArgument(format!("J must be finite and >= 0, got {hopping}")));
        }
        if !(interaction.is_finite() && interaction >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "U must be finite and >= 0, got {interaction}"
            )));
        }
        Ok(Self {
            lattice,
            hopping,
            interaction,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn interaction(&self) -> f64 {
        self.interaction
    }

    pub fn diagonal_energy(&self, occ: &[u32]) -> f64 {
        let pairs: f64 = occ.iter().map(|&n| n as f64 * (n as f64 - 1.0)).sum();
        0.5 * self.interaction * pairs
    }

    /// `E_loc(n) = <n|H|psi> / <n|psi>` using the chain cache `state` of `occ`.
    pub fn local_energy_with<W: Wavefunction>(&self, wf: &W, occ: &[u32], state: &W::State) -> Result<f64> {
        let mut kinetic = 0.0;
        if self.hopping != 0.0 {
            for &(a, b) in self.lattice.bonds() {
                for (src, dst) in [(a, b), (b, a)] {
                    if occ[src] == 0 {
                        continue;
                    }
                    let r = wf.log_ratio_hop(occ, state, src, dst);
                    if r.is_nan() || r == f64::INFINITY {
                        return Err(Error::NonFinite(format!(
                            "log-amplitude ratio {r} for hop {src}->{dst} from {occ:?}"
                        )));
                    }
                    kinetic += hop_amplitude(occ[src], occ[dst]) * r.exp();
                }
            }
        }
        Ok(self.diagonal_energy(occ) - self.hopping * kinetic)
    }

    pub fn local_energy<W: Wavefunction>(&self, wf: &W, occ: &[u32]) -> Result<f64> {
        let state = wf.init_state(occ);
        self.local_energy_with(wf, occ, &state)
    }

    /// Mean-field energy of the whole lattice at density `n̄`.
    pub fn mean_field_energy(&self, mean_density: f64) -> f64 {
        mean_field_energy(
            self.interaction,
            self.hopping,
            mean_density,
            self.lattice.coordination(),
            self.lattice.n_sites(),
        )
    }
}

/// `n_sites * n̄ (U n̄ / 2 - z J)`.
pub fn mean_field_energy(u: f64, j: f64, mean_density: f64, z: usize, n_sites: usize) -> f64 {
    n_sites as f64 * mean_field_energy_per_site(u, j, mean_density, z)
}

pub fn mean_field_energy_per_site(u: f64, j: f64, mean_density: f64, z: usize) -> f64 {
    mean_density * (u * mean_density / 2.0 - z as f64 * j)
}

/// Wavefunction given by an explicit amplitude table over a fixed-N basis.
/// Configurations outside the basis, or with zero amplitude, have
/// `log psi = -inf`.
#[derive(Clone, Debug)]
pub struct TableAnsatz {
    basis: FockBasis,
    log_amp: Vec<f64>,
}

impl TableAnsatz {
    /// Amplitudes must be non-negative up to rounding noise; tiny negative
    /// entries (below `1e-12` of the largest) are treated as zero.
    pub fn from_amplitudes(basis: FockBasis, amplitudes: &[f64]) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let scale = amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let mut log_amp = Vec::with_capacity(amplitudes.len());
        for &a in amplitudes {
            if !a.is_finite() {
                return Err(Error::NonFinite("table amplitude".into()));
            }
            if a < -1e-12 * scale {
                return Err(Error::InvalidArgument(format!("negative amplitude {a}")));
            }
            log_amp.push(if a > 0.0 { a.ln() } else { f64::NEG_INFINITY });
        }
        Ok(Self { basis, log_amp })
    }

    pub fn from_log_amplitudes(basis: FockBasis, log_amp: Vec<f64>) -> Result<Self> {
        if log_amp.len() != basis.dim() {
            return Err(Error::Shape("log-amplitude table length".into()));
        }
        Ok(Self { basis, log_amp })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn log_amplitudes(&self) -> &[f64] {
        &self.log_amp
    }
}

impl Wavefunction for TableAnsatz {
    type State = LogValue;

    fn n_sites(&self) -> usize {
        self.basis.n_sites()
    }

    fn log_psi(&self, occ: &[u32]) -> f64 {
        self.basis
            .index_of(occ)
            .map_or(f64::NEG_INFINITY, |i| self.log_amp[i])
    }

    fn init_state(&self, occ: &[u32]) -> LogValue {
        LogValue(self.log_psi(occ))
    }

    fn state_log_psi(&self, state: &LogValue) -> f64 {
        state.0
    }

    fn log_ratio_hop(&self, occ: &[u32], state: &LogValue, src: usize, dst: usize) -> f64 {
        let mut next = occ.to_vec();
        next[src] -= 1;
        next[dst] += 1;
        let target = self.log_psi(&next);
        if target == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        target - state.0
    }

    fn accept_hop(&self, _occ: &[u32], state: &mut LogValue, _src: usize, _dst: usize, log_ratio: f64) {
        state.0 += log_ratio;
    }
}

/// Translation-averaged one-body density matrix,
/// `G(v) = (1/n_sites) sum_j <a†_{j+v} a_j>`, one estimate per displacement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityMatrixEstimate {
    pub n_sites: usize,
    /// Indexed by displacement index (the site reached from site 0).
    pub by_displacement: Vec<ObservableEstimate>,
    pub condensate_fraction: ObservableEstimate,
}

impl DensityMatrixEstimate {
    /// Expands the displacement classes into the full `<a†_i a_j>` matrix,
    /// row-major.
    pub fn to_matrix(&self, lattice: &Lattice) -> Vec<f64> {
        let n = self.n_sites;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let v = lattice.displacement(j, i);
                m[i * n + j] = self.by_displacement[lattice.displacement_index(v)].mean;
            }
        }
        m
    }
}

/// Monte Carlo estimate of the one-body density matrix from Born samples
/// laid out chain-major.
pub fn one_body_density_matrix<W: Wavefunction>(
    lattice: &Lattice,
    wf: &W,
    samples: &[Vec<u32>],
    n_chains: usize,
) -> Result<DensityMatrixEstimate> {
    let n = lattice.n_sites();
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples for the density matrix".into()));
    }
    let displacements: Vec<_> = (0..n).map(|k| lattice.displacement(0, k)).collect();
    let per_sample: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|occ| -> Result<Vec<f64>> {
            let state = wf.init_state(occ);
            let mut g = vec![0.0; n];
            for (k, v) in displacements.iter().enumerate() {
                if k == 0 {
                    g[0] = occ.iter().map(|&x| x as f64).sum::<f64>() / n as f64;
                    continue;
                }
                let mut acc = 0.0;
                for j in 0..n {
                    if occ[j] == 0 {
                        continue;
                    }
                    let i = lattice.translate(j, *v);
                    if i == j {
                        acc += occ[j] as f64;
                        continue;
                    }
                    let r = wf.log_ratio_hop(occ, &state, j, i);
                    if r.is_nan() || r == f64::INFINITY {
                        return Err(Error::NonFinite(format!("density-matrix ratio {r}")));
                    }
                    acc += hop_amplitude(occ[j], occ[i]) * r.exp();
                }
                g[k] = acc / n as f64;
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;

    let mut column = vec![0.0; samples.len()];
    let by_displacement = (0..n)
        .map(|k| {
            for (c, g) in column.iter_mut().zip(&per_sample) {
                *c = g[k];
            }
            estimate_chains(&column, n_chains)
        })
        .collect();
    let rho: Vec<f64> = per_sample
        .iter()
        .map(|g| g.iter().sum::<f64>() / n as f64)
        .collect();
    Ok(DensityMatrixEstimate {
        n_sites: n,
        by_displacement,
        condensate_fraction: estimate_chains(&rho, n_chains),
    })
}

/// `rho_0 = sum_ij <a†_i a_j> / n_sites^2` for a row-major matrix.
pub fn condensate_fraction(obdm: &[f64], n_sites: usize) -> Result<f64> {
    if obdm.len() != n_sites * n_sites {
        return Err(Error::Shape(format!(
            "density matrix has {} entries, expected {}",
            obdm.len(),
            n_sites * n_sites
        )));
    }
    Ok(obdm.iter().sum::<f64>() / (n_sites * n_sites) as f64)
}
