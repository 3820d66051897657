//! Exact diagonalization of small fixed-N Bose-Hubbard systems.
//!
//! The Hamiltonian is assembled as a CSR matrix over the fixed-N basis.
//! Ground states come from a dense symmetric eigensolver for small bases and
//! from restarted Lanczos with full reorthogonalization above that.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{hop_amplitude, FockBasis};
use crate::hamiltonian::BoseHubbard;
use crate::lattice::Lattice;

/// Largest basis handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 2000;
/// Nonzero budget of the sparse Hamiltonian.
pub const NNZ_BUDGET: usize = 5_000_000;
/// Largest subsystem sector in [`exact_renyi2`].
pub const SUBSYSTEM_LIMIT: usize = 20_000;
/// Target eigen-residual `|H v - E v|`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Symmetric matrix in compressed sparse row form.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row `(column, value)` lists. Duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable_by_key(|e| e.0);
            let start = cols.len();
            for (c, v) in row {
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_rows((0..dim).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(i, yi)| {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        });
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| (self.get(j, i) - v).abs() <= tol))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Sparse Hamiltonian together with its basis.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    pub basis: FockBasis,
    pub matrix: SparseMatrix,
}

/// Assembles `H` over the fixed-N sector.
pub fn build_hamiltonian_matrix(model: &BoseHubbard, n_particles: u32) -> Result<HamiltonianMatrix> {
    let lattice = model.lattice();
    let basis = FockBasis::new(lattice.n_sites(), n_particles)?;
    let dim = basis.dim();
    let bound = dim as u128 * (1 + 2 * lattice.bonds().len()) as u128;
    if bound > NNZ_BUDGET as u128 {
        // The bound counts every hop; check the actual count before refusing.
        let nnz: u128 = basis
            .iter()
            .map(|occ| {
                1 + lattice
                    .bonds()
                    .iter()
                    .map(|&(a, b)| (occ[a] > 0) as u128 + (occ[b] > 0) as u128)
                    .sum::<u128>()
            })
            .sum();
        if nnz > NNZ_BUDGET as u128 {
            return Err(Error::DimensionGuard {
                what: "Hamiltonian nonzeros",
                value: nnz,
                limit: NNZ_BUDGET as u128,
            });
        }
    }
    let j = model.hopping();
    let rows: Vec<Vec<(usize, f64)>> = (0..dim)
        .into_par_iter()
        .with_min_len(64)
        .map(|row| {
            let occ = basis.state(row);
            let mut entries = vec![(row, model.diagonal_energy(occ))];
            if j != 0.0 {
                let mut next = occ.to_vec();
                for &(a, b) in lattice.bonds() {
                    for (src, dst) in [(a, b), (b, a)] {
                        if occ[src] == 0 {
                            continue;
                        }
                        next[src] -= 1;
                        next[dst] += 1;
                        let col = basis.index_of(&next).expect("hop stays in the sector");
                        entries.push((col, -j * hop_amplitude(occ[src], occ[dst])));
                        next[src] += 1;
                        next[dst] -= 1;
                    }
                }
            }
            entries
        })
        .collect();
    Ok(HamiltonianMatrix {
        basis,
        matrix: SparseMatrix::from_rows(rows),
    })
}

#[derive(Clone, Debug)]
pub struct EdResult {
    pub basis: FockBasis,
    pub ground_energy: f64,
    /// Normalized, largest-magnitude component positive.
    pub ground_vector: Vec<f64>,
    pub dimension: usize,
    pub residual: f64,
}

impl EdResult {
    pub fn amplitude(&self, occ: &[u32]) -> f64 {
        self.basis.index_of(occ).map_or(0.0, |i| self.ground_vector[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Auto,
    Dense,
    Lanczos,
}

pub fn ground_state(h: &HamiltonianMatrix) -> Result<EdResult> {
    ground_state_with(h, EigenMethod::Auto)
}

pub fn ground_state_with(h: &HamiltonianMatrix, method: EigenMethod) -> Result<EdResult> {
    let (energy, vector) = lowest_eigenpair(&h.matrix, method)?;
    let residual = eigen_residual(&h.matrix, energy, &vector);
    Ok(EdResult {
        basis: h.basis.clone(),
        ground_energy: energy,
        dimension: vector.len(),
        ground_vector: vector,
        residual,
    })
}

/// Lowest eigenpair of a symmetric sparse matrix, residual below
/// [`RESIDUAL_TOL`].
pub fn lowest_eigenpair(m: &SparseMatrix, method: EigenMethod) -> Result<(f64, Vec<f64>)> {
    let dim = m.dim();
    if dim == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let dense = match method {
        EigenMethod::Auto => dim <= DENSE_LIMIT,
        EigenMethod::Dense => {
            if dim > DENSE_LIMIT {
                return Err(Error::DimensionGuard {
                    what: "dense eigensolver dimension",
                    value: dim as u128,
                    limit: DENSE_LIMIT as u128,
                });
            }
            true
        }
        EigenMethod::Lanczos => false,
    };
    let (e, mut v) = if dense { dense_lowest(m) } else { lanczos_lowest(m)? };
    fix_sign(&mut v);
    let r = eigen_residual(m, e, &v);
    if r > RESIDUAL_TOL * e.abs().max(1.0) {
        return Err(Error::Eigensolver(r));
    }
    Ok((e, v))
}

fn dense_lowest(m: &SparseMatrix) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(m.to_dense());
    let k = eig.eigenvalues.imin();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
}

fn lanczos_lowest(m: &SparseMatrix) -> Result<(f64, Vec<f64>)> {
    let dim = m.dim();
    let krylov = dim.min((50_000_000 / dim).clamp(20, 120));
    let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut best = (f64::INFINITY, f64::INFINITY);
    for _restart in 0..200 {
        let (theta, ritz) = lanczos_cycle(m, &x, krylov);
        x = ritz;
        let r = eigen_residual(m, theta, &x);
        best = (theta, r);
        if r <= 0.1 * RESIDUAL_TOL * theta.abs().max(1.0) {
            return Ok((theta, x));
        }
    }
    if best.1 <= RESIDUAL_TOL * best.0.abs().max(1.0) {
        return Ok((best.0, x));
    }
    Err(Error::Eigensolver(best.1))
}

/// One Lanczos cycle from `start` with full reorthogonalization; returns the
/// lowest Ritz pair.
fn lanczos_cycle(m: &SparseMatrix, start: &[f64], krylov: usize) -> (f64, Vec<f64>) {
    let dim = m.dim();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(krylov);
    let mut alpha = Vec::with_capacity(krylov);
    let mut beta: Vec<f64> = Vec::with_capacity(krylov);
    let mut q = start.to_vec();
    normalize(&mut q);
    let mut w = vec![0.0; dim];
    loop {
        m.matvec(&q, &mut w);
        let a = dot(&q, &w);
        alpha.push(a);
        basis.push(q.clone());
        // Two passes of Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(wi, bi)| *wi -= c * bi);
            }
        }
        let nb = dot(&w, &w).sqrt();
        if basis.len() == krylov || nb < 1e-13 * a.abs().max(1.0) {
            break;
        }
        beta.push(nb);
        q.iter_mut().zip(&w).for_each(|(qi, wi)| *qi = wi / nb);
    }
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let idx = eig.eigenvalues.imin();
    let s = eig.eigenvectors.column(idx);
    let mut ritz = vec![0.0; dim];
    for (b, &c) in basis.iter().zip(s.iter()) {
        ritz.iter_mut().zip(b).for_each(|(r, bi)| *r += c * bi);
    }
    normalize(&mut ritz);
    (eig.eigenvalues[idx], ritz)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

fn fix_sign(v: &mut [f64]) {
    let k = (0..v.len())
        .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .unwrap_or(0);
    if v.get(k).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `|M v - e v|` for a normalized `v`.
pub fn eigen_residual(m: &SparseMatrix, e: f64, v: &[f64]) -> f64 {
    let mut w = vec![0.0; v.len()];
    m.matvec(v, &mut w);
    w.iter().zip(v).map(|(wi, vi)| (wi - e * vi).powi(2)).sum::<f64>().sqrt()
}

/// `-ln Tr rho_A^2` of a pure fixed-N state given over `basis`.
pub fn renyi2_of_state(basis: &FockBasis, psi: &[f64], subsystem: &[usize]) -> Result<f64> {
    let n = basis.n_sites();
    let mut in_a = vec![false; n];
    for &s in subsystem {
        if s >= n {
            return Err(Error::SiteIndex { index: s, n_sites: n });
        }
        in_a[s] = true;
    }
    let norm2: f64 = psi.iter().map(|x| x * x).sum();
    // Group amplitudes into blocks labelled by the number of particles in A;
    // within a block psi is a matrix M[a][b] and rho_A = M M^T.
    let mut a_index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut b_index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut entries: Vec<(usize, usize, u32, f64)> = Vec::with_capacity(basis.dim());
    for (k, occ) in basis.iter().enumerate() {
        if psi[k] == 0.0 {
            continue;
        }
        let mut a = Vec::with_capacity(subsystem.len());
        let mut b = Vec::with_capacity(n - subsystem.len());
        for (s, &o) in occ.iter().enumerate() {
            if in_a[s] {
                a.push(o);
            } else {
                b.push(o);
            }
        }
        let sector = a.iter().sum::<u32>();
        let na = a_index.len();
        let ia = *a_index.entry(a).or_insert(na);
        let nb = b_index.len();
        let ib = *b_index.entry(b).or_insert(nb);
        entries.push((ia, ib, sector, psi[k]));
    }
    let mut sectors: HashMap<u32, Vec<(usize, usize, f64)>> = HashMap::new();
    for (a, b, s, v) in entries {
        sectors.entry(s).or_default().push((a, b, v));
    }
    let mut purity = 0.0;
    for (_, block) in sectors {
        let mut rows: HashMap<usize, usize> = HashMap::new();
        let mut cols: HashMap<usize, usize> = HashMap::new();
        for &(a, b, _) in &block {
            let r = rows.len();
            rows.entry(a).or_insert(r);
            let c = cols.len();
            cols.entry(b).or_insert(c);
        }
        let small = rows.len().min(cols.len());
        if small > SUBSYSTEM_LIMIT {
            return Err(Error::DimensionGuard {
                what: "subsystem sector dimension",
                value: small as u128,
                limit: SUBSYSTEM_LIMIT as u128,
            });
        }
        let mut mat = DMatrix::zeros(rows.len(), cols.len());
        for (a, b, v) in block {
            mat[(rows[&a], cols[&b])] = v;
        }
        let gram = if rows.len() <= cols.len() {
            &mat * mat.transpose()
        } else {
            mat.transpose() * &mat
        };
        purity += gram.iter().map(|g| g * g).sum::<f64>();
    }
    Ok(-(purity / (norm2 * norm2)).ln())
}

pub fn exact_renyi2(ed: &EdResult, subsystem: &[usize]) -> Result<f64> {
    renyi2_of_state(&ed.basis, &ed.ground_vector, subsystem)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactObservables {
    /// `<a†_i a_j>`, row-major.
    pub obdm: Vec<f64>,
    pub condensate_fraction: f64,
    pub energy: f64,
    pub energy_variance: f64,
}

/// One-body density matrix of a normalized state over the fixed-N basis.
pub fn exact_obdm(lattice: &Lattice, basis: &FockBasis, psi: &[f64]) -> Vec<f64> {
    let n = lattice.n_sites();
    let mut obdm = vec![0.0; n * n];
    let mut next = vec![0u32; n];
    for (k, occ) in basis.iter().enumerate() {
        let p = psi[k];
        if p == 0.0 {
            continue;
        }
        for i in 0..n {
            obdm[i * n + i] += p * p * occ[i] as f64;
        }
        for j in 0..n {
            if occ[j] == 0 {
                continue;
            }
            for i in 0..n {
                if i == j {
                    continue;
                }
                next.copy_from_slice(occ);
                next[j] -= 1;
                next[i] += 1;
                if let Some(col) = basis.index_of(&next) {
                    obdm[i * n + j] += psi[col] * p * hop_amplitude(occ[j], occ[i]);
                }
            }
        }
    }
    obdm
}

pub fn exact_observables(ed: &EdResult, h: &HamiltonianMatrix, lattice: &Lattice) -> Result<ExactObservables> {
    if ed.dimension != h.matrix.dim() {
        return Err(Error::Shape("ED result and Hamiltonian disagree on the basis".into()));
    }
    let n = lattice.n_sites();
    let obdm = exact_obdm(lattice, &ed.basis, &ed.ground_vector);
    let rho0 = crate::hamiltonian::condensate_fraction(&obdm, n)?;
    let v = &ed.ground_vector;
    let mut hv = vec![0.0; v.len()];
    h.matrix.matvec(v, &mut hv);
    let energy = dot(v, &hv);
    // <H^2> - <H>^2 written as |(H - E) v|^2 to avoid cancellation.
    let energy_variance = hv.iter().zip(v).map(|(h, x)| (h - energy * x).powi(2)).sum();
    Ok(ExactObservables {
        obdm,
        condensate_fraction: rho0,
        energy,
        energy_variance,
    })
}

/// Convenience: ground state of `model` at `n_particles`.
pub fn solve(model: &BoseHubbard, n_particles: u32) -> Result<(HamiltonianMatrix, EdResult)> {
    let h = build_hamiltonian_matrix(model, n_particles)?;
    let ed = ground_state(&h)?;
    Ok((h, ed))
}
