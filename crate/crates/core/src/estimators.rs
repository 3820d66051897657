//! Variational diagnostics and analysis fits: V-score, the replica-swap
//! Rényi-2 estimator, the finite-size scaling fit and collapse, and the
//! entanglement-scaling fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::sampler::{run_sampling, SamplerConfig};
use crate::wavefunction::Wavefunction;

/// `n_sites * Var[E] / (E - E_MF)^2`.
pub fn vscore(energy_total: f64, variance_total: f64, e_mf_total: f64, n_sites: usize) -> Result<f64> {
    if variance_total < 0.0 || !variance_total.is_finite() {
        return Err(Error::InvalidArgument(format!("variance must be finite and >= 0, got {variance_total}")));
    }
    if !(energy_total < e_mf_total) {
        return Err(Error::InvalidArgument(format!(
            "energy {energy_total} is not below the mean-field energy {e_mf_total}"
        )));
    }
    Ok(n_sites as f64 * variance_total / (energy_total - e_mf_total).powi(2))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Renyi2Estimate {
    pub s2: f64,
    pub error: f64,
    /// Mean swap ratio, the purity estimate.
    pub purity: f64,
    pub n_pairs: usize,
    /// Pairs whose swapped configurations left the fixed-N sector.
    pub n_out_of_sector: usize,
}

/// Rényi-2 entropy of subsystem `a_sites` from paired samples of two
/// independent replicas.
///
/// Pairs are matched by index. Swaps that put a different particle number in
/// either swapped configuration contribute exactly zero. Errors come from a
/// jackknife over blocks of `block` pairs.
pub fn renyi2_from_replicas<W: Wavefunction>(
    wf: &W,
    a_sites: &[usize],
    replica_1: &[Vec<u32>],
    replica_2: &[Vec<u32>],
    block: usize,
) -> Result<Renyi2Estimate> {
    let n_pairs = replica_1.len().min(replica_2.len());
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("no replica pairs".into()));
    }
    let n_sites = wf.n_sites();
    let mut in_a = vec![false; n_sites];
    for &s in a_sites {
        if s >= n_sites {
            return Err(Error::SiteIndex { index: s, n_sites });
        }
        in_a[s] = true;
    }
    let mut logs = Vec::with_capacity(n_pairs);
    let mut out = 0;
    let mut s1 = vec![0u32; n_sites];
    let mut s2 = vec![0u32; n_sites];
    for (n, m) in replica_1.iter().zip(replica_2).take(n_pairs) {
        let mut na = 0i64;
        let mut ma = 0i64;
        for s in 0..n_sites {
            if in_a[s] {
                na += n[s] as i64;
                ma += m[s] as i64;
                s1[s] = m[s];
                s2[s] = n[s];
            } else {
                s1[s] = n[s];
                s2[s] = m[s];
            }
        }
        if na != ma {
            out += 1;
            logs.push(f64::NEG_INFINITY);
            continue;
        }
        let l = wf.log_psi(&s1) + wf.log_psi(&s2) - wf.log_psi(n) - wf.log_psi(m);
        if l.is_nan() || l == f64::INFINITY {
            return Err(Error::NonFinite(format!("swap log-ratio {l}")));
        }
        logs.push(l);
    }
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Err(Error::Saturation(format!(
            "all {n_pairs} swap ratios vanish ({out} left the particle-number sector)"
        )));
    }
    let ratios: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
    let total: f64 = ratios.iter().sum();
    let s2_of = |sum: f64, count: usize| -(shift + (sum / count as f64).ln());
    let s2 = s2_of(total, n_pairs);

    let block = block.max(1);
    let n_blocks = n_pairs / block;
    let error = if n_blocks >= 2 {
        let used = n_blocks * block;
        let used_total: f64 = ratios[..used].iter().sum();
        let jk: Vec<f64> = ratios[..used]
            .chunks_exact(block)
            .map(|c| s2_of(used_total - c.iter().sum::<f64>(), used - block))
            .collect();
        let mean = jk.iter().sum::<f64>() / n_blocks as f64;
        let var = jk.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (n_blocks - 1) as f64 / n_blocks as f64;
        if var.is_finite() {
            var.sqrt()
        } else {
            f64::INFINITY
        }
    } else {
        f64::INFINITY
    };
    Ok(Renyi2Estimate {
        s2,
        error,
        purity: (-s2).exp(),
        n_pairs,
        n_out_of_sector: out,
    })
}

/// Seed offset of the second replica.
pub const REPLICA_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Runs two independent samplers (seeds `seed` and `seed + offset`) and
/// estimates the Rényi-2 entropy of `a_sites` with blocks of 64 pairs.
pub fn renyi2_swap<W: Wavefunction>(
    wf: &W,
    lattice: &Lattice,
    n_particles: u32,
    a_sites: &[usize],
    config: &SamplerConfig,
) -> Result<Renyi2Estimate> {
    if config.born_exponent != 1.0 {
        return Err(Error::InvalidArgument("the swap estimator needs Born samples (born_exponent = 1)".into()));
    }
    let r1 = run_sampling(config, wf, lattice, n_particles, None)?;
    let cfg2 = SamplerConfig {
        seed: config.seed.wrapping_add(REPLICA_SEED_OFFSET),
        ..config.clone()
    };
    let r2 = run_sampling(&cfg2, wf, lattice, n_particles, None)?;
    renyi2_from_replicas(wf, a_sites, &r1.configs, &r2.configs, 64)
}

/// Exponents of the finite-size scaling ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub beta_over_nu: f64,
    pub inv_nu: f64,
}

impl Default for CriticalExponents {
    /// 3D XY values: `nu = 0.67155`, `eta = 0.0380`, `beta/nu = (1 + eta)/2`.
    fn default() -> Self {
        Self {
            beta_over_nu: (1.0 + 0.0380) / 2.0,
            inv_nu: 1.0 / 0.67155,
        }
    }
}

/// One condensate-fraction measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub l: f64,
    /// `J / U`.
    pub coupling: f64,
    /// `rho_0 / N`.
    pub value: f64,
    pub error: f64,
}

/// `ln(1 + exp(a x)) / a`, evaluated without overflow.
pub fn softplus(a: f64, x: f64) -> f64 {
    let z = a * x;
    (z.max(0.0) + (-z.abs()).exp().ln_1p()) / a
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `[softplus_a(g - b)]^c`.
pub fn scaling_function(a: f64, b: f64, c: f64, g: f64) -> f64 {
    softplus(a, g - b).powf(c)
}

/// Value and gradient with respect to `(a, b, c)`.
fn scaling_function_grad(a: f64, b: f64, c: f64, g: f64) -> (f64, [f64; 3]) {
    let x = g - b;
    let s = softplus(a, x);
    let sig = logistic(a * x);
    let f = s.powf(c);
    let ds_da = (x * sig - s) / a;
    let pref = c * s.powf(c - 1.0);
    (f, [pref * ds_da, -pref * sig, f * s.ln()])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingFit {
    /// `None` for the pooled fit over every size.
    pub l: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub covariance: [[f64; 3]; 3],
    pub chi2: f64,
    pub n_points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingFitResult {
    pub curves: Vec<ScalingFit>,
    pub pooled: ScalingFit,
    /// Mean of the per-size `b`, the `J_c / U` estimate.
    pub critical_coupling: f64,
}

/// Fits `[softplus_a(J/U - b)]^c` to `L^{beta/nu} rho_0/N`, separately for
/// every size and pooled over all sizes.
pub fn fit_scaling_function(points: &[ScalingPoint], exponents: CriticalExponents) -> Result<ScalingFitResult> {
    for p in points {
        if !(p.error > 0.0) {
            return Err(Error::Fit(format!("non-positive error bar at L = {}, J/U = {}", p.l, p.coupling)));
        }
    }
    let mut sizes: Vec<f64> = points.iter().map(|p| p.l).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    let rescaled: Vec<(f64, f64, f64, f64)> = points
        .iter()
        .map(|p| {
            let s = p.l.powf(exponents.beta_over_nu);
            (p.l, p.coupling, s * p.value, s * p.error)
        })
        .collect();
    let mut curves = Vec::new();
    for &l in &sizes {
        let pts: Vec<_> = rescaled.iter().filter(|p| p.0 == l).map(|p| (p.1, p.2, p.3)).collect();
        if pts.len() < 4 {
            return Err(Error::Fit(format!("curve L = {l} has {} points, need >= 4", pts.len())));
        }
        curves.push(fit_curve(Some(l), &pts)?);
    }
    let all: Vec<_> = rescaled.iter().map(|p| (p.1, p.2, p.3)).collect();
    let pooled = fit_curve(None, &all)?;
    let critical_coupling = curves.iter().map(|c| c.b).sum::<f64>() / curves.len() as f64;
    Ok(ScalingFitResult {
        curves,
        pooled,
        critical_coupling,
    })
}

/// Multi-start weighted fit of one curve of `(g, y, sigma)` triples.
fn fit_curve(l: Option<f64>, pts: &[(f64, f64, f64)]) -> Result<ScalingFit> {
    let mut gs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    gs.sort_by(f64::total_cmp);
    let q = |f: f64| gs[((gs.len() - 1) as f64 * f).round() as usize];
    let span = (gs[gs.len() - 1] - gs[0]).max(1e-12);
    let residuals = |x: &[f64]| -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (a, b, c) = (x[0], x[1], x[2]);
        if !(a > 0.0) {
            return None;
        }
        let mut r = DVector::zeros(pts.len());
        let mut j = DMatrix::zeros(pts.len(), 3);
        for (k, &(g, y, s)) in pts.iter().enumerate() {
            let (f, grad) = scaling_function_grad(a, b, c, g);
            r[k] = (f - y) / s;
            for m in 0..3 {
                j[(k, m)] = grad[m] / s;
            }
        }
        if r.iter().chain(j.iter()).all(|v| v.is_finite()) {
            Some((r, j))
        } else {
            None
        }
    };
    let mut best: Option<(f64, Vec<f64>, DMatrix<f64>)> = None;
    let mut last_err = None;
    for a0 in [4.0 / span, 40.0 / span] {
        for bq in [0.25, 0.5] {
            for c0 in [0.7, 1.2] {
                match levenberg_marquardt(&residuals, vec![a0, q(bq), c0], 2000) {
                    Ok((x, cost, jac)) => {
                        if best.as_ref().is_none_or(|b| cost < b.0) {
                            best = Some((cost, x, jac));
                        }
                    }
                    Err(e) => last_err = Some(e),
                }
            }
        }
    }
    let (chi2, x, jac) = best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Fit("no start converged".into())))?;
    let cov = covariance(&jac);
    Ok(ScalingFit {
        l,
        a: x[0],
        b: x[1],
        c: x[2],
        covariance: cov,
        chi2,
        n_points: pts.len(),
    })
}

fn covariance(jac: &DMatrix<f64>) -> [[f64; 3]; 3] {
    let jtj = jac.tr_mul(jac);
    let inv = jtj.clone().try_inverse().unwrap_or_else(|| DMatrix::from_element(3, 3, f64::NAN));
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = inv[(i, k)];
        }
    }
    out
}

/// Damped Gauss-Newton on `sum r^2`. `model` returns `None` outside the
/// admissible domain. Returns the parameters, the cost and the Jacobian at
/// the solution.
pub fn levenberg_marquardt(
    model: &dyn Fn(&[f64]) -> Option<(DVector<f64>, DMatrix<f64>)>,
    x0: Vec<f64>,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, DMatrix<f64>)> {
    let (mut r, mut j) = model(&x0).ok_or_else(|| Error::Fit("initial point outside the domain".into()))?;
    let mut x = x0;
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    let n = x.len();
    for _ in 0..max_iter {
        let g = j.tr_mul(&r);
        let jtj = j.tr_mul(&j);
        if g.amax() <= 1e-14 * (1.0 + cost) || cost <= 1e-28 {
            return Ok((x, cost, j));
        }
        let mut accepted = false;
        while mu < 1e16 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += mu * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, s)| xi + s).collect();
            if let Some((rt, jt)) = model(&trial) {
                let ct = rt.norm_squared();
                if ct < cost {
                    let small_step = step.iter().zip(&x).all(|(s, xi)| s.abs() <= 1e-13 * (xi.abs() + 1e-13));
                    let small_gain = cost - ct <= 1e-15 * cost;
                    x = trial;
                    r = rt;
                    j = jt;
                    cost = ct;
                    mu = (mu / 3.0).max(1e-15);
                    accepted = true;
                    if small_step || small_gain {
                        return Ok((x, cost, j));
                    }
                    break;
                }
            }
            mu *= 10.0;
        }
        if !accepted {
            // No descent direction left: a (possibly flat) minimum.
            return Ok((x, cost, j));
        }
    }
    Err(Error::Fit(format!("no convergence in {max_iter} iterations (cost {cost:e})")))
}

/// A point after the collapse transformation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapsedPoint {
    pub l: f64,
    pub x: f64,
    pub y: f64,
    pub error: f64,
}

/// `(L, J/U, y) -> (L^{1/nu} (J/U - J_c/U), L^{beta/nu} y)`.
pub fn data_collapse_transform(points: &[ScalingPoint], critical: f64, exponents: CriticalExponents) -> Vec<CollapsedPoint> {
    points
        .iter()
        .map(|p| {
            let sy = p.l.powf(exponents.beta_over_nu);
            CollapsedPoint {
                l: p.l,
                x: p.l.powf(exponents.inv_nu) * (p.coupling - critical),
                y: sy * p.value,
                error: sy * p.error,
            }
        })
        .collect()
}

/// Mean squared deviation of every collapsed point from the piecewise-linear
/// interpolants of the other sizes' curves, over the overlapping range.
/// Smaller is a better collapse.
pub fn collapse_quality(points: &[CollapsedPoint]) -> Result<f64> {
    let mut sizes: Vec<f64> = points.iter().map(|p| p.l).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::Fit("collapse quality needs at least two sizes".into()));
    }
    let curves: Vec<Vec<(f64, f64)>> = sizes
        .iter()
        .map(|&l| {
            let mut c: Vec<(f64, f64)> = points.iter().filter(|p| p.l == l).map(|p| (p.x, p.y)).collect();
            c.sort_by(|a, b| a.0.total_cmp(&b.0));
            c
        })
        .collect();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (ci, c) in curves.iter().enumerate() {
        for &(x, y) in c {
            for (oi, other) in curves.iter().enumerate() {
                if oi == ci || other.len() < 2 {
                    continue;
                }
                if let Some(v) = interpolate(other, x) {
                    sum += (y - v).powi(2);
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::Fit("collapsed curves do not overlap".into()));
    }
    Ok(sum / count as f64)
}

fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    if x < curve[0].0 || x > curve[curve.len() - 1].0 {
        return None;
    }
    let k = curve.partition_point(|p| p.0 < x).max(1);
    let (x0, y0) = curve[k - 1];
    let (x1, y1) = curve[k.min(curve.len() - 1)];
    if x1 == x0 {
        Some(y0)
    } else {
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub l: f64,
    pub s2: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Covariance of `(a, b, c)`; rows of fixed parameters are zero.
    pub covariance: [[f64; 3]; 3],
    pub chi2: f64,
}

/// How the `ln L` coefficient is treated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogTerm {
    /// Mott phase: no logarithmic term.
    Absent,
    Free,
    Fixed(f64),
}

/// Weighted linear fit of `S_2 = a L + b ln L + c`.
pub fn fit_entropy_scaling(points: &[EntropyPoint], log_term: LogTerm) -> Result<EntropyFit> {
    let mut sizes: Vec<f64> = points.iter().map(|p| p.l).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::Fit(format!("entropy fit needs >= 3 sizes, got {}", sizes.len())));
    }
    if points.iter().any(|p| !(p.error > 0.0) || !(p.l > 0.0)) {
        return Err(Error::Fit("sizes and error bars must be positive".into()));
    }
    // Columns: a, then b if free, then c.
    let free_b = matches!(log_term, LogTerm::Free);
    let fixed_b = match log_term {
        LogTerm::Fixed(b) => b,
        _ => 0.0,
    };
    let ncol = if free_b { 3 } else { 2 };
    let mut design = DMatrix::zeros(points.len(), ncol);
    let mut rhs = DVector::zeros(points.len());
    for (k, p) in points.iter().enumerate() {
        let w = 1.0 / p.error;
        design[(k, 0)] = p.l * w;
        if free_b {
            design[(k, 1)] = p.l.ln() * w;
        }
        design[(k, ncol - 1)] = w;
        rhs[k] = (p.s2 - fixed_b * p.l.ln()) * w;
    }
    let normal = design.tr_mul(&design);
    let inv = normal
        .try_inverse()
        .ok_or_else(|| Error::Fit("entropy fit design matrix is rank deficient".into()))?;
    let sol = &inv * design.tr_mul(&rhs);
    let chi2 = (&design * &sol - &rhs).norm_squared();
    let mut covariance = [[0.0; 3]; 3];
    let map: Vec<usize> = if free_b { vec![0, 1, 2] } else { vec![0, 2] };
    for (i, &pi) in map.iter().enumerate() {
        for (k, &pk) in map.iter().enumerate() {
            covariance[pi][pk] = inv[(i, k)];
        }
    }
    Ok(EntropyFit {
        a: sol[0],
        b: if free_b { sol[1] } else { fixed_b },
        c: sol[ncol - 1],
        covariance,
        chi2,
    })
}
