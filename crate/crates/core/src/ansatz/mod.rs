//! Neural backflow-Jastrow wavefunction.
//!
//! The log-amplitude is a translation-invariant two-body Jastrow form
//! `sum_ij ñ_i W(d_ij) ñ_j` evaluated on dressed occupations
//! `ñ_i = x_i + sum_mu a_mu h_{i,mu}`, where `x_i = n_i / n̄ - 1` and `h` is the
//! output of a periodic convolutional residual network:
//!
//! * layer 1: `h1 = gelu(conv(x))`, one input channel to `channels`;
//! * even layers: `h_l = gelu(conv(h_{l-1}))`;
//! * odd layers `l >= 3`: `h_l = layer_norm(h_{l-2} + gelu(conv(h_{l-1})))`.
//!
//! Depth 0 is the bare Jastrow on `x`. Gradients are computed by hand-written
//! reverse-mode differentiation over the stored activations.

mod checkpoint;
mod layout;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointHeader};
pub use layout::{AnsatzShape, ConvLayout, NormLayout, ParamLayout};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Displacement, Lattice};
use crate::wavefunction::Wavefunction;

pub const LAYER_NORM_EPS: f64 = 1e-6;

/// `n_i / n̄ - 1` for every site.
pub fn rescale_input(occ: &[u32], mean_density: f64) -> Result<Vec<f64>> {
    if !(mean_density > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mean density must be positive, got {mean_density}"
        )));
    }
    Ok(occ.iter().map(|&n| n as f64 / mean_density - 1.0).collect())
}

/// Log of the ideal-condensate amplitude, `(ln N! - sum_i ln n_i!) / 2`.
pub fn log_psi_mf_prior(occ: &[u32]) -> f64 {
    let total: u32 = occ.iter().sum();
    let mut acc = ln_factorial(total);
    for &n in occ {
        acc -= ln_factorial(n);
    }
    0.5 * acc
}

fn ln_factorial(n: u32) -> f64 {
    if n < 2 {
        0.0
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Exact GELU, `x * Phi(x)`.
#[inline]
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * FRAC_1_SQRT_2))
}

#[inline]
pub fn gelu_grad(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2)) + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Stored forward pass of one configuration. Doubles as the Markov-chain
/// cache for cheap hop ratios.
#[derive(Clone, Debug)]
pub struct Activations {
    x: Vec<f64>,
    pre: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
    xhat: Vec<Vec<f64>>,
    inv_std: Vec<Vec<f64>>,
    ntilde: Vec<f64>,
    field: Vec<f64>,
    log_psi: f64,
}

impl Activations {
    pub fn log_psi(&self) -> f64 {
        self.log_psi
    }

    /// Dressed occupations `ñ`.
    pub fn backflow(&self) -> &[f64] {
        &self.ntilde
    }

    /// Output features `h^(D)`, `[site][channel]`; empty for the bare Jastrow.
    pub fn features(&self) -> &[f64] {
        self.hidden.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// `sum_j W(d_ij) ñ_j`.
    pub fn jastrow_field(&self) -> &[f64] {
        &self.field
    }
}

/// The backflow-Jastrow model on a fixed lattice and particle number.
/// Parameters live outside, in a flat vector described by [`ParamLayout`].
#[derive(Clone, Debug)]
pub struct BackflowJastrow {
    lattice: Lattice,
    shape: AnsatzShape,
    layout: ParamLayout,
    n_particles: u32,
    mean_density: f64,
    classes: Vec<u32>,
    offsets: Vec<Displacement>,
    stencil: Vec<usize>,
    reverse_stencil: Vec<usize>,
}

impl BackflowJastrow {
    pub fn new(lattice: Lattice, n_particles: u32, shape: AnsatzShape) -> Result<Self> {
        shape.validate()?;
        if n_particles == 0 {
            return Err(Error::InvalidArgument("particle number must be positive".into()));
        }
        let n = lattice.n_sites();
        let offsets = if shape.has_backflow() {
            lattice.kernel_offsets(shape.kernel_radius)
        } else {
            Vec::new()
        };
        let f = offsets.len();
        let mut stencil = vec![0; n * f];
        let mut reverse_stencil = vec![0; n * f];
        for site in 0..n {
            for (k, v) in offsets.iter().enumerate() {
                stencil[site * f + k] = lattice.translate(site, *v);
                reverse_stencil[site * f + k] = lattice.translate(site, [-v[0], -v[1]]);
            }
        }
        let classes = (0..n * n)
            .map(|p| lattice.distance_class(p / n, p % n) as u32)
            .collect();
        let layout = ParamLayout::new(&shape, lattice.n_distance_classes(), f);
        Ok(Self {
            mean_density: n_particles as f64 / n as f64,
            lattice,
            shape,
            layout,
            n_particles,
            classes,
            offsets,
            stencil,
            reverse_stencil,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn shape(&self) -> &AnsatzShape {
        &self.shape
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.layout.total
    }

    pub fn n_particles(&self) -> u32 {
        self.n_particles
    }

    pub fn mean_density(&self) -> f64 {
        self.mean_density
    }

    pub fn kernel_offsets(&self) -> &[Displacement] {
        &self.offsets
    }

    /// Fresh parameters: kernels normal with std `fan_in^-1/2`, zero biases,
    /// unit layer-norm gains, zero mixing weights. Jastrow weights are copied
    /// from `jastrow` when given, zero otherwise.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R, jastrow: Option<&[f64]>) -> Result<Vec<f64>> {
        let mut p = vec![0.0; self.n_params()];
        if let Some(w) = jastrow {
            if w.len() != self.layout.jastrow.len() {
                return Err(Error::Shape(format!(
                    "expected {} Jastrow weights, got {}",
                    self.layout.jastrow.len(),
                    w.len()
                )));
            }
            p[self.layout.jastrow.clone()].copy_from_slice(w);
        }
        for conv in &self.layout.convs {
            let fan_in = (self.layout.filter_sites * conv.in_channels) as f64;
            let normal = Normal::new(0.0, fan_in.powf(-0.5)).expect("positive std");
            for k in conv.kernel.clone() {
                p[k] = normal.sample(rng);
            }
        }
        for norm in &self.layout.norms {
            for k in norm.gain.clone() {
                p[k] = 1.0;
            }
        }
        Ok(p)
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        Ok(())
    }

    fn check_occ(&self, occ: &[u32]) -> Result<()> {
        if occ.len() != self.lattice.n_sites() {
            return Err(Error::Shape(format!(
                "configuration has {} sites, lattice has {}",
                occ.len(),
                self.lattice.n_sites()
            )));
        }
        Ok(())
    }

    #[inline]
    fn class(&self, i: usize, j: usize) -> usize {
        self.classes[i * self.lattice.n_sites() + j] as usize
    }

    /// Full forward pass.
    pub fn forward(&self, params: &[f64], occ: &[u32]) -> Activations {
        let n = self.lattice.n_sites();
        let x: Vec<f64> = occ.iter().map(|&k| k as f64 / self.mean_density - 1.0).collect();
        let depth = self.shape.depth;
        let c = self.shape.channels;
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(depth);
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(depth);
        let mut xhat = Vec::with_capacity(self.shape.n_norms());
        let mut inv_std = Vec::with_capacity(self.shape.n_norms());
        for layer in 1..=depth {
            let mut z = vec![0.0; n * c];
            let mut h = vec![0.0; n * c];
            let residual = AnsatzShape::is_residual_layer(layer);
            let (mut xh, mut inv) = if residual {
                (vec![0.0; n * c], vec![0.0; n])
            } else {
                (Vec::new(), Vec::new())
            };
            {
                let input: &[f64] = if layer == 1 { &x } else { &hidden[layer - 2] };
                let skip: &[f64] = if residual { &hidden[layer - 3] } else { &[] };
                for site in 0..n {
                    let norm_out = if residual {
                        Some((&mut xh[site * c..(site + 1) * c], &mut inv[site]))
                    } else {
                        None
                    };
                    self.layer_at(
                        params,
                        layer,
                        input,
                        skip,
                        site,
                        &mut z[site * c..(site + 1) * c],
                        &mut h[site * c..(site + 1) * c],
                        norm_out,
                    );
                }
            }
            pre.push(z);
            hidden.push(h);
            if residual {
                xhat.push(xh);
                inv_std.push(inv);
            }
        }

        let mut ntilde = x.clone();
        if depth > 0 {
            let a = &params[self.layout.mixing.clone()];
            let out = &hidden[depth - 1];
            for (i, nt) in ntilde.iter_mut().enumerate() {
                *nt += dot(a, &out[i * c..(i + 1) * c]);
            }
        }
        let w = &params[self.layout.jastrow.clone()];
        let mut field = vec![0.0; n];
        let mut log_psi = 0.0;
        for i in 0..n {
            let row = &self.classes[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (j, &cls) in row.iter().enumerate() {
                acc += w[cls as usize] * ntilde[j];
            }
            field[i] = acc;
            log_psi += ntilde[i] * acc;
        }
        if self.shape.mean_field_prior {
            log_psi += log_psi_mf_prior(occ);
        }
        Activations {
            x,
            pre,
            hidden,
            xhat,
            inv_std,
            ntilde,
            field,
            log_psi,
        }
    }

    /// Evaluates one layer at one site. `input` is `h^(l-1)` (or the rescaled
    /// occupations for layer 1), `skip` is `h^(l-2)` for residual layers.
    #[allow(clippy::too_many_arguments)]
    #[inline]
    fn layer_at(
        &self,
        params: &[f64],
        layer: usize,
        input: &[f64],
        skip: &[f64],
        site: usize,
        z: &mut [f64],
        h: &mut [f64],
        norm: Option<(&mut [f64], &mut f64)>,
    ) {
        let conv = &self.layout.convs[layer - 1];
        let (cin, cout) = (conv.in_channels, conv.out_channels);
        let f = self.layout.filter_sites;
        let kernel = &params[conv.kernel.clone()];
        z.copy_from_slice(&params[conv.bias.clone()]);
        for k in 0..f {
            let src = self.stencil[site * f + k];
            let hin = &input[src * cin..(src + 1) * cin];
            let kf = &kernel[k * cout * cin..(k + 1) * cout * cin];
            for (mu, zm) in z.iter_mut().enumerate() {
                *zm += dot(&kf[mu * cin..(mu + 1) * cin], hin);
            }
        }
        for (hm, &zm) in h.iter_mut().zip(z.iter()) {
            *hm = gelu(zm);
        }
        if let Some((xh, inv)) = norm {
            let c = cout;
            let r: Vec<f64> = (0..c).map(|mu| skip[site * c + mu] + h[mu]).collect();
            let mean = r.iter().sum::<f64>() / c as f64;
            let var = r.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let inv_s = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            *inv = inv_s;
            let nl = &self.layout.norms[(layer - 3) / 2];
            let gain = &params[nl.gain.clone()];
            let offset = &params[nl.offset.clone()];
            for mu in 0..c {
                xh[mu] = (r[mu] - mean) * inv_s;
                h[mu] = gain[mu] * xh[mu] + offset[mu];
            }
        }
    }

    pub fn log_psi(&self, params: &[f64], occ: &[u32]) -> Result<f64> {
        self.check_params(params)?;
        self.check_occ(occ)?;
        Ok(self.forward(params, occ).log_psi)
    }

    /// Dressed occupations `ñ`; the rescaled input for the bare Jastrow.
    pub fn backflow_features(&self, params: &[f64], occ: &[u32]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        self.check_occ(occ)?;
        Ok(self.forward(params, occ).ntilde)
    }

    /// Gradient of `log psi` with respect to the flat parameter vector.
    pub fn log_grad(&self, params: &[f64], occ: &[u32]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        self.check_occ(occ)?;
        let act = self.forward(params, occ);
        let mut grad = vec![0.0; self.n_params()];
        self.backward(params, &act, &mut grad);
        Ok(grad)
    }

    /// Reverse pass over stored activations; overwrites `grad`.
    pub fn backward(&self, params: &[f64], act: &Activations, grad: &mut [f64]) {
        let n = self.lattice.n_sites();
        grad.fill(0.0);
        let jas = self.layout.jastrow.start;
        for i in 0..n {
            let ni = act.ntilde[i];
            let row = &self.classes[i * n..(i + 1) * n];
            for (j, &cls) in row.iter().enumerate() {
                grad[jas + cls as usize] += ni * act.ntilde[j];
            }
        }
        let depth = self.shape.depth;
        if depth == 0 {
            return;
        }
        let c = self.shape.channels;
        let f = self.layout.filter_sites;
        let a = &params[self.layout.mixing.clone()];
        let out = &act.hidden[depth - 1];
        let mix = self.layout.mixing.start;
        let mut dh: Vec<Vec<f64>> = vec![vec![0.0; n * c]; depth];
        for i in 0..n {
            let dn = 2.0 * act.field[i];
            for mu in 0..c {
                grad[mix + mu] += dn * out[i * c + mu];
                dh[depth - 1][i * c + mu] = dn * a[mu];
            }
        }

        for layer in (1..=depth).rev() {
            let li = layer - 1;
            let mut dg = std::mem::take(&mut dh[li]);
            if AnsatzShape::is_residual_layer(layer) {
                let ni = (layer - 3) / 2;
                let nl = &self.layout.norms[ni];
                let gain = &params[nl.gain.clone()];
                let xh = &act.xhat[ni];
                let inv = &act.inv_std[ni];
                let mut dxhat = vec![0.0; c];
                for i in 0..n {
                    let base = i * c;
                    let mut sum_dx = 0.0;
                    let mut sum_dx_x = 0.0;
                    for mu in 0..c {
                        let d = dg[base + mu];
                        grad[nl.gain.start + mu] += d * xh[base + mu];
                        grad[nl.offset.start + mu] += d;
                        dxhat[mu] = d * gain[mu];
                        sum_dx += dxhat[mu];
                        sum_dx_x += dxhat[mu] * xh[base + mu];
                    }
                    let scale = inv[i] / c as f64;
                    for mu in 0..c {
                        let dr = scale * (c as f64 * dxhat[mu] - sum_dx - xh[base + mu] * sum_dx_x);
                        dg[base + mu] = dr;
                        dh[li - 2][base + mu] += dr;
                    }
                }
            }
            let z = &act.pre[li];
            for (d, &zv) in dg.iter_mut().zip(z.iter()) {
                *d *= gelu_grad(zv);
            }
            let dz = dg;
            let conv = &self.layout.convs[li];
            let (cin, cout) = (conv.in_channels, conv.out_channels);
            let kernel = &params[conv.kernel.clone()];
            let input: &[f64] = if layer == 1 { &act.x } else { &act.hidden[li - 1] };
            for i in 0..n {
                for mu in 0..cout {
                    grad[conv.bias.start + mu] += dz[i * cout + mu];
                }
            }
            let (lower, _) = dh.split_at_mut(li);
            let mut dinput = if layer > 1 { Some(&mut lower[li - 1]) } else { None };
            for i in 0..n {
                let dzi = &dz[i * cout..(i + 1) * cout];
                for k in 0..f {
                    let src = self.stencil[i * f + k];
                    let hin = &input[src * cin..(src + 1) * cin];
                    let kbase = conv.kernel.start + k * cout * cin;
                    let kf = &kernel[k * cout * cin..(k + 1) * cout * cin];
                    for (mu, &d) in dzi.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        let g = &mut grad[kbase + mu * cin..kbase + (mu + 1) * cin];
                        for (gv, &hv) in g.iter_mut().zip(hin) {
                            *gv += d * hv;
                        }
                        if let Some(di) = dinput.as_deref_mut() {
                            let row = &kf[mu * cin..(mu + 1) * cin];
                            let dst = &mut di[src * cin..(src + 1) * cin];
                            for (dv, &kv) in dst.iter_mut().zip(row) {
                                *dv += kv * d;
                            }
                        }
                    }
                }
            }
        }
    }

    /// `log psi(n') - log psi(n)` for a single hop, recomputing only the
    /// sites inside the receptive field of the two touched sites.
    pub fn hop_log_ratio(&self, params: &[f64], occ: &[u32], act: &Activations, src: usize, dst: usize) -> f64 {
        if src == dst {
            return 0.0;
        }
        let n = self.lattice.n_sites();
        let w = &params[self.layout.jastrow.clone()];
        let step = 1.0 / self.mean_density;
        let prior = if self.shape.mean_field_prior {
            0.5 * ((occ[src] as f64).ln() - (occ[dst] as f64 + 1.0).ln())
        } else {
            0.0
        };
        let depth = self.shape.depth;
        if depth == 0 {
            let (ys, yd) = (act.field[src], act.field[dst]);
            let w0 = w[self.class(src, src)];
            let wsd = w[self.class(src, dst)];
            return 2.0 * step * (yd - ys) + step * step * (2.0 * w0 - 2.0 * wsd) + prior;
        }

        let c = self.shape.channels;
        let f = self.layout.filter_sites;
        let mut x = act.x.clone();
        x[src] -= step;
        x[dst] += step;
        let mut mark = vec![false; n];
        let mut region: Vec<usize> = vec![src, dst];
        mark[src] = true;
        mark[dst] = true;
        let mut new_hidden: Vec<Vec<f64>> = Vec::with_capacity(depth);
        let mut z = vec![0.0; c];
        let mut xh = vec![0.0; c];
        for layer in 1..=depth {
            let len = region.len();
            for r in 0..len {
                let s = region[r];
                for k in 0..f {
                    let t = self.reverse_stencil[s * f + k];
                    if !mark[t] {
                        mark[t] = true;
                        region.push(t);
                    }
                }
            }
            let mut h = act.hidden[layer - 1].clone();
            let residual = AnsatzShape::is_residual_layer(layer);
            {
                let input: &[f64] = if layer == 1 { &x } else { &new_hidden[layer - 2] };
                let skip: &[f64] = if residual { &new_hidden[layer - 3] } else { &[] };
                for &site in &region {
                    let mut inv = 0.0;
                    let norm = if residual { Some((xh.as_mut_slice(), &mut inv)) } else { None };
                    self.layer_at(params, layer, input, skip, site, &mut z, &mut h[site * c..(site + 1) * c], norm);
                }
            }
            new_hidden.push(h);
        }
        let a = &params[self.layout.mixing.clone()];
        let out = &new_hidden[depth - 1];
        let delta: Vec<f64> = region
            .iter()
            .map(|&i| x[i] + dot(a, &out[i * c..(i + 1) * c]) - act.ntilde[i])
            .collect();
        let mut change = 0.0;
        for (p, &i) in region.iter().enumerate() {
            let di = delta[p];
            if di == 0.0 {
                continue;
            }
            change += 2.0 * di * act.field[i];
            let row = &self.classes[i * n..(i + 1) * n];
            for (q, &j) in region.iter().enumerate() {
                change += di * w[row[j] as usize] * delta[q];
            }
        }
        change + prior
    }

    /// Updates cached activations after an accepted hop.
    pub fn apply_hop(&self, params: &[f64], occ_after: &[u32], act: &mut Activations, src: usize, dst: usize, log_ratio: f64) {
        if self.shape.depth > 0 || src == dst {
            *act = self.forward(params, occ_after);
            return;
        }
        let n = self.lattice.n_sites();
        let step = 1.0 / self.mean_density;
        let w = &params[self.layout.jastrow.clone()];
        act.x[src] -= step;
        act.x[dst] += step;
        act.ntilde[src] = act.x[src];
        act.ntilde[dst] = act.x[dst];
        for k in 0..n {
            act.field[k] += step * (w[self.class(k, dst)] - w[self.class(k, src)]);
        }
        act.log_psi += log_ratio;
    }

    /// Binds a parameter vector, giving a [`Wavefunction`].
    pub fn bind<'a>(&'a self, params: &'a [f64]) -> Result<BoundAnsatz<'a>> {
        self.check_params(params)?;
        Ok(BoundAnsatz { model: self, params })
    }

    pub fn to_structured(&self, params: &[f64]) -> Result<StructuredParams> {
        self.check_params(params)?;
        let l = &self.layout;
        let layers = l
            .convs
            .iter()
            .map(|conv| {
                let (cin, cout) = (conv.in_channels, conv.out_channels);
                let k = &params[conv.kernel.clone()];
                let kernel = (0..l.filter_sites)
                    .map(|fs| {
                        (0..cout)
                            .map(|mu| k[(fs * cout + mu) * cin..(fs * cout + mu + 1) * cin].to_vec())
                            .collect()
                    })
                    .collect();
                ConvParams {
                    kernel,
                    bias: params[conv.bias.clone()].to_vec(),
                }
            })
            .collect();
        Ok(StructuredParams {
            distance_classes: self.lattice.distance_classes().to_vec(),
            offsets: self.offsets.clone(),
            jastrow: params[l.jastrow.clone()].to_vec(),
            layers,
            norms: l
                .norms
                .iter()
                .map(|nl| NormParams {
                    gain: params[nl.gain.clone()].to_vec(),
                    offset: params[nl.offset.clone()].to_vec(),
                })
                .collect(),
            mixing: params[l.mixing.clone()].to_vec(),
        })
    }

    pub fn from_structured(&self, s: &StructuredParams) -> Result<Vec<f64>> {
        let l = &self.layout;
        let mut p = Vec::with_capacity(l.total);
        let bad = |what: &str| Error::Shape(format!("structured parameters: {what} has the wrong shape"));
        if s.jastrow.len() != l.jastrow.len() || s.layers.len() != l.convs.len() || s.norms.len() != l.norms.len() {
            return Err(bad("group count"));
        }
        p.extend_from_slice(&s.jastrow);
        for (conv, lp) in l.convs.iter().zip(&s.layers) {
            let before = p.len();
            for fs in &lp.kernel {
                for row in fs {
                    p.extend_from_slice(row);
                }
            }
            if p.len() - before != conv.kernel.len() || lp.bias.len() != conv.bias.len() {
                return Err(bad("kernel"));
            }
            p.extend_from_slice(&lp.bias);
        }
        for (nl, np) in l.norms.iter().zip(&s.norms) {
            if np.gain.len() != nl.gain.len() || np.offset.len() != nl.offset.len() {
                return Err(bad("norm"));
            }
            p.extend_from_slice(&np.gain);
            p.extend_from_slice(&np.offset);
        }
        if s.mixing.len() != l.mixing.len() {
            return Err(bad("mixing"));
        }
        p.extend_from_slice(&s.mixing);
        Ok(p)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Human-readable parameter export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredParams {
    pub distance_classes: Vec<u32>,
    pub offsets: Vec<Displacement>,
    pub jastrow: Vec<f64>,
    pub layers: Vec<ConvParams>,
    pub norms: Vec<NormParams>,
    pub mixing: Vec<f64>,
}

/// Kernel indexed `[filter site][out channel][in channel]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvParams {
    pub kernel: Vec<Vec<Vec<f64>>>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub gain: Vec<f64>,
    pub offset: Vec<f64>,
}

/// A model with a fixed parameter vector.
#[derive(Clone, Copy, Debug)]
pub struct BoundAnsatz<'a> {
    pub model: &'a BackflowJastrow,
    pub params: &'a [f64],
}

impl Wavefunction for BoundAnsatz<'_> {
    type State = Activations;

    fn n_sites(&self) -> usize {
        self.model.lattice.n_sites()
    }

    fn log_psi(&self, occ: &[u32]) -> f64 {
        self.model.forward(self.params, occ).log_psi
    }

    fn init_state(&self, occ: &[u32]) -> Activations {
        self.model.forward(self.params, occ)
    }

    fn state_log_psi(&self, state: &Activations) -> f64 {
        state.log_psi
    }

    fn log_ratio_hop(&self, occ: &[u32], state: &Activations, src: usize, dst: usize) -> f64 {
        self.model.hop_log_ratio(self.params, occ, state, src, dst)
    }

    fn accept_hop(&self, occ_after: &[u32], state: &mut Activations, src: usize, dst: usize, log_ratio: f64) {
        self.model.apply_hop(self.params, occ_after, state, src, dst, log_ratio);
    }
}
