//! Exact two-layer ReLU CNN constructions of the many-body Gutzwiller
//! projector and of the holon-doublon confinement potential, next to the
//! direct formulas they reproduce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Displacement, Lattice};

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// A patch `V` of offsets with target values `X`, measured on the input
/// `n_i - center`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub offsets: Vec<Displacement>,
    pub targets: Vec<f64>,
    /// `g_MB`.
    pub strength: f64,
    /// `Delta x`, compared with the shifted targets `x_v + xi`.
    pub delta_x: f64,
    /// Subtracted from every occupation first; `n̄` turns holes and
    /// doublons into `-1` and `+1`.
    pub center: f64,
    /// Input shift `xi` making every target nonzero for the CNN.
    pub xi: f64,
}

impl PatchSpec {
    pub fn shifted_targets(&self) -> Vec<f64> {
        self.targets.iter().map(|x| x + self.xi).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.offsets.is_empty() || self.offsets.len() != self.targets.len() {
            return Err(Error::InvalidArgument("patch needs one target per offset".into()));
        }
        for (k, a) in self.offsets.iter().enumerate() {
            if self.offsets[..k].contains(a) {
                return Err(Error::InvalidArgument(format!("duplicate patch offset {a:?}")));
            }
        }
        let t = self.shifted_targets();
        if t.iter().any(|&x| x == 0.0) {
            return Err(Error::InvalidArgument(
                "a shifted target is zero; choose a different input shift".into(),
            ));
        }
        let max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let max_abs = t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !(self.delta_x > max) || self.delta_x < max_abs / 2.0 {
            return Err(Error::InvalidArgument(format!(
                "delta_x = {} must exceed every shifted target ({max}) and half of their magnitudes",
                self.delta_x
            )));
        }
        Ok(())
    }
}

/// `g_MB sum_i prod_v 1[n_{T_v(i)} - center = x_v]`.
pub fn gutzwiller_direct(patch: &PatchSpec, lattice: &Lattice, occ: &[u32]) -> f64 {
    let count = (0..lattice.n_sites())
        .filter(|&i| {
            patch
                .offsets
                .iter()
                .zip(&patch.targets)
                .all(|(v, &x)| occ[lattice.translate(i, *v)] as f64 - patch.center == x)
        })
        .count();
    patch.strength * count as f64
}

/// Two-layer ReLU CNN with a single output channel summed over sites:
///
/// ```text
/// u_i      = n_i - center + xi
/// h1_{i,m} = ReLU(sum_v K1[v][m] u_{T_v(i)} + b1[m])
/// out      = sign * sum_i ReLU(sum_m K2[m] h1_{i,m} + b2)
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerCnn {
    pub offsets: Vec<Displacement>,
    pub center: f64,
    pub xi: f64,
    /// `[offset][channel]`.
    pub k1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub k2: Vec<f64>,
    pub b2: f64,
    pub sign: f64,
}

impl TwoLayerCnn {
    pub fn channels(&self) -> usize {
        self.b1.len()
    }

    pub fn site_output(&self, lattice: &Lattice, occ: &[u32], i: usize) -> f64 {
        let c = self.channels();
        let mut pre = self.b1.clone();
        for (v, row) in self.offsets.iter().zip(&self.k1) {
            let u = occ[lattice.translate(i, *v)] as f64 - self.center + self.xi;
            for m in 0..c {
                pre[m] += row[m] * u;
            }
        }
        let z: f64 = pre.iter().zip(&self.k2).map(|(p, k)| k * relu(*p)).sum::<f64>() + self.b2;
        self.sign * relu(z)
    }

    pub fn evaluate(&self, lattice: &Lattice, occ: &[u32]) -> f64 {
        (0..lattice.n_sites()).map(|i| self.site_output(lattice, occ, i)).sum()
    }
}

/// CNN equal to [`gutzwiller_direct`] on integer occupations.
///
/// Each offset gets the channel pair `ReLU(±(u/t_v - 1))`, whose sum is
/// `|u/t_v - 1|`, zero exactly on a match and at least `1/|t_v|` otherwise.
/// The second layer `ReLU(|g| - 2|g| Delta x sum)` then fires only when
/// every offset matches. For a single offset this is the two-channel network
/// with `K1 = (-1)^m / x`, `b1 = (-1)^(m+1)`, `K2 = -2 g Delta x`, `b2 = g`.
/// Negative `g` flips the output sign.
pub fn build_gutzwiller_cnn(patch: &PatchSpec) -> Result<TwoLayerCnn> {
    patch.validate()?;
    let t = patch.shifted_targets();
    let nv = patch.offsets.len();
    let c = 2 * nv;
    let mut k1 = vec![vec![0.0; c]; nv];
    let mut b1 = vec![0.0; c];
    for v in 0..nv {
        for m in 0..2 {
            // m = 0 is the paper's mu = 1.
            let s = if m == 0 { -1.0 } else { 1.0 };
            k1[v][2 * v + m] = s / t[v];
            b1[2 * v + m] = -s;
        }
    }
    let g = patch.strength.abs();
    Ok(TwoLayerCnn {
        offsets: patch.offsets.clone(),
        center: patch.center,
        xi: patch.xi,
        k1,
        b1,
        k2: vec![-2.0 * g * patch.delta_x; c],
        b2: g,
        sign: if patch.strength < 0.0 { -1.0 } else { 1.0 },
    })
}

/// Attractive holon-doublon potential `V_d`, `d = 1..=R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfinementSpec {
    /// `potential[d - 1] = V_d`, all `<= 0`.
    pub potential: Vec<f64>,
}

impl ConfinementSpec {
    pub fn range(&self) -> usize {
        self.potential.len()
    }

    /// `V_0 = sum_d |V_d|`.
    pub fn v0(&self) -> f64 {
        self.potential.iter().map(|v| v.abs()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.potential.is_empty() {
            return Err(Error::InvalidArgument("confinement range must be positive".into()));
        }
        if self.potential.iter().any(|&v| !(v <= 0.0)) {
            return Err(Error::InvalidArgument("confinement potential must be <= 0".into()));
        }
        Ok(())
    }
}

/// `-sum_ij V_{d_ij} 1[n_i = 0] 1[n_j = 2]` over `0 < d_ij <= R`.
pub fn confinement_direct(spec: &ConfinementSpec, lattice: &Lattice, occ: &[u32]) -> Result<f64> {
    spec.validate()?;
    if let Some(i) = occ.iter().position(|&n| n > 2) {
        return Err(Error::InvalidArgument(format!(
            "occupation {} at site {i} exceeds 2",
            occ[i]
        )));
    }
    let r = spec.range() as u32;
    let mut total = 0.0;
    for i in (0..occ.len()).filter(|&i| occ[i] == 0) {
        for j in (0..occ.len()).filter(|&j| occ[j] == 2) {
            let d = lattice.distance(i, j);
            if d > 0 && d <= r {
                total -= spec.potential[d as usize - 1];
            }
        }
    }
    Ok(total)
}

/// CNN equal to [`confinement_direct`] at unit filling when occupations stay
/// in `{0, 1, 2}`, no holon (doublon) has more than one doublon (holon)
/// within `R`, and distinct pairs are further than `R` apart.
///
/// On `u = n - 1`, channel 0 is `ReLU(u + 1) = n`, channel 1 is `ReLU(u)`
/// (doublon indicator), and channel `1 + d` is `ReLU` of the ring sum of `u`
/// at distance `d`. With `K2 = (-V_0, V_0, -V_1, ..., -V_R)` the first two
/// channels contribute `-V_0 (1 - hole_i)`, which closes the gate on every
/// site except holes, where the ring channels count the doublon once.
pub fn build_confinement_cnn(spec: &ConfinementSpec, lattice: &Lattice) -> Result<TwoLayerCnn> {
    spec.validate()?;
    let r = spec.range();
    let radius = r as i64;
    let mut offsets: Vec<Displacement> = Vec::new();
    let mut ring = Vec::new();
    let dy_range = if lattice.dimension() == 1 { 0..=0 } else { -radius..=radius };
    for dx in -radius..=radius {
        for dy in dy_range.clone() {
            let d = (dx.abs() + dy.abs()) as usize;
            if d <= r {
                offsets.push([dx, dy]);
                ring.push(d);
            }
        }
    }
    // Offsets that alias on a small torus would double count a site.
    let mut images: Vec<usize> = offsets.iter().map(|v| lattice.translate(0, *v)).collect();
    images.sort_unstable();
    images.dedup();
    if images.len() != offsets.len() {
        return Err(Error::InvalidArgument(format!(
            "confinement range {r} wraps around the lattice"
        )));
    }
    let c = 2 + r;
    let mut k1 = vec![vec![0.0; c]; offsets.len()];
    for (k, &d) in ring.iter().enumerate() {
        if d == 0 {
            k1[k][0] = 1.0;
            k1[k][1] = 1.0;
        } else {
            k1[k][1 + d] = 1.0;
        }
    }
    let mut b1 = vec![0.0; c];
    b1[0] = 1.0;
    let v0 = spec.v0();
    let mut k2 = vec![-v0, v0];
    k2.extend(spec.potential.iter().map(|v| -v));
    Ok(TwoLayerCnn {
        offsets,
        center: 1.0,
        xi: 0.0,
        k1,
        b1,
        k2,
        b2: 0.0,
        sign: 1.0,
    })
}
