//! Fixed-particle-number occupation configurations and the enumerated basis
//! used by the exact oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest basis the enumerator will build.
pub const MAX_BASIS_DIM: u128 = 5_000_000;

/// Occupation numbers of every site, with the total cached.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockConfig {
    occ: Vec<u32>,
    total: u32,
}

impl FockConfig {
    pub fn new(occ: Vec<u32>) -> Self {
        let total = occ.iter().sum();
        Self { occ, total }
    }

    /// Every site holding `filling` particles.
    pub fn uniform(n_sites: usize, filling: u32) -> Self {
        Self::new(vec![filling; n_sites])
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occ
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn n_sites(&self) -> usize {
        self.occ.len()
    }

    pub fn into_occupations(self) -> Vec<u32> {
        self.occ
    }

    /// Applies `a†_dst a_src` and returns the new configuration with the
    /// matrix element `sqrt(n_src (n_dst + 1))`.
    pub fn hop_move(&self, src: usize, dst: usize) -> Result<(FockConfig, f64)> {
        let mut next = self.clone();
        let amp = next.hop_in_place(src, dst)?;
        Ok((next, amp))
    }

    /// In-place variant of [`Self::hop_move`].
    pub fn hop_in_place(&mut self, src: usize, dst: usize) -> Result<f64> {
        let n = self.occ.len();
        for idx in [src, dst] {
            if idx >= n {
                return Err(Error::SiteIndex { index: idx, n_sites: n });
            }
        }
        if self.occ[src] == 0 {
            return Err(Error::EmptySource(src));
        }
        let amp = hop_amplitude(self.occ[src], self.occ[dst]);
        self.occ[src] -= 1;
        self.occ[dst] += 1;
        Ok(amp)
    }
}

/// `sqrt(n_src * (n_dst + 1))` for a hop taking `n_src -> n_src - 1`.
#[inline]
pub fn hop_amplitude(n_src: u32, n_dst: u32) -> f64 {
    ((n_src as f64) * (n_dst as f64 + 1.0)).sqrt()
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of configurations of `n_particles` bosons on `n_sites` sites.
pub fn fixed_n_dimension(n_sites: usize, n_particles: u32) -> u128 {
    if n_sites == 0 {
        return u128::from(n_particles == 0);
    }
    binomial(n_particles as u64 + n_sites as u64 - 1, n_particles as u64)
}

/// All configurations with a fixed particle number, ordered lexicographically
/// with the first site's occupation descending: for two sites and one particle
/// the order is `(1,0), (0,1)`.
#[derive(Clone, Debug)]
pub struct FockBasis {
    n_sites: usize,
    n_particles: u32,
    states: Vec<u32>,
}

/// Enumerates the fixed-N basis; fails beyond [`MAX_BASIS_DIM`] states.
pub fn enumerate_fixed_n(n_sites: usize, n_particles: u32) -> Result<FockBasis> {
    FockBasis::new(n_sites, n_particles)
}

impl FockBasis {
    pub fn new(n_sites: usize, n_particles: u32) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidArgument("basis needs at least one site".into()));
        }
        let dim = fixed_n_dimension(n_sites, n_particles);
        if dim > MAX_BASIS_DIM {
            return Err(Error::DimensionGuard {
                what: "fixed-N basis dimension",
                value: dim,
                limit: MAX_BASIS_DIM,
            });
        }
        let dim = dim as usize;
        let mut states = Vec::with_capacity(dim * n_sites);
        let mut current = vec![0u32; n_sites];
        fill(&mut states, &mut current, 0, n_particles);
        debug_assert_eq!(states.len(), dim * n_sites);
        Ok(Self {
            n_sites,
            n_particles,
            states,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len() / self.n_sites
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_particles(&self) -> u32 {
        self.n_particles
    }

    pub fn state(&self, index: usize) -> &[u32] {
        &self.states[index * self.n_sites..(index + 1) * self.n_sites]
    }

    pub fn config(&self, index: usize) -> FockConfig {
        FockConfig::new(self.state(index).to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.states.chunks_exact(self.n_sites)
    }

    /// Combinatorial rank of `occ`, or `None` if it is not in this sector.
    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        if occ.len() != self.n_sites || occ.iter().sum::<u32>() != self.n_particles {
            return None;
        }
        let mut index: u128 = 0;
        let mut remaining = self.n_particles as u64;
        for (k, &n_k) in occ.iter().enumerate() {
            let later = (self.n_sites - k - 1) as u64;
            let n_k = n_k as u64;
            // States sharing the prefix but with a larger value at site k.
            if later > 0 && remaining > n_k {
                index += binomial(remaining - n_k - 1 + later, later);
            }
            remaining -= n_k;
        }
        Some(index as usize)
    }
}

fn fill(out: &mut Vec<u32>, current: &mut [u32], site: usize, remaining: u32) {
    if site + 1 == current.len() {
        current[site] = remaining;
        out.extend_from_slice(current);
        return;
    }
    for v in (0..=remaining).rev() {
        current[site] = v;
        fill(out, current, site + 1, remaining - v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn hop_examples() {
        let (n, a) = FockConfig::new(vec![1, 1]).hop_move(0, 1).unwrap();
        assert_eq!(n.occupations(), &[0, 2]);
        assert!((a - 2f64.sqrt()).abs() < 1e-15);
        let (n, a) = FockConfig::new(vec![2, 0]).hop_move(0, 1).unwrap();
        assert_eq!(n.occupations(), &[1, 1]);
        assert!((a - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            FockConfig::new(vec![0, 1]).hop_move(0, 1),
            Err(Error::EmptySource(0))
        ));
        assert!(FockConfig::new(vec![1, 1]).hop_move(0, 5).is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_fixed_n(4, 4).unwrap().dim(), 35);
        assert_eq!(enumerate_fixed_n(9, 9).unwrap().dim(), 24310);
        let b = enumerate_fixed_n(2, 1).unwrap();
        assert_eq!(b.state(0), &[1, 0]);
        assert_eq!(b.state(1), &[0, 1]);
    }

    #[test]
    fn guard() {
        assert!(matches!(
            enumerate_fixed_n(64, 64),
            Err(Error::DimensionGuard { .. })
        ));
    }

    #[test]
    fn ranking_matches_order() {
        for (sites, n) in [(4, 4), (5, 5), (3, 7), (1, 3), (6, 2)] {
            let b = enumerate_fixed_n(sites, n).unwrap();
            let mut seen = HashSet::new();
            for (i, s) in b.iter().enumerate() {
                assert_eq!(s.iter().sum::<u32>(), n);
                assert!(seen.insert(s.to_vec()));
                assert_eq!(b.index_of(s), Some(i));
            }
            assert_eq!(b.dim() as u128, fixed_n_dimension(sites, n));
        }
        let b = enumerate_fixed_n(3, 2).unwrap();
        assert_eq!(b.index_of(&[1, 1, 1]), None);
    }

    proptest! {
        #[test]
        fn hop_then_reverse(occ in proptest::collection::vec(0u32..5, 2..8), s in 0usize..8, d in 0usize..8) {
            let n = occ.len();
            let (s, d) = (s % n, d % n);
            prop_assume!(s != d && occ[s] > 0);
            let start = FockConfig::new(occ.clone());
            let (mid, fwd) = start.hop_move(s, d).unwrap();
            prop_assert_eq!(mid.total(), start.total());
            let (back, rev) = mid.hop_move(d, s).unwrap();
            prop_assert_eq!(&back, &start);
            let expect = occ[s] as f64 * (occ[d] as f64 + 1.0);
            prop_assert!((fwd * rev - expect).abs() < 1e-12 * expect.max(1.0));
        }
    }
}
