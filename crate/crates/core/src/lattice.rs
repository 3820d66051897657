//! Lattice geometry: site indexing, neighbor slots, bonds, translations and
//! minimum-image L1 distances.
//!
//! Sites are indexed row-major, `site = x * ly + y`. Chains are stored with
//! `ly = 1` so the same code paths serve one and two dimensions.
//!
//! On a periodic `L = 2` square lattice (or a periodic 2-site chain) the
//! wraparound makes both neighbor slots along an axis point at the same site.
//! These duplicates are kept, so every physical bond appears twice in
//! [`Lattice::bonds`] and the Hamiltonian double-counts it relative to an
//! open-boundary reading.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    /// Periodic L×L square lattice.
    Square,
    /// Periodic ring of L sites.
    Chain,
    /// Open chain of L sites. Only meaningful for the Hamiltonian and the
    /// exact oracle; translations still wrap.
    OpenChain,
}

/// Integer displacement, reduced modulo the lattice extents when applied.
pub type Displacement = [i64; 2];

#[derive(Clone, Debug)]
pub struct Lattice {
    kind: LatticeKind,
    extent: [usize; 2],
    dim: usize,
    neighbors: Vec<Vec<usize>>,
    bonds: Vec<(usize, usize)>,
    distance: Vec<u32>,
    distance_classes: Vec<u32>,
    class_of_distance: Vec<usize>,
}

impl Lattice {
    /// Periodic L×L square lattice.
    pub fn square(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::LatticeSize(format!("square lattice needs L >= 2, got {l}")));
        }
        Ok(Self::build(LatticeKind::Square, [l, l], 2))
    }

    /// Periodic chain of `l` sites.
    pub fn chain(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::LatticeSize(format!("chain needs L >= 2, got {l}")));
        }
        Ok(Self::build(LatticeKind::Chain, [l, 1], 1))
    }

    /// Open chain of `l` sites.
    pub fn open_chain(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::LatticeSize(format!("open chain needs L >= 2, got {l}")));
        }
        Ok(Self::build(LatticeKind::OpenChain, [l, 1], 1))
    }

    pub fn new(kind: LatticeKind, l: usize) -> Result<Self> {
        match kind {
            LatticeKind::Square => Self::square(l),
            LatticeKind::Chain => Self::chain(l),
            LatticeKind::OpenChain => Self::open_chain(l),
        }
    }

    fn build(kind: LatticeKind, extent: [usize; 2], dim: usize) -> Self {
        let n = extent[0] * extent[1];
        let periodic = kind != LatticeKind::OpenChain;
        let mut neighbors = vec![Vec::with_capacity(2 * dim); n];
        let mut bonds = Vec::with_capacity(n * dim);
        for site in 0..n {
            let [x, y] = [site / extent[1], site % extent[1]];
            for axis in 0..dim {
                let len = extent[axis];
                let coord = if axis == 0 { x } else { y };
                for step in [1i64, -1] {
                    if !periodic && (coord as i64 + step < 0 || coord as i64 + step >= len as i64) {
                        continue;
                    }
                    let mut v = [0i64; 2];
                    v[axis] = step;
                    let other = wrap_translate(extent, site, v);
                    neighbors[site].push(other);
                    if step == 1 {
                        bonds.push((site, other));
                    }
                }
            }
        }

        let mut distance = vec![0u32; n * n];
        for i in 0..n {
            for j in 0..n {
                distance[i * n + j] = raw_distance(extent, dim, periodic, i, j);
            }
        }
        let mut distance_classes: Vec<u32> = distance.clone();
        distance_classes.sort_unstable();
        distance_classes.dedup();
        let max_d = *distance_classes.last().unwrap_or(&0) as usize;
        let mut class_of_distance = vec![usize::MAX; max_d + 1];
        for (c, &d) in distance_classes.iter().enumerate() {
            class_of_distance[d as usize] = c;
        }

        Self {
            kind,
            extent,
            dim,
            neighbors,
            bonds,
            distance,
            distance_classes,
            class_of_distance,
        }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    /// Linear size: `L` for a square lattice, the number of sites for a chain.
    pub fn linear_size(&self) -> usize {
        self.extent[0]
    }

    pub fn extent(&self) -> [usize; 2] {
        self.extent
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn n_sites(&self) -> usize {
        self.extent[0] * self.extent[1]
    }

    pub fn is_periodic(&self) -> bool {
        self.kind != LatticeKind::OpenChain
    }

    /// Coordination number of the bulk (`2 * dimension`).
    pub fn coordination(&self) -> usize {
        2 * self.dim
    }

    /// Neighbor slots of `site`, duplicates included.
    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }

    /// Undirected bonds, each listed once (twice on wrapped L = 2 axes).
    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    pub fn coords(&self, site: usize) -> [usize; 2] {
        [site / self.extent[1], site % self.extent[1]]
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        (x % self.extent[0]) * self.extent[1] + (y % self.extent[1])
    }

    fn check(&self, site: usize) -> Result<()> {
        if site >= self.n_sites() {
            return Err(Error::SiteIndex {
                index: site,
                n_sites: self.n_sites(),
            });
        }
        Ok(())
    }

    /// Minimum-image L1 distance between two sites.
    pub fn min_image_l1_distance(&self, i: usize, j: usize) -> Result<u32> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.distance(i, j))
    }

    /// Unchecked table lookup.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> u32 {
        self.distance[i * self.n_sites() + j]
    }

    pub fn distance_table(&self) -> &[u32] {
        &self.distance
    }

    pub fn max_distance(&self) -> u32 {
        *self.distance_classes.last().unwrap_or(&0)
    }

    /// Sorted distinct distances.
    pub fn distance_classes(&self) -> &[u32] {
        &self.distance_classes
    }

    pub fn n_distance_classes(&self) -> usize {
        self.distance_classes.len()
    }

    /// Index into [`Self::distance_classes`] of the pair `(i, j)`.
    #[inline]
    pub fn distance_class(&self, i: usize, j: usize) -> usize {
        self.class_of_distance[self.distance(i, j) as usize]
    }

    /// Periodic translation of `site` by `v`.
    pub fn translate_site(&self, site: usize, v: Displacement) -> Result<usize> {
        self.check(site)?;
        Ok(self.translate(site, v))
    }

    #[inline]
    pub fn translate(&self, site: usize, v: Displacement) -> usize {
        wrap_translate(self.extent, site, v)
    }

    /// Displacement `v` with `translate(from, v) == to`, reduced to `[0, extent)`.
    pub fn displacement(&self, from: usize, to: usize) -> Displacement {
        let a = self.coords(from);
        let b = self.coords(to);
        let mut v = [0i64; 2];
        for axis in 0..2 {
            v[axis] = (b[axis] as i64 - a[axis] as i64).rem_euclid(self.extent[axis] as i64);
        }
        v
    }

    /// Index of a reduced displacement in `0..n_sites`; equals the site reached
    /// from site 0.
    pub fn displacement_index(&self, v: Displacement) -> usize {
        self.translate(0, v)
    }

    /// Applies a translation to an occupation vector: the value at site `i`
    /// moves to `T_v(i)`.
    pub fn translate_values<T: Copy>(&self, values: &[T], v: Displacement) -> Vec<T> {
        let mut out = values.to_vec();
        for (i, &val) in values.iter().enumerate() {
            out[self.translate(i, v)] = val;
        }
        out
    }

    /// Offsets of the Chebyshev ball `|v|_inf <= radius` along the active axes,
    /// in row-major order.
    pub fn kernel_offsets(&self, radius: usize) -> Vec<Displacement> {
        let r = radius as i64;
        if self.dim == 1 {
            (-r..=r).map(|dx| [dx, 0]).collect()
        } else {
            let mut out = Vec::with_capacity((2 * radius + 1).pow(2));
            for dx in -r..=r {
                for dy in -r..=r {
                    out.push([dx, dy]);
                }
            }
            out
        }
    }

    /// Sites of the first half of the lattice: `x < L/2` (an `L/2 × L`
    /// strip for square lattices, the first `L/2` sites of a chain).
    pub fn half_partition(&self) -> Vec<usize> {
        (0..self.n_sites())
            .filter(|&s| self.coords(s)[0] < self.extent[0] / 2)
            .collect()
    }
}

fn wrap_translate(extent: [usize; 2], site: usize, v: Displacement) -> usize {
    let x = site / extent[1];
    let y = site % extent[1];
    let nx = (x as i64 + v[0]).rem_euclid(extent[0] as i64) as usize;
    let ny = (y as i64 + v[1]).rem_euclid(extent[1] as i64) as usize;
    nx * extent[1] + ny
}

fn raw_distance(extent: [usize; 2], dim: usize, periodic: bool, i: usize, j: usize) -> u32 {
    let a = [i / extent[1], i % extent[1]];
    let b = [j / extent[1], j % extent[1]];
    (0..dim)
        .map(|axis| {
            let d = a[axis].abs_diff(b[axis]);
            if periodic {
                d.min(extent[axis] - d) as u32
            } else {
                d as u32
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn square_four() {
        let g = Lattice::square(4).unwrap();
        assert_eq!(g.n_sites(), 16);
        assert_eq!(g.coordination(), 4);
        assert_eq!(g.max_distance(), 4);
        for s in 0..16 {
            assert_eq!(g.neighbors(s).len(), 4);
        }
        assert_eq!(g.bonds().len(), 32);
    }

    #[test]
    fn square_three_classes() {
        let g = Lattice::square(3).unwrap();
        assert_eq!(g.distance_classes(), &[0, 1, 2]);
    }

    #[test]
    fn square_two_duplicates_neighbors() {
        let g = Lattice::square(2).unwrap();
        for s in 0..4 {
            let mut n = g.neighbors(s).to_vec();
            assert_eq!(n.len(), 4);
            n.sort_unstable();
            let mut distinct = n.clone();
            distinct.dedup();
            assert_eq!(distinct.len(), 2);
            for d in distinct {
                assert_eq!(n.iter().filter(|&&x| x == d).count(), 2);
            }
        }
    }

    #[test]
    fn rejects_small() {
        assert!(Lattice::square(1).is_err());
        assert!(Lattice::square(0).is_err());
        assert!(Lattice::chain(1).is_err());
    }

    #[test]
    fn distances() {
        let g = Lattice::square(4).unwrap();
        assert_eq!(g.min_image_l1_distance(g.site(0, 0), g.site(0, 3)).unwrap(), 1);
        assert_eq!(g.min_image_l1_distance(g.site(0, 0), g.site(2, 2)).unwrap(), 4);
        for i in 0..16 {
            assert_eq!(g.min_image_l1_distance(i, i).unwrap(), 0);
        }
        assert!(g.min_image_l1_distance(0, 16).is_err());
    }

    #[test]
    fn translations() {
        let g = Lattice::square(4).unwrap();
        assert_eq!(g.translate_site(g.site(3, 3), [1, 0]).unwrap(), g.site(0, 3));
        assert_eq!(g.translate_site(5, [0, 0]).unwrap(), 5);
        let mut s = 7;
        for _ in 0..4 {
            s = g.translate(s, [1, 1]);
        }
        assert_eq!(s, 7);
        assert!(g.translate_site(99, [0, 0]).is_err());
    }

    #[test]
    fn chain_geometry() {
        let g = Lattice::chain(5).unwrap();
        assert_eq!(g.coordination(), 2);
        assert_eq!(g.bonds().len(), 5);
        assert_eq!(g.distance_classes(), &[0, 1, 2]);
        assert_eq!(g.kernel_offsets(1), vec![[-1, 0], [0, 0], [1, 0]]);
        let open = Lattice::open_chain(2).unwrap();
        assert_eq!(open.bonds(), &[(0, 1)]);
        assert_eq!(open.neighbors(0), &[1]);
    }

    #[test]
    fn half_partition_square() {
        let g = Lattice::square(4).unwrap();
        let a = g.half_partition();
        assert_eq!(a.len(), 8);
        assert_eq!(Lattice::chain(4).unwrap().half_partition(), vec![0, 1]);
    }

    proptest! {
        #[test]
        fn distance_symmetric_and_translation_invariant(
            l in 2usize..8, i in 0usize..64, j in 0usize..64, vx in -10i64..10, vy in -10i64..10
        ) {
            let g = Lattice::square(l).unwrap();
            let n = g.n_sites();
            let (i, j) = (i % n, j % n);
            prop_assert_eq!(g.distance(i, j), g.distance(j, i));
            prop_assert_eq!(g.distance(i, j) == 0, i == j);
            let (ti, tj) = (g.translate(i, [vx, vy]), g.translate(j, [vx, vy]));
            prop_assert_eq!(g.distance(ti, tj), g.distance(i, j));
            prop_assert_eq!(g.translate(ti, [-vx, -vy]), i);
            prop_assert_eq!(g.max_distance() as usize, 2 * (l / 2));
            if l >= 3 {
                let nn = (0..n).filter(|&k| g.distance(i, k) == 1).count();
                prop_assert_eq!(nn, 4);
            }
        }

        #[test]
        fn translation_is_bijective(l in 2usize..7, vx in -8i64..8, vy in -8i64..8) {
            let g = Lattice::square(l).unwrap();
            let mut img: Vec<usize> = (0..g.n_sites()).map(|s| g.translate(s, [vx, vy])).collect();
            img.sort_unstable();
            prop_assert_eq!(img, (0..g.n_sites()).collect::<Vec<_>>());
        }
    }
}
