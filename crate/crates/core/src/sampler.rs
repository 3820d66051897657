//! Metropolis-Hastings sampling of `|psi|^2` over fixed-N configurations.
//!
//! A proposal picks a particle uniformly at random, so its site `i` is
//! chosen with probability `n_i / N`, and moves it to a uniformly chosen
//! neighbor slot. Each chain keeps the list of particle positions next to the
//! occupations, which makes the occupation-weighted draw O(1).

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::wavefunction::Wavefunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_chains: usize,
    pub burn_in_sweeps: usize,
    pub sweeps_per_sample: usize,
    pub samples_total: usize,
    pub seed: u64,
    /// Burn-in applied when persistent chains are reused after a parameter
    /// update.
    #[serde(default = "default_warm_start")]
    pub warm_start_sweeps: usize,
    /// Chains sample `|psi|^(2q)`; samples carry weights `|psi|^(2(1-q))`.
    /// `q = 1` is plain Born sampling.
    #[serde(default = "default_born_exponent")]
    pub born_exponent: f64,
}

fn default_warm_start() -> usize {
    10
}

fn default_born_exponent() -> f64 {
    1.0
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_chains: 16,
            burn_in_sweeps: 100,
            sweeps_per_sample: 1,
            samples_total: 8192,
            seed: 0,
            warm_start_sweeps: default_warm_start(),
            born_exponent: default_born_exponent(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 || self.sweeps_per_sample == 0 || self.samples_total == 0 {
            return Err(Error::Config(
                "n_chains, sweeps_per_sample and samples_total must be positive".into(),
            ));
        }
        if self.samples_total % self.n_chains != 0 {
            return Err(Error::Config(format!(
                "samples_total {} is not divisible by n_chains {}",
                self.samples_total, self.n_chains
            )));
        }
        if !(self.born_exponent > 0.0 && self.born_exponent <= 1.0) {
            return Err(Error::Config(format!(
                "born_exponent must lie in (0, 1], got {}",
                self.born_exponent
            )));
        }
        Ok(())
    }

    pub fn samples_per_chain(&self) -> usize {
        self.samples_total / self.n_chains
    }
}

/// Generator of chain `index` for a run seeded with `seed`.
pub fn chain_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// A single hop proposal `src -> dst` with `ln[g(n|n') / g(n'|n)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopProposal {
    pub src: usize,
    pub dst: usize,
    pub log_g_ratio: f64,
    particle: usize,
}

fn log_g_ratio(lattice: &Lattice, occ: &[u32], src: usize, dst: usize) -> f64 {
    let z_src = lattice.neighbors(src).len() as f64;
    let z_dst = lattice.neighbors(dst).len() as f64;
    ((occ[dst] as f64 + 1.0) / occ[src] as f64 * z_src / z_dst).ln()
}

/// Occupation-weighted hop proposal without a particle list. Draws the same
/// distribution as [`ChainState::propose`].
pub fn propose_hop<R: Rng + ?Sized>(occ: &[u32], lattice: &Lattice, rng: &mut R) -> Result<HopProposal> {
    let total: u32 = occ.iter().sum();
    if total == 0 {
        return Err(Error::InvalidArgument("cannot propose a hop with N = 0".into()));
    }
    let mut k = rng.random_range(0..total);
    let mut src = 0;
    while k >= occ[src] {
        k -= occ[src];
        src += 1;
    }
    let nb = lattice.neighbors(src);
    let dst = nb[rng.random_range(0..nb.len())];
    Ok(HopProposal {
        src,
        dst,
        log_g_ratio: log_g_ratio(lattice, occ, src, dst),
        particle: usize::MAX,
    })
}

/// Proposal probability `g(n'|n)` of moving one particle `src -> dst`.
pub fn proposal_probability(lattice: &Lattice, occ: &[u32], src: usize, dst: usize) -> f64 {
    let total: u32 = occ.iter().sum();
    if total == 0 || occ[src] == 0 {
        return 0.0;
    }
    let nb = lattice.neighbors(src);
    let slots = nb.iter().filter(|&&s| s == dst).count();
    occ[src] as f64 / total as f64 * slots as f64 / nb.len() as f64
}

/// Exact Metropolis-Hastings transition probability `g(n'|n) p_acc(n -> n')`
/// for the one-hop move `src -> dst`.
pub fn hop_transition_probability<W: Wavefunction>(
    wf: &W,
    lattice: &Lattice,
    occ: &[u32],
    src: usize,
    dst: usize,
) -> f64 {
    let g = proposal_probability(lattice, occ, src, dst);
    if g == 0.0 {
        return 0.0;
    }
    let mut next = occ.to_vec();
    next[src] -= 1;
    next[dst] += 1;
    let delta = wf.log_psi(&next) - wf.log_psi(occ);
    let log_acc = 2.0 * delta + log_g_ratio(lattice, occ, src, dst);
    g * log_acc.min(0.0).exp()
}

/// One Markov chain.
#[derive(Clone, Debug)]
pub struct ChainState<S> {
    occ: Vec<u32>,
    particles: Vec<usize>,
    log_psi: f64,
    wf_state: S,
    rng: ChaCha8Rng,
    exponent: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl<S> ChainState<S> {
    pub fn occupations(&self) -> &[u32] {
        &self.occ
    }

    pub fn log_psi(&self) -> f64 {
        self.log_psi
    }

    pub fn wf_state(&self) -> &S {
        &self.wf_state
    }

    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn n_particles(&self) -> usize {
        self.particles.len()
    }

    /// Draws a hop using the particle list.
    pub fn propose(&mut self, lattice: &Lattice) -> HopProposal {
        let particle = self.rng.random_range(0..self.particles.len());
        let src = self.particles[particle];
        let nb = lattice.neighbors(src);
        let dst = nb[self.rng.random_range(0..nb.len())];
        HopProposal {
            src,
            dst,
            log_g_ratio: log_g_ratio(lattice, &self.occ, src, dst),
            particle,
        }
    }

    pub fn snapshot(&self) -> ChainSnapshot {
        ChainSnapshot {
            occ: self.occ.clone(),
            particles: self.particles.clone(),
            rng: self.rng.clone(),
            accepted: self.accepted,
            proposed: self.proposed,
        }
    }
}

fn particle_list(occ: &[u32]) -> Vec<usize> {
    occ.iter()
        .enumerate()
        .flat_map(|(s, &n)| std::iter::repeat_n(s, n as usize))
        .collect()
}

impl<S: Clone + Send + Sync> ChainState<S> {
    pub fn new<W: Wavefunction<State = S>>(wf: &W, occ: Vec<u32>, rng: ChaCha8Rng) -> Result<Self> {
        if occ.len() != wf.n_sites() {
            return Err(Error::Shape(format!(
                "configuration has {} sites, wavefunction {}",
                occ.len(),
                wf.n_sites()
            )));
        }
        if occ.iter().all(|&n| n == 0) {
            return Err(Error::InvalidArgument("chain needs N >= 1".into()));
        }
        let wf_state = wf.init_state(&occ);
        let log_psi = wf.state_log_psi(&wf_state);
        if !log_psi.is_finite() {
            return Err(Error::NonFinite(format!(
                "log psi = {log_psi} at the initial configuration {occ:?}"
            )));
        }
        Ok(Self {
            particles: particle_list(&occ),
            occ,
            log_psi,
            wf_state,
            rng,
            exponent: 1.0,
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn restore<W: Wavefunction<State = S>>(wf: &W, snapshot: ChainSnapshot) -> Result<Self> {
        let mut chain = Self::new(wf, snapshot.occ, snapshot.rng)?;
        if particle_list(&chain.occ).len() != snapshot.particles.len() {
            return Err(Error::Checkpoint("chain particle list does not match occupations".into()));
        }
        chain.particles = snapshot.particles;
        chain.accepted = snapshot.accepted;
        chain.proposed = snapshot.proposed;
        Ok(chain)
    }

    /// Targets `|psi|^(2q)` instead of `|psi|^2`.
    pub fn with_born_exponent(mut self, q: f64) -> Self {
        self.exponent = q;
        self
    }

    /// Recomputes the cached amplitude after the wavefunction changed.
    pub fn rebind<W: Wavefunction<State = S>>(&mut self, wf: &W) -> Result<()> {
        self.wf_state = wf.init_state(&self.occ);
        self.log_psi = wf.state_log_psi(&self.wf_state);
        if !self.log_psi.is_finite() {
            return Err(Error::NonFinite(format!(
                "log psi = {} at {:?} after a parameter update",
                self.log_psi, self.occ
            )));
        }
        Ok(())
    }

    /// One Metropolis-Hastings update; returns whether the move was accepted.
    pub fn metropolis_step<W: Wavefunction<State = S>>(&mut self, wf: &W, lattice: &Lattice) -> Result<bool> {
        let p = self.propose(lattice);
        let r = wf.log_ratio_hop(&self.occ, &self.wf_state, p.src, p.dst);
        if r.is_nan() || r == f64::INFINITY {
            return Err(Error::NonFinite(format!(
                "log-amplitude ratio {r} for hop {}->{} from {:?}",
                p.src, p.dst, self.occ
            )));
        }
        self.proposed += 1;
        let u: f64 = self.rng.random();
        if u.ln() < 2.0 * self.exponent * r + p.log_g_ratio {
            self.occ[p.src] -= 1;
            self.occ[p.dst] += 1;
            self.particles[p.particle] = p.dst;
            wf.accept_hop(&self.occ, &mut self.wf_state, p.src, p.dst, r);
            self.log_psi += r;
            self.accepted += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// `N` proposed moves.
    pub fn sweep<W: Wavefunction<State = S>>(&mut self, wf: &W, lattice: &Lattice) -> Result<u64> {
        let mut acc = 0;
        for _ in 0..self.particles.len() {
            acc += self.metropolis_step(wf, lattice)? as u64;
        }
        Ok(acc)
    }
}

/// Serializable chain position and generator state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainSnapshot {
    pub occ: Vec<u32>,
    pub particles: Vec<usize>,
    pub rng: ChaCha8Rng,
    pub accepted: u64,
    pub proposed: u64,
}

/// The uniform state `n_i = N / n_sites` when it exists, otherwise `N mod
/// n_sites` extra particles placed on random distinct sites.
pub fn initial_configuration<R: Rng + ?Sized>(n_sites: usize, n_particles: u32, rng: &mut R) -> Vec<u32> {
    let base = n_particles / n_sites as u32;
    let extra = (n_particles % n_sites as u32) as usize;
    let mut occ = vec![base; n_sites];
    for s in rand::seq::index::sample(rng, n_sites, extra) {
        occ[s] += 1;
    }
    occ
}

/// Samples of all chains, chain-major.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub n_chains: usize,
    pub configs: Vec<Vec<u32>>,
    pub log_psi: Vec<f64>,
    /// Acceptance rate of each chain during this run.
    pub acceptance: Vec<f64>,
    /// Chains that accepted nothing while sampling.
    pub stuck_chains: Vec<usize>,
    /// Exponent `q` of the sampled distribution `|psi|^(2q)`.
    pub born_exponent: f64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn mean_acceptance(&self) -> f64 {
        self.acceptance.iter().sum::<f64>() / self.acceptance.len().max(1) as f64
    }
}

/// Persistent set of chains driven by one [`SamplerConfig`].
#[derive(Clone, Debug)]
pub struct Sampler<S> {
    pub config: SamplerConfig,
    pub chains: Vec<ChainState<S>>,
    burned_in: bool,
}

impl<S: Clone + Send + Sync> Sampler<S> {
    /// Chains start at `init` if given, otherwise at [`initial_configuration`].
    pub fn new<W: Wavefunction<State = S>>(
        config: SamplerConfig,
        wf: &W,
        n_particles: u32,
        init: Option<&[u32]>,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(init) = init {
            if init.iter().sum::<u32>() != n_particles {
                return Err(Error::InvalidArgument(format!(
                    "initial configuration holds {} particles, expected {n_particles}",
                    init.iter().sum::<u32>()
                )));
            }
        }
        let chains = (0..config.n_chains)
            .map(|c| {
                let mut rng = chain_rng(config.seed, c);
                let occ = match init {
                    Some(x) => x.to_vec(),
                    None => initial_configuration(wf.n_sites(), n_particles, &mut rng),
                };
                Ok(ChainState::new(wf, occ, rng)?.with_born_exponent(config.born_exponent))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            chains,
            burned_in: false,
        })
    }

    pub fn from_snapshots<W: Wavefunction<State = S>>(
        config: SamplerConfig,
        wf: &W,
        snapshots: Vec<ChainSnapshot>,
    ) -> Result<Self> {
        config.validate()?;
        if snapshots.len() != config.n_chains {
            return Err(Error::Checkpoint(format!(
                "{} chain snapshots for {} chains",
                snapshots.len(),
                config.n_chains
            )));
        }
        let chains = snapshots
            .into_iter()
            .map(|s| Ok(ChainState::restore(wf, s)?.with_born_exponent(config.born_exponent)))
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            chains,
            burned_in: true,
        })
    }

    pub fn snapshots(&self) -> Vec<ChainSnapshot> {
        self.chains.iter().map(ChainState::snapshot).collect()
    }

    /// Draws `samples_total` samples. The first call burns in for
    /// `burn_in_sweeps`, later calls for `warm_start_sweeps`. Cached
    /// amplitudes are always refreshed against `wf` first.
    pub fn sample<W: Wavefunction<State = S>>(&mut self, wf: &W, lattice: &Lattice) -> Result<SampleSet> {
        let warm = self.burned_in;
        let burn = if warm {
            self.config.warm_start_sweeps
        } else {
            self.config.burn_in_sweeps
        };
        let per_chain = self.config.samples_per_chain();
        let spp = self.config.sweeps_per_sample;
        let results: Vec<Result<(Vec<Vec<u32>>, Vec<f64>, u64, u64)>> = self
            .chains
            .par_iter_mut()
            .map(|chain| {
                // The wavefunction may differ from the one the chain was built with.
                chain.rebind(wf)?;
                for _ in 0..burn {
                    chain.sweep(wf, lattice)?;
                }
                let (acc0, prop0) = (chain.accepted, chain.proposed);
                let mut configs = Vec::with_capacity(per_chain);
                let mut logs = Vec::with_capacity(per_chain);
                for _ in 0..per_chain {
                    for _ in 0..spp {
                        chain.sweep(wf, lattice)?;
                    }
                    configs.push(chain.occ.clone());
                    logs.push(chain.log_psi);
                }
                Ok((configs, logs, chain.accepted - acc0, chain.proposed - prop0))
            })
            .collect();
        self.burned_in = true;

        let mut set = SampleSet {
            n_chains: self.config.n_chains,
            configs: Vec::with_capacity(self.config.samples_total),
            log_psi: Vec::with_capacity(self.config.samples_total),
            acceptance: Vec::with_capacity(self.config.n_chains),
            stuck_chains: Vec::new(),
            born_exponent: self.config.born_exponent,
        };
        for (c, r) in results.into_iter().enumerate() {
            let (configs, logs, acc, prop) = r?;
            if acc == 0 {
                log::warn!("chain {c} accepted none of {prop} proposals");
                set.stuck_chains.push(c);
            }
            set.acceptance.push(acc as f64 / prop.max(1) as f64);
            set.configs.extend(configs);
            set.log_psi.extend(logs);
        }
        Ok(set)
    }
}

/// Fresh sampler run from `init` (or the default start) in one call.
pub fn run_sampling<W: Wavefunction>(
    config: &SamplerConfig,
    wf: &W,
    lattice: &Lattice,
    n_particles: u32,
    init: Option<&[u32]>,
) -> Result<SampleSet> {
    Sampler::new(config.clone(), wf, n_particles, init)?.sample(wf, lattice)
}

/// Writes samples one per line after a `# L N seed` header.
pub fn write_samples(path: impl AsRef<Path>, linear_size: usize, n_particles: u32, seed: u64, configs: &[Vec<u32>]) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "# L={linear_size} N={n_particles} seed={seed}")?;
        for c in configs {
            let line: Vec<String> = c.iter().map(u32::to_string).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Reads a sample dump; returns `(L, N, seed, configs)`.
pub fn read_samples(path: impl AsRef<Path>) -> Result<(usize, u32, u64, Vec<Vec<u32>>)> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| Error::InvalidArgument("empty sample file".into()))?;
    let field = |key: &str| -> Result<&str> {
        header
            .split_whitespace()
            .find_map(|t| t.strip_prefix(key))
            .ok_or_else(|| Error::InvalidArgument(format!("sample header lacks {key}")))
    };
    let bad = |what: &str| Error::InvalidArgument(format!("malformed {what} in sample file"));
    let l = field("L=")?.parse().map_err(|_| bad("L"))?;
    let n = field("N=")?.parse().map_err(|_| bad("N"))?;
    let seed = field("seed=")?.parse().map_err(|_| bad("seed"))?;
    let mut configs = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let c = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("occupation")))
            .collect::<Result<Vec<u32>>>()?;
        configs.push(c);
    }
    Ok((l, n, seed, configs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::TableAnsatz;
    use crate::wavefunction::Uniform;

    #[test]
    fn correction_ratio_examples() {
        let g = Lattice::chain(4).unwrap();
        let occ = [1, 1, 1, 1];
        let fwd = proposal_probability(&g, &occ, 0, 1);
        assert_eq!(fwd, 0.25 * 0.5);
        let rev = proposal_probability(&g, &[0, 2, 1, 1], 1, 0);
        assert_eq!(rev, 0.5 * 0.5);
        assert!((log_g_ratio(&g, &occ, 0, 1) - 2f64.ln()).abs() < 1e-15);
        assert!((log_g_ratio(&g, &[2, 0, 0, 0], 0, 1) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn uniform_acceptance_is_ratio() {
        let g = Lattice::chain(4).unwrap();
        let wf = Uniform { n_sites: 4 };
        let p = hop_transition_probability(&wf, &g, &[2, 0, 1, 1], 0, 1);
        assert!((p - 0.5 * 0.5 * 0.5).abs() < 1e-15);
        let p = hop_transition_probability(&wf, &g, &[1, 1, 1, 1], 0, 1);
        assert!((p - 0.25 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn outside_support_never_accepted() {
        let g = Lattice::chain(2).unwrap();
        let basis = crate::fock::FockBasis::new(2, 2).unwrap();
        let t = TableAnsatz::from_amplitudes(basis, &[0.0, 1.0, 0.0]).unwrap();
        let mut chain = ChainState::new(&t, vec![1, 1], chain_rng(3, 0)).unwrap();
        for _ in 0..1000 {
            assert!(!chain.metropolis_step(&t, &g).unwrap());
        }
        assert_eq!(chain.occupations(), &[1, 1]);
        assert_eq!(chain.proposed, 1000);
    }

    #[test]
    fn particle_list_stays_consistent() {
        let g = Lattice::square(3).unwrap();
        let wf = Uniform { n_sites: 9 };
        let mut chain = ChainState::new(&wf, vec![3, 0, 0, 1, 0, 0, 2, 0, 3], chain_rng(5, 2)).unwrap();
        for _ in 0..500 {
            chain.sweep(&wf, &g).unwrap();
            let mut counted = vec![0u32; 9];
            for &p in &chain.particles {
                counted[p] += 1;
            }
            assert_eq!(counted, chain.occ);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = Lattice::chain(6).unwrap();
        let wf = Uniform { n_sites: 6 };
        let cfg = SamplerConfig {
            n_chains: 3,
            burn_in_sweeps: 5,
            sweeps_per_sample: 1,
            samples_total: 30,
            seed: 11,
            warm_start_sweeps: 2,
            born_exponent: 1.0,
        };
        let a = run_sampling(&cfg, &wf, &g, 6, None).unwrap();
        let b = run_sampling(&cfg, &wf, &g, 6, None).unwrap();
        assert_eq!(a.configs, b.configs);
        assert!(a.configs.iter().all(|c| c.iter().sum::<u32>() == 6));
        let c = run_sampling(&SamplerConfig { seed: 12, ..cfg }, &wf, &g, 6, None).unwrap();
        assert_ne!(a.configs, c.configs);
    }

    #[test]
    fn snapshot_resume_matches() {
        let g = Lattice::chain(5).unwrap();
        let wf = Uniform { n_sites: 5 };
        let cfg = SamplerConfig {
            n_chains: 2,
            burn_in_sweeps: 3,
            sweeps_per_sample: 2,
            samples_total: 10,
            seed: 1,
            warm_start_sweeps: 1,
            born_exponent: 1.0,
        };
        let mut s = Sampler::new(cfg.clone(), &wf, 5, None).unwrap();
        s.sample(&wf, &g).unwrap();
        let json = serde_json::to_string(&s.snapshots()).unwrap();
        let next = s.sample(&wf, &g).unwrap();
        let snaps: Vec<ChainSnapshot> = serde_json::from_str(&json).unwrap();
        let mut r = Sampler::from_snapshots(cfg, &wf, snaps).unwrap();
        assert_eq!(r.sample(&wf, &g).unwrap().configs, next.configs);
    }

    #[test]
    fn invalid_config() {
        let mut cfg = SamplerConfig::default();
        cfg.samples_total = 100;
        cfg.n_chains = 16;
        assert!(cfg.validate().is_err());
        cfg.n_chains = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn initial_configuration_has_n() {
        let mut rng = chain_rng(0, 0);
        assert_eq!(initial_configuration(4, 4, &mut rng), vec![1, 1, 1, 1]);
        let c = initial_configuration(5, 7, &mut rng);
        assert_eq!(c.iter().sum::<u32>(), 7);
        assert!(c.iter().all(|&n| n == 1 || n == 2));
    }

    #[test]
    fn sample_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.txt");
        let configs = vec![vec![1, 0, 2], vec![0, 3, 0]];
        write_samples(&p, 3, 3, 42, &configs).unwrap();
        assert_eq!(read_samples(&p).unwrap(), (3, 3, 42, configs));
    }
}
