//! The amplitude interface shared by the variational ansatz, the exact
//! table adapter, and every estimator that needs wavefunction ratios.

/// A real, non-negative wavefunction over fixed-N occupation configurations,
/// accessed through its log-amplitude.
///
/// `State` caches whatever makes single-hop ratios cheap for the current
/// configuration of a Markov chain. `log_psi` may return `-inf` for
/// configurations outside the support.
pub trait Wavefunction: Sync {
    type State: Clone + Send + Sync;

    fn n_sites(&self) -> usize;

    fn log_psi(&self, occ: &[u32]) -> f64;

    fn init_state(&self, occ: &[u32]) -> Self::State;

    fn state_log_psi(&self, state: &Self::State) -> f64;

    /// `log psi(n') - log psi(n)` where `n'` moves one particle from `src`
    /// to `dst`. Requires `occ[src] > 0`.
    fn log_ratio_hop(&self, occ: &[u32], state: &Self::State, src: usize, dst: usize) -> f64 {
        let mut next = occ.to_vec();
        next[src] -= 1;
        next[dst] += 1;
        self.log_psi(&next) - self.state_log_psi(state)
    }

    /// Refreshes `state` after the hop `src -> dst` was accepted.
    /// `occ_after` is the configuration after the move.
    fn accept_hop(
        &self,
        occ_after: &[u32],
        state: &mut Self::State,
        src: usize,
        dst: usize,
        log_ratio: f64,
    );
}

/// Log-amplitude cache for wavefunctions without an incremental update.
#[derive(Clone, Copy, Debug)]
pub struct LogValue(pub f64);

/// Wavefunction with constant amplitude on every configuration.
#[derive(Clone, Copy, Debug)]
pub struct Uniform {
    pub n_sites: usize,
}

impl Wavefunction for Uniform {
    type State = LogValue;

    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn log_psi(&self, _occ: &[u32]) -> f64 {
        0.0
    }

    fn init_state(&self, _occ: &[u32]) -> LogValue {
        LogValue(0.0)
    }

    fn state_log_psi(&self, state: &LogValue) -> f64 {
        state.0
    }

    fn log_ratio_hop(&self, _occ: &[u32], _state: &LogValue, _src: usize, _dst: usize) -> f64 {
        0.0
    }

    fn accept_hop(&self, _occ: &[u32], _state: &mut LogValue, _src: usize, _dst: usize, _r: f64) {}
}
