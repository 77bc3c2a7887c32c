//! Mean-field diffusion model of pull-based chunk scheduling.
//!
//! Every peer is assumed to see the same per-position presence probability
//! `P_i`, where position 1 holds the newest chunk and position `n` is the one
//! being played. A scheme is characterized by `Z_i`, the probability that a
//! holder of the chunk at position `i` hands it to one more peer in a slot,
//! and the profile follows `P_{i+1} = P_i + min(P_i Z_i, 1 - P_i)`.

mod binomial;
mod chunk;
mod fixed_point;
mod metrics;
mod profile;
mod push_pull;
mod rates;
mod single;

pub use chunk::{availability, chunk_weight, expected_inverse_count, MissingCountDistribution};
pub use fixed_point::Convergence;
pub use metrics::{playout_metrics, PlayoutMetrics};
pub use profile::{iterate_profile, iterate_profile_with, run_model, ModelRun, PROFILE_TOLERANCE};
pub use push_pull::{push_profile, push_pull_profile, PUSH_PULL_TOLERANCE};
pub use rates::{
    peer_prob_cf, peer_prob_pf, z_chunk_first, z_epidemic, z_peer_first, PeerChoice, PullRates,
};
pub use single::{
    closed_form_slot, single_chunk_closed_form, single_chunk_ode, single_chunk_profile,
    LogForm,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Scalar description of the overlay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemParams {
    /// Number of ordinary peers `N` (the source is not counted).
    pub overlay_size: usize,
    /// Buffer length `n` in slots.
    pub buffer_size: usize,
    /// Neighbors per peer `v`.
    pub neighbor_count: usize,
    /// Chunks a peer may upload per slot `U`.
    pub reply_number: usize,
    /// Push-pull split position `d`.
    pub split_point: usize,
}

impl SystemParams {
    /// N = 100, n = 40, v = 10, U = 1, d = 20.
    pub const fn reference() -> Self {
        Self {
            overlay_size: 100,
            buffer_size: 40,
            neighbor_count: 10,
            reply_number: 1,
            split_point: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_without_neighbors()?;
        if self.neighbor_count < 1 {
            return Err(Error::params(format!(
                "neighbor_count v must be >= 1 (got {})",
                self.neighbor_count
            )));
        }
        if self.neighbor_count + 1 > self.overlay_size {
            return Err(Error::params(format!(
                "neighbor_count v must be <= N - 1 = {} (got {})",
                self.overlay_size.saturating_sub(1),
                self.neighbor_count
            )));
        }
        Ok(())
    }

    /// Checks everything except the neighbor bounds. Used by the simulator
    /// when it is handed an explicit topology.
    pub fn validate_without_neighbors(&self) -> Result<()> {
        if self.overlay_size < 1 {
            return Err(Error::params("overlay_size N must be >= 1 (got 0)"));
        }
        if self.buffer_size < 2 {
            return Err(Error::params(format!(
                "buffer_size n must be >= 2 (got {})",
                self.buffer_size
            )));
        }
        if self.reply_number < 1 {
            return Err(Error::params("reply_number U must be >= 1 (got 0)"));
        }
        if self.split_point < 1 || self.split_point > self.buffer_size {
            return Err(Error::params(format!(
                "split_point d must lie in [1, n = {}] (got {})",
                self.buffer_size, self.split_point
            )));
        }
        Ok(())
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    LatestFirst,
    Greedy,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::LatestFirst, Strategy::Greedy, Strategy::Random];
}

/// How much buffer-map knowledge a chunk decision uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionMode {
    /// Own buffer only.
    ZeroNeighbor,
    /// One already-chosen neighbor's map.
    OneNeighbor,
    /// All `v` neighbors' maps.
    VNeighbor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PeerSelection {
    RandomPeer,
    RandomUsefulPeer,
}

impl PeerSelection {
    pub const ALL: [PeerSelection; 2] = [PeerSelection::RandomPeer, PeerSelection::RandomUsefulPeer];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    ChunkFirst,
    PeerFirst,
    Epidemic,
    PushPull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReplyMode {
    /// At most one request served per slot.
    SingleReply,
    /// Up to `U` requests served per slot.
    MultiReply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub strategy: Strategy,
    pub peer_selection: PeerSelection,
    pub reply_mode: ReplyMode,
}

impl SchemeSpec {
    pub fn new(
        scheme: Scheme,
        strategy: Strategy,
        peer_selection: PeerSelection,
        reply_mode: ReplyMode,
    ) -> Self {
        Self {
            scheme,
            strategy,
            peer_selection,
            reply_mode,
        }
    }

    pub fn chunk_first(strategy: Strategy, peer_selection: PeerSelection, reply_mode: ReplyMode) -> Self {
        Self::new(Scheme::ChunkFirst, strategy, peer_selection, reply_mode)
    }

    pub fn peer_first(strategy: Strategy, peer_selection: PeerSelection, reply_mode: ReplyMode) -> Self {
        Self::new(Scheme::PeerFirst, strategy, peer_selection, reply_mode)
    }

    pub fn epidemic(strategy: Strategy) -> Self {
        Self::new(
            Scheme::Epidemic,
            strategy,
            PeerSelection::RandomPeer,
            ReplyMode::SingleReply,
        )
    }

    /// Push-pull fixes its own chunk handling (greedy pull, latest-first push).
    pub fn push_pull() -> Self {
        Self::new(
            Scheme::PushPull,
            Strategy::Greedy,
            PeerSelection::RandomPeer,
            ReplyMode::SingleReply,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.scheme == Scheme::Epidemic {
            if self.peer_selection != PeerSelection::RandomPeer {
                return Err(Error::params("epidemic scheme requires random peer selection"));
            }
            if self.reply_mode != ReplyMode::SingleReply {
                return Err(Error::params("epidemic scheme requires single reply"));
            }
        }
        Ok(())
    }

    /// Per-slot upload cap implied by the reply mode.
    pub fn reply_cap(&self, params: &SystemParams) -> usize {
        match self.reply_mode {
            ReplyMode::SingleReply => 1,
            ReplyMode::MultiReply => params.reply_number,
        }
    }
}

/// Opt-in closed-form shortcuts. The exact binomial forms are the default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ModelOptions {
    /// Replace `(1 - x)^v` by `exp(-v x)` in single-reply success terms.
    pub exponential_approx: bool,
    /// Serve every request (`s_k = k`) in multi-reply terms.
    pub unlimited_reply: bool,
}

/// Per-position presence probabilities, position 1 first.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionProfile(Vec<f64>);

impl DiffusionProfile {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for &v in &values {
            crate::error::check_probability("profile entry", v)?;
        }
        Ok(Self(values))
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based access.
    pub fn at(&self, position: usize) -> Option<f64> {
        position.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    /// Value at the last position, the playout probability.
    pub fn last(&self) -> f64 {
        self.0.last().copied().unwrap_or(0.0)
    }

    pub fn is_monotone(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }
}

macro_rules! impl_text {
    ($ty:ty, $what:literal, { $($variant:path => [$($name:literal),+]),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($($name)|+ => Ok($variant),)+
                    other => Err(Error::params(format!("unknown {} `{}`", $what, other))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = match self {
                    $($variant => [$($name),+][0],)+
                };
                f.write_str(name)
            }
        }
    };
}

impl_text!(Scheme, "scheme", {
    Scheme::ChunkFirst => ["cf", "chunk-first"],
    Scheme::PeerFirst => ["pf", "peer-first"],
    Scheme::Epidemic => ["ep", "epidemic"],
    Scheme::PushPull => ["pushpull", "push-pull"],
});

impl_text!(Strategy, "strategy", {
    Strategy::LatestFirst => ["latest", "latest-first"],
    Strategy::Greedy => ["greedy"],
    Strategy::Random => ["random"],
});

impl_text!(PeerSelection, "peer selection", {
    PeerSelection::RandomPeer => ["random"],
    PeerSelection::RandomUsefulPeer => ["useful", "random-useful"],
});

impl_text!(ReplyMode, "reply mode", {
    ReplyMode::SingleReply => ["single"],
    ReplyMode::MultiReply => ["multi"],
});

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_params_are_valid() {
        SystemParams::reference().validate().unwrap();
    }

    #[test]
    fn params_invariants() {
        let base = SystemParams::reference();
        let bad = [
            SystemParams { buffer_size: 1, split_point: 1, ..base },
            SystemParams { neighbor_count: 0, ..base },
            SystemParams { neighbor_count: 100, ..base },
            SystemParams { reply_number: 0, ..base },
            SystemParams { split_point: 0, ..base },
            SystemParams { split_point: 41, ..base },
            SystemParams { overlay_size: 0, ..base },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
        let msg = SystemParams { buffer_size: 1, split_point: 1, ..base }
            .validate()
            .unwrap_err()
            .to_string();
        assert!(msg.contains("n must be >= 2"), "{msg}");
    }

    #[test]
    fn epidemic_constraints() {
        assert!(SchemeSpec::epidemic(Strategy::Random).validate().is_ok());
        let bad = SchemeSpec::new(
            Scheme::Epidemic,
            Strategy::Random,
            PeerSelection::RandomUsefulPeer,
            ReplyMode::SingleReply,
        );
        assert!(bad.validate().is_err());
    }

    #[test]
    fn names_round_trip() {
        for s in ["cf", "pf", "ep", "pushpull"] {
            assert_eq!(s.parse::<Scheme>().unwrap().to_string(), s);
        }
        for s in ["latest", "greedy", "random"] {
            assert_eq!(s.parse::<Strategy>().unwrap().to_string(), s);
        }
        for s in ["random", "useful"] {
            assert_eq!(s.parse::<PeerSelection>().unwrap().to_string(), s);
        }
        assert!("bogus".parse::<Scheme>().is_err());
    }

    #[test]
    fn profile_rejects_out_of_range() {
        assert!(DiffusionProfile::new(vec![0.1, 1.2]).is_err());
        let p = DiffusionProfile::new(vec![0.1, 0.5, 0.95]).unwrap();
        assert_eq!(p.at(1), Some(0.1));
        assert_eq!(p.at(0), None);
        assert_eq!(p.last(), 0.95);
    }
}
