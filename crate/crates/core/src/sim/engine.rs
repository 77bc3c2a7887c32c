use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::topology::{build_topology, Topology};
use crate::error::{Error, Result};
use crate::model::{PeerSelection, Scheme, SchemeSpec, Strategy, SystemParams};

pub const DEFAULT_WARMUP: usize = 500;
pub const DEFAULT_MEASURED_SLOTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimConfig {
    pub params: SystemParams,
    pub spec: SchemeSpec,
    pub slots: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl SimConfig {
    /// 500 warmup slots followed by 2000 measured slots, seed 0.
    pub fn new(params: SystemParams, spec: SchemeSpec) -> Self {
        Self {
            params,
            spec,
            slots: DEFAULT_WARMUP + DEFAULT_MEASURED_SLOTS,
            warmup: DEFAULT_WARMUP,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn measured_slots(&self) -> usize {
        self.slots - self.warmup
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.validate_run()
    }

    fn validate_run(&self) -> Result<()> {
        self.spec.validate()?;
        if self.slots == 0 {
            return Err(Error::params("slots must be >= 1"));
        }
        if self.warmup >= self.slots {
            return Err(Error::params(format!(
                "warmup ({}) must be smaller than slots ({})",
                self.warmup, self.slots
            )));
        }
        Ok(())
    }
}

/// Occupancy per buffer position, averaged over peers and measured slots.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalProfile {
    pub values: Vec<f64>,
    /// Spread of the per-slot occupancy (single run) or of the per-seed
    /// means (replicated runs).
    pub stddev: Vec<f64>,
    /// (peer, slot) samples behind each position.
    pub sample_count: u64,
}

impl EmpiricalProfile {
    pub fn last(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub profile: EmpiricalProfile,
    pub requests: u64,
    pub pull_deliveries: u64,
    pub push_deliveries: u64,
    pub mean_degree: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Request {
    pub requester: usize,
    pub target: usize,
    /// Absolute sequence number.
    pub chunk: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryKind {
    Pull,
    Push,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub from: usize,
    pub to: usize,
    pub chunk: u64,
    pub kind: DeliveryKind,
}

/// Everything that happened in one slot.
#[derive(Debug)]
pub struct SlotRecord<'a> {
    pub slot: u64,
    /// Peer that received chunk `slot` from the source.
    pub granted_to: usize,
    pub requests: &'a [Request],
    pub deliveries: &'a [Delivery],
}

pub trait SlotObserver {
    fn on_slot(&mut self, record: &SlotRecord<'_>);
}

impl SlotObserver for () {
    fn on_slot(&mut self, _: &SlotRecord<'_>) {}
}

/// Builds the random mesh from `config.seed` and runs on it.
pub fn run_simulation(config: &SimConfig) -> Result<SimOutcome> {
    config.validate()?;
    let p = &config.params;
    let topology = build_topology(p.overlay_size, p.neighbor_count, config.seed)?;
    run_on_topology(config, &topology)
}

/// Runs on a caller-supplied mesh; `params.neighbor_count` is ignored.
pub fn run_on_topology(config: &SimConfig, topology: &Topology) -> Result<SimOutcome> {
    run_observed(config, topology, &mut ())
}

pub fn run_observed<O: SlotObserver>(
    config: &SimConfig,
    topology: &Topology,
    observer: &mut O,
) -> Result<SimOutcome> {
    config.params.validate_without_neighbors()?;
    config.validate_run()?;
    if topology.len() != config.params.overlay_size {
        return Err(Error::LengthMismatch {
            left: topology.len(),
            right: config.params.overlay_size,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    // Keep the slot randomness apart from the topology stream.
    rng.set_stream(1);
    Ok(Engine::new(config, topology).run(&mut rng, observer))
}

struct Engine<'a> {
    config: &'a SimConfig,
    topology: &'a Topology,
    n: usize,
    /// Ownership ring per peer, indexed by `seq % n`.
    owned: Vec<FixedBitSet>,
    /// Ownership by position (index `pos - 1`) as of the start of the slot.
    snapshot: Vec<FixedBitSet>,
    /// Requestable positions the peer lacks.
    missing: Vec<FixedBitSet>,
    scratch: FixedBitSet,
    requests: Vec<Request>,
    deliveries: Vec<Delivery>,
    inbox: Vec<Vec<usize>>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    requests_issued: u64,
    pulls: u64,
    pushes: u64,
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimConfig, topology: &'a Topology) -> Self {
        let peers = config.params.overlay_size;
        let n = config.params.buffer_size;
        Self {
            config,
            topology,
            n,
            owned: vec![FixedBitSet::with_capacity(n); peers],
            snapshot: vec![FixedBitSet::with_capacity(n); peers],
            missing: vec![FixedBitSet::with_capacity(n); peers],
            scratch: FixedBitSet::with_capacity(n),
            requests: Vec::with_capacity(peers),
            deliveries: Vec::with_capacity(2 * peers),
            inbox: vec![Vec::new(); peers],
            sum: vec![0.0; n],
            sum_sq: vec![0.0; n],
            requests_issued: 0,
            pulls: 0,
            pushes: 0,
        }
    }

    fn run<O: SlotObserver>(mut self, rng: &mut ChaCha8Rng, observer: &mut O) -> SimOutcome {
        let peers = self.config.params.overlay_size;
        for slot in 0..self.config.slots as u64 {
            let ring = (slot % self.n as u64) as usize;
            for own in &mut self.owned {
                own.set(ring, false);
            }
            let granted_to = rng.gen_range(0..peers);
            self.owned[granted_to].insert(ring);

            self.take_snapshot(slot);
            if slot >= self.config.warmup as u64 {
                self.measure();
            }
            self.requests.clear();
            self.deliveries.clear();
            for peer in 0..peers {
                if let Some(req) = self.request_for(peer, slot, rng) {
                    self.requests.push(req);
                }
            }
            self.serve(slot, rng);
            for d in &self.deliveries {
                self.owned[d.to].insert((d.chunk % self.n as u64) as usize);
            }
            self.requests_issued += self.requests.len() as u64;
            observer.on_slot(&SlotRecord {
                slot,
                granted_to,
                requests: &self.requests,
                deliveries: &self.deliveries,
            });
        }
        self.finish()
    }

    fn take_snapshot(&mut self, slot: u64) {
        let n = self.n;
        for peer in 0..self.owned.len() {
            let (own, snap, miss) = (&self.owned[peer], &mut self.snapshot[peer], &mut self.missing[peer]);
            for idx in 0..n {
                // Position idx + 1 holds chunk slot - idx.
                let exists = idx as u64 <= slot;
                let held = exists && own.contains(((slot - idx as u64) % n as u64) as usize);
                snap.set(idx, held);
                miss.set(idx, exists && !held && idx + 1 < n);
            }
        }
    }

    fn measure(&mut self) {
        let peers = self.snapshot.len() as f64;
        for idx in 0..self.n {
            let count = self.snapshot.iter().filter(|s| s.contains(idx)).count() as f64;
            let frac = count / peers;
            self.sum[idx] += frac;
            self.sum_sq[idx] += frac * frac;
        }
    }

    fn request_for(&mut self, peer: usize, slot: u64, rng: &mut ChaCha8Rng) -> Option<Request> {
        let spec = self.config.spec;
        let neighbors = self.topology.neighbors(peer);
        if neighbors.is_empty() {
            return None;
        }
        let missing = &self.missing[peer];
        let snapshot = &self.snapshot;
        let scratch = &mut self.scratch;
        let (idx, target) = match spec.scheme {
            Scheme::ChunkFirst => {
                scratch.clear();
                for &nb in neighbors {
                    scratch.union_with(&snapshot[nb]);
                }
                scratch.intersect_with(missing);
                let idx = pick(spec.strategy, scratch, rng)?;
                let target = match spec.peer_selection {
                    PeerSelection::RandomPeer => *neighbors.choose(rng)?,
                    PeerSelection::RandomUsefulPeer => {
                        let holders = neighbors.iter().filter(|&&nb| snapshot[nb].contains(idx));
                        let k = rng.gen_range(0..holders.clone().count());
                        *holders.clone().nth(k)?
                    }
                };
                (idx, target)
            }
            Scheme::PeerFirst => {
                let target = match spec.peer_selection {
                    PeerSelection::RandomPeer => *neighbors.choose(rng)?,
                    PeerSelection::RandomUsefulPeer => {
                        let useful = neighbors.iter().filter(|&&nb| !snapshot[nb].is_disjoint(missing));
                        let count = useful.clone().count();
                        if count == 0 {
                            return None;
                        }
                        *useful.clone().nth(rng.gen_range(0..count))?
                    }
                };
                scratch.clone_from(&snapshot[target]);
                scratch.intersect_with(missing);
                (pick(spec.strategy, scratch, rng)?, target)
            }
            Scheme::Epidemic => {
                let idx = pick(spec.strategy, missing, rng)?;
                (idx, *neighbors.choose(rng)?)
            }
            Scheme::PushPull => {
                // Greedy over the pull region d+1..n-1 (indices d..n-2).
                let idx = missing.maximum().filter(|&i| i >= self.config.params.split_point)?;
                (idx, *neighbors.choose(rng)?)
            }
        };
        Some(Request {
            requester: peer,
            target,
            chunk: slot - idx as u64,
        })
    }

    fn serve(&mut self, slot: u64, rng: &mut ChaCha8Rng) {
        let cap = self.config.spec.reply_cap(&self.config.params);
        for inbox in &mut self.inbox {
            inbox.clear();
        }
        for (k, req) in self.requests.iter().enumerate() {
            let idx = (slot - req.chunk) as usize;
            if self.snapshot[req.target].contains(idx) {
                self.inbox[req.target].push(k);
            }
        }
        let push_pull = self.config.spec.scheme == Scheme::PushPull;
        let push_limit = self.config.params.split_point.min(self.n - 1);
        for peer in 0..self.inbox.len() {
            let inbox = &mut self.inbox[peer];
            let take = inbox.len().min(cap);
            let (chosen, _) = inbox.partial_shuffle(rng, take);
            for &k in chosen.iter() {
                let req = self.requests[k];
                self.deliveries.push(Delivery {
                    from: peer,
                    to: req.requester,
                    chunk: req.chunk,
                    kind: DeliveryKind::Pull,
                });
            }
            self.pulls += take as u64;
            if push_pull && take < cap {
                // Latest-first blind push over positions 1..d.
                let newest = self.snapshot[peer].minimum().filter(|&i| i < push_limit);
                let neighbors = self.topology.neighbors(peer);
                if let (Some(idx), false) = (newest, neighbors.is_empty()) {
                    let to = *neighbors.choose(rng).expect("non-empty");
                    self.deliveries.push(Delivery {
                        from: peer,
                        to,
                        chunk: slot - idx as u64,
                        kind: DeliveryKind::Push,
                    });
                    self.pushes += 1;
                }
            }
        }
    }

    fn finish(self) -> SimOutcome {
        let measured = (self.config.slots - self.config.warmup) as f64;
        let values: Vec<f64> = self.sum.iter().map(|s| s / measured).collect();
        let stddev = self
            .sum_sq
            .iter()
            .zip(&values)
            .map(|(sq, mean)| (sq / measured - mean * mean).max(0.0).sqrt())
            .collect();
        SimOutcome {
            profile: EmpiricalProfile {
                values,
                stddev,
                sample_count: (self.config.params.overlay_size * self.config.measured_slots()) as u64,
            },
            requests: self.requests_issued,
            pull_deliveries: self.pulls,
            push_deliveries: self.pushes,
            mean_degree: self.topology.mean_degree(),
        }
    }
}

/// Chooses a position index among the set bits according to `strategy`.
fn pick<R: Rng>(strategy: Strategy, candidates: &FixedBitSet, rng: &mut R) -> Option<usize> {
    match strategy {
        Strategy::LatestFirst => candidates.minimum(),
        Strategy::Greedy => candidates.maximum(),
        Strategy::Random => {
            let count = candidates.count_ones(..);
            if count == 0 {
                return None;
            }
            candidates.ones().nth(rng.gen_range(0..count))
        }
    }
}
