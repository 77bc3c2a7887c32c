use std::collections::HashSet;

use pullstream::model::{PeerSelection, ReplyMode, SchemeSpec, Strategy, SystemParams};
use pullstream::sim::{
    build_topology, run_observed, run_on_topology, run_simulation, DeliveryKind, SimConfig, SlotObserver,
    SlotRecord, Topology,
};

/// Rebuilds every buffer from source grants and deliveries alone and checks
/// each slot's traffic against the buffers as they stood when it started.
struct Mirror<'a> {
    topology: &'a Topology,
    n: u64,
    cap: usize,
    warmup: u64,
    owned: Vec<HashSet<u64>>,
    sums: Vec<f64>,
}

impl<'a> Mirror<'a> {
    fn new(config: &SimConfig, topology: &'a Topology) -> Self {
        Self {
            topology,
            n: config.params.buffer_size as u64,
            cap: config.spec.reply_cap(&config.params),
            warmup: config.warmup as u64,
            owned: vec![HashSet::new(); config.params.overlay_size],
            sums: vec![0.0; config.params.buffer_size],
        }
    }
}

impl SlotObserver for Mirror<'_> {
    fn on_slot(&mut self, r: &SlotRecord<'_>) {
        let t = r.slot;
        let live = |s: u64| s <= t && t - s < self.n;
        for own in &mut self.owned {
            own.retain(|&s| live(s));
        }
        self.owned[r.granted_to].insert(t);

        if t >= self.warmup {
            let peers = self.owned.len() as f64;
            for (idx, sum) in self.sums.iter_mut().enumerate() {
                if let Some(s) = t.checked_sub(idx as u64) {
                    *sum += self.owned.iter().filter(|o| o.contains(&s)).count() as f64 / peers;
                }
            }
        }

        let mut requesters = HashSet::new();
        for q in r.requests {
            assert!(requesters.insert(q.requester), "slot {t}: peer {} asked twice", q.requester);
            assert!(self.topology.neighbors(q.requester).contains(&q.target));
            assert!(live(q.chunk));
            assert!(!self.owned[q.requester].contains(&q.chunk), "slot {t}: request for an owned chunk");
        }

        let mut uploads = vec![0usize; self.owned.len()];
        for d in r.deliveries {
            // Only chunks held at the start of the slot can be sent.
            assert!(self.owned[d.from].contains(&d.chunk), "slot {t}: {d:?} sent a chunk it lacked");
            assert!(self.topology.neighbors(d.from).contains(&d.to));
            if d.kind == DeliveryKind::Pull {
                assert!(r
                    .requests
                    .iter()
                    .any(|q| q.requester == d.to && q.target == d.from && q.chunk == d.chunk));
            }
            uploads[d.from] += 1;
        }
        assert!(uploads.iter().all(|&u| u <= self.cap), "slot {t}: reply cap exceeded");
        for d in r.deliveries {
            self.owned[d.to].insert(d.chunk);
        }
    }
}

fn params() -> SystemParams {
    SystemParams {
        overlay_size: 40,
        buffer_size: 16,
        neighbor_count: 5,
        reply_number: 3,
        split_point: 8,
    }
}

fn every_spec() -> Vec<SchemeSpec> {
    let mut specs = vec![SchemeSpec::push_pull()];
    for strategy in Strategy::ALL {
        specs.push(SchemeSpec::epidemic(strategy));
        for sel in PeerSelection::ALL {
            for reply in [ReplyMode::SingleReply, ReplyMode::MultiReply] {
                specs.push(SchemeSpec::chunk_first(strategy, sel, reply));
                specs.push(SchemeSpec::peer_first(strategy, sel, reply));
            }
        }
    }
    specs
}

#[test]
fn traffic_respects_protocol_and_explains_occupancy() {
    for (k, spec) in every_spec().into_iter().enumerate() {
        let config = SimConfig {
            slots: 400,
            warmup: 100,
            seed: k as u64,
            ..SimConfig::new(params(), spec)
        };
        let topology = build_topology(40, 5, config.seed).unwrap();
        let mut mirror = Mirror::new(&config, &topology);
        let out = run_observed(&config, &topology, &mut mirror).unwrap();
        for (idx, sum) in mirror.sums.iter().enumerate() {
            let rebuilt = sum / config.measured_slots() as f64;
            assert!(
                (rebuilt - out.profile.values[idx]).abs() < 1e-12,
                "{spec:?} position {}: {rebuilt} vs {}",
                idx + 1,
                out.profile.values[idx]
            );
        }
    }
}

#[test]
fn same_seed_same_profile() {
    for spec in every_spec() {
        let config = SimConfig {
            slots: 300,
            warmup: 50,
            seed: 11,
            ..SimConfig::new(params(), spec)
        };
        assert_eq!(run_simulation(&config).unwrap(), run_simulation(&config).unwrap());
    }
}

#[test]
fn lone_peer_receives_everything() {
    let p = SystemParams {
        overlay_size: 1,
        ..params()
    };
    for spec in every_spec() {
        let config = SimConfig {
            slots: 200,
            warmup: 20,
            ..SimConfig::new(p, spec)
        };
        let out = run_on_topology(&config, &Topology::empty(1)).unwrap();
        assert!(out.profile.values.iter().all(|&x| x == 1.0), "{spec:?}");
    }
}

#[test]
fn isolated_peers_keep_one_copy() {
    let spec = SchemeSpec::peer_first(Strategy::Greedy, PeerSelection::RandomUsefulPeer, ReplyMode::SingleReply);
    let config = SimConfig {
        slots: 10_500,
        warmup: 500,
        ..SimConfig::new(params(), spec)
    };
    let out = run_on_topology(&config, &Topology::empty(40)).unwrap();
    for &x in &out.profile.values {
        assert!((x - 1.0 / 40.0).abs() <= 0.01, "{x}");
    }
    assert_eq!(out.requests, 0);
}

#[test]
fn random_mesh_degree() {
    for seed in 0..100 {
        let t = build_topology(100, 10, seed).unwrap();
        let mean = t.mean_degree();
        assert!((9.0..=10.0).contains(&mean), "seed {seed}: {mean}");
        for peer in 0..100 {
            let nb = t.neighbors(peer);
            assert!(!nb.contains(&peer));
            assert_eq!(nb.iter().collect::<HashSet<_>>().len(), nb.len());
            assert!(nb.iter().all(|&o| t.neighbors(o).contains(&peer)));
        }
    }
}

#[test]
fn occupancy_grows_along_the_buffer() {
    for spec in [
        SchemeSpec::peer_first(Strategy::LatestFirst, PeerSelection::RandomUsefulPeer, ReplyMode::SingleReply),
        SchemeSpec::chunk_first(Strategy::Random, PeerSelection::RandomPeer, ReplyMode::SingleReply),
        SchemeSpec::epidemic(Strategy::Greedy),
        SchemeSpec::push_pull(),
    ] {
        let out = run_simulation(&SimConfig::new(SystemParams::reference(), spec).with_seed(3)).unwrap();
        let v = &out.profile.values;
        assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(v.windows(2).all(|w| w[1] >= w[0] - 0.03), "{spec:?} {v:?}");
        assert_eq!(out.profile.sample_count, 100 * 2000);
    }
}
