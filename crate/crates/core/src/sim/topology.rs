use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Undirected overlay, one sorted neighbor list per peer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adjacency: Vec<Vec<usize>>,
}

impl Topology {
    /// `n` isolated peers.
    pub fn empty(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::params(format!("edge ({a}, {b}) names a peer outside 0..{n}")));
            }
            if a == b {
                return Err(Error::params(format!("self-loop on peer {a}")));
            }
            if adjacency[a].contains(&b) {
                return Err(Error::params(format!("duplicate edge ({a}, {b})")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { adjacency })
    }

    /// Random graph by repeatedly pairing two peers that still have fewer
    /// than `v` neighbors. Gives up after a bounded number of rejected
    /// pairings, so a few peers may end below `v`.
    pub fn random<R: Rng + ?Sized>(n: usize, v: usize, rng: &mut R) -> Result<Self> {
        if n > 0 && v >= n {
            return Err(Error::InfeasibleTopology { nodes: n, degree: v });
        }
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::with_capacity(v); n];
        if v == 0 {
            return Ok(Self { adjacency });
        }
        let mut open: Vec<usize> = (0..n).collect();
        let budget = 64 * n * v;
        let mut rejected = 0;
        while open.len() >= 2 && rejected < budget {
            let i = rng.gen_range(0..open.len());
            let mut j = rng.gen_range(0..open.len() - 1);
            if j >= i {
                j += 1;
            }
            let (a, b) = (open[i], open[j]);
            if adjacency[a].contains(&b) {
                rejected += 1;
                continue;
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            if adjacency[open[hi]].len() == v {
                open.swap_remove(hi);
            }
            if adjacency[open[lo]].len() == v {
                open.swap_remove(lo);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { adjacency })
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, peer: usize) -> &[usize] {
        &self.adjacency[peer]
    }

    pub fn degree(&self, peer: usize) -> usize {
        self.adjacency[peer].len()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        self.adjacency.iter().map(Vec::len).sum::<usize>() as f64 / self.len() as f64
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// [`Topology::random`] driven by a generator seeded from `seed`.
pub fn build_topology(n: usize, v: usize, seed: u64) -> Result<Topology> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Topology::random(n, v, &mut rng)
}
