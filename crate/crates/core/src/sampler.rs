//! Seeded generation of random unipolar graphs and random perfect graphs.
//!
//! A sample is drawn by (1) choosing the central-clique size from the
//! weighted law in [`crate::combinatorics`], (2) choosing the central clique
//! as a uniform subset, (3) partitioning the remaining vertices by a uniform
//! set partition and turning every part into a clique, and (4) flipping an
//! independent fair coin for each central-to-rest vertex pair. A random
//! perfect graph additionally flips one fair coin to decide whether to keep
//! the graph or its complement.

use crate::combinatorics::{sample_central_size, sample_set_partition};
use crate::graph::{Graph, PartitionedGraph};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seed material identifying one trial: a base seed plus a stream index.
///
/// Identical `(seed, stream, n)` reproduces the same sample bit-for-bit
/// within a build. The child generator is a ChaCha8 stream whose 256-bit key
/// is produced by a SplitMix64 chain over `seed + (stream + 1) * GOLDEN`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSeed {
    pub seed: u64,
    pub stream: u64,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SampleSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        SampleSeed { seed, stream }
    }

    /// Derives the per-trial random number generator.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = self
            .seed
            .wrapping_add(GOLDEN.wrapping_mul(self.stream.wrapping_add(1)));
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

/// Which side of the complementation coin a perfect sample landed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Unipolar,
    CoUnipolar,
}

/// A random perfect graph together with the unipolar witness it was built
/// from. When the orientation is co-unipolar, `graph` is the complement of
/// `witness.graph()`.
#[derive(Clone, Debug)]
pub struct PerfectSample {
    pub graph: Graph,
    pub orientation: Orientation,
    pub witness: PartitionedGraph,
}

/// Draws a random unipolar graph on `n >= 1` vertices with its witness
/// partition.
pub fn sample_unipolar(n: usize, seed: SampleSeed) -> PartitionedGraph {
    let mut rng = seed.rng();
    sample_unipolar_with_rng(n, &mut rng)
}

pub(crate) fn sample_unipolar_with_rng(n: usize, rng: &mut ChaCha8Rng) -> PartitionedGraph {
    assert!(n >= 1, "unipolar samples need at least one vertex");
    let m = sample_central_size(n, rng).expect("n >= 1");
    let central = sample_subset(n, m, rng);
    let mut in_central = vec![false; n];
    for &v in &central {
        in_central[v] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| !in_central[v]).collect();

    let partition = sample_set_partition(rest.len(), rng);
    let mut parts = vec![central.clone()];
    parts.resize(1 + partition.block_count(), Vec::new());
    for (idx, &v) in rest.iter().enumerate() {
        parts[1 + partition.block_of(idx)].push(v);
    }

    let mut graph = Graph::new(n);
    for part in &parts {
        for (i, &u) in part.iter().enumerate() {
            for &v in &part[i + 1..] {
                graph.add_edge(u, v);
            }
        }
    }
    // Cross edges: one fair coin per (central, rest) pair, in lexicographic
    // order, drawn 64 pairs at a time.
    for &u in &central {
        let mut taken = 0;
        while taken < rest.len() {
            let chunk = (rest.len() - taken).min(64);
            let mut word = rng.next_u64();
            if chunk < 64 {
                word &= (1u64 << chunk) - 1;
            }
            while word != 0 {
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                graph.add_edge(u, rest[taken + b]);
            }
            taken += chunk;
        }
    }
    PartitionedGraph::new(graph, parts).expect("construction satisfies the partition invariants")
}

/// Uniform `m`-subset of `{0..n-1}`, ascending.
fn sample_subset<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<usize> {
    let mut verts: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        verts.swap(i, j);
    }
    let mut chosen = verts[..m].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Draws a random perfect graph on `n >= 1` vertices: a unipolar sample,
/// kept or complemented according to an independent fair coin.
pub fn sample_perfect(n: usize, seed: SampleSeed) -> PerfectSample {
    let mut rng = seed.rng();
    let witness = sample_unipolar_with_rng(n, &mut rng);
    let orientation = if rng.random_bool(0.5) {
        Orientation::Unipolar
    } else {
        Orientation::CoUnipolar
    };
    let graph = match orientation {
        Orientation::Unipolar => witness.graph().clone(),
        Orientation::CoUnipolar => witness.graph().complement(),
    };
    PerfectSample {
        graph,
        orientation,
        witness,
    }
}
