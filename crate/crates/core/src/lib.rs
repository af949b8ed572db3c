//! perfolab: a laboratory for random generalized-split perfect graphs.
//!
//! The crate bundles four layers:
//!
//! - bit-packed graph kernels and clique-partition structures ([`graph`]),
//! - the combinatorics behind the sampling scheme: Bell numbers, uniform set
//!   partitions, the central-clique size law, tower/log-star arithmetic
//!   ([`combinatorics`]),
//! - a seeded sampler for random unipolar and random perfect graphs
//!   ([`sampler`]),
//! - a first-order logic engine over finite graphs with interpreted
//!   relations ([`logic`]), the predicate and sentence builders defined on
//!   clique partitions ([`formulas`]), and a Monte Carlo experiment harness
//!   with deterministic JSON reports ([`experiments`]).

mod bits;
pub mod combinatorics;
pub mod experiments;
pub mod formulas;
pub mod graph;
pub mod logic;
pub mod sampler;

pub use graph::{Graph, PartitionedGraph, VertexSet};
pub use logic::{Environment, Formula, Structure};
pub use sampler::{Orientation, PerfectSample, SampleSeed};
