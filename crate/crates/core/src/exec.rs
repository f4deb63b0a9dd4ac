//! Deterministic work distribution.
//!
//! Every random draw in the crate comes from a [`SimRng`] obtained through
//! [`stream_rng`]. Work is split into fixed, indexed items (event chunks,
//! quadrature nodes, grid points) and item `i` of a task seeded with `s`
//! always draws from `stream_rng(derive_seed(s, i))`, independent of the
//! number of threads. Results are collected in index order and integer
//! tallies are combined by exact addition, so parallel and sequential runs
//! produce identical output.
//!
//! Parallel execution needs the `parallel` feature (on by default). Without
//! it [`Execution::Parallel`] silently runs sequentially.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub type SimRng = ChaCha8Rng;

/// Events per independently seeded chunk.
pub const CHUNK_EVENTS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for work item `index` of a task seeded with `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(parent ^ mix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

/// Fresh generator for one work item.
pub fn stream_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// Size of chunk `i` when `total` events are cut into `CHUNK_EVENTS` pieces.
pub(crate) fn chunk_sizes(total: u64) -> impl Fn(u64) -> u64 {
    move |i| {
        let start = i * CHUNK_EVENTS;
        (total - start).min(CHUNK_EVENTS)
    }
}

pub(crate) fn chunk_count(total: u64) -> u64 {
    total.div_ceil(CHUNK_EVENTS)
}
