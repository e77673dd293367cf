//! Reproducible random streams and order-preserving parallel maps.
//!
//! Every Monte-Carlo path draws from its own ChaCha stream keyed by
//! `(seed, domain)` and selected by the path index, so the numbers a path sees
//! never depend on which worker thread runs it or how work is batched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Independent stream families inside one run.
pub mod domain {
    pub const CLAIM: u64 = 0x636c_6169_6d00_0000;
    pub const SWAP: u64 = 0x7377_6170_0000_0000;
    pub const SIMULATE: u64 = 0x7369_6d00_0000_0000;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream number `index` of the family `(seed, domain)`.
pub fn path_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(domain));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Degree of parallelism for Monte-Carlo loops. `None` uses rayon's global pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Parallelism(pub Option<usize>);

impl Parallelism {
    pub const SERIAL: Parallelism = Parallelism(Some(1));

    pub fn threads(n: usize) -> Self {
        Parallelism(Some(n.max(1)))
    }

    /// Maps `f` over `0..n` and returns results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self.0 {
            Some(1) => (0..n).map(f).collect(),
            Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                Err(_) => (0..n).map(f).collect(),
            },
            None => (0..n).into_par_iter().map(f).collect(),
        }
    }
}
