//! Deterministic random streams and worker pools.
//!
//! Work is cut into fixed-size chunks whose random stream depends only on
//! `(seed, domain, chunk)`, so results do not depend on how many workers run
//! the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Pulses per chunk.
pub(crate) const CHUNK: u64 = 1 << 15;

#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub(crate) enum Domain {
    Session = 1,
    Drift = 2,
    Tomography = 3,
}

pub(crate) fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) ^ index);
    rng
}

/// Runs `job` on a pool of `workers` threads, or on the global pool when
/// `workers` is `None`.
pub(crate) fn with_workers<T: Send>(
    workers: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(0) => Err(Error::invalid("workers", "must be ≥ 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}
