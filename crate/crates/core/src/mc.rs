//! Seeded replicate execution.
//!
//! Replicate `r` of an experiment with seed `s` draws from ChaCha8 stream
//! `r` under key `s`, so a replicate's randomness does not depend on which
//! worker runs it. Replicates are grouped into fixed-size chunks and the
//! per-chunk accumulators are merged in chunk order, so floating-point
//! reductions are bit-identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type McRng = ChaCha8Rng;

const CHUNK: usize = 16;
const CHUNKS_IN_FLIGHT: usize = 256;

/// Counter-based stream for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> McRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `reps` replicates and folds them into one accumulator.
///
/// `body` receives the accumulator, the replicate index and that
/// replicate's generator. `merge` must be associative over the chunk
/// sequence; it is always applied in ascending chunk order.
pub fn run_replicates<A, I, F, M>(reps: usize, seed: u64, init: I, body: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, usize, &mut McRng) + Sync,
    M: Fn(&mut A, A),
{
    let chunks = reps.div_ceil(CHUNK);
    let mut total = init();
    let mut start = 0;
    while start < chunks {
        let end = (start + CHUNKS_IN_FLIGHT).min(chunks);
        let parts: Vec<A> = (start..end)
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                for r in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                    let mut rng = stream_rng(seed, r as u64);
                    body(&mut acc, r, &mut rng);
                }
                acc
            })
            .collect();
        for p in parts {
            merge(&mut total, p);
        }
        start = end;
    }
    total
}

/// Collects one value per replicate, in replicate order.
pub fn map_replicates<T, F>(reps: usize, seed: u64, body: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut McRng) -> T + Sync,
{
    run_replicates(
        reps,
        seed,
        Vec::new,
        |acc: &mut Vec<T>, r, rng| acc.push(body(r, rng)),
        |total, part| total.extend(part),
    )
}
