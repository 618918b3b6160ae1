//! Reductions whose result does not depend on the number of threads.
//!
//! Inputs are cut into fixed-size chunks independent of the pool size; each
//! chunk is summed sequentially and the partials are combined in order.

use rayon::prelude::*;

/// Minimum items per rayon task for per-node loops.
pub const MIN_LEN: usize = 256;

/// Chunk length of the fixed reduction tree.
pub const CHUNK: usize = 4096;

pub fn sum(xs: &[f64]) -> f64 {
    let partials: Vec<f64> = xs
        .par_chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect();
    partials.iter().sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partials.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    y.par_iter_mut()
        .with_min_len(CHUNK)
        .zip(x.par_iter())
        .for_each(|(y, x)| *y += s * x);
}

/// Run `f` inside a pool of `threads` workers (`None`: rayon default).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}
