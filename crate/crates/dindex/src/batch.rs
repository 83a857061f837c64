//! Parallel batch computation. Eligible papers are cut into fixed-size chunks
//! that workers process independently; results come back in external-id
//! order whatever the worker count.

use dindex_core::{
    CitationGraph, Classifier, DisruptionResult, Eligibility, ResolvedVariants, WindowSpec,
};
use rayon::prelude::*;

/// Papers per work unit.
pub const CHUNK: usize = 2048;
/// Papers per block handed to the caller.
pub const BLOCK: usize = 1 << 16;

pub fn thread_pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("failed to start worker threads")
}

/// Computes every eligible paper and passes the results to `sink` in order,
/// one block at a time.
pub fn compute_blocks<E>(
    g: &CitationGraph,
    window: WindowSpec,
    cfg: ResolvedVariants,
    eligibility: &Eligibility,
    pool: &rayon::ThreadPool,
    mut sink: impl FnMut(&[DisruptionResult]) -> Result<(), E>,
) -> Result<(), E> {
    let indices: Vec<u32> = eligibility.indices().collect();
    for block in indices.chunks(BLOCK) {
        let results: Vec<DisruptionResult> = pool.install(|| {
            block
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut classifier = Classifier::new(g, cfg);
                    chunk
                        .iter()
                        .map(|&ix| classifier.compute(ix, window))
                        .collect::<Vec<_>>()
                })
                .flatten_iter()
                .collect()
        });
        sink(&results)?;
    }
    Ok(())
}

pub fn compute_all(
    g: &CitationGraph,
    window: WindowSpec,
    cfg: ResolvedVariants,
    eligibility: &Eligibility,
    pool: &rayon::ThreadPool,
) -> Vec<DisruptionResult> {
    let mut out = Vec::with_capacity(eligibility.count());
    compute_blocks(g, window, cfg, eligibility, pool, |rs| {
        out.extend_from_slice(rs);
        Ok::<_, std::convert::Infallible>(())
    })
    .unwrap_or_else(|never| match never {});
    out
}
