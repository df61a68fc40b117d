//! Multi-threaded drivers. Work items are replicates or product blocks;
//! results are gathered in index order and reduced sequentially, so every
//! output is bit-identical to the single-threaded core routines.

use rayon::prelude::*;
use rayon::ThreadPool;
use steinhaus_core::energy::{
    concentration_from_sums, concentration_weights, validate_concentration, BlockScratch,
    ConcentrationResult,
};
use steinhaus_core::montecarlo::{harper_replicate, harper_rows, validate_harper, DEFAULT_WORK_LIMIT};
use steinhaus_core::{
    EnumerationOptions, FactorTable, HarperRow, PhaseModel, QuadrupleEnumerator, RmfRealization,
    SampleSummary, Simulation, WeightVector,
};

use crate::LabError;

pub fn pool(threads: usize) -> Result<ThreadPool, LabError> {
    if threads == 0 {
        return Err(LabError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Internal(format!("cannot start thread pool: {e}")))
}

pub fn simulate(sim: &Simulation, threads: usize) -> Result<SampleSummary, LabError> {
    let samples: Vec<_> = pool(threads)?.install(|| {
        (0..sim.plan().replicates)
            .into_par_iter()
            .map_init(|| sim.workspace(), |ws, t| sim.replicate(t, ws))
            .collect()
    });
    Ok(SampleSummary::from_samples(&samples)?)
}

pub fn harper_scan(
    grid: &[u32],
    replicates: u32,
    master_seed: u64,
    model: PhaseModel,
    threads: usize,
) -> Result<Vec<HarperRow>, LabError> {
    let max = validate_harper(grid, replicates, DEFAULT_WORK_LIMIT)?;
    let table = FactorTable::build(max)?;
    let per: Vec<Vec<f64>> = pool(threads)?.install(|| {
        (0..replicates)
            .into_par_iter()
            .map_init(
                || RmfRealization::identity(&table),
                |ws, t| harper_replicate(&table, grid, master_seed, t, model, ws),
            )
            .collect::<Result<_, _>>()
    })?;
    Ok(harper_rows(grid, &per))
}

pub fn count(enumerator: &QuadrupleEnumerator<'_>, threads: usize) -> Result<u64, LabError> {
    Ok(pool(threads)?.install(|| {
        (0..enumerator.num_blocks())
            .into_par_iter()
            .map_init(BlockScratch::default, |s, b| enumerator.count_block(b, s))
            .sum()
    }))
}

/// Per-vector weighted sums; blocks are combined in block order.
pub fn weighted_sums(
    enumerator: &QuadrupleEnumerator<'_>,
    weights: &[&[f64]],
    threads: usize,
) -> Result<Vec<f64>, LabError> {
    let per_block: Vec<Vec<f64>> = pool(threads)?.install(|| {
        (0..enumerator.num_blocks())
            .into_par_iter()
            .map_init(BlockScratch::default, |s, b| {
                let mut out = vec![0.0; weights.len()];
                enumerator.weighted_block(b, weights, s, &mut out);
                out
            })
            .collect()
    });
    let mut total = vec![0.0; weights.len()];
    for block in &per_block {
        total.iter_mut().zip(block).for_each(|(t, x)| *t += x);
    }
    Ok(total)
}

pub fn concentration(
    table: &FactorTable,
    limit: u32,
    rho: f64,
    reps: u32,
    seed: u64,
    options: EnumerationOptions,
    threads: usize,
) -> Result<ConcentrationResult, LabError> {
    validate_concentration(limit, rho, reps, options)?;
    let draws: Vec<WeightVector> = (0..reps)
        .map(|r| concentration_weights(limit, rho, seed, r))
        .collect::<Result<_, _>>()?;
    let slices: Vec<&[f64]> = draws.iter().map(|w| w.values()).collect();
    let enumerator = QuadrupleEnumerator::new(table, limit, options)?;
    let sums = weighted_sums(&enumerator, &slices, threads)?;
    Ok(concentration_from_sums(limit, rho, &sums))
}
