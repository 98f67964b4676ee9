//! Rejection sampling of EW states and SD-weighted probability estimates.
//!
//! Raw draws are uniform on the box `r₋, r₊ ∈ [0, 1]`, `r₁, r₂, r₃ ∈ [−1, 1]`
//! (the qubit case fixes `r₋ = 0` and draws four coordinates). Draws that are
//! valid EW points are weighted by the SD volume element, and the
//! probability of a region is the weighted fraction of accepted points that
//! fall inside it.
//!
//! Work is split into [`ChunkTask`]s. Each chunk reads its own counter
//! stream and produces an [`Accumulator`]; accumulators are merged in task
//! order, so results depend on the chunking but not on which executor ran
//! the chunks.

use alloc::string::String;
use alloc::vec::Vec;

use crate::metric::{volume_element, VolumeElementCase};
use crate::point::{validate, EWPoint};
use crate::rng::{stream_id, CounterStream};
use crate::{Error, Result};

/// Points closer than this to the singular set of the weight are discarded.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Default raw draws per chunk.
pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 20;

/// Fixed decomposition of each subsample into chunks of `chunk_size` raw draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunking {
    pub chunk_size: u64,
}

impl Default for Chunking {
    fn default() -> Self {
        Self { chunk_size: DEFAULT_CHUNK_SIZE }
    }
}

/// One unit of parallel work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkTask {
    pub subsample: u32,
    pub chunk: u32,
    pub n_raw: u64,
}

impl ChunkTask {
    pub fn stream(&self) -> u64 {
        stream_id(self.subsample, self.chunk)
    }
}

/// Splits `subsamples × n_raw_per` raw draws into chunk tasks.
pub fn plan(subsamples: u32, n_raw_per: u64, chunking: Chunking) -> Result<Vec<ChunkTask>> {
    if subsamples == 0 {
        return Err(Error::invalid("need at least one subsample"));
    }
    if n_raw_per == 0 || chunking.chunk_size == 0 {
        return Err(Error::invalid("raw draw count and chunk size must be positive"));
    }
    let chunks = n_raw_per.div_ceil(chunking.chunk_size);
    if chunks > u32::MAX as u64 {
        return Err(Error::invalid("too many chunks per subsample; raise the chunk size"));
    }
    let mut tasks = Vec::with_capacity(subsamples as usize * chunks as usize);
    for s in 0..subsamples {
        let mut left = n_raw_per;
        for c in 0..chunks as u32 {
            let n = left.min(chunking.chunk_size);
            tasks.push(ChunkTask { subsample: s, chunk: c, n_raw: n });
            left -= n;
        }
    }
    Ok(tasks)
}

/// Runs chunk tasks and returns their results in task order.
pub trait ChunkExecutor {
    fn run<T, F>(&self, tasks: &[ChunkTask], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&ChunkTask) -> T + Sync + Send;
}

/// In-thread executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ChunkExecutor for Sequential {
    fn run<T, F>(&self, tasks: &[ChunkTask], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&ChunkTask) -> T + Sync + Send,
    {
        tasks.iter().map(f).collect()
    }
}

#[inline]
fn draw(case: VolumeElementCase, rng: &mut CounterStream) -> EWPoint {
    match case {
        VolumeElementCase::General => {
            let r_minus = rng.uniform();
            let r_plus = rng.uniform();
            let r = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
            EWPoint::new(r_minus, r_plus, r)
        }
        VolumeElementCase::Qubit => {
            let r_plus = rng.uniform();
            let r = [rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0)];
            EWPoint::qubit(r_plus, r)
        }
    }
}

/// Draw and accept counts of a sampling pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcceptanceStats {
    pub raw: u64,
    pub accepted: u64,
}

impl AcceptanceStats {
    pub fn rate(&self) -> f64 {
        if self.raw == 0 {
            0.0
        } else {
            self.accepted as f64 / self.raw as f64
        }
    }
}

/// Draws one chunk and calls `visit` on every accepted point, in draw order.
pub fn sample_chunk<V: FnMut(&EWPoint)>(
    case: VolumeElementCase,
    seed: u64,
    task: &ChunkTask,
    mut visit: V,
) -> AcceptanceStats {
    let mut rng = CounterStream::new(seed, task.stream());
    let mut stats = AcceptanceStats { raw: task.n_raw, accepted: 0 };
    for _ in 0..task.n_raw {
        let p = draw(case, &mut rng);
        if validate(&p).is_valid() {
            stats.accepted += 1;
            visit(&p);
        }
    }
    stats
}

/// Sequential sampling of `n_raw` draws (subsample 0) with a point visitor.
pub fn sample_ew<V: FnMut(&EWPoint)>(
    case: VolumeElementCase,
    n_raw: u64,
    seed: u64,
    chunking: Chunking,
    mut visit: V,
) -> Result<AcceptanceStats> {
    let mut total = AcceptanceStats::default();
    for task in plan(1, n_raw, chunking)? {
        let s = sample_chunk(case, seed, &task, &mut visit);
        total.raw += s.raw;
        total.accepted += s.accepted;
    }
    Ok(total)
}

/// SD weight of an accepted point, or `None` near the singular set.
#[inline]
pub fn weight(p: &EWPoint, case: VolumeElementCase) -> Option<f64> {
    let r0 = p.r0();
    if case == VolumeElementCase::General && p.r_minus < SINGULAR_TOL {
        return None;
    }
    if p.r_plus < SINGULAR_TOL || r0 < SINGULAR_TOL || r0 - p.radius() < SINGULAR_TOL {
        return None;
    }
    volume_element(p, case).ok()
}

/// Per-chunk sums; merged associatively in task order.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    pub raw: u64,
    pub accepted: u64,
    pub discarded: u64,
    pub sum_weights: f64,
    pub region_weights: Vec<f64>,
    pub region_hits: Vec<u64>,
}

impl Accumulator {
    pub fn new(regions: usize) -> Self {
        Self {
            raw: 0,
            accepted: 0,
            discarded: 0,
            sum_weights: 0.0,
            region_weights: alloc::vec![0.0; regions],
            region_hits: alloc::vec![0; regions],
        }
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.raw += other.raw;
        self.accepted += other.accepted;
        self.discarded += other.discarded;
        self.sum_weights += other.sum_weights;
        for (a, b) in self.region_weights.iter_mut().zip(&other.region_weights) {
            *a += b;
        }
        for (a, b) in self.region_hits.iter_mut().zip(&other.region_hits) {
            *a += b;
        }
    }
}

/// A named region predicate.
pub type Predicate<'a> = &'a (dyn Fn(&EWPoint) -> bool + Sync);

/// Samples one chunk and accumulates weights for every predicate.
pub fn run_chunk(case: VolumeElementCase, seed: u64, task: &ChunkTask, predicates: &[Predicate<'_>]) -> Accumulator {
    let mut acc = Accumulator::new(predicates.len());
    let stats = sample_chunk(case, seed, task, |p| match weight(p, case) {
        None => acc.discarded += 1,
        Some(w) => {
            acc.sum_weights += w;
            for (k, pred) in predicates.iter().enumerate() {
                if pred(p) {
                    acc.region_weights[k] += w;
                    acc.region_hits[k] += 1;
                }
            }
        }
    });
    acc.raw = stats.raw;
    acc.accepted = stats.accepted;
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleRecord {
    pub raw: u64,
    pub accepted: u64,
    pub discarded: u64,
    pub hits: u64,
    pub sum_weights: f64,
    pub sum_region_weights: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub region: String,
    pub case: VolumeElementCase,
    pub subsamples: Vec<SubsampleRecord>,
    pub pooled_probability: f64,
    /// Bias-adjusted (divisor n − 1) dispersion of the subsample estimates.
    pub std_dev: Option<f64>,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub chunking: Chunking,
    pub n_raw_per: u64,
}

impl EstimateReport {
    pub fn total_accepted(&self) -> u64 {
        self.subsamples.iter().map(|s| s.accepted).sum()
    }

    pub fn total_discarded(&self) -> u64 {
        self.subsamples.iter().map(|s| s.discarded).sum()
    }
}

/// Sample dispersion with divisor `len − 1`.
pub fn pooled_stddev(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::invalid("dispersion needs at least two estimates"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(libm::sqrt(ss / (n - 1.0)))
}

/// Estimation setup shared by all regions of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateConfig {
    pub case: VolumeElementCase,
    pub subsamples: u32,
    pub n_raw_per: u64,
    pub seed: u64,
    pub chunking: Chunking,
}

/// Estimates the SD probability of every named predicate on one shared sample.
pub fn estimate_many<E: ChunkExecutor>(
    config: &EstimateConfig,
    regions: &[(&str, Predicate<'_>)],
    executor: &E,
) -> Result<Vec<EstimateReport>> {
    let tasks = plan(config.subsamples, config.n_raw_per, config.chunking)?;
    let preds: Vec<Predicate<'_>> = regions.iter().map(|(_, p)| *p).collect();
    let (case, seed) = (config.case, config.seed);
    let parts = executor.run(&tasks, |t| run_chunk(case, seed, t, &preds));

    let mut per_sub: Vec<Accumulator> = (0..config.subsamples).map(|_| Accumulator::new(regions.len())).collect();
    for (task, part) in tasks.iter().zip(&parts) {
        per_sub[task.subsample as usize].merge(part);
    }
    let mut total = Accumulator::new(regions.len());
    for s in &per_sub {
        total.merge(s);
    }
    if total.accepted == 0 || !(total.sum_weights > 0.0) {
        return Err(Error::NonConvergence("no accepted EW points with finite weight".into()));
    }
    if let Some(i) = per_sub.iter().position(|s| !(s.sum_weights > 0.0)) {
        return Err(Error::NonConvergence(alloc::format!("subsample {i} has no weighted points")));
    }

    let mut reports = Vec::with_capacity(regions.len());
    for (k, (name, _)) in regions.iter().enumerate() {
        let subsamples: Vec<SubsampleRecord> = per_sub
            .iter()
            .map(|s| SubsampleRecord {
                raw: s.raw,
                accepted: s.accepted,
                discarded: s.discarded,
                hits: s.region_hits[k],
                sum_weights: s.sum_weights,
                sum_region_weights: s.region_weights[k],
                probability: s.region_weights[k] / s.sum_weights,
            })
            .collect();
        let probs: Vec<f64> = subsamples.iter().map(|s| s.probability).collect();
        reports.push(EstimateReport {
            region: String::from(*name),
            case,
            std_dev: pooled_stddev(&probs).ok(),
            subsamples,
            pooled_probability: total.region_weights[k] / total.sum_weights,
            acceptance_rate: total.accepted as f64 / total.raw as f64,
            seed,
            chunking: config.chunking,
            n_raw_per: config.n_raw_per,
        });
    }
    Ok(reports)
}

/// Single-region convenience wrapper around [`estimate_many`].
pub fn estimate_probability<E: ChunkExecutor>(
    config: &EstimateConfig,
    name: &str,
    predicate: Predicate<'_>,
    executor: &E,
) -> Result<EstimateReport> {
    Ok(estimate_many(config, &[(name, predicate)], executor)?.remove(0))
}

/// Exact acceptance probability of the box sampler: `π/120` (general), `π/24` (qubit).
pub fn analytic_acceptance(case: VolumeElementCase) -> f64 {
    match case {
        VolumeElementCase::General => core::f64::consts::PI / 120.0,
        VolumeElementCase::Qubit => core::f64::consts::PI / 24.0,
    }
}
