//! Normalized partial sums across independent realizations of `f`, and
//! their comparison with the standard complex normal law `CN(0, 1)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::error::{check_density, Error, Result};
use crate::rmf::{PhaseModel, RmfRealization};
use crate::sets::{IndexSet, WeightVector};
use crate::sieve::FactorTable;
use crate::summation::NeumaierSum;

/// Default guard on `T * N` (replicates times terms per replicate).
pub const DEFAULT_WORK_LIMIT: u128 = 50_000_000_000;

/// Number of batches used for batch-means standard errors.
pub const SE_BATCHES: usize = 20;

/// Histogram of `|Z|`: 64 bins over `[0, 4)` plus an overflow count.
pub const HISTOGRAM_BINS: usize = 64;
pub const HISTOGRAM_MAX: f64 = 4.0;

/// Asymptotic 1% critical value of the Kolmogorov statistic, times `sqrt(T)`.
pub const KS_CRITICAL_1PCT: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationMode {
    /// `S_A / sqrt(|A|)`.
    Raw,
    /// `S_A / sqrt((1 - rho) |A|)`.
    DensityCorrected,
    /// `sum w f / sqrt(rho (1 - rho) N)`.
    Centered,
    /// `sum w f / sqrt(|A|)`: the centered sum under the raw normalizer,
    /// whose second moment is exactly `1 - rho` when `|A| = rho N`.
    CenteredBySize,
}

impl NormalizationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationMode::Raw => "raw",
            NormalizationMode::DensityCorrected => "dc",
            NormalizationMode::Centered => "centered",
            NormalizationMode::CenteredBySize => "centered-size",
        }
    }

    /// Whether the mode sums centered weights rather than the indicator.
    pub fn uses_weights(self) -> bool {
        matches!(self, NormalizationMode::Centered | NormalizationMode::CenteredBySize)
    }
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "dc" | "density_corrected" => Ok(Self::DensityCorrected),
            "centered" => Ok(Self::Centered),
            "centered-size" => Ok(Self::CenteredBySize),
            _ => Err(Error::InvalidParameter(format!(
                "unknown normalization mode `{s}` (expected raw, dc, centered or centered-size)"
            ))),
        }
    }
}

/// Divides a sum by the normalizer of `mode`. For the centered modes `sum`
/// must be the weighted sum `sum_n w(n) f(n)`.
pub fn normalize(
    sum: Complex64,
    mode: NormalizationMode,
    set_size: usize,
    rho: f64,
    limit: u32,
) -> Result<Complex64> {
    let size = set_size as f64;
    let denom = match mode {
        NormalizationMode::Raw | NormalizationMode::CenteredBySize => {
            if set_size == 0 {
                return Err(Error::DivisionGuard("|A| = 0 under the sqrt(|A|) normalizer"));
            }
            size
        }
        NormalizationMode::DensityCorrected => {
            let d = (1.0 - rho) * size;
            if d <= 0.0 {
                return Err(Error::DivisionGuard(
                    "(1 - rho)|A| = 0 under the density-corrected normalizer",
                ));
            }
            d
        }
        NormalizationMode::Centered => {
            let d = rho * (1.0 - rho) * limit as f64;
            if d <= 0.0 {
                return Err(Error::DivisionGuard(
                    "rho (1 - rho) N = 0 under the centered normalizer",
                ));
            }
            d
        }
    };
    Ok(sum / libm::sqrt(denom))
}

/// Exact `E |(1/sqrt|A|) sum (1_A - rho) f|^2` when `|A| = rho N`: `1 - rho`.
pub fn centered_second_moment(rho: f64) -> f64 {
    1.0 - rho
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPlan {
    pub limit: u32,
    /// Nominal density used for centering and normalizers.
    pub rho: f64,
    pub mode: NormalizationMode,
    pub replicates: u32,
    pub master_seed: u64,
    pub phase_model: PhaseModel,
    pub work_limit: u128,
}

impl SimulationPlan {
    pub fn new(limit: u32, rho: f64, mode: NormalizationMode, replicates: u32, master_seed: u64) -> Self {
        Self {
            limit,
            rho,
            mode,
            replicates,
            master_seed,
            phase_model: PhaseModel::Steinhaus,
            work_limit: DEFAULT_WORK_LIMIT,
        }
    }

    pub fn with_phase_model(mut self, model: PhaseModel) -> Self {
        self.phase_model = model;
        self
    }

    /// Checks everything that does not need the set itself.
    pub fn validate(&self) -> Result<()> {
        if self.limit == 0 {
            return Err(Error::ZeroLimit);
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicate count T must be at least 1".into()));
        }
        check_density(self.rho)?;
        match self.mode {
            NormalizationMode::DensityCorrected | NormalizationMode::Centered if self.rho >= 1.0 => {
                return Err(Error::InvalidParameter(format!(
                    "mode {} requires rho < 1 (got {})",
                    self.mode, self.rho
                )));
            }
            NormalizationMode::Centered if self.rho <= 0.0 => {
                return Err(Error::InvalidParameter("mode centered requires rho > 0".into()));
            }
            _ => {}
        }
        let work = self.replicates as u128 * self.limit as u128;
        if work > self.work_limit {
            return Err(Error::WorkLimit { work, limit: self.work_limit });
        }
        Ok(())
    }
}

/// A validated plan with its sieve, set and weights: hands out replicates.
#[derive(Debug, Clone)]
pub struct Simulation {
    plan: SimulationPlan,
    table: FactorTable,
    set: IndexSet,
    weights: Option<WeightVector>,
}

impl Simulation {
    pub fn new(plan: SimulationPlan, set: IndexSet) -> Result<Self> {
        plan.validate()?;
        let table = FactorTable::build(plan.limit)?;
        Self::from_parts(plan, table, set)
    }

    /// Like [`new`](Self::new) with an already built table for `[1, N]`.
    pub fn from_parts(plan: SimulationPlan, table: FactorTable, set: IndexSet) -> Result<Self> {
        plan.validate()?;
        for found in [set.limit(), table.limit()] {
            if found != plan.limit {
                return Err(Error::LimitMismatch { expected: plan.limit, found });
            }
        }
        // Fails early on an empty set or zero normalizer.
        normalize(Complex64::new(0.0, 0.0), plan.mode, set.len(), plan.rho, plan.limit)?;
        let weights = if plan.mode.uses_weights() {
            Some(WeightVector::centered(&set, plan.rho)?)
        } else {
            None
        };
        Ok(Self { plan, table, set, weights })
    }

    pub fn plan(&self) -> &SimulationPlan {
        &self.plan
    }

    pub fn set(&self) -> &IndexSet {
        &self.set
    }

    pub fn weights(&self) -> Option<&WeightVector> {
        self.weights.as_ref()
    }

    /// A reusable realization buffer for [`replicate`](Self::replicate).
    pub fn workspace(&self) -> RmfRealization {
        RmfRealization::identity(&self.table)
    }

    /// The normalized sum `Z_t` of replicate `t`.
    pub fn replicate(&self, t: u32, ws: &mut RmfRealization) -> Complex64 {
        let plan = &self.plan;
        ws.resample(&self.table, plan.phase_model, plan.master_seed, t as u64);
        let sum = match &self.weights {
            Some(w) => ws.weighted_sum(w),
            None => ws.subset_sum(&self.set),
        }
        .expect("limits checked at construction");
        normalize(sum, plan.mode, self.set.len(), plan.rho, plan.limit)
            .expect("normalizer checked at construction")
    }

    /// All replicates in order, single-threaded.
    pub fn samples(&self) -> Vec<Complex64> {
        let mut ws = self.workspace();
        (0..self.plan.replicates).map(|t| self.replicate(t, &mut ws)).collect()
    }

    pub fn run(&self) -> SampleSummary {
        SampleSummary::from_samples(&self.samples()).expect("at least one replicate")
    }
}

/// Sequential simulation of `plan` over `set`.
pub fn run_simulation(plan: &SimulationPlan, set: &IndexSet) -> Result<SampleSummary> {
    Ok(Simulation::new(plan.clone(), set.clone())?.run())
}

/// Empirical moments and normality diagnostics of `Z_1, ..., Z_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub replicates: usize,
    pub mean: Complex64,
    /// Mean of `|Z|`.
    pub m1: f64,
    /// Mean of `|Z|^2`.
    pub m2: f64,
    /// Mean of `Z^2`.
    pub pseudo_m2: Complex64,
    /// Mean of `|Z|^4`.
    pub m4: f64,
    pub se_mean_re: f64,
    pub se_mean_im: f64,
    pub se_m1: f64,
    pub se_m2: f64,
    pub se_pseudo_m2_re: f64,
    pub se_pseudo_m2_im: f64,
    pub se_m4: f64,
    /// KS distance of `Re Z` from `N(0, 1/2)`.
    pub ks_re: f64,
    /// KS distance of `Im Z` from `N(0, 1/2)`.
    pub ks_im: f64,
    pub histogram: Vec<u64>,
    pub histogram_overflow: u64,
    /// All samples identical.
    pub degenerate: bool,
    /// Either marginal KS distance exceeds the asymptotic 1% critical value.
    pub ks_reject_1pct: bool,
}

impl SampleSummary {
    pub fn from_samples(samples: &[Complex64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        let re: Vec<f64> = samples.iter().map(|z| z.re).collect();
        let im: Vec<f64> = samples.iter().map(|z| z.im).collect();
        let abs: Vec<f64> = samples.iter().map(|z| z.norm()).collect();
        let sq: Vec<f64> = samples.iter().map(|z| z.norm_sqr()).collect();
        let quart: Vec<f64> = sq.iter().map(|s| s * s).collect();
        let pseudo: Vec<Complex64> = samples.iter().map(|z| z * z).collect();
        let pre: Vec<f64> = pseudo.iter().map(|z| z.re).collect();
        let pim: Vec<f64> = pseudo.iter().map(|z| z.im).collect();

        let mut histogram = vec![0u64; HISTOGRAM_BINS];
        let mut histogram_overflow = 0;
        for &a in &abs {
            if a < HISTOGRAM_MAX {
                let bin = ((a / HISTOGRAM_MAX) * HISTOGRAM_BINS as f64) as usize;
                histogram[bin.min(HISTOGRAM_BINS - 1)] += 1;
            } else {
                histogram_overflow += 1;
            }
        }

        let ks_re = ks_distance(&re, normal_half_cdf)?;
        let ks_im = ks_distance(&im, normal_half_cdf)?;
        let critical = KS_CRITICAL_1PCT / libm::sqrt(samples.len() as f64);

        Ok(Self {
            replicates: samples.len(),
            mean: Complex64::new(mean(&re), mean(&im)),
            m1: mean(&abs),
            m2: mean(&sq),
            pseudo_m2: Complex64::new(mean(&pre), mean(&pim)),
            m4: mean(&quart),
            se_mean_re: batch_standard_error(&re),
            se_mean_im: batch_standard_error(&im),
            se_m1: batch_standard_error(&abs),
            se_m2: batch_standard_error(&sq),
            se_pseudo_m2_re: batch_standard_error(&pre),
            se_pseudo_m2_im: batch_standard_error(&pim),
            se_m4: batch_standard_error(&quart),
            ks_re,
            ks_im,
            histogram,
            histogram_overflow,
            degenerate: samples.iter().all(|z| *z == samples[0]),
            ks_reject_1pct: ks_re > critical || ks_im > critical,
        })
    }
}

/// Compensated mean.
pub fn mean(values: &[f64]) -> f64 {
    let mut s = NeumaierSum::new();
    values.iter().for_each(|&v| s.add(v));
    s.value() / values.len() as f64
}

/// Batch-means standard error of the mean: the values are cut into
/// `min(20, len)` contiguous batches and the spread of batch means is used.
/// Zero for fewer than two values.
pub fn batch_standard_error(values: &[f64]) -> f64 {
    let batches = SE_BATCHES.min(values.len());
    if batches < 2 {
        return 0.0;
    }
    let len = values.len();
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&values[b * len / batches..(b + 1) * len / batches]))
        .collect();
    let grand = mean(&means);
    let mut ss = NeumaierSum::new();
    means.iter().for_each(|m| ss.add((m - grand) * (m - grand)));
    libm::sqrt(ss.value() / ((batches - 1) * batches) as f64)
}

/// CDF of the normal law with mean 0 and variance 1/2, the marginal of
/// `Re Z` and `Im Z` under `CN(0, 1)`.
pub fn normal_half_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x)
}

/// Sup-norm distance between the empirical CDF of `samples` and `cdf`,
/// by the sorted-sample sweep.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d.clamp(0.0, 1.0))
}

/// Reference moments of `CN(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTargets {
    pub mean: Complex64,
    pub m1: f64,
    pub m2: f64,
    pub pseudo_m2: Complex64,
    pub m4: f64,
    /// Variance of each of `Re Z`, `Im Z` (both centered normal).
    pub marginal_variance: f64,
}

pub fn gaussian_targets() -> GaussianTargets {
    GaussianTargets {
        mean: Complex64::new(0.0, 0.0),
        // Rayleigh mean with sigma^2 = 1/2: sqrt(pi)/2.
        m1: libm::sqrt(core::f64::consts::PI) / 2.0,
        m2: 1.0,
        pseudo_m2: Complex64::new(0.0, 0.0),
        m4: 2.0,
        marginal_variance: 0.5,
    }
}

/// One row of the partial-sum decay scan: mean of `|sum_{n<=x} f(n)| / sqrt x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarperRow {
    pub x: u32,
    pub ratio: f64,
    pub se: f64,
}

/// Validates a decay-scan request and returns the largest `x`.
pub fn validate_harper(grid: &[u32], replicates: u32, work_limit: u128) -> Result<u32> {
    let Some(&max) = grid.last() else {
        return Err(Error::InvalidParameter("x grid is empty".into()));
    };
    if grid[0] == 0 {
        return Err(Error::ZeroLimit);
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("x grid must be strictly ascending".into()));
    }
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicate count T must be at least 1".into()));
    }
    let work = replicates as u128 * max as u128;
    if work > work_limit {
        return Err(Error::WorkLimit { work, limit: work_limit });
    }
    Ok(max)
}

/// `|sum_{n<=x} f(n)| / sqrt x` at each grid point for replicate `t`; the
/// same realization serves every `x`.
pub fn harper_replicate(
    table: &FactorTable,
    grid: &[u32],
    master_seed: u64,
    t: u32,
    model: PhaseModel,
    ws: &mut RmfRealization,
) -> Result<Vec<f64>> {
    ws.resample(table, model, master_seed, t as u64);
    let sums = ws.prefix_sums(grid)?;
    Ok(grid.iter().zip(sums).map(|(&x, s)| s.norm() / libm::sqrt(x as f64)).collect())
}

/// Collapses per-replicate ratio vectors (in replicate order) into rows.
pub fn harper_rows(grid: &[u32], per_replicate: &[Vec<f64>]) -> Vec<HarperRow> {
    grid.iter()
        .enumerate()
        .map(|(i, &x)| {
            let column: Vec<f64> = per_replicate.iter().map(|r| r[i]).collect();
            HarperRow { x, ratio: mean(&column), se: batch_standard_error(&column) }
        })
        .collect()
}

/// Sequential decay scan.
pub fn harper_scan(
    grid: &[u32],
    replicates: u32,
    master_seed: u64,
    model: PhaseModel,
) -> Result<Vec<HarperRow>> {
    let max = validate_harper(grid, replicates, DEFAULT_WORK_LIMIT)?;
    let table = FactorTable::build(max)?;
    let mut ws = RmfRealization::identity(&table);
    let per: Vec<Vec<f64>> = (0..replicates)
        .map(|t| harper_replicate(&table, grid, master_seed, t, model, &mut ws))
        .collect::<Result<_>>()?;
    Ok(harper_rows(grid, &per))
}
