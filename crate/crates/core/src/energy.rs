//! Multiplicative quadruples `n1 n2 = m1 m2` in `[1, N]^4` with
//! largest-prime-factor constraints, their weighted sums, and the
//! concentration experiments built on them.
//!
//! Ordered pairs `(a, b)` are bucketed by their product `k = a b`, one block
//! of products at a time. Within a product, pairs are split into classes by
//! `(P(a), P(b))` (cross) or by the common value `P(a) = P(b)` (lind). Two
//! pairs `p = (n1, n2)` and `q = (m1, m2)` of the same product satisfy
//! `m1 != n1` exactly when `p != q`, so a constraint-satisfying quadruple is
//! an ordered pair of distinct pairs from one class. For a class with pair
//! values `v = w(a) w(b)`, the weighted sum over such quadruples is
//! `(sum v)^2 - sum v^2`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{check_density, Error, Result};
use crate::montecarlo::mean;
use crate::rng::derive_seed;
use crate::sets::{IndexSet, WeightVector};
use crate::sieve::FactorTable;
use crate::summation::NeumaierSum;

/// Default largest `N` for enumeration.
pub const DEFAULT_ENUMERATION_CAP: u32 = 5000;
/// Largest `N` the brute-force `O(N^4)` oracle is run at in tests.
pub const ORACLE_CAP: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadrupleConstraint {
    /// `P(m1) = P(n1)` and `P(m2) = P(n2)`.
    Cross,
    /// `P(m1) = P(n1) = P(m2) = P(n2)`.
    Lind,
}

impl QuadrupleConstraint {
    pub fn as_str(self) -> &'static str {
        match self {
            QuadrupleConstraint::Cross => "cross",
            QuadrupleConstraint::Lind => "lind",
        }
    }

    /// Direct check of one quadruple against the constraint.
    pub fn admits(self, table: &FactorTable, q: [u32; 4], exclude_swaps: bool) -> bool {
        let [n1, n2, m1, m2] = q;
        let p = |x| table.largest_prime_factor(x).expect("quadruple inside table");
        if n1 as u64 * n2 as u64 != m1 as u64 * m2 as u64 || m1 == n1 || m2 == n2 {
            return false;
        }
        if exclude_swaps && m1 == n2 && m2 == n1 {
            return false;
        }
        let cross = p(m1) == p(n1) && p(m2) == p(n2);
        match self {
            QuadrupleConstraint::Cross => cross,
            QuadrupleConstraint::Lind => cross && p(n1) == p(n2),
        }
    }
}

impl fmt::Display for QuadrupleConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuadrupleConstraint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross" => Ok(Self::Cross),
            "lind" => Ok(Self::Lind),
            _ => Err(Error::InvalidParameter(format!(
                "unknown quadruple constraint `{s}` (expected cross or lind)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub constraint: QuadrupleConstraint,
    /// Additionally drop `(n1, n2, m1, m2) = (a, b, b, a)`, i.e. require
    /// `{n1, n2} != {m1, m2}`.
    pub exclude_swaps: bool,
    pub cap: u32,
}

impl EnumerationOptions {
    pub fn new(constraint: QuadrupleConstraint) -> Self {
        Self { constraint, exclude_swaps: false, cap: DEFAULT_ENUMERATION_CAP }
    }

    pub fn excluding_swaps(mut self, yes: bool) -> Self {
        self.exclude_swaps = yes;
        self
    }

    pub fn with_cap(mut self, cap: u32) -> Self {
        self.cap = cap;
        self
    }

    /// Rejects `N = 0` and `N` above the enumeration cap.
    pub fn check(&self, limit: u32) -> Result<()> {
        if limit == 0 {
            return Err(Error::ZeroLimit);
        }
        if limit > self.cap {
            return Err(Error::LimitAboveCap {
                what: "quadruple enumeration",
                limit: limit as u64,
                cap: self.cap as u64,
            });
        }
        Ok(())
    }
}

type KeyedPair = (u64, u32, u32);

/// Reusable buffers for block processing.
#[derive(Debug, Default, Clone)]
pub struct BlockScratch {
    offsets: Vec<u32>,
    pairs: Vec<(u32, u32)>,
    keyed: Vec<KeyedPair>,
    sums: Vec<f64>,
}

/// Block-wise enumerator of constraint-satisfying quadruples for one `N`.
///
/// Blocks are independent units of work; results combined in block order
/// are identical to the sequential methods.
#[derive(Debug, Clone)]
pub struct QuadrupleEnumerator<'t> {
    lpf: &'t [u32],
    limit: u32,
    options: EnumerationOptions,
    block_len: u64,
}

impl<'t> QuadrupleEnumerator<'t> {
    pub fn new(table: &'t FactorTable, limit: u32, options: EnumerationOptions) -> Result<Self> {
        options.check(limit)?;
        if table.limit() < limit {
            return Err(Error::OutOfRange { n: limit as u64, limit: table.limit() as u64 });
        }
        let block_len = (limit as u64 * 128).max(1 << 14);
        Ok(Self { lpf: table.lpf_table(), limit, options, block_len })
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    pub fn options(&self) -> EnumerationOptions {
        self.options
    }

    pub fn num_blocks(&self) -> usize {
        let products = self.limit as u64 * self.limit as u64;
        products.div_ceil(self.block_len) as usize
    }

    /// Calls `f` with every class of at least two pairs in block `block`.
    fn for_each_class(
        &self,
        block: usize,
        scratch: &mut BlockScratch,
        mut f: impl FnMut(&[KeyedPair]),
    ) {
        let n = self.limit as u64;
        let lo = block as u64 * self.block_len + 1;
        let hi = (lo + self.block_len).min(n * n + 1);
        let span = (hi - lo) as usize;

        // Counting sort of the pairs (a, b), a, b <= N, by product in [lo, hi).
        let offsets = &mut scratch.offsets;
        offsets.clear();
        offsets.resize(span + 1, 0);
        let b_range = |a: u64| (lo.div_ceil(a).max(1), ((hi - 1) / a).min(n));
        for a in 1..=n.min(hi - 1) {
            let (b0, b1) = b_range(a);
            for b in b0..=b1 {
                offsets[(a * b - lo) as usize + 1] += 1;
            }
        }
        for i in 0..span {
            offsets[i + 1] += offsets[i];
        }
        let total = offsets[span] as usize;
        scratch.pairs.clear();
        scratch.pairs.resize(total, (0, 0));
        let mut cursor: Vec<u32> = offsets[..span].to_vec();
        for a in 1..=n.min(hi - 1) {
            let (b0, b1) = b_range(a);
            for b in b0..=b1 {
                let slot = &mut cursor[(a * b - lo) as usize];
                scratch.pairs[*slot as usize] = (a as u32, b as u32);
                *slot += 1;
            }
        }

        for k in 0..span {
            let (start, end) = (offsets[k] as usize, offsets[k + 1] as usize);
            if end - start < 2 {
                continue;
            }
            scratch.keyed.clear();
            for &(a, b) in &scratch.pairs[start..end] {
                let (pa, pb) = (self.lpf[a as usize], self.lpf[b as usize]);
                match self.options.constraint {
                    QuadrupleConstraint::Cross => {
                        scratch.keyed.push(((pa as u64) << 32 | pb as u64, a, b))
                    }
                    QuadrupleConstraint::Lind if pa == pb => scratch.keyed.push((pa as u64, a, b)),
                    QuadrupleConstraint::Lind => {}
                }
            }
            scratch.keyed.sort_unstable();
            for class in scratch.keyed.chunk_by(|x, y| x.0 == y.0) {
                if class.len() >= 2 {
                    f(class);
                }
            }
        }
    }

    /// A pair whose swap `(b, a)` is a distinct member of the same class.
    #[inline]
    fn swap_partner_in_class(&self, a: u32, b: u32) -> bool {
        a != b && self.lpf[a as usize] == self.lpf[b as usize]
    }

    /// Number of quadruples in block `block`.
    pub fn count_block(&self, block: usize, scratch: &mut BlockScratch) -> u64 {
        let mut count = 0u64;
        let exclude = self.options.exclude_swaps;
        self.for_each_class(block, scratch, |class| {
            let c = class.len() as u64;
            count += c * (c - 1);
            if exclude {
                count -= class.iter().filter(|&&(_, a, b)| self.swap_partner_in_class(a, b)).count()
                    as u64;
            }
        });
        count
    }

    /// Weighted sums of block `block` for several weight vectors at once;
    /// `weights[r][n - 1]` is `w_r(n)`. Adds into `out[r]`.
    pub fn weighted_block(
        &self,
        block: usize,
        weights: &[&[f64]],
        scratch: &mut BlockScratch,
        out: &mut [f64],
    ) {
        let exclude = self.options.exclude_swaps;
        let mut sums = core::mem::take(&mut scratch.sums);
        sums.clear();
        sums.resize(weights.len(), 0.0);
        self.for_each_class(block, scratch, |class| {
            for (r, w) in weights.iter().enumerate() {
                let (mut s, mut q, mut x) = (0.0, 0.0, 0.0);
                for &(_, a, b) in class {
                    let v = w[a as usize - 1] * w[b as usize - 1];
                    s += v;
                    q += v * v;
                    if exclude && self.swap_partner_in_class(a, b) {
                        x += v * v;
                    }
                }
                sums[r] += s * s - q - x;
            }
        });
        for (o, s) in out.iter_mut().zip(&sums) {
            *o += s;
        }
        scratch.sums = sums;
    }

    /// Visits every quadruple `[n1, n2, m1, m2]` of block `block`.
    pub fn visit_block(
        &self,
        block: usize,
        scratch: &mut BlockScratch,
        visitor: &mut impl FnMut([u32; 4]),
    ) {
        let exclude = self.options.exclude_swaps;
        self.for_each_class(block, scratch, |class| {
            for (i, &(_, n1, n2)) in class.iter().enumerate() {
                for (j, &(_, m1, m2)) in class.iter().enumerate() {
                    if i == j || (exclude && m1 == n2 && m2 == n1) {
                        continue;
                    }
                    visitor([n1, n2, m1, m2]);
                }
            }
        });
    }

    pub fn count(&self) -> u64 {
        let mut scratch = BlockScratch::default();
        (0..self.num_blocks()).map(|b| self.count_block(b, &mut scratch)).sum()
    }

    /// One weighted sum per weight vector, blocks combined in order.
    pub fn weighted_sums(&self, weights: &[&[f64]]) -> Vec<f64> {
        let mut scratch = BlockScratch::default();
        let mut total = vec![0.0; weights.len()];
        let mut block_out = vec![0.0; weights.len()];
        for b in 0..self.num_blocks() {
            block_out.iter_mut().for_each(|x| *x = 0.0);
            self.weighted_block(b, weights, &mut scratch, &mut block_out);
            total.iter_mut().zip(&block_out).for_each(|(t, x)| *t += x);
        }
        total
    }

    pub fn for_each(&self, mut visitor: impl FnMut([u32; 4])) {
        let mut scratch = BlockScratch::default();
        for b in 0..self.num_blocks() {
            self.visit_block(b, &mut scratch, &mut visitor);
        }
    }
}

/// Visits every ordered quadruple in `[1, N]^4` satisfying the constraint
/// exactly once.
pub fn enumerate_quadruples(
    table: &FactorTable,
    limit: u32,
    options: EnumerationOptions,
    visitor: impl FnMut([u32; 4]),
) -> Result<()> {
    QuadrupleEnumerator::new(table, limit, options)?.for_each(visitor);
    Ok(())
}

pub fn count_quadruples(table: &FactorTable, limit: u32, options: EnumerationOptions) -> Result<u64> {
    Ok(QuadrupleEnumerator::new(table, limit, options)?.count())
}

fn weight_prefix(weights: &WeightVector, limit: u32) -> Result<&[f64]> {
    if weights.limit() < limit {
        return Err(Error::LimitMismatch { expected: limit, found: weights.limit() });
    }
    Ok(&weights.values()[..limit as usize])
}

/// `sum w(n1) w(n2) w(m1) w(m2)` over the constraint-satisfying quadruples.
pub fn weighted_quadruple_sum(
    table: &FactorTable,
    limit: u32,
    options: EnumerationOptions,
    weights: &WeightVector,
) -> Result<f64> {
    let w = weight_prefix(weights, limit)?;
    Ok(QuadrupleEnumerator::new(table, limit, options)?.weighted_sums(&[w])[0])
}

/// Exact count and, with weights, the weighted sum against
/// `(sum_{n<=N} w(n)^2)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub limit: u32,
    pub constraint: QuadrupleConstraint,
    pub exclude_swaps: bool,
    pub exact_count: u64,
    pub weighted_sum: Option<f64>,
    pub normalizer: Option<f64>,
    pub ratio: Option<f64>,
}

impl EnergyReport {
    /// Assembles a report from a count and an optional weighted sum.
    pub fn new(
        limit: u32,
        options: EnumerationOptions,
        exact_count: u64,
        weighted: Option<(f64, &WeightVector)>,
    ) -> Result<Self> {
        let (weighted_sum, normalizer, ratio) = match weighted {
            Some((sum, w)) => {
                let mut sq = NeumaierSum::new();
                weight_prefix(w, limit)?.iter().for_each(|&x| sq.add(x * x));
                let norm = sq.value() * sq.value();
                (Some(sum), Some(norm), (norm > 0.0).then(|| sum / norm))
            }
            None => (None, None, None),
        };
        Ok(Self {
            limit,
            constraint: options.constraint,
            exclude_swaps: options.exclude_swaps,
            exact_count,
            weighted_sum,
            normalizer,
            ratio,
        })
    }
}

pub fn energy_report(
    table: &FactorTable,
    limit: u32,
    options: EnumerationOptions,
    weights: Option<&WeightVector>,
) -> Result<EnergyReport> {
    let e = QuadrupleEnumerator::new(table, limit, options)?;
    let weighted = match weights {
        Some(w) => Some((e.weighted_sums(&[weight_prefix(w, limit)?])[0], w)),
        None => None,
    };
    EnergyReport::new(limit, options, e.count(), weighted)
}

/// Second moment of the weighted quadruple sum over random weight draws,
/// against `(1 - rho)^4 rho^4 N^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationResult {
    pub limit: u32,
    pub rho: f64,
    pub reps: u32,
    pub mean_sq: f64,
    /// Standard error of `mean_sq` across draws.
    pub se: f64,
    pub target: f64,
    /// `mean_sq / target`; NaN when the target is zero.
    pub ratio: f64,
    pub ratio_se: f64,
}

/// The `r`-th Bernoulli weight draw of a concentration experiment.
pub fn concentration_weights(limit: u32, rho: f64, seed: u64, r: u32) -> Result<WeightVector> {
    let set = IndexSet::bernoulli_random(limit, rho, derive_seed(seed, r as u64))?;
    WeightVector::centered(&set, rho)
}

pub fn validate_concentration(limit: u32, rho: f64, reps: u32, options: EnumerationOptions) -> Result<()> {
    check_density(rho)?;
    if reps < 2 {
        return Err(Error::InvalidParameter("concentration needs at least R = 2 draws".into()));
    }
    options.check(limit)
}

/// Summarizes per-draw weighted sums (in draw order).
pub fn concentration_from_sums(limit: u32, rho: f64, sums: &[f64]) -> ConcentrationResult {
    let squares: Vec<f64> = sums.iter().map(|s| s * s).collect();
    let mean_sq = mean(&squares);
    let r = squares.len() as f64;
    let mut ss = NeumaierSum::new();
    squares.iter().for_each(|x| ss.add((x - mean_sq) * (x - mean_sq)));
    let se = libm::sqrt(ss.value() / ((r - 1.0) * r));
    let n = limit as f64;
    let base = rho * (1.0 - rho) * n;
    let target = base * base * base * base;
    ConcentrationResult {
        limit,
        rho,
        reps: sums.len() as u32,
        mean_sq,
        se,
        target,
        ratio: mean_sq / target,
        ratio_se: se / target,
    }
}

/// Draws `reps` Bernoulli weight vectors and measures the second moment of
/// the weighted quadruple sum.
pub fn concentration_experiment(
    table: &FactorTable,
    limit: u32,
    rho: f64,
    reps: u32,
    seed: u64,
    options: EnumerationOptions,
) -> Result<ConcentrationResult> {
    validate_concentration(limit, rho, reps, options)?;
    let draws: Vec<WeightVector> =
        (0..reps).map(|r| concentration_weights(limit, rho, seed, r)).collect::<Result<_>>()?;
    let slices: Vec<&[f64]> = draws.iter().map(|w| w.values()).collect();
    let sums = QuadrupleEnumerator::new(table, limit, options)?.weighted_sums(&slices);
    Ok(concentration_from_sums(limit, rho, &sums))
}

/// Sample mean and variance (denominator `R - 1`) of `sum_n w(n)^2` over
/// `reps` Bernoulli weight draws.
pub fn sum_w_squared_stats(limit: u32, rho: f64, reps: u32, seed: u64) -> Result<(f64, f64)> {
    check_density(rho)?;
    if reps < 2 {
        return Err(Error::InvalidParameter("need at least R = 2 draws".into()));
    }
    let values: Vec<f64> = (0..reps)
        .map(|r| concentration_weights(limit, rho, seed, r).map(|w| w.sum_of_squares()))
        .collect::<Result<_>>()?;
    let m = mean(&values);
    let mut ss = NeumaierSum::new();
    values.iter().for_each(|v| ss.add((v - m) * (v - m)));
    Ok((m, ss.value() / (reps as f64 - 1.0)))
}
