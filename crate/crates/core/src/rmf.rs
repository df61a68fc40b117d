//! Realizations of a Steinhaus random multiplicative function.
//!
//! A realization stores the phase `phi(n)` with `f(n) = exp(2 pi i phi(n))`
//! as a 64-bit fixed-point fraction of a full turn. Addition of phases is
//! wrapping integer addition, so `phi(mn) = phi(m) + phi(n) mod 1` holds
//! bit for bit and `|f(n)| = 1` is never eroded along factorization chains.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::ops::Add;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{keyed_u64, DOMAIN_PHASE};
use crate::sets::{IndexSet, WeightVector};
use crate::sieve::FactorTable;
use crate::summation::ComplexAccumulator;

/// A point on the unit circle as a fraction `bits / 2^64` of a full turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Phase(pub u64);

impl Phase {
    pub const ZERO: Phase = Phase(0);

    /// Phase of the fraction `x` of a turn, reduced mod 1.
    pub fn from_fraction(x: f64) -> Phase {
        let frac = x - libm::floor(x);
        // frac * 2^64 may round up to 2^64 for frac just below 1; that wraps to 0.
        let scaled = frac * 18_446_744_073_709_551_616.0;
        if scaled >= 18_446_744_073_709_551_616.0 {
            Phase(0)
        } else {
            Phase(scaled as u64)
        }
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// The fraction of a turn in `[0, 1)`, truncated to 53 bits.
    pub fn fraction(self) -> f64 {
        (self.0 >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// `exp(2 pi i phi)` evaluated through `libm`. Reference path for tests.
    pub fn to_complex_libm(self) -> Complex64 {
        // Signed reading keeps the angle in [-pi, pi).
        let angle = (self.0 as i64) as f64 * (TAU / 18_446_744_073_709_551_616.0);
        let (s, c) = libm::sincos(angle);
        Complex64::new(c, s)
    }

    /// `exp(2 pi i phi)` via a 4096-entry table and a short Taylor
    /// correction for the low 52 bits. Accurate to a few ulps.
    #[inline]
    pub fn to_complex(self) -> Complex64 {
        let (tc, ts) = UNIT_TABLE[(self.0 >> LOW_BITS) as usize];
        let theta = (self.0 & LOW_MASK) as f64 * (TAU / 18_446_744_073_709_551_616.0);
        let t2 = theta * theta;
        let c = 1.0 - 0.5 * t2 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0));
        let s = theta * (1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0)));
        Complex64::new(tc * c - ts * s, tc * s + ts * c)
    }
}

impl Add for Phase {
    type Output = Phase;
    #[inline]
    fn add(self, rhs: Phase) -> Phase {
        Phase(self.0.wrapping_add(rhs.0))
    }
}

const TABLE_BITS: u32 = 12;
const LOW_BITS: u32 = 64 - TABLE_BITS;
const LOW_MASK: u64 = (1u64 << LOW_BITS) - 1;
const TABLE_LEN: usize = 1 << TABLE_BITS;
const QUARTER: usize = TABLE_LEN / 4;

static UNIT_TABLE: [(f64, f64); TABLE_LEN] = build_unit_table();

/// (cos, sin) of `x` for `|x| <= pi/4` by Taylor series.
const fn small_angle_cos_sin(x: f64) -> (f64, f64) {
    let x2 = x * x;
    let mut c = 1.0;
    let mut s = x;
    let mut tc = 1.0;
    let mut ts = x;
    let mut k = 1;
    while k < 14 {
        let a = (2 * k) as f64;
        tc *= -x2 / ((a - 1.0) * a);
        ts *= -x2 / (a * (a + 1.0));
        c += tc;
        s += ts;
        k += 1;
    }
    (c, s)
}

/// (cos, sin) of `2 pi r / TABLE_LEN` for `r` in one quarter turn.
const fn quarter_entry(r: usize) -> (f64, f64) {
    let step = TAU / TABLE_LEN as f64;
    if r <= QUARTER / 2 {
        small_angle_cos_sin(step * r as f64)
    } else {
        let (c, s) = small_angle_cos_sin(step * (QUARTER - r) as f64);
        (s, c)
    }
}

const fn build_unit_table() -> [(f64, f64); TABLE_LEN] {
    let mut table = [(0.0, 0.0); TABLE_LEN];
    let mut j = 0;
    while j < TABLE_LEN {
        let (c, s) = quarter_entry(j % QUARTER);
        table[j] = match j / QUARTER {
            0 => (c, s),
            1 => (-s, c),
            2 => (-c, -s),
            _ => (s, -c),
        };
        j += 1;
    }
    table
}

/// How prime phases are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseModel {
    /// Independent uniform phases per prime: the Steinhaus model.
    #[default]
    Steinhaus,
    /// All phases zero, `f = 1`. Deterministic testing switch.
    Identity,
}

/// One sampled `f` on `[1, N]`, stored as phases.
#[derive(Debug, Clone)]
pub struct RmfRealization {
    phases: Vec<Phase>,
    master_seed: u64,
    replicate: u64,
}

impl RmfRealization {
    /// Samples `f` for `(master_seed, replicate)`. Each prime phase is a pure
    /// function of `(master_seed, replicate, p)`.
    pub fn sample(table: &FactorTable, master_seed: u64, replicate: u64) -> Self {
        let mut r = Self::empty(table.limit(), master_seed, replicate);
        r.resample(table, PhaseModel::Steinhaus, master_seed, replicate);
        r
    }

    /// The identity function `f = 1`.
    pub fn identity(table: &FactorTable) -> Self {
        Self::empty(table.limit(), 0, 0)
    }

    /// Injects explicit phases at chosen primes; all other primes get zero.
    pub fn with_prime_phases(table: &FactorTable, forced: &[(u32, Phase)]) -> Result<Self> {
        let n = table.limit() as usize;
        let mut prime_phases = vec![Phase::ZERO; n + 1];
        for &(p, phase) in forced {
            if !table.is_prime(p) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "injected phase at {p}, which is not a prime <= {n}"
                )));
            }
            prime_phases[p as usize] = phase;
        }
        let mut r = Self::empty(table.limit(), 0, 0);
        r.fill(table, |p| prime_phases[p as usize]);
        Ok(r)
    }

    fn empty(limit: u32, master_seed: u64, replicate: u64) -> Self {
        Self { phases: vec![Phase::ZERO; limit as usize + 1], master_seed, replicate }
    }

    /// Re-samples in place, reusing the phase buffer.
    pub fn resample(
        &mut self,
        table: &FactorTable,
        model: PhaseModel,
        master_seed: u64,
        replicate: u64,
    ) {
        self.phases.resize(table.limit() as usize + 1, Phase::ZERO);
        self.master_seed = master_seed;
        self.replicate = replicate;
        match model {
            PhaseModel::Steinhaus => self.fill(table, |p| {
                Phase(keyed_u64(DOMAIN_PHASE, master_seed, replicate, p as u64))
            }),
            PhaseModel::Identity => self.phases.fill(Phase::ZERO),
        }
    }

    /// One ascending pass: primes draw, composites use
    /// `phi(n) = phi(spf(n)) + phi(n / spf(n))`.
    fn fill(&mut self, table: &FactorTable, mut prime_phase: impl FnMut(u32) -> Phase) {
        let spf = table.spf_table();
        let phases = &mut self.phases;
        phases[0] = Phase::ZERO;
        if phases.len() > 1 {
            phases[1] = Phase::ZERO;
        }
        for n in 2..phases.len() {
            let p = spf[n] as usize;
            phases[n] = if p == n { prime_phase(n as u32) } else { phases[p] + phases[n / p] };
        }
    }

    pub fn limit(&self) -> u32 {
        (self.phases.len() - 1) as u32
    }

    /// `(master_seed, replicate_index)` this realization was drawn from.
    pub fn seed_info(&self) -> (u64, u64) {
        (self.master_seed, self.replicate)
    }

    pub fn phase(&self, n: u32) -> Result<Phase> {
        self.phases
            .get(n as usize)
            .filter(|_| n >= 1)
            .copied()
            .ok_or(Error::OutOfRange { n: n as u64, limit: self.limit() as u64 })
    }

    pub fn value(&self, n: u32) -> Result<Complex64> {
        self.phase(n).map(Phase::to_complex)
    }

    /// Phases indexed by `n` (entry 0 unused).
    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    /// `sum_{n in A} f(n)`, ascending `n`.
    pub fn subset_sum(&self, set: &IndexSet) -> Result<Complex64> {
        if set.limit() != self.limit() {
            return Err(Error::LimitMismatch { expected: self.limit(), found: set.limit() });
        }
        let mut acc = ComplexAccumulator::for_terms(self.limit());
        for &n in set.members() {
            acc.add(self.phases[n as usize].to_complex());
        }
        Ok(acc.value())
    }

    /// `sum_{n <= N} w(n) f(n)`, ascending `n`.
    pub fn weighted_sum(&self, weights: &WeightVector) -> Result<Complex64> {
        if weights.limit() != self.limit() {
            return Err(Error::LimitMismatch { expected: self.limit(), found: weights.limit() });
        }
        let mut acc = ComplexAccumulator::for_terms(self.limit());
        for (phase, &w) in self.phases[1..].iter().zip(weights.values()) {
            if w != 0.0 {
                acc.add(phase.to_complex() * w);
            }
        }
        Ok(acc.value())
    }

    /// Partial sums `sum_{n <= x} f(n)` at each `x` of an ascending grid.
    pub fn prefix_sums(&self, grid: &[u32]) -> Result<Vec<Complex64>> {
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("x grid must be strictly ascending".into()));
        }
        if let Some(&x) = grid.iter().find(|&&x| x == 0 || x > self.limit()) {
            return Err(Error::OutOfRange { n: x as u64, limit: self.limit() as u64 });
        }
        let mut acc = ComplexAccumulator::for_terms(grid.last().copied().unwrap_or(0));
        let mut out = Vec::with_capacity(grid.len());
        let mut next = 1usize;
        for &x in grid {
            for phase in &self.phases[next..=x as usize] {
                acc.add(phase.to_complex());
            }
            next = x as usize + 1;
            out.push(acc.value());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn approx(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn table_matches_libm() {
        let mut worst: f64 = 0.0;
        for j in 0..TABLE_LEN as u64 {
            let p = Phase(j << LOW_BITS);
            worst = worst.max((p.to_complex() - p.to_complex_libm()).norm());
        }
        assert!(worst < 1e-15, "worst table error {worst}");
    }

    #[test]
    fn fast_path_is_unit_modulus() {
        for k in 0..100_000u64 {
            let p = Phase(crate::rng::mix64(k));
            let z = p.to_complex();
            assert!((z.norm() - 1.0).abs() < 2f64.powi(-45));
            assert!(approx(z, p.to_complex_libm(), 1e-15));
        }
    }

    #[test]
    fn fraction_round_trip() {
        assert_eq!(Phase::from_fraction(0.25), Phase(1 << 62));
        assert_eq!(Phase::from_fraction(1.25), Phase(1 << 62));
        assert_eq!(Phase::from_fraction(-0.5), Phase(1 << 63));
        assert_eq!(Phase(1 << 63).fraction(), 0.5);
        assert!(Phase(u64::MAX).fraction() < 1.0);
        assert!(approx(Phase::from_fraction(0.25).to_complex(), Complex64::new(0.0, 1.0), 1e-16));
    }

    #[test]
    fn identity_realization_is_one() {
        let t = FactorTable::build(100).unwrap();
        let r = RmfRealization::identity(&t);
        for n in 1..=100 {
            assert_eq!(r.value(n).unwrap(), Complex64::new(1.0, 0.0));
        }
        assert!(r.value(0).is_err());
        assert!(r.value(101).is_err());
    }

    #[test]
    fn injected_phases_compose() {
        let t = FactorTable::build(100).unwrap();
        let r = RmfRealization::with_prime_phases(
            &t,
            &[(2, Phase::from_fraction(0.25)), (3, Phase::from_fraction(0.5))],
        )
        .unwrap();
        assert_eq!(r.phase(12).unwrap(), Phase::ZERO);
        assert_eq!(r.phase(6).unwrap(), Phase::from_fraction(0.75));
        assert_eq!(r.phase(5).unwrap(), Phase::ZERO);
        assert!(RmfRealization::with_prime_phases(&t, &[(4, Phase(1))]).is_err());
    }

    #[test]
    fn phi_one_is_zero_and_seed_info_recorded() {
        let t = FactorTable::build(1000).unwrap();
        let r = RmfRealization::sample(&t, 42, 3);
        assert_eq!(r.phase(1).unwrap(), Phase::ZERO);
        assert_eq!(r.seed_info(), (42, 3));
        assert_eq!(r.limit(), 1000);
    }

    #[test]
    fn replicates_differ_at_almost_all_primes() {
        let t = FactorTable::build(10_000).unwrap();
        let a = RmfRealization::sample(&t, 42, 0);
        let b = RmfRealization::sample(&t, 42, 1);
        let differ = t.primes().iter().filter(|&&p| a.phase(p) != b.phase(p)).count();
        assert!(differ * 100 >= t.primes().len() * 99);
        assert_eq!(differ, t.primes().len());
    }

    #[test]
    fn sampling_is_deterministic_and_resample_matches() {
        let t = FactorTable::build(5000).unwrap();
        let a = RmfRealization::sample(&t, 7, 11);
        let mut b = RmfRealization::sample(&t, 1, 1);
        b.resample(&t, PhaseModel::Steinhaus, 7, 11);
        assert_eq!(a.phases(), b.phases());
    }

    #[test]
    fn sums_on_identity() {
        let t = FactorTable::build(10).unwrap();
        let r = RmfRealization::identity(&t);
        let full = IndexSet::full_interval(10).unwrap();
        assert_eq!(r.subset_sum(&full).unwrap(), Complex64::new(10.0, 0.0));
        let primes = IndexSet::primes_set(&t);
        assert_eq!(r.subset_sum(&primes).unwrap(), Complex64::new(4.0, 0.0));
        let other = IndexSet::full_interval(11).unwrap();
        assert!(r.subset_sum(&other).is_err());
    }

    #[test]
    fn subset_sum_of_one_is_one() {
        let t = FactorTable::build(50).unwrap();
        let r = RmfRealization::sample(&t, 9, 9);
        let one = IndexSet::from_members(50, [1], 0.02).unwrap();
        assert_eq!(r.subset_sum(&one).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn weighted_sum_examples() {
        let t = FactorTable::build(100).unwrap();
        let r = RmfRealization::identity(&t);
        let zero = WeightVector::from_values(0.0, vec![0.0; 100]).unwrap();
        assert_eq!(r.weighted_sum(&zero).unwrap(), Complex64::new(0.0, 0.0));

        let exact = IndexSet::from_members(100, 1..=50, 0.5).unwrap();
        let w = WeightVector::centered(&exact, 0.5).unwrap();
        assert_eq!(r.weighted_sum(&w).unwrap(), Complex64::new(0.0, 0.0));

        let plus_one = IndexSet::from_members(100, 1..=51, 0.5).unwrap();
        let w = WeightVector::centered(&plus_one, 0.5).unwrap();
        assert_eq!(r.weighted_sum(&w).unwrap(), Complex64::new(1.0, 0.0));

        let sampled = RmfRealization::sample(&t, 3, 0);
        let w = WeightVector::centered(&plus_one, 0.5).unwrap();
        let direct: Complex64 =
            (1..=100u32).map(|n| sampled.value(n).unwrap() * w.get(n).unwrap()).sum();
        assert!(approx(sampled.weighted_sum(&w).unwrap(), direct, 1e-12));
    }

    #[test]
    fn prefix_sums_match_subset_sums() {
        let t = FactorTable::build(2000).unwrap();
        let r = RmfRealization::sample(&t, 5, 2);
        let grid = [10u32, 100, 2000];
        let sums = r.prefix_sums(&grid).unwrap();
        for (x, s) in grid.iter().zip(&sums) {
            let direct: Complex64 = (1..=*x).map(|n| r.value(n).unwrap()).sum();
            assert!(approx(*s, direct, 1e-11));
        }
        assert!(r.prefix_sums(&[100, 10]).is_err());
        assert!(r.prefix_sums(&[2001]).is_err());
    }

    proptest! {
        #[test]
        fn phases_are_exactly_multiplicative(seed: u64, rep in 0u64..1000, m in 1u32..=200, k in 1u32..=200) {
            let t = table_40k();
            let r = RmfRealization::sample(t, seed, rep);
            let n = m * k;
            prop_assert_eq!(r.phase(n).unwrap(), r.phase(m).unwrap() + r.phase(k).unwrap());
        }
    }

    fn table_40k() -> &'static FactorTable {
        use std::sync::OnceLock;
        static T: OnceLock<FactorTable> = OnceLock::new();
        T.get_or_init(|| FactorTable::build(40_000).unwrap())
    }
}
