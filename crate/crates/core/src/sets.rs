//! Subsets `A` of `[1, N]` and their centered weights `w(n) = 1_A(n) - rho`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{check_density, Error, Result};
use crate::rng::{keyed_u64, unit_f64, DOMAIN_MEMBERSHIP};
use crate::sieve::FactorTable;
use crate::summation::NeumaierSum;

/// A subset of `[1, N]`, kept both as a sorted member list and a bitmap.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    limit: u32,
    members: Vec<u32>,
    bitmap: Vec<u64>,
    nominal_density: f64,
}

impl IndexSet {
    /// Builds a set from arbitrary members in `[1, limit]`; duplicates are
    /// merged.
    pub fn from_members(
        limit: u32,
        members: impl IntoIterator<Item = u32>,
        nominal_density: f64,
    ) -> Result<Self> {
        if limit == 0 {
            return Err(Error::ZeroLimit);
        }
        check_density(nominal_density)?;
        let mut bitmap = vec![0u64; limit as usize / 64 + 1];
        for n in members {
            if n == 0 || n > limit {
                return Err(Error::OutOfRange { n: n as u64, limit: limit as u64 });
            }
            bitmap[n as usize / 64] |= 1 << (n % 64);
        }
        Ok(Self::from_bitmap(limit, bitmap, nominal_density))
    }

    fn from_bitmap(limit: u32, bitmap: Vec<u64>, nominal_density: f64) -> Self {
        let mut members = Vec::new();
        for (i, &word) in bitmap.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                members.push(i as u32 * 64 + bits.trailing_zeros());
                bits &= bits - 1;
            }
        }
        Self { limit, members, bitmap, nominal_density }
    }

    /// `[1, N]`, density 1.
    pub fn full_interval(limit: u32) -> Result<Self> {
        Self::from_members(limit, 1..=limit, 1.0)
    }

    /// Primes up to the table limit.
    pub fn primes_set(table: &FactorTable) -> Self {
        let limit = table.limit();
        let density = table.primes().len() as f64 / limit as f64;
        Self::from_members(limit, table.primes().iter().copied(), density)
            .expect("primes lie in [1, N]")
    }

    /// The integers of `[N - M, N]`.
    pub fn short_interval(limit: u32, m: u32) -> Result<Self> {
        if m > limit {
            return Err(Error::InvalidParameter(format!(
                "short interval length M = {m} exceeds N = {limit}"
            )));
        }
        // N - M = 0 only when M = N; 0 is not in [1, N].
        let lo = (limit - m).max(1);
        let size = limit - lo + 1;
        Self::from_members(limit, lo..=limit, size as f64 / limit as f64)
    }

    /// `{a b : 1 <= a, b <= floor(sqrt N), a b <= N}`.
    pub fn multiplication_table_set(limit: u32) -> Result<Self> {
        if limit == 0 {
            return Err(Error::ZeroLimit);
        }
        let root = isqrt(limit as u64) as u32;
        let mut bitmap = vec![0u64; limit as usize / 64 + 1];
        for a in 1..=root {
            for b in a..=root {
                let k = a * b;
                if k > limit {
                    break;
                }
                bitmap[k as usize / 64] |= 1 << (k % 64);
            }
        }
        let mut set = Self::from_bitmap(limit, bitmap, 0.0);
        set.nominal_density = set.len() as f64 / limit as f64;
        Ok(set)
    }

    /// Each `n` is included independently with probability `rho`;
    /// membership is a pure function of `(set_seed, n)`.
    pub fn bernoulli_random(limit: u32, rho: f64, set_seed: u64) -> Result<Self> {
        check_density(rho)?;
        if limit == 0 {
            return Err(Error::ZeroLimit);
        }
        let mut bitmap = vec![0u64; limit as usize / 64 + 1];
        for n in 1..=limit {
            if membership_uniform(set_seed, n) < rho {
                bitmap[n as usize / 64] |= 1 << (n % 64);
            }
        }
        Ok(Self::from_bitmap(limit, bitmap, rho))
    }

    /// A uniformly random set of exactly `floor(rho N)` members: the
    /// Bernoulli set for `set_seed` trimmed (or padded) along the same
    /// membership uniforms, so it is nested with every
    /// [`bernoulli_random`](Self::bernoulli_random) set of that seed.
    pub fn exact_size_random(limit: u32, rho: f64, set_seed: u64) -> Result<Self> {
        check_density(rho)?;
        if limit == 0 {
            return Err(Error::ZeroLimit);
        }
        let k = libm::floor(rho * limit as f64 + 1e-9) as usize;
        let mut keyed: Vec<(u64, u32)> =
            (1..=limit).map(|n| (membership_bits(set_seed, n), n)).collect();
        if k < keyed.len() && k > 0 {
            keyed.select_nth_unstable(k - 1);
        }
        Self::from_members(limit, keyed[..k].iter().map(|&(_, n)| n), rho)
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    /// Members in increasing order.
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, n: u32) -> bool {
        n >= 1 && n <= self.limit && self.bitmap[n as usize / 64] >> (n % 64) & 1 == 1
    }

    /// The intended density: the Bernoulli parameter for random sets,
    /// `|A| / N` for deterministic ones.
    pub fn nominal_density(&self) -> f64 {
        self.nominal_density
    }

    pub fn empirical_density(&self) -> f64 {
        self.len() as f64 / self.limit as f64
    }
}

fn membership_bits(set_seed: u64, n: u32) -> u64 {
    keyed_u64(DOMAIN_MEMBERSHIP, set_seed, 0, n as u64)
}

fn membership_uniform(set_seed: u64, n: u32) -> f64 {
    unit_f64(membership_bits(set_seed, n))
}

fn isqrt(n: u64) -> u64 {
    let mut r = libm::sqrt(n as f64) as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `w(n)` for `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    rho: f64,
    values: Vec<f64>,
}

impl WeightVector {
    /// `w(n) = 1_A(n) - rho`, centered at the given (nominal) `rho`.
    pub fn centered(set: &IndexSet, rho: f64) -> Result<Self> {
        check_density(rho)?;
        let (inside, outside) = (1.0 - rho, -rho);
        let values = (1..=set.limit())
            .map(|n| if set.contains(n) { inside } else { outside })
            .collect();
        Ok(Self { rho, values })
    }

    /// Arbitrary weights; `values[i]` is `w(i + 1)`.
    pub fn from_values(rho: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ZeroLimit);
        }
        Ok(Self { rho, values })
    }

    pub fn limit(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Weights for `n = 1..=N`, in order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, n: u32) -> Result<f64> {
        n.checked_sub(1)
            .and_then(|i| self.values.get(i as usize))
            .copied()
            .ok_or(Error::OutOfRange { n: n as u64, limit: self.limit() as u64 })
    }

    pub fn sum(&self) -> f64 {
        let mut s = NeumaierSum::new();
        self.values.iter().for_each(|&w| s.add(w));
        s.value()
    }

    /// `sum_n w(n)^2`.
    pub fn sum_of_squares(&self) -> f64 {
        let mut s = NeumaierSum::new();
        self.values.iter().for_each(|&w| s.add(w * w));
        s.value()
    }
}

/// Exact Bernoulli-model mean and variance of `sum_n w(n)^2`:
/// `rho (1 - rho) N` and `rho (1 - rho) (1 - 2 rho)^2 N`.
pub fn weight_moments(limit: u32, rho: f64) -> Result<(f64, f64)> {
    check_density(rho)?;
    let n = limit as f64;
    let base = rho * (1.0 - rho);
    let spread = 1.0 - 2.0 * rho;
    Ok((base * n, base * spread * spread * n))
}

/// The set mini-language, minus file input:
/// `interval`, `primes`, `short:M`, `table`, `bernoulli:RHO:SEED`,
/// `exact:RHO:SEED`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetSpec {
    Interval,
    Primes,
    Short { m: u32 },
    Table,
    Bernoulli { rho: f64, seed: u64 },
    /// Exactly `floor(rho N)` members, see [`IndexSet::exact_size_random`].
    Exact { rho: f64, seed: u64 },
}

impl SetSpec {
    /// Builds the set on `[1, table.limit()]`.
    pub fn build(&self, table: &FactorTable) -> Result<IndexSet> {
        let n = table.limit();
        match *self {
            SetSpec::Interval => IndexSet::full_interval(n),
            SetSpec::Primes => Ok(IndexSet::primes_set(table)),
            SetSpec::Short { m } => IndexSet::short_interval(n, m),
            SetSpec::Table => IndexSet::multiplication_table_set(n),
            SetSpec::Bernoulli { rho, seed } => IndexSet::bernoulli_random(n, rho, seed),
            SetSpec::Exact { rho, seed } => IndexSet::exact_size_random(n, rho, seed),
        }
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::Interval => f.write_str("interval"),
            SetSpec::Primes => f.write_str("primes"),
            SetSpec::Short { m } => write!(f, "short:{m}"),
            SetSpec::Table => f.write_str("table"),
            SetSpec::Bernoulli { rho, seed } => write!(f, "bernoulli:{rho}:{seed}"),
            SetSpec::Exact { rho, seed } => write!(f, "exact:{rho}:{seed}"),
        }
    }
}

impl FromStr for SetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidParameter(format!("invalid set spec `{s}`: {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        let rho_seed = |parts: &[&str]| -> Result<(f64, u64)> {
            let [_, rho, seed] = parts else {
                return Err(bad("expected KIND:RHO:SEED"));
            };
            let rho: f64 = rho.parse().map_err(|_| bad("RHO is not a number"))?;
            check_density(rho).map_err(|_| bad("RHO must lie in [0, 1]"))?;
            let seed = seed.parse().map_err(|_| bad("SEED is not an unsigned integer"))?;
            Ok((rho, seed))
        };
        match parts[0] {
            "interval" if parts.len() == 1 => Ok(SetSpec::Interval),
            "primes" if parts.len() == 1 => Ok(SetSpec::Primes),
            "table" if parts.len() == 1 => Ok(SetSpec::Table),
            "short" => match parts.as_slice() {
                [_, m] => Ok(SetSpec::Short {
                    m: m.parse().map_err(|_| bad("M is not an unsigned integer"))?,
                }),
                _ => Err(bad("expected short:M")),
            },
            "bernoulli" => rho_seed(&parts).map(|(rho, seed)| SetSpec::Bernoulli { rho, seed }),
            "exact" => rho_seed(&parts).map(|(rho, seed)| SetSpec::Exact { rho, seed }),
            _ => Err(bad(
                "expected interval, primes, short:M, table, bernoulli:RHO:SEED or exact:RHO:SEED",
            )),
        }
    }
}
