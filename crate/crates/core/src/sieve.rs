//! Linear sieve over `[1, N]` with smallest and largest prime factor tables.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest `N` accepted by [`FactorTable::build`].
///
/// Both factor tables are `u32`, so the table costs about `8 N` bytes
/// (800 MB at the cap).
pub const SIEVE_CAP: u32 = 100_000_000;

/// Factorization data for every integer in `[1, N]`.
///
/// Immutable once built. `P(1) = 1` by convention.
#[derive(Debug, Clone)]
pub struct FactorTable {
    limit: u32,
    spf: Vec<u32>,
    lpf: Vec<u32>,
    primes: Vec<u32>,
}

impl FactorTable {
    /// Builds the table with a linear sieve: every composite is crossed out
    /// exactly once, by its smallest prime factor.
    pub fn build(limit: u32) -> Result<Self> {
        if limit == 0 {
            return Err(Error::ZeroLimit);
        }
        if limit > SIEVE_CAP {
            return Err(Error::LimitAboveCap {
                what: "sieve",
                limit: limit as u64,
                cap: SIEVE_CAP as u64,
            });
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes = Vec::new();
        spf[1] = 1;
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let m = i * p as usize;
                if p > si || m > n {
                    break;
                }
                spf[m] = p;
            }
        }

        let mut lpf = vec![0u32; n + 1];
        lpf[1] = 1;
        for i in 2..=n {
            let rest = i / spf[i] as usize;
            lpf[i] = if rest == 1 { spf[i] } else { lpf[rest] };
        }

        Ok(Self { limit, spf, lpf, primes })
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    /// Primes `<= N` in increasing order.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn is_prime(&self, n: u32) -> bool {
        n >= 2 && n <= self.limit && self.spf[n as usize] == n
    }

    fn check(&self, n: u32) -> Result<()> {
        if n == 0 || n > self.limit {
            Err(Error::OutOfRange { n: n as u64, limit: self.limit as u64 })
        } else {
            Ok(())
        }
    }

    /// Smallest prime factor; `1` for `n = 1`.
    pub fn smallest_prime_factor(&self, n: u32) -> Result<u32> {
        self.check(n)?;
        Ok(self.spf[n as usize])
    }

    /// `P(n)`, the largest prime factor, with `P(1) = 1`.
    pub fn largest_prime_factor(&self, n: u32) -> Result<u32> {
        self.check(n)?;
        Ok(self.lpf[n as usize])
    }

    /// Prime factorization as `(prime, exponent)` pairs, primes increasing.
    /// Empty for `n = 1`.
    pub fn factorize(&self, n: u32) -> Result<Vec<(u32, u32)>> {
        self.check(n)?;
        let mut out: Vec<(u32, u32)> = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.spf[m as usize];
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
            m /= p;
        }
        Ok(out)
    }

    /// Raw smallest-prime-factor slice indexed by `n` (entry 0 unused).
    pub fn spf_table(&self) -> &[u32] {
        &self.spf
    }

    /// Raw largest-prime-factor slice indexed by `n` (entry 0 unused).
    pub fn lpf_table(&self) -> &[u32] {
        &self.lpf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial_division_primes(n: u32) -> Vec<u32> {
        (2..=n)
            .filter(|&k| (2..).take_while(|d| d * d <= k).all(|d| k % d != 0))
            .collect()
    }

    #[test]
    fn rejects_zero_and_above_cap() {
        assert_eq!(FactorTable::build(0).unwrap_err(), Error::ZeroLimit);
        let err = FactorTable::build(SIEVE_CAP + 1).unwrap_err();
        assert!(err.is_resource_guard());
        assert!(alloc::format!("{err}").contains("100000000"));
    }

    #[test]
    fn tiny_tables() {
        let t = FactorTable::build(1).unwrap();
        assert!(t.primes().is_empty());
        assert_eq!(t.largest_prime_factor(1).unwrap(), 1);
        let t = FactorTable::build(10).unwrap();
        assert_eq!(t.primes(), &[2, 3, 5, 7]);
    }

    #[test]
    fn largest_prime_factor_examples() {
        let t = FactorTable::build(100).unwrap();
        assert_eq!(t.largest_prime_factor(12).unwrap(), 3);
        assert_eq!(t.largest_prime_factor(97).unwrap(), 97);
        assert_eq!(t.largest_prime_factor(1).unwrap(), 1);
        assert!(t.largest_prime_factor(0).is_err());
        assert!(t.largest_prime_factor(101).is_err());
    }

    #[test]
    fn factorize_examples() {
        let t = FactorTable::build(200_000).unwrap();
        assert!(t.factorize(1).unwrap().is_empty());
        assert_eq!(t.factorize(60).unwrap(), vec![(2, 2), (3, 1), (5, 1)]);
        assert_eq!(t.factorize(134_456).unwrap(), vec![(2, 3), (7, 5)]);
        assert!(t.factorize(200_001).is_err());
    }

    #[test]
    fn primes_match_trial_division() {
        let t = FactorTable::build(10_000).unwrap();
        assert_eq!(t.primes(), trial_division_primes(10_000).as_slice());
        for n in [2u32, 3, 4, 97, 1000, 9973] {
            let small = FactorTable::build(n).unwrap();
            assert_eq!(small.primes(), trial_division_primes(n).as_slice());
        }
    }

    #[test]
    fn table_invariants_hold() {
        let t = FactorTable::build(50_000).unwrap();
        let (spf, lpf) = (t.spf_table(), t.lpf_table());
        for n in 2..=50_000usize {
            let rest = n / spf[n] as usize;
            assert_eq!(n % spf[n] as usize, 0);
            assert_eq!(n % lpf[n] as usize, 0);
            assert!(spf[n] <= lpf[n]);
            if rest == 1 {
                assert_eq!(lpf[n], spf[n]);
                assert!(t.is_prime(n as u32));
            } else {
                assert_eq!(lpf[n], lpf[rest]);
            }
        }
    }

    proptest! {
        #[test]
        fn factorization_reproduces_n(n in 1u32..=1_000_000) {
            let t = table_1e6();
            let f = t.factorize(n).unwrap();
            let product: u64 = f.iter().map(|&(p, e)| (p as u64).pow(e)).product();
            prop_assert_eq!(product, n as u64);
            prop_assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(f.iter().all(|&(p, _)| t.is_prime(p)));
            if n > 1 {
                prop_assert_eq!(f.last().unwrap().0, t.largest_prime_factor(n).unwrap());
            }
        }
    }

    fn table_1e6() -> &'static FactorTable {
        use std::sync::OnceLock;
        static T: OnceLock<FactorTable> = OnceLock::new();
        T.get_or_init(|| FactorTable::build(1_000_000).unwrap())
    }
}
