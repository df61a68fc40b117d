//! Steinhaus random multiplicative functions on `[1, N]`.
//!
//! The crate is `no_std` (it needs `alloc`) and carries the whole numerical
//! engine: a linear sieve with smallest/largest prime factor tables, exact
//! phase-form realizations of `f`, the subsets `A` and centered weights
//! `w(n) = 1_A(n) - rho`, Monte Carlo summaries with normality diagnostics,
//! and exact enumeration of the multiplicative quadruples
//! `n1 n2 = m1 m2` under largest-prime-factor constraints.
//!
//! Everything here is sequential and deterministic. Work is exposed in
//! independent units (replicates, product blocks) so a caller with threads
//! can schedule them freely and still reduce in a fixed order.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod energy;
pub mod error;
pub mod fit;
pub mod montecarlo;
pub mod rmf;
pub mod rng;
pub mod sets;
pub mod sieve;
pub mod summation;

pub use num_complex::Complex64;

pub use energy::{
    ConcentrationResult, EnergyReport, EnumerationOptions, QuadrupleConstraint,
    QuadrupleEnumerator,
};
pub use error::{Error, Result};
pub use fit::fit_growth_exponent;
pub use montecarlo::{
    GaussianTargets, HarperRow, NormalizationMode, SampleSummary, Simulation, SimulationPlan,
};
pub use rmf::{Phase, PhaseModel, RmfRealization};
pub use sets::{IndexSet, SetSpec, WeightVector};
pub use sieve::FactorTable;
