//! Compensated (Neumaier) summation for long real and complex sums.

use num_complex::Complex64;

/// Partial sums over more than this many terms switch to compensated
/// accumulation.
pub const COMPENSATION_THRESHOLD: u32 = 1_000_000;

#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Complex accumulator, plain or compensated depending on the term count.
#[derive(Debug, Clone, Copy)]
pub enum ComplexAccumulator {
    Plain(Complex64),
    Compensated(NeumaierSum, NeumaierSum),
}

impl ComplexAccumulator {
    /// Picks the accumulator for a sum of up to `terms` terms.
    pub fn for_terms(terms: u32) -> Self {
        if terms > COMPENSATION_THRESHOLD {
            Self::compensated()
        } else {
            Self::Plain(Complex64::new(0.0, 0.0))
        }
    }

    pub fn compensated() -> Self {
        Self::Compensated(NeumaierSum::new(), NeumaierSum::new())
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        match self {
            Self::Plain(s) => *s += z,
            Self::Compensated(re, im) => {
                re.add(z.re);
                im.add(z.im);
            }
        }
    }

    pub fn value(&self) -> Complex64 {
        match self {
            Self::Plain(s) => *s,
            Self::Compensated(re, im) => Complex64::new(re.value(), im.value()),
        }
    }
}
