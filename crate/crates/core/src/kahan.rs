//! Compensated (Kahan) summation.

use crate::num::Real;

/// Running sum carrying a compensation term for the low-order bits lost in
/// each addition.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum<T: Real> {
    sum: T,
    compensation: T,
}

impl<T: Real> KahanSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    /// Restores an accumulator from its two raw components.
    pub fn from_parts(sum: T, compensation: T) -> Self {
        Self { sum, compensation }
    }

    #[inline]
    pub fn add(&mut self, value: T) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum
    }

    #[inline]
    pub fn compensation(&self) -> T {
        self.compensation
    }

    pub fn sum_iter<I: IntoIterator<Item = T>>(iter: I) -> T {
        let mut k = Self::new();
        for v in iter {
            k.add(v);
        }
        k.value()
    }
}
