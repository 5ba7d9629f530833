use crate::error::{Error, Result};
use crate::num::Real;
use crate::sieve::base_primes;

/// Partial product `2 * prod_{3 <= p <= pmax} (1 - 1/(p - 1)^2)`.
///
/// Decreases towards the twin constant as `pmax` grows; the relative excess
/// over the limit is about [`twin_constant_tail`]`(pmax)`.
pub fn twin_constant<T: Real>(pmax: u64) -> Result<T> {
    if pmax < 3 {
        return Err(Error::domain("twin_constant", format!("pmax {pmax} < 3")));
    }
    let one = T::one();
    let product = base_primes(pmax)?
        .into_iter()
        .skip(1)
        .fold(T::lit(2.0), |acc, p| {
            let d = T::from_count(p - 1);
            acc * (one - (d * d).recip())
        });
    Ok(product)
}

/// Estimate `1/(pmax log pmax)` of the omitted factors' total weight,
/// `sum_{p > pmax} 1/(p - 1)^2`.
pub fn twin_constant_tail(pmax: u64) -> f64 {
    let p = pmax as f64;
    1.0 / (p * p.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_factor() {
        assert_eq!(twin_constant::<f64>(3).unwrap(), 1.5);
        assert_eq!(twin_constant::<f64>(4).unwrap(), 1.5);
        assert!(twin_constant::<f64>(2).is_err());
    }

    #[test]
    fn strictly_decreasing_at_primes() {
        let mut prev = f64::INFINITY;
        for p in base_primes(2000).unwrap().into_iter().skip(1) {
            let c = twin_constant::<f64>(p).unwrap();
            assert!(c < prev);
            assert!(c > super::super::TWIN_CONSTANT);
            prev = c;
        }
    }
}
