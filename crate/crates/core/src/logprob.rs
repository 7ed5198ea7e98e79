//! Log10-domain arithmetic helpers.
//!
//! Every probability in the decoder is carried as a base-10 logarithm, the
//! native unit of ARPA files. Zero probability is `f64::NEG_INFINITY`.

pub const LOG10_ZERO: f64 = f64::NEG_INFINITY;

/// `log10(10^a + 10^b)` without leaving the log domain.
///
/// When one side is `-inf` the other is returned unchanged, bit for bit.
#[inline]
pub fn log10_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == LOG10_ZERO {
        return hi;
    }
    hi + (10f64.powf(lo - hi)).ln_1p() / std::f64::consts::LN_10
}

/// Sums a sequence of log10 probabilities in iteration order.
pub fn log10_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(LOG10_ZERO, log10_add)
}

#[inline]
pub fn ln_to_log10(v: f64) -> f64 {
    v / std::f64::consts::LN_10
}

#[inline]
pub fn log10_to_ln(v: f64) -> f64 {
    v * std::f64::consts::LN_10
}

/// `log10(p)` with `log10(0) = -inf`.
#[inline]
pub fn prob_to_log10(p: f64) -> f64 {
    if p <= 0.0 {
        LOG10_ZERO
    } else {
        p.log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_matches_linear_sum() {
        let a = 0.3f64.log10();
        let b = 0.2f64.log10();
        assert!((10f64.powf(log10_add(a, b)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_is_identity() {
        let a = -1.234_567;
        assert_eq!(log10_add(a, LOG10_ZERO).to_bits(), a.to_bits());
        assert_eq!(log10_add(LOG10_ZERO, a).to_bits(), a.to_bits());
        assert_eq!(log10_add(LOG10_ZERO, LOG10_ZERO), LOG10_ZERO);
    }

    #[test]
    fn tiny_values_do_not_underflow() {
        let a = -400.0;
        let s = log10_add(a, a);
        assert!((s - (a + 2f64.log10())).abs() < 1e-12);
    }

    #[test]
    fn sum_of_empty_is_zero_probability() {
        assert_eq!(log10_sum(std::iter::empty()), LOG10_ZERO);
    }
}
