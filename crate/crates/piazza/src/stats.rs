//! Small shared statistics helpers. One percentile convention is used
//! everywhere in the crate: linear interpolation between closest ranks.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("non-finite value in input")]
    NonFinite,
}

/// Percentile with linear interpolation between closest ranks: for sorted
/// values x[0..n] the rank is h = (n - 1) * p and the result interpolates
/// between x[floor(h)] and x[ceil(h)]. `p` is a fraction in [0, 1].
pub fn percentile(values: &[f64], p: f64) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::InvalidProbability(p));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        return Ok(sorted[lo]);
    }
    let frac = h - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Median; even-length inputs average the two central values.
pub fn median(values: &[f64]) -> Result<f64, StatsError> {
    percentile(values, 0.5)
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// 64-bit FNV-1a. Used wherever a stable, platform-independent hash is
/// needed (stub text generation); std's hasher is not guaranteed stable.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// SplitMix64 step, used to derive independent rng seeds from a base seed.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_of_constant_list() {
        assert_eq!(percentile(&[5.0, 5.0, 5.0, 5.0], 0.995).unwrap(), 5.0);
    }

    #[test]
    fn percentile_of_singleton() {
        assert_eq!(percentile(&[7.0], 0.995).unwrap(), 7.0);
        assert_eq!(percentile(&[0.7], 0.95).unwrap(), 0.7);
    }

    #[test]
    fn percentile_interpolates_between_ranks() {
        // 0.00, 0.01, ..., 0.99 at p = 0.95: h = 99 * 0.95 = 94.05,
        // so 0.94 + 0.05 * 0.01 = 0.9405.
        let values: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let p95 = percentile(&values, 0.95).unwrap();
        assert!((p95 - 0.9405).abs() < 1e-12, "got {p95}");
    }

    #[test]
    fn percentile_rejects_empty_and_bad_p() {
        assert_eq!(percentile(&[], 0.5), Err(StatsError::Empty));
        assert_eq!(percentile(&[1.0], 1.5), Err(StatsError::InvalidProbability(1.5)));
    }

    #[test]
    fn median_even_length_averages_middles() {
        assert_eq!(median(&[1.0, 2.0, 3.0, 10.0]).unwrap(), 2.5);
        assert_eq!(median(&[-1.0, 0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn fnv1a_is_stable() {
        // Reference value for "hello" from the FNV-1a specification.
        assert_eq!(fnv1a(b"hello"), 0xa430d84680aabd0b);
    }
}
