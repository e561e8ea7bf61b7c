//! Seeding helpers shared by every randomized operation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless hash of a key tuple; the basis of counter-based sampling.
pub fn mix(key: &[u64]) -> u64 {
    key.iter().fold(0x243F_6A88_85A3_08D3, |acc, &k| {
        splitmix64(acc ^ splitmix64(k))
    })
}

/// Uniform draw in [0, 1) determined entirely by `key`.
pub fn unit_f64(key: &[u64]) -> f64 {
    (mix(key) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A stream generator for `(seed, stream...)`, e.g. one per example index.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut key = Vec::with_capacity(path.len() + 1);
    key.push(seed);
    key.extend_from_slice(path);
    ChaCha8Rng::seed_from_u64(mix(&key))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_is_in_range_and_key_sensitive() {
        let a = unit_f64(&[1, 2, 3]);
        assert!((0.0..1.0).contains(&a));
        assert_ne!(a, unit_f64(&[1, 2, 4]));
        assert_eq!(a, unit_f64(&[1, 2, 3]));
    }

    #[test]
    fn unit_mean_is_near_half() {
        let n = 20_000u64;
        let mean = (0..n).map(|i| unit_f64(&[9, i])).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }
}
