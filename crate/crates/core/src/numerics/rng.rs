//! Seeded pseudo-random numbers.
//!
//! The generator is SplitMix64. With a 64-bit `state`, each draw performs
//!
//! ```text
//! state = state + 0x9E37_79B9_7F4A_7C15          (wrapping)
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9     (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB     (wrapping)
//! out = z ^ (z >> 31)
//! ```
//!
//! and the initial state is the seed itself. Derived draws:
//!
//! - `next_f64`: `(out >> 11) * 2^-53`, uniform on `[0, 1)`.
//! - `uniform(lo, hi)`: `lo + (hi - lo) * next_f64()`.
//! - `uniform_int(n)`: Lemire's multiply-shift with rejection, unbiased on `0..n`.
//! - `gauss(mean, std)`: Box–Muller, one normal per call from two uniforms
//!   `u1 = 1 - next_f64()` (in `(0, 1]`) and `u2 = next_f64()`:
//!   `mean + std * sqrt(-2 ln u1) * cos(2π u2)`. The sine branch is discarded.
//! - `shuffle(n)`: Fisher–Yates over `0..n`, swapping `i` with
//!   `uniform_int(i + 1)` for `i = n-1 down to 1`.

use std::f64::consts::TAU;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Independent generator for a named sub-stream of a run.
    pub fn derive(seed: u64, stream: u64) -> Self {
        let mut mix = Rng::new(seed ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        Rng::new(mix.next_u64())
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        assert!(lo < hi, "uniform: lo ({lo}) must be below hi ({hi})");
        lo + (hi - lo) * self.next_f64()
    }

    pub fn uniform_int(&mut self, n: usize) -> usize {
        assert!(n >= 1, "uniform_int: n must be positive");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = self.next_u64() as u128 * n as u128;
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn gauss(&mut self, mean: f64, std: f64) -> f64 {
        assert!(std >= 0.0, "gauss: std must be non-negative");
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        if std == 0.0 {
            return mean;
        }
        mean + std * (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// Random permutation of `0..n`.
    pub fn shuffle(&mut self, n: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        self.shuffle_in_place(&mut perm);
        perm
    }

    pub fn shuffle_in_place<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.uniform_int(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(Rng::new(1).next_u64(), Rng::new(2).next_u64());
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs of SplitMix64 seeded with 0
        let mut r = Rng::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn uniform_int_buckets() {
        let mut r = Rng::new(9);
        let mut counts = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[r.uniform_int(4)] += 1;
        }
        for c in counts {
            let f = c as f64 / draws as f64;
            assert!((0.24..=0.26).contains(&f), "frequency {f}");
        }
    }

    #[test]
    fn uniform_range() {
        let mut r = Rng::new(5);
        for _ in 0..10_000 {
            let v = r.uniform(-0.5, 2.0);
            assert!((-0.5..2.0).contains(&v));
        }
    }

    #[test]
    fn gauss_zero_std_is_mean() {
        let mut r = Rng::new(1);
        assert_eq!(r.gauss(3.25, 0.0), 3.25);
    }

    #[test]
    fn gauss_moments() {
        let mut r = Rng::new(77);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| r.gauss(1.0, 2.0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0).abs() < 0.03);
        assert!((var.sqrt() - 2.0).abs() < 0.03);
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut r = Rng::new(3);
        assert_eq!(r.shuffle(1), vec![0]);
        assert!(r.shuffle(0).is_empty());
        let mut p = r.shuffle(50);
        p.sort_unstable();
        assert_eq!(p, (0..50).collect::<Vec<_>>());
    }

    #[test]
    #[should_panic]
    fn uniform_int_zero_panics() {
        Rng::new(0).uniform_int(0);
    }
}
