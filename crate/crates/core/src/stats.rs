//! Small statistical helpers shared by the Monte Carlo modules.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

/// Running count, sum and sum of squares; mergeable across workers.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (wilson_lo, wilson_hi) = wilson_interval(successes, trials, Z95);
        let rate = if trials == 0 { f64::NAN } else { successes as f64 / trials as f64 };
        Proportion { successes, trials, rate, wilson_lo, wilson_hi }
    }

    /// Binomial standard error of the rate.
    pub fn std_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }
}

/// Multinomial counts of `n` draws from `probs` via conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = if q >= 1.0 {
            left
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        };
        counts[i] = c;
        left -= c;
        mass -= p;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn moments_match_direct() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let m: Moments = xs.iter().copied().collect();
        assert_eq!(m.count, 4);
        assert!((m.mean() - 3.5).abs() < 1e-12);
        assert!((m.variance() - 7.0).abs() < 1e-12);
        let mut a: Moments = xs[..2].iter().copied().collect();
        a.merge(&xs[2..].iter().copied().collect());
        assert_eq!(a, m);
    }

    #[test]
    fn wilson_contains_rate_and_stays_in_unit_interval() {
        for (s, n) in [(0, 10), (10, 10), (5, 10), (130, 200), (1, 1)] {
            let (lo, hi) = wilson_interval(s, n, Z95);
            let p = s as f64 / n as f64;
            assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        }
        let (lo, hi) = wilson_interval(1, 1, Z95);
        assert!(hi - lo > 0.5);
    }

    #[test]
    fn multinomial_sums_and_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = [0.1, 0.0, 0.6, 0.3];
        let mut tot = [0u64; 4];
        for _ in 0..2000 {
            let c = multinomial(50, &p, &mut rng);
            assert_eq!(c.iter().sum::<u64>(), 50);
            assert_eq!(c[1], 0);
            for i in 0..4 {
                tot[i] += c[i];
            }
        }
        for i in 0..4 {
            let mean = tot[i] as f64 / 2000.0;
            let se = (50.0 * p[i] * (1.0 - p[i]) / 2000.0).sqrt().max(1e-9);
            assert!((mean - 50.0 * p[i]).abs() <= 4.0 * se + 1e-12);
        }
    }
}
