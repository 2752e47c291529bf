//! Odds that a bounded-probe cache table lookup answers "don't know".
//!
//! With `n` keys hashed uniformly into `b` buckets, a bucket holds `k` keys
//! with binomial probability `p(k)`. A lookup that inspects at most `J`
//! chain entries gives up on a present key sitting beyond position `J`
//! (chance `1 - J/k` in a chain of `k > J`), and on an absent key whenever
//! its chain is longer than `J`.

use std::collections::HashSet;

use glass::cachetable::Lookup;
use glass::{Glass, GlassConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `ln p(k)` for `k = 0..=n`, built by the ratio `p(k+1)/p(k)`.
fn log_binomial_pmf(n: u64, b: u64) -> Vec<f64> {
    let ln_q = (-1.0 / b as f64).ln_1p();
    let ln_odds = -((b - 1) as f64).ln();
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut lp = n as f64 * ln_q;
    out.push(lp);
    for k in 0..n {
        lp += ((n - k) as f64).ln() - ((k + 1) as f64).ln() + ln_odds;
        out.push(lp);
    }
    out
}

/// `(p₊, p₋)`.
pub fn dunno_probs(n: u64, b: u64, j: u64) -> (f64, f64) {
    assert!(n >= 1 && b >= 1, "need n >= 1 and b >= 1");
    if j >= n {
        return (0.0, 0.0);
    }
    if b == 1 {
        // every key in the one chain of length n
        return (1.0 - j as f64 / n as f64, 1.0);
    }
    let lp = log_binomial_pmf(n, b);
    let nonempty = -(n as f64 * (-1.0 / b as f64).ln_1p()).exp_m1();
    let mut present = 0.0;
    let mut absent = 0.0;
    for k in (j + 1..=n).rev() {
        let p = lp[k as usize].exp();
        present += p * (1.0 - j as f64 / k as f64);
        absent += p;
    }
    ((present / nonempty).min(1.0), absent.min(1.0))
}

pub fn dunno_prob_present(n: u64, b: u64, j: u64) -> f64 {
    dunno_probs(n, b, j).0
}

pub fn dunno_prob_absent(n: u64, b: u64, j: u64) -> f64 {
    dunno_probs(n, b, j).1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub observations: u64,
}

/// Balls-in-bins estimate of `p₋`: each throw places `n` balls into `b` bins
/// and contributes every bin as one observation of "chain longer than `J`".
/// The standard error comes from the spread of per-throw fractions, so the
/// dependence between bins of one throw is accounted for.
pub fn simulate_absent(n: u64, b: u64, j: u64, observations: u64, seed: u64) -> Estimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let throws = observations.div_ceil(b).max(2);
    let mut counts = vec![0u32; b as usize];
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..throws {
        counts.fill(0);
        for _ in 0..n {
            counts[rng.random_range(0..b as usize)] += 1;
        }
        let over = counts.iter().filter(|&&c| u64::from(c) > j).count();
        let frac = over as f64 / b as f64;
        sum += frac;
        sum_sq += frac * frac;
    }
    let t = throws as f64;
    let mean = sum / t;
    let var = (sum_sq / t - mean * mean).max(0.0) * t / (t - 1.0);
    Estimate {
        mean,
        std_err: (var / t).sqrt(),
        observations: throws * b,
    }
}

/// Fraction of absent-key lookups answered "don't know" by a real glass
/// holding `n` uniformly random keys, and the pre-leaf and bucket counts it
/// ended up with.
pub fn measured_absent_rate(n: usize, queries: u64, seed: u64) -> (f64, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g: Glass = Glass::new(GlassConfig::default().max_size(n)).expect("valid size");
    let top = 1u64 << 50;
    let mut stored = HashSet::with_capacity(n);
    while g.len() < n {
        let k = rng.random_range(0..top);
        if g.insert(k, 0).is_ok() {
            stored.insert(k >> 5);
        }
    }
    let table = g.table().expect("cache table on");
    let preleafs = table.len();
    let mut dont_know = 0u64;
    let mut asked = 0u64;
    while asked < queries {
        let hi = rng.random_range(0..top) >> 5;
        if stored.contains(&hi) {
            continue;
        }
        asked += 1;
        if table.lookup(g.pool(), hi) == Lookup::DontKnow {
            dont_know += 1;
        }
    }
    (
        dont_know as f64 / queries as f64,
        preleafs,
        table.bucket_count(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_point() {
        let (plus, _) = dunno_probs(9210, 32768, 5);
        assert!((plus / 3.764e-7 - 1.0).abs() < 1e-3, "{plus}");
    }

    #[test]
    fn exhaustive_chains_never_give_up() {
        assert_eq!(dunno_probs(10, 4, 10), (0.0, 0.0));
        assert_eq!(dunno_probs(10, 4, 11), (0.0, 0.0));
    }

    #[test]
    fn single_bucket() {
        assert_eq!(dunno_probs(10, 1, 5), (0.5, 1.0));
    }

    #[test]
    fn zero_probe_limit() {
        let (plus, minus) = dunno_probs(100, 64, 0);
        assert!((plus - 1.0).abs() < 1e-12);
        assert!((minus - (1.0 - (63.0f64 / 64.0).powi(100))).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_probe_limit() {
        for (n, b) in [(1000, 1024), (9210, 32768), (50, 3)] {
            let mut last = (1.0, 1.0);
            for j in 0..20 {
                let (p, m) = dunno_probs(n, b, j);
                assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&m));
                assert!(
                    p <= last.0 + 1e-15 && m <= last.1 + 1e-15,
                    "n={n} b={b} j={j}"
                );
                last = (p, m);
            }
        }
    }

    #[test]
    fn small_case_matches_enumeration() {
        // n = 3 balls, b = 2 bins, J = 1: chain of 2 or 3 keys
        let p = |k: u32| -> f64 {
            let c = [1.0, 3.0, 3.0, 1.0][k as usize];
            c / 8.0
        };
        let minus = p(2) + p(3);
        let plus = (p(2) * 0.5 + p(3) * (2.0 / 3.0)) / (1.0 - p(0));
        let (gp, gm) = dunno_probs(3, 2, 1);
        assert!((gp - plus).abs() < 1e-12 && (gm - minus).abs() < 1e-12);
    }
}
