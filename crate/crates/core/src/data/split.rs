use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HnnError, Result};
use crate::rng::rng_from_seed;

/// Bag / out-of-bag partition with a single contiguous out-of-bag window.
///
/// Windows are contiguous on the circle `0..n`: one starting near the end
/// of the sample continues at its beginning. Every row is therefore
/// out-of-bag with the same probability `oob_len / n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSplit {
    pub bag: Vec<usize>,
    pub oob: Vec<usize>,
    pub oob_start: usize,
    pub oob_len: usize,
    pub n: usize,
}

impl BlockSplit {
    /// Split with a given window; the bag is its complement, listed in
    /// circular order from the end of the window.
    pub fn with_window(n: usize, oob_start: usize, oob_len: usize) -> Result<Self> {
        if oob_len == 0 || oob_len >= n || oob_start >= n {
            return Err(HnnError::Config(format!(
                "out-of-bag window {oob_start}+{oob_len} invalid for {n} rows"
            )));
        }
        let oob: Vec<usize> = (oob_start..oob_start + oob_len).map(|i| i % n).collect();
        let bag = (oob_start + oob_len..oob_start + n).map(|i| i % n).collect();
        Ok(Self {
            bag,
            oob,
            oob_start,
            oob_len,
            n,
        })
    }

    pub fn is_oob(&self, t: usize) -> bool {
        t < self.n && (t + self.n - self.oob_start) % self.n < self.oob_len
    }
}

/// Length of the out-of-bag window for `n` rows at `rate`, at least one and
/// leaving at least one bag row.
pub fn oob_length(n: usize, rate: f64) -> usize {
    (((1.0 - rate) * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// Random circular out-of-bag window of length `round((1 − rate)·n)` with a
/// uniform start in `0..n`.
pub fn draw_block_split(n: usize, rate: f64, seed: u64) -> Result<BlockSplit> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(HnnError::Config(format!("subsample rate {rate} not in (0,1)")));
    }
    if n < 10 {
        return Err(HnnError::Domain(format!("{n} rows are too few for blocked subsampling")));
    }
    let len = oob_length(n, rate);
    let mut rng = rng_from_seed(seed);
    let start = rng.random_range(0..n);
    BlockSplit::with_window(n, start, len)
}

/// Contiguous run of `round(fraction·|bag|)` bag rows (in bag order) at a
/// random position, used for early stopping.
pub fn validation_block(bag: &[usize], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(HnnError::Config(format!(
            "early-stopping fraction {fraction} not in (0,1)"
        )));
    }
    if bag.len() < 2 {
        return Err(HnnError::Domain("bag too small for a validation block".into()));
    }
    let len = ((fraction * bag.len() as f64).round() as usize).clamp(1, bag.len() - 1);
    let mut rng = rng_from_seed(seed);
    let start = rng.random_range(0..=bag.len() - len);
    Ok(bag[start..start + len].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_rows_at_eighty_percent() {
        let s = draw_block_split(100, 0.8, 3).unwrap();
        assert_eq!(s.oob.len(), 20);
        assert_eq!(s.bag.len(), 80);
        let mut all: Vec<usize> = s.bag.iter().chain(s.oob.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert!(s.oob.windows(2).all(|w| w[1] == (w[0] + 1) % 100));
    }

    #[test]
    fn oob_is_never_empty() {
        let s = draw_block_split(10, 0.99, 1).unwrap();
        assert_eq!(s.oob.len(), 1);
        assert_eq!(s.bag.len(), 9);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(draw_block_split(200, 0.8, 42).unwrap(), draw_block_split(200, 0.8, 42).unwrap());
        let starts: std::collections::HashSet<usize> =
            (0..20).map(|s| draw_block_split(200, 0.8, s).unwrap().oob_start).collect();
        assert!(starts.len() > 1);
    }

    #[test]
    fn every_start_is_reachable() {
        let n = 50;
        let mut seen = vec![false; n];
        for seed in 0..10_000 {
            seen[draw_block_split(n, 0.8, seed).unwrap().oob_start] = true;
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn wrapped_window_partitions() {
        let s = BlockSplit::with_window(10, 8, 4).unwrap();
        assert_eq!(s.oob, vec![8, 9, 0, 1]);
        assert_eq!(s.bag, vec![2, 3, 4, 5, 6, 7]);
        assert!(s.is_oob(9) && s.is_oob(1) && !s.is_oob(2) && !s.is_oob(7));
    }

    #[test]
    fn coverage_is_even_across_rows() {
        let n = 100;
        let mut counts = vec![0usize; n];
        for seed in 0..1000 {
            for t in draw_block_split(n, 0.8, seed).unwrap().oob {
                counts[t] += 1;
            }
        }
        assert!(counts.iter().all(|c| (120..=280).contains(c)), "{counts:?}");
    }

    #[test]
    fn bad_rate_rejected() {
        assert!(draw_block_split(100, 1.0, 0).is_err());
        assert!(draw_block_split(100, 0.0, 0).is_err());
    }

    #[test]
    fn validation_block_inside_bag() {
        let s = draw_block_split(100, 0.8, 9).unwrap();
        let v = validation_block(&s.bag, 0.2, 4).unwrap();
        assert_eq!(v.len(), 16);
        assert!(v.iter().all(|i| s.bag.contains(i)));
    }
}
