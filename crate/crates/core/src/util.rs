//! Small numeric helpers.

/// Block size below which summation is a plain sequential fold.
const SUM_BLOCK: usize = 1024;
/// Minimum slice length worth handing to a second thread.
const PAR_THRESHOLD: usize = 1 << 15;

/// Deterministic pairwise summation.
///
/// The reduction tree depends only on the slice length, so the result is
/// bit-identical whether the halves run sequentially or on separate threads.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= SUM_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    let (lo, hi) = xs.split_at(mid);
    if xs.len() >= PAR_THRESHOLD {
        let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
        a + b
    } else {
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_sequential_sum_on_small_input() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 * 0.125).collect();
        let expected: f64 = xs.iter().sum();
        assert_eq!(pairwise_sum(&xs), expected);
    }

    #[test]
    fn deterministic_on_large_input() {
        let xs: Vec<f64> = (0..200_000).map(|i| ((i * 31) % 97) as f64 * 1e-3).collect();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum(&xs);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let xs: Vec<f64> = (0..300_000).map(|i| (i as f64).sin()).collect();
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap();
        let a = pool1.install(|| pairwise_sum(&xs));
        let b = pool8.install(|| pairwise_sum(&xs));
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
