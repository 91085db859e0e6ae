//! Pairwise (tree) summation.
//!
//! All reductions over samples go through these helpers so that results do
//! not depend on accumulation order beyond the fixed tree shape, and the
//! rounding error grows like `O(log n)` instead of `O(n)`.

const BLOCK: usize = 8;

/// Pairwise sum of `f(0) + … + f(len − 1)`.
#[inline]
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(len: usize, f: F) -> f64 {
    let [s] = pairwise_sums_by(len, |i| [f(i)]);
    s
}

/// Pairwise sum of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), |i| values[i])
}

/// Several pairwise sums computed in one pass; each lane uses the same tree.
pub fn pairwise_sums_by<const K: usize, F: Fn(usize) -> [f64; K]>(len: usize, f: F) -> [f64; K] {
    fn rec<const K: usize, F: Fn(usize) -> [f64; K]>(lo: usize, hi: usize, f: &F) -> [f64; K] {
        if hi - lo <= BLOCK {
            let mut acc = [0.0; K];
            for i in lo..hi {
                let v = f(i);
                for k in 0..K {
                    acc[k] += v[k];
                }
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            let a = rec(lo, mid, f);
            let b = rec(mid, hi, f);
            let mut out = [0.0; K];
            for k in 0..K {
                out[k] = a[k] + b[k];
            }
            out
        }
    }
    rec(0, len, &f)
}
