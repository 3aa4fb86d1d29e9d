//! Data-parallel loop helpers with a sequential fallback.
//!
//! All reductions accumulate over fixed-size chunks and then fold the
//! partials in index order, so parallel and sequential builds produce
//! bit-identical floating-point results.

use std::ops::Add;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for partial sums.
const SUM_CHUNK: usize = 1 << 12;
/// Below this many elements a parallel dispatch is not worth the overhead.
const MIN_PAR_LEN: usize = 1 << 12;

/// `(0..n).map(f)` collected in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Chunked indexed sum; identical association in both builds.
pub(crate) fn indexed_sum<T, F>(len: usize, zero: T, f: F) -> T
where
    T: Copy + Add<Output = T> + Send + Sync,
    F: Fn(usize) -> T + Sync + Send,
{
    if len == 0 {
        return zero;
    }
    let n_chunks = len.div_ceil(SUM_CHUNK);
    let partials = map_indexed(n_chunks, |c| {
        let start = c * SUM_CHUNK;
        let end = (start + SUM_CHUNK).min(len);
        let mut acc = zero;
        for i in start..end {
            acc = acc + f(i);
        }
        acc
    });
    partials.into_iter().fold(zero, |a, b| a + b)
}

/// Apply `f` to every element with its index. Writes are independent, so
/// the parallel path is exact.
#[cfg(feature = "parallel")]
pub(crate) fn for_each_indexed_mut<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    if data.len() < MIN_PAR_LEN {
        for (i, v) in data.iter_mut().enumerate() {
            f(i, v);
        }
    } else {
        data.par_iter_mut()
            .with_min_len(MIN_PAR_LEN)
            .enumerate()
            .for_each(|(i, v)| f(i, v));
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_indexed_mut<T, F>(data: &mut [T], f: F)
where
    F: Fn(usize, &mut T),
{
    for (i, v) in data.iter_mut().enumerate() {
        f(i, v);
    }
}

/// Visit the (low, high) amplitude pairs of a single-qubit gate with the
/// given stride. Pairs are disjoint, so both dispatch strategies (across
/// blocks, or across pairs inside one big block) write deterministically.
pub(crate) fn for_each_pair<T, F>(data: &mut [T], stride: usize, f: F)
where
    T: Send,
    F: Fn(&mut T, &mut T) + Sync + Send,
{
    let block = stride << 1;
    debug_assert_eq!(data.len() % block, 0);
    if data.len() == block {
        let (lo, hi) = data.split_at_mut(stride);
        zip_pairs(lo, hi, &f);
    } else {
        for_each_block(data, block, |chunk| {
            for sub in chunk.chunks_mut(block) {
                let (lo, hi) = sub.split_at_mut(stride);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    f(a, b);
                }
            }
        });
    }
}

#[cfg(feature = "parallel")]
fn zip_pairs<T, F>(lo: &mut [T], hi: &mut [T], f: &F)
where
    T: Send,
    F: Fn(&mut T, &mut T) + Sync + Send,
{
    if lo.len() < MIN_PAR_LEN {
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            f(a, b);
        }
    } else {
        lo.par_iter_mut()
            .with_min_len(MIN_PAR_LEN)
            .zip(hi.par_iter_mut())
            .for_each(|(a, b)| f(a, b));
    }
}

#[cfg(not(feature = "parallel"))]
fn zip_pairs<T, F>(lo: &mut [T], hi: &mut [T], f: &F)
where
    F: Fn(&mut T, &mut T),
{
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        f(a, b);
    }
}

/// Run `f` over chunks that are multiples of `block` long.
#[cfg(feature = "parallel")]
fn for_each_block<T, F>(data: &mut [T], block: usize, f: F)
where
    T: Send,
    F: Fn(&mut [T]) + Sync + Send,
{
    if data.len() < MIN_PAR_LEN {
        f(data);
    } else {
        let blocks_per_chunk = (MIN_PAR_LEN / block).max(1);
        data.par_chunks_mut(block * blocks_per_chunk).for_each(f);
    }
}

#[cfg(not(feature = "parallel"))]
fn for_each_block<T, F>(data: &mut [T], _block: usize, f: F)
where
    F: Fn(&mut [T]),
{
    f(data);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexed_sum_matches_sequential_reference() {
        let vals: Vec<f64> = (0..20_000).map(|i| (i as f64).sin()).collect();
        let chunked = indexed_sum(vals.len(), 0.0, |i| vals[i]);
        // reference with the same chunked association
        let mut expect = 0.0;
        for chunk in vals.chunks(1 << 12) {
            let mut acc = 0.0;
            for v in chunk {
                acc += v;
            }
            expect += acc;
        }
        assert_eq!(chunked, expect);
    }

    #[test]
    fn pair_visit_covers_every_pair_once() {
        for stride_pow in 0..4 {
            let stride = 1usize << stride_pow;
            let mut data = vec![0u32; 16];
            for_each_pair(&mut data, stride, |a, b| {
                *a += 1;
                *b += 10;
            });
            let lows = data.iter().filter(|&&v| v == 1).count();
            let highs = data.iter().filter(|&&v| v == 10).count();
            assert_eq!((lows, highs), (8, 8), "stride {stride}");
        }
    }
}
