//! Execution strategy for the data-parallel loops.
//!
//! Every loop in the crate is written against [`Exec`], so the same code path
//! runs either on the rayon pool or on the calling thread. Work is always split
//! into fixed index ranges and reduced in index order, which makes the results
//! bit-identical between the two strategies and across thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows per partial sum in transposed products. Fixed so that the reduction
/// order never depends on the thread count.
pub(crate) const REDUCE_BLOCK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Whether this strategy actually uses worker threads in the current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Matching parallelism setting for dense linear algebra.
    pub fn faer_par(self) -> faer::Par {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return faer::Par::rayon(0);
        }
        faer::Par::Seq
    }

    /// `out[i] = f(i)`.
    pub fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }

    /// Calls `f(row, slice)` for each consecutive chunk of `row_len` values.
    pub fn fill_rows<F>(self, out: &mut [f64], row_len: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        if row_len == 0 {
            return;
        }
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            out.par_chunks_mut(row_len).enumerate().for_each(|(i, r)| f(i, r));
            return;
        }
        for (i, r) in out.chunks_mut(row_len).enumerate() {
            f(i, r);
        }
    }

    /// Collects `f(0..n)` in order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorise without reassociating.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y = M x` for a row-major `rows × cols` buffer.
pub fn matvec(exec: Exec, m: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    let mut y = vec![0.0; rows];
    exec.fill(&mut y, |j| dot(&m[j * cols..(j + 1) * cols], x));
    y
}

/// `y = Mᵀ x` for a row-major `rows × cols` buffer.
///
/// Rows are grouped in blocks of fixed size, each block produces a partial
/// vector, and the partials are summed in block order.
pub fn matvec_t(exec: Exec, m: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), rows);
    let nblocks = rows.div_ceil(REDUCE_BLOCK);
    let partials = exec.map(nblocks, |b| {
        let mut acc = vec![0.0; cols];
        let lo = b * REDUCE_BLOCK;
        let hi = (lo + REDUCE_BLOCK).min(rows);
        for j in lo..hi {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let row = &m[j * cols..(j + 1) * cols];
            for (a, r) in acc.iter_mut().zip(row) {
                *a += xj * r;
            }
        }
        acc
    });
    let mut y = vec![0.0; cols];
    for p in partials {
        for (a, v) in y.iter_mut().zip(p) {
            *a += v;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: usize, cols: usize) -> Vec<f64> {
        (0..rows * cols)
            .map(|k| ((k * 7919) % 1013) as f64 / 1013.0 - 0.5)
            .collect()
    }

    #[test]
    fn strategies_agree_bitwise() {
        let (r, c) = (700, 33);
        let m = sample(r, c);
        let x: Vec<f64> = (0..c).map(|i| (i as f64).sin()).collect();
        let z: Vec<f64> = (0..r).map(|i| (i as f64).cos()).collect();
        let a = matvec(Exec::Sequential, &m, r, c, &x);
        let b = matvec(Exec::Parallel, &m, r, c, &x);
        assert_eq!(a, b);
        let a = matvec_t(Exec::Sequential, &m, r, c, &z);
        let b = matvec_t(Exec::Parallel, &m, r, c, &z);
        assert_eq!(a, b);
    }

    #[test]
    fn transpose_is_adjoint() {
        let (r, c) = (300, 17);
        let m = sample(r, c);
        let x: Vec<f64> = (0..c).map(|i| 1.0 + i as f64).collect();
        let z: Vec<f64> = (0..r).map(|i| (i as f64 * 0.1).sin()).collect();
        let lhs = dot(&matvec(Exec::default(), &m, r, c, &x), &z);
        let rhs = dot(&x, &matvec_t(Exec::default(), &m, r, c, &z));
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}
