//! Compensated accumulation and a fixed-tree parallel reduction.
//!
//! Partial sums are formed over fixed-size chunks (independent of the rayon
//! pool size) and folded left to right, so results are bit-identical for any
//! thread count.

use num_complex::Complex64;
use rayon::prelude::*;

/// Chunk length used by every parallel reduction in the crate.
pub const REDUCTION_CHUNK: usize = 4096;

/// Neumaier's variant of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of complex values, real and imaginary parts tracked separately.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn sub(&mut self, z: Complex64) {
        self.re.add(-z.re);
        self.im.add(-z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Sums `f(i)` for `i in 0..n` with compensated chunk sums reduced in index order.
pub fn par_sum_complex<F>(n: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    let chunks = n.div_ceil(REDUCTION_CHUNK);
    let partials: Vec<Complex64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = ComplexSum::new();
            let end = ((c + 1) * REDUCTION_CHUNK).min(n);
            for i in c * REDUCTION_CHUNK..end {
                acc.add(f(i));
            }
            acc.value()
        })
        .collect();
    let mut total = ComplexSum::new();
    for p in partials {
        total.add(p);
    }
    total.value()
}

/// Real-valued counterpart of [`par_sum_complex`].
pub fn par_sum_real<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = n.div_ceil(REDUCTION_CHUNK);
    let partials: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = NeumaierSum::new();
            let end = ((c + 1) * REDUCTION_CHUNK).min(n);
            for i in c * REDUCTION_CHUNK..end {
                acc.add(f(i));
            }
            acc.value()
        })
        .collect();
    let mut total = NeumaierSum::new();
    for p in partials {
        total.add(p);
    }
    total.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut s = NeumaierSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn parallel_sum_is_thread_count_independent() {
        let f = |i: usize| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos());
        let a = par_sum_complex(100_003, f);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| par_sum_complex(100_003, f));
        assert_eq!(a, b);
    }
}
