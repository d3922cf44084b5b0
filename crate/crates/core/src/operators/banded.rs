//! Complex banded LU with partial pivoting.

use num_complex::Complex64;

/// Band factorization of an `n x n` matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` of the upper factor is kept in a window of absolute columns
/// `[i - kl, i + kl + ku]`; row interchanges within the band never leave it.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    upper: Vec<Complex64>,
    lower: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandLu {
    /// `entry(i, j)` must return the matrix entry for `|i - j|` inside the band.
    /// Returns `None` when a pivot vanishes.
    pub fn factor(n: usize, kl: usize, ku: usize, entry: impl Fn(usize, usize) -> Complex64) -> Option<Self> {
        let width = 2 * kl + ku + 1;
        let zero = Complex64::new(0.0, 0.0);
        let mut upper = vec![zero; n * width];
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            for j in lo..=hi {
                upper[i * width + (j + kl - i)] = entry(i, j);
            }
        }
        let mut lf = BandLu { n, kl, width, upper, lower: vec![zero; n * kl.max(1)], pivots: vec![0; n] };

        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lf.get(k, k).norm();
            for i in k + 1..=last {
                let v = lf.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            lf.pivots[k] = p;
            let col_hi = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=col_hi {
                    let a = lf.get(k, j);
                    let b = lf.get(p, j);
                    lf.set(k, j, b);
                    lf.set(p, j, a);
                }
            }
            let pivot = lf.get(k, k);
            for i in k + 1..=last {
                let l = lf.get(i, k) / pivot;
                lf.lower[k * kl.max(1) + (i - k - 1)] = l;
                if l == zero {
                    continue;
                }
                lf.set(i, k, zero);
                for j in k + 1..=col_hi {
                    let v = lf.get(i, j) - l * lf.get(k, j);
                    lf.set(i, j, v);
                }
            }
        }
        Some(lf)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.upper[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.upper[i * self.width + (j + self.kl - i)] = v;
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let kl = self.kl;
        let ku_total = self.width - 1 - kl;
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            let last = (k + kl).min(n - 1);
            let col = &self.lower[k * kl.max(1)..];
            for (xi, l) in x[k + 1..=last].iter_mut().zip(col) {
                *xi -= l * xk;
            }
        }
        for i in (0..n).rev() {
            let hi = (i + ku_total).min(n - 1);
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(i + 1) {
                s -= self.get(i, j) * xj;
            }
            x[i] = s / self.get(i, i);
        }
        x
    }
}
