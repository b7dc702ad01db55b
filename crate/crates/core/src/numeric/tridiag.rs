//! Symmetric tridiagonal eigenpairs by Sturm bisection and inverse iteration.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`
/// (`off.len() == diag.len() - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty() && off.len() + 1 == diag.len());
        SymTridiagonal { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let e2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut rad = 0.0;
            if i > 0 {
                rad += self.off[i - 1].abs();
            }
            if i + 1 < n {
                rad += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - rad);
            hi = hi.max(self.diag[i] + rad);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based).
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        lo -= 1e-12 * span;
        hi += 1e-12 * span;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Index and value of the eigenvalue closest to `target`.
    pub fn nearest_eigenvalue(&self, target: f64) -> (usize, f64) {
        let below = self.sturm_count(target);
        let mut best: Option<(usize, f64)> = None;
        for k in [below.checked_sub(1), Some(below)].into_iter().flatten() {
            if k >= self.len() {
                continue;
            }
            let ev = self.eigenvalue(k);
            if best.is_none_or(|(_, b)| (ev - target).abs() < (b - target).abs()) {
                best = Some((k, ev));
            }
        }
        best.expect("matrix is non-empty")
    }

    /// Unit eigenvector for the (well separated) eigenvalue `lambda`.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let (lo, hi) = self.bounds();
        let shift = lambda + 1e-14 * (hi - lo).max(lambda.abs()).max(1.0);
        let mut x = vec![1.0; n];
        normalize(&mut x);
        for _ in 0..3 {
            x = self.shifted_solve(shift, &x);
            normalize(&mut x);
        }
        x
    }

    /// Solves `(T − μI) y = b` by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, mu: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let tiny = f64::EPSILON * (self.bounds().1 - self.bounds().0).abs().max(1.0);
        // Row i holds entries at columns i, i+1, i+2 after pivoting.
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - mu).collect();
        let mut u1: Vec<f64> = self.off.clone();
        u1.push(0.0);
        let mut u2 = vec![0.0; n];
        let mut l: Vec<f64> = self.off.clone();
        let mut y = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if l[i].abs() > d[i].abs() {
                // Swap rows i and i+1.
                let (a0, a1, a2) = (d[i], u1[i], u2[i]);
                d[i] = l[i];
                u1[i] = d[i + 1];
                u2[i] = u1[i + 1];
                l[i] = a0;
                d[i + 1] = a1;
                u1[i + 1] = a2;
                y.swap(i, i + 1);
            }
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let f = l[i] / d[i];
            d[i + 1] -= f * u1[i];
            u1[i + 1] -= f * u2[i];
            y[i + 1] -= f * y[i];
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / d[i];
        }
        x
    }
}

fn normalize(x: &mut [f64]) {
    let nrm = sqrt(x.iter().map(|v| v * v).sum());
    if nrm > 0.0 && nrm.is_finite() {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        for k in [0, 7, 49] {
            let exact = 2.0 - 2.0 * libm::cos((k + 1) as f64 * PI / (n + 1) as f64);
            assert!((t.eigenvalue(k) - exact).abs() < 1e-13);
        }
        let (k, ev) = t.nearest_eigenvalue(0.005);
        assert_eq!(k, 0);
        assert!((ev - (2.0 - 2.0 * libm::cos(PI / 51.0))).abs() < 1e-13);
    }

    #[test]
    fn eigenvector_matches_sine_mode() {
        let n = 40;
        let t = laplacian(n);
        let k = 2;
        let ev = t.eigenvalue(k);
        let x = t.eigenvector(ev);
        let mut exact: Vec<f64> =
            (1..=n).map(|j| libm::sin((k + 1) as f64 * PI * j as f64 / (n + 1) as f64)).collect();
        normalize(&mut exact);
        let dot: f64 = x.iter().zip(&exact).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sturm_count_is_monotone() {
        let t = SymTridiagonal::new(vec![1.0, -3.0, 4.0, 0.5], vec![0.3, -1.0, 2.0]);
        let mut prev = 0;
        for i in -100..100 {
            let c = t.sturm_count(i as f64 * 0.1);
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(prev, 4);
    }
}
