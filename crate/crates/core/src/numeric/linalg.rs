//! Dense row-major linear algebra for small systems.

use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.cols + j] = x;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }
}

/// Solves `A x = b` by LU with partial pivoting; `None` when a pivot is
/// below `1e-14` times the largest entry.
pub fn lu_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    assert_eq!(n, a.cols);
    let mut m = a.data.clone();
    let mut x = b.to_vec();
    let amax = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if amax == 0.0 || !amax.is_finite() {
        return None;
    }
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|i| (i, m[i * n + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pv <= 1e-14 * amax {
            return None;
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let piv = m[k * n + k];
        for i in k + 1..n {
            let f = m[i * n + k] / piv;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| m[k * n + j] * x[j]).sum();
        x[k] = (x[k] - s) / m[k * n + k];
    }
    Some(x)
}

/// Least-squares solution of `A x ≈ b` by Householder QR with column pivoting.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub rank: usize,
}

pub fn least_squares(a: &Matrix, b: &[f64]) -> LeastSquares {
    let (m, n) = (a.rows, a.cols);
    let mut q = a.data.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| q[i * n + j] * q[i * n + j]).sum())
        .collect();
    let steps = m.min(n);
    let mut rank = 0;
    let mut r00 = 0.0;
    for k in 0..steps {
        let (p, _) = (k..n)
            .map(|j| (j, norms[j]))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if p != k {
            for i in 0..m {
                q.swap(i * n + k, i * n + p);
            }
            norms.swap(k, p);
            perm.swap(k, p);
        }
        let alpha_sq: f64 = (k..m).map(|i| q[i * n + k] * q[i * n + k]).sum();
        let alpha = sqrt(alpha_sq);
        if k == 0 {
            r00 = alpha;
        }
        if alpha <= 1e-13 * r00 || alpha == 0.0 {
            break;
        }
        rank += 1;
        let sign = if q[k * n + k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = (k..m).map(|i| q[i * n + k]).collect();
        v[0] += sign * alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * q[i * n + j]).sum();
            let f = 2.0 * dot / vnorm_sq;
            for i in k..m {
                q[i * n + j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * rhs[i]).sum();
        let f = 2.0 * dot / vnorm_sq;
        for i in k..m {
            rhs[i] -= f * v[i - k];
        }
        for j in k + 1..n {
            norms[j] = (k + 1..m).map(|i| q[i * n + j] * q[i * n + j]).sum();
        }
    }
    let mut y = vec![0.0; n];
    for k in (0..rank).rev() {
        let s: f64 = (k + 1..rank).map(|j| q[k * n + j] * y[j]).sum();
        y[k] = (rhs[k] - s) / q[k * n + k];
    }
    let mut x = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = y[k];
    }
    let ax = a.mul_vec(&x);
    let residual_norm = sqrt(ax.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum());
    LeastSquares { x, residual_norm, rank }
}

pub fn norm2(x: &[f64]) -> f64 {
    sqrt(x.iter().map(|v| v * v).sum())
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_small_system() {
        let a = Matrix { rows: 3, cols: 3, data: vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0] };
        let x = lu_solve(&a, &[5.0, 3.0, 6.0]).unwrap();
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip([5.0, 3.0, 6.0]) {
            assert!((u - v).abs() < 1e-14);
        }
        let sing = Matrix { rows: 2, cols: 2, data: vec![1.0, 2.0, 2.0, 4.0] };
        assert!(lu_solve(&sing, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn least_squares_rank_deficient() {
        // Third column is the sum of the first two.
        let mut a = Matrix::zeros(4, 3);
        for i in 0..4 {
            let t = i as f64;
            a.set(i, 0, 1.0);
            a.set(i, 1, t);
            a.set(i, 2, 1.0 + t);
        }
        let b: Vec<f64> = (0..4).map(|i| 2.0 + 3.0 * i as f64).collect();
        let ls = least_squares(&a, &b);
        assert_eq!(ls.rank, 2);
        assert!(ls.residual_norm < 1e-12);
        let b2 = [0.0, 1.0, 0.0, 1.0];
        assert!(least_squares(&a, &b2).residual_norm > 0.5);
    }
}
