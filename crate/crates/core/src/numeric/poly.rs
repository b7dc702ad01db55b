//! Real polynomials in ascending-coefficient form.

use alloc::vec;
use alloc::vec::Vec;

use libm::{acos, cbrt, cos, sqrt};

/// Coefficients (ascending) of `Π (x − rᵢ)`.
pub fn from_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &r in roots {
        c.push(0.0);
        for k in (0..c.len()).rev() {
            let lower = if k > 0 { c[k - 1] } else { 0.0 };
            c[k] = lower - r * c[k];
        }
    }
    c
}

/// `(p(x), p'(x), p''(x))` by Horner's scheme.
pub fn eval_with_derivs(coeffs: &[f64], x: f64) -> (f64, f64, f64) {
    let (mut p, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for &c in coeffs.iter().rev() {
        d2 = d2 * x + 2.0 * d1;
        d1 = d1 * x + p;
        p = p * x + c;
    }
    (p, d1, d2)
}

pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Logarithmic derivatives of `Π (x − rᵢ)`: `(Σ 1/(x−rᵢ), Σ_{i≠j} 1/((x−rᵢ)(x−rⱼ)))`,
/// so that `P'/P` and `P''/P` are returned without forming `P`.
pub fn product_log_derivs(roots: &[f64], x: f64) -> (f64, f64) {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &r in roots {
        let t = 1.0 / (x - r);
        s1 += t;
        s2 += t * t;
    }
    (s1, s1 * s1 - s2)
}

/// `(Π (x − rᵢ), d/dx, d²/dx²)` directly from the roots; exact at the roots.
pub fn product_with_derivs(roots: &[f64], x: f64) -> (f64, f64, f64) {
    let (mut p, mut d1, mut d2) = (1.0, 0.0, 0.0);
    for &r in roots {
        let f = x - r;
        d2 = d2 * f + 2.0 * d1;
        d1 = d1 * f + p;
        p *= f;
    }
    (p, d1, d2)
}

/// Real roots of `c0 + c1 x + c2 x² + c3 x³`, ascending, each Newton-polished.
/// Lower-degree inputs (vanishing leading coefficients) are handled.
pub fn real_roots_cubic(c0: f64, c1: f64, c2: f64, c3: f64) -> Vec<f64> {
    let scale = c0.abs().max(c1.abs()).max(c2.abs()).max(c3.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    let coeffs = [c0, c1, c2, c3];
    let mut roots = if c3.abs() > 1e-14 * scale {
        depressed_cubic(c2 / c3, c1 / c3, c0 / c3)
    } else if c2.abs() > 1e-14 * scale {
        quadratic(c0, c1, c2)
    } else if c1 != 0.0 {
        vec![-c0 / c1]
    } else {
        Vec::new()
    };
    for r in roots.iter_mut() {
        *r = polish(&coeffs, *r);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs())));
    roots
}

fn quadratic(c0: f64, c1: f64, c2: f64) -> Vec<f64> {
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (c1 + libm::copysign(sqrt(disc), c1));
    let mut out = Vec::with_capacity(2);
    if q != 0.0 {
        out.push(q / c2);
        out.push(c0 / q);
    } else {
        out.push(0.0);
    }
    out
}

/// Roots of `x³ + a x² + b x + c`.
fn depressed_cubic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let q = (a * a - 3.0 * b) / 9.0;
    let r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    let shift = a / 3.0;
    if r * r < q * q * q {
        let theta = acos((r / sqrt(q * q * q)).clamp(-1.0, 1.0));
        let m = -2.0 * sqrt(q);
        let tau = core::f64::consts::TAU;
        vec![
            m * cos(theta / 3.0) - shift,
            m * cos((theta + tau) / 3.0) - shift,
            m * cos((theta - tau) / 3.0) - shift,
        ]
    } else {
        let big_a = -libm::copysign(cbrt(r.abs() + sqrt(r * r - q * q * q)), r);
        let big_b = if big_a != 0.0 { q / big_a } else { 0.0 };
        vec![big_a + big_b - shift]
    }
}

fn polish(coeffs: &[f64], mut x: f64) -> f64 {
    for _ in 0..8 {
        let (p, d, _) = eval_with_derivs(coeffs, x);
        if d == 0.0 {
            break;
        }
        let step = p / d;
        let next = x - step;
        let (pn, _, _) = eval_with_derivs(coeffs, next);
        if pn.abs() >= p.abs() {
            break;
        }
        x = next;
        if step.abs() <= 1e-16 * x.abs() {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_round_trip() {
        let c = from_roots(&[1.0, -2.0, 3.0]);
        assert_eq!(c, vec![6.0, -5.0, -2.0, 1.0]);
        let r = real_roots_cubic(c[0], c[1], c[2], c[3]);
        for (x, want) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((x - want).abs() < 1e-13);
        }
    }

    #[test]
    fn one_real_root() {
        let r = real_roots_cubic(-2.0, 0.0, 0.0, 1.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - cbrt(2.0)).abs() < 1e-15);
        assert_eq!(real_roots_cubic(1.0, 0.0, 1.0, 0.0), Vec::<f64>::new());
        assert_eq!(real_roots_cubic(2.0, 4.0, 0.0, 0.0), vec![-0.5]);
    }

    #[test]
    fn derivatives_match_product_form() {
        let roots = [0.5, 2.0, -1.5];
        let c = from_roots(&roots);
        for x in [-3.0, 0.1, 1.7, 4.0] {
            let (p, d1, d2) = eval_with_derivs(&c, x);
            let (q, e1, e2) = product_with_derivs(&roots, x);
            assert!((p - q).abs() < 1e-12 && (d1 - e1).abs() < 1e-12 && (d2 - e2).abs() < 1e-12);
            let (l1, l2) = product_log_derivs(&roots, x);
            assert!((l1 * q - e1).abs() < 1e-11 && (l2 * q - e2).abs() < 1e-10);
        }
    }
}
