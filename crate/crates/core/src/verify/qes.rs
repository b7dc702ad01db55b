//! Coefficient matching of the reduced operator against quadratic
//! combinations of the first-order sl(2) generators
//! `J⁺ = r²D − nr`, `J⁰ = rD − n/2`, `J⁻ = D`.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{xi_coeffs, ExponentParams, ModelParams};
use crate::numeric::linalg::{least_squares, norm2, Matrix};

/// Laurent powers carried by the operator representation.
const MIN_POWER: i32 = -2;
const MAX_POWER: i32 = 4;
const WIDTH: usize = (MAX_POWER - MIN_POWER + 1) as usize;
/// Misfit at or below which an operator counts as a member of the span.
pub const FEASIBLE_TOL: f64 = 1e-10;

pub const QES_LABELS: [&str; 10] = ["++", "+0", "+-", "00", "0-", "--", "+", "0", "-", "const"];

/// `A(r)D² + B(r)D + C(r)` with Laurent-polynomial coefficients.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Operator {
    pub d2: [f64; WIDTH],
    pub d1: [f64; WIDTH],
    pub d0: [f64; WIDTH],
}

fn idx(power: i32) -> usize {
    (power - MIN_POWER) as usize
}

impl Operator {
    pub fn zero() -> Self {
        Operator { d2: [0.0; WIDTH], d1: [0.0; WIDTH], d0: [0.0; WIDTH] }
    }

    /// Sets the coefficient of `r^power` in the `D^order` part.
    pub fn with(mut self, order: usize, power: i32, value: f64) -> Self {
        let part = match order {
            2 => &mut self.d2,
            1 => &mut self.d1,
            _ => &mut self.d0,
        };
        part[idx(power)] += value;
        self
    }

    fn flat(&self) -> Vec<f64> {
        self.d2.iter().chain(&self.d1).chain(&self.d0).copied().collect()
    }

    pub fn scaled(&self, k: f64) -> Self {
        let m = |a: &[f64; WIDTH]| a.map(|x| x * k);
        Operator { d2: m(&self.d2), d1: m(&self.d1), d0: m(&self.d0) }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for i in 0..WIDTH {
            out.d2[i] += other.d2[i];
            out.d1[i] += other.d1[i];
            out.d0[i] += other.d0[i];
        }
        out
    }

    /// Multiplies every coefficient by `r^shift`.
    pub fn shifted(&self, shift: i32) -> Self {
        let mv = |a: &[f64; WIDTH]| {
            let mut out = [0.0; WIDTH];
            for (i, &x) in a.iter().enumerate() {
                let j = i as i32 + shift;
                if x != 0.0 {
                    assert!((0..WIDTH as i32).contains(&j), "power out of range");
                    out[j as usize] = x;
                }
            }
            out
        };
        Operator { d2: mv(&self.d2), d1: mv(&self.d1), d0: mv(&self.d0) }
    }
}

/// First-order operator `a(r)D + b(r)` as Laurent coefficient arrays.
#[derive(Clone, Copy)]
struct First {
    a: [f64; WIDTH],
    b: [f64; WIDTH],
}

fn deriv(p: &[f64; WIDTH]) -> [f64; WIDTH] {
    let mut out = [0.0; WIDTH];
    for (i, &c) in p.iter().enumerate() {
        let power = i as i32 + MIN_POWER;
        if c != 0.0 && power != 0 {
            out[idx(power - 1)] += power as f64 * c;
        }
    }
    out
}

fn mul(p: &[f64; WIDTH], q: &[f64; WIDTH]) -> [f64; WIDTH] {
    let mut out = [0.0; WIDTH];
    for (i, &x) in p.iter().enumerate() {
        for (j, &y) in q.iter().enumerate() {
            if x != 0.0 && y != 0.0 {
                let power = i as i32 + j as i32 + 2 * MIN_POWER;
                assert!((MIN_POWER..=MAX_POWER).contains(&power), "power out of range");
                out[idx(power)] += x * y;
            }
        }
    }
    out
}

fn add(p: [f64; WIDTH], q: [f64; WIDTH]) -> [f64; WIDTH] {
    let mut out = p;
    for (o, x) in out.iter_mut().zip(q) {
        *o += x;
    }
    out
}

/// `(aD + b)(cD + d) = ac D² + (ac' + ad + bc) D + (ad' + bd)`.
fn compose(x: First, y: First) -> Operator {
    Operator {
        d2: mul(&x.a, &y.a),
        d1: add(add(mul(&x.a, &deriv(&y.a)), mul(&x.a, &y.b)), mul(&x.b, &y.a)),
        d0: add(mul(&x.a, &deriv(&y.b)), mul(&x.b, &y.b)),
    }
}

fn generators(n: usize) -> [First; 3] {
    let nf = n as f64;
    let mono = |power: i32, c: f64| {
        let mut a = [0.0; WIDTH];
        a[idx(power)] = c;
        a
    };
    [
        First { a: mono(2, 1.0), b: mono(1, -nf) },
        First { a: mono(1, 1.0), b: mono(0, -nf / 2.0) },
        First { a: mono(0, 1.0), b: [0.0; WIDTH] },
    ]
}

/// The ten basis operators in [`QES_LABELS`] order.
fn basis(n: usize) -> Vec<Operator> {
    let [p, z, m] = generators(n);
    let single = |g: First| Operator { d2: [0.0; WIDTH], d1: g.a, d0: g.b };
    vec![
        compose(p, p),
        compose(p, z),
        compose(p, m),
        compose(z, z),
        compose(z, m),
        compose(m, m),
        single(p),
        single(z),
        single(m),
        Operator::zero().with(0, 0, 1.0),
    ]
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct QesReport {
    /// `‖Σ cᵢ Bᵢ − T‖ / ‖T‖` at the least-squares optimum, rows equilibrated.
    pub residual: f64,
    pub feasible: bool,
    /// Least-squares combination, keyed by [`QES_LABELS`].
    pub coefficients: Vec<(alloc::string::String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct QesCheck {
    /// The reduced operator as is.
    pub direct: QesReport,
    /// The reduced operator divided by `r`.
    pub divided: QesReport,
}

/// Least-squares match of an arbitrary target against the generator span.
pub fn qes_operator_check(target: &Operator, n: usize) -> QesReport {
    let cols = basis(n);
    let rows = 3 * WIDTH;
    let mut a = Matrix::zeros(rows, cols.len());
    for (j, op) in cols.iter().enumerate() {
        for (i, x) in op.flat().into_iter().enumerate() {
            a.set(i, j, x);
        }
    }
    // Row equilibration keeps one dominant coefficient from masking the rest.
    let mut b = target.flat();
    for (i, bi) in b.iter_mut().enumerate() {
        let scale = (0..cols.len()).fold(bi.abs(), |m, j| m.max(a.get(i, j).abs()));
        if scale > 0.0 {
            for j in 0..cols.len() {
                a.set(i, j, a.get(i, j) / scale);
            }
            *bi /= scale;
        }
    }
    let ls = least_squares(&a, &b);
    let tnorm = norm2(&b);
    let residual = if tnorm > 0.0 { ls.residual_norm / tnorm } else { ls.residual_norm };
    QesReport {
        residual,
        feasible: residual <= FEASIBLE_TOL,
        coefficients: QES_LABELS.iter().map(|l| alloc::string::String::from(*l)).zip(ls.x).collect(),
    }
}

/// `r³D² + (2λr³ + 2δr² − 2βr − 4γ)D + ξ₂r² + (ξ₁/S²)r + ξ₀/S²`.
pub fn reduced_operator(
    params: &ModelParams,
    epsilon: f64,
    v: f64,
    w: f64,
    exps: &ExponentParams,
) -> Result<Operator> {
    let xi = xi_coeffs(params, epsilon, &params.potential(v, w), exps)?;
    let s2 = params.trig()?.s * params.trig()?.s;
    Ok(Operator::zero()
        .with(2, 3, 1.0)
        .with(1, 3, 2.0 * exps.lambda)
        .with(1, 2, 2.0 * exps.delta)
        .with(1, 1, -2.0 * exps.beta)
        .with(1, 0, -4.0 * exps.gamma)
        .with(0, 2, xi.xi2)
        .with(0, 1, xi.xi1 / s2)
        .with(0, 0, xi.xi0 / s2))
}

/// Tests the reduced operator of level `n`, and its `r`-divided form, for
/// membership in the quadratic generator span.
pub fn qes_form_check(
    params: &ModelParams,
    n: usize,
    epsilon: f64,
    v: f64,
    w: f64,
    exps: &ExponentParams,
) -> Result<QesCheck> {
    let op = reduced_operator(params, epsilon, v, w, exps)?;
    Ok(QesCheck { direct: qes_operator_check(&op, n), divided: qes_operator_check(&op.shifted(-1), n) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthesized_member_is_feasible() {
        let [_, z, m] = generators(3);
        let single = Operator { d2: [0.0; WIDTH], d1: m.a, d0: m.b };
        let target = compose(z, m).add(&single.scaled(2.0));
        let rep = qes_operator_check(&target, 3);
        assert!(rep.residual <= 1e-12 && rep.feasible, "{rep:?}");
    }

    #[test]
    fn casimir_dependency() {
        // J⁰J⁰ − J⁺J⁻ = J⁰ + n/2 + n²/4 as operators.
        let n = 2;
        let b = basis(n);
        let lhs = b[3].add(&b[2].scaled(-1.0));
        let nf = n as f64;
        let rhs = b[7].add(&b[9].scaled(nf / 2.0 + nf * nf / 4.0));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn linear_drift_is_infeasible() {
        let target = Operator::zero().with(2, 3, 1.0).with(1, 3, -0.8);
        assert!(!qes_operator_check(&target, 1).feasible);
    }
}
