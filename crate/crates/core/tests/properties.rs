use proptest::prelude::*;

use qdirac_core::bethe::{bae_residuals, solve_n0, BetheProblem};
use qdirac_core::model::{
    compute_exponents, compute_scales, continued_exponents, decay_rate, derive_trig, effective_potential,
    xi_coeffs, Branch, ModelParams,
};
use qdirac_core::spectrum::{energies, energy, ground_energy, termination_residual};
use qdirac_core::verify::master_consistency;
use qdirac_core::wavefunction::unrotate;

fn eta() -> impl Strategy<Value = f64> {
    prop_oneof![-1.5f64..-0.05, 0.05f64..1.5]
}

fn strength() -> impl Strategy<Value = f64> {
    prop_oneof![-2.0f64..-0.05, 0.05f64..2.0]
}

fn params() -> impl Strategy<Value = ModelParams> {
    (0.3f64..1.5, strength(), -2.0f64..2.0, eta(), -2.0f64..-0.2, any::<bool>()).prop_map(
        |(alpha, a, b, eta, u, plus)| {
            let branch = if plus { Branch::Plus } else { Branch::Minus };
            ModelParams::new(alpha, a, b, eta, u, branch).unwrap()
        },
    )
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, max_global_rejects: 1 << 20, ..ProptestConfig::with_cases(256) })]

    #[test]
    fn rotation_is_unit(eta in -1.57f64..1.57) {
        let t = derive_trig(eta).unwrap();
        prop_assert!((t.c * t.c + t.s * t.s - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn unrotate_is_isometry(eta in -3.0f64..3.0, x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let (u, v) = unrotate(eta, x, y);
        prop_assert!(close(u * u + v * v, x * x + y * y, 1e-14));
    }

    #[test]
    fn scales_are_nonnegative(p in params(), w in -5.0f64..5.0) {
        let sc = compute_scales(&p, w).unwrap();
        let t = p.trig().unwrap();
        let k = p.b - p.a * t.c;
        prop_assert!(sc.script_a >= 0.0 && sc.sigma >= 0.0);
        prop_assert!(close(sc.script_a * sc.script_a, (p.alpha * t.s * k).powi(2), 1e-13));
        prop_assert!(close(sc.script_b, -p.alpha * k * sc.script_f, 1e-13));
    }

    #[test]
    fn decay_rate_identity(alpha in 0.1f64..3.0, eps in -0.999f64..0.999) {
        let lam = decay_rate(alpha, eps).unwrap();
        prop_assert!(lam < 0.0);
        prop_assert!(close(lam * lam * alpha * alpha, 1.0 - eps * eps, 1e-14));
    }

    #[test]
    fn decaying_sheet_exponents_agree(p in params(), eps in -0.95f64..0.95, v in -3.0f64..3.0, w in -5.0f64..-0.01) {
        let e = compute_exponents(&p, eps, v, w).unwrap();
        let c = continued_exponents(&p, eps, v, w).unwrap();
        let sigma = compute_scales(&p, w).unwrap().sigma;
        prop_assert!(close(e.delta, c.delta, 1e-12));
        prop_assert!(close(e.beta, c.beta, 1e-12));
        prop_assert!(close(e.gamma, c.gamma, 1e-12));
        prop_assert!(close(e.gamma, -sigma / 2.0, 1e-14));
        prop_assert_eq!(e.lambda, c.lambda);
    }

    #[test]
    fn leading_reduced_coefficient_ignores_v(p in params(), eps in -0.95f64..0.95, v1 in -3.0f64..3.0, v2 in -3.0f64..3.0, w in -5.0f64..-0.01) {
        let exps = continued_exponents(&p, eps, v1, w).unwrap();
        let x1 = xi_coeffs(&p, eps, &p.potential(v1, w), &exps).unwrap();
        let x2 = xi_coeffs(&p, eps, &p.potential(v2, w), &exps).unwrap();
        prop_assert_eq!(x1.xi2, x2.xi2);
    }

    #[test]
    fn energies_satisfy_squared_condition(p in params(), n in 0usize..5) {
        let Ok(pair) = energies(&p, n) else { return Ok(()) };
        for e in pair.iter().filter(|e| e.bound) {
            let (res, xi2) = termination_residual(&p, n, e.epsilon).unwrap();
            let coulomb = 2.0 * p.u * (p.a * e.epsilon + p.b);
            let decay = xi2 + coulomb + 2.0 * n as f64 * decay_rate(p.alpha, e.epsilon).unwrap();
            prop_assert!(close(decay * decay, coulomb * coulomb, 1e-9));
            prop_assert_eq!(e.physical, res.abs() <= 1e-10 * xi2.abs().max(1.0));
        }
    }

    #[test]
    fn equal_strengths_collapse(alpha in 0.3f64..1.5, a in strength(), eta in eta(), u in -2.0f64..-0.2, n in 0usize..4) {
        let p = ModelParams::new(alpha, a, a, eta, u, Branch::Minus).unwrap();
        let Ok(e) = energy(&p, n) else { return Ok(()) };
        prop_assert!((e.epsilon + 1.0).abs() <= 1e-12);
        prop_assert!(!e.bound);
    }

    #[test]
    fn ground_is_level_zero(p in params()) {
        prop_assert_eq!(ground_energy(&p).ok(), energy(&p, 0).ok());
    }

    #[test]
    fn coulomb_effective_potential(alpha in 0.3f64..1.5, a in strength(), eta in eta(), u in -2.0f64..-0.2, r in 0.05f64..50.0) {
        let mut p = ModelParams::new(alpha, a, 0.0, eta, u, Branch::Plus).unwrap();
        p.b = p.coulomb_b().unwrap();
        for br in Branch::BOTH {
            let q = p.with_branch(br);
            let Ok(e) = energy(&q, 0) else { continue };
            if !e.physical { continue; }
            let exps = compute_exponents(&q, e.epsilon, 0.0, 0.0).unwrap();
            let (d, l) = (exps.delta, exps.lambda);
            let w = effective_potential(&q, e.epsilon, &q.potential(0.0, 0.0), r).unwrap();
            let expected = -l * l - 2.0 * d * l / r - d * (d - 1.0) / (r * r);
            // W is assembled from terms of order 1/α² that cancel toward -λ².
            let scale = (l * l).max((2.0 * d * l / r).abs()).max((d * (d - 1.0) / (r * r)).abs()).max(1.0 / (alpha * alpha));
            prop_assert!((w - expected).abs() <= 1e-10 * scale.max(1e-300), "{} vs {}", w, expected);
        }
    }

    #[test]
    fn ground_constraints_close(p in params()) {
        let t = p.trig().unwrap();
        prop_assume!((p.b - p.a * t.c) * t.s > 0.0);
        let Ok(e) = energy(&p, 0) else { return Ok(()) };
        prop_assume!(e.physical);
        let Ok(sol) = solve_n0(&BetheProblem::new(p, 0, e.epsilon)) else { return Ok(()) };
        let res = bae_residuals(&p, e.epsilon, sol.v, sol.w, &sol.roots).unwrap();
        prop_assert!(res.iter().all(|x| x.abs() <= 1e-10 * sol.scale));
        prop_assert!(master_consistency(&sol, &p));
    }
}
