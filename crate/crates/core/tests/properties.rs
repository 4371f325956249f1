use std::collections::BTreeMap;

use proptest::prelude::*;
use psdid::analysis::{
    dense_oracle, effective_form, multi_step_bounds, quality_epsilon, verify_trace, EpsilonSchedule, MultiStepInput,
    NuRule, QualityObserver, RestrictedOperators, SpectralOracle, VerifyConfig,
};
use psdid::linalg::{sym_eig, DenseBlock, Pencil, SparseMatrix, DEFAULT_DENSE_LIMIT};
use psdid::preconditioner::{Preconditioner, PreconditionerSpec, Variant};
use psdid::solver::{
    multi_run, multi_run_observed, psd_id_step, random_block, run, run_observed, DeflationSet, RunConfig, StepSettings,
    StopCriterion,
};

/// Symmetric positive definite tridiagonal matrix from a diagonal and an
/// off-diagonal that is small enough for strict diagonal dominance.
fn tridiagonal(diag: &[f64], off: &[f64]) -> SparseMatrix {
    let n = diag.len();
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, diag[i]));
        if i + 1 < n {
            t.push((i, i + 1, off[i]));
            t.push((i + 1, i, off[i]));
        }
    }
    SparseMatrix::from_triplets(n, &t).unwrap()
}

fn pencil_strategy() -> impl Strategy<Value = Pencil> {
    (6usize..14, any::<bool>()).prop_flat_map(|(n, generalized)| {
        (
            prop::collection::vec(1.0f64..20.0, n),
            prop::collection::vec(-0.45f64..0.45, n - 1),
            prop::collection::vec(1.0f64..3.0, n),
            prop::collection::vec(-0.45f64..0.45, n - 1),
        )
            .prop_map(move |(hd, ho, sd, so)| {
                let h = tridiagonal(&hd, &ho);
                if generalized {
                    Pencil::new(h, tridiagonal(&sd, &so)).unwrap()
                } else {
                    Pencil::standard(h).unwrap()
                }
            })
    })
}

/// Pencil whose spectrum has a relative gap of at least `1e-3` everywhere,
/// so that bracketing never sits on the noise floor.
fn separated(p: &Pencil) -> Option<SpectralOracle> {
    let o = dense_oracle(p, DEFAULT_DENSE_LIMIT).ok()?;
    let ln = o.lambda_max();
    o.values().windows(2).all(|w| w[1] - w[0] > 1e-3 * ln).then_some(o)
}

fn exact(sigma: f64) -> PreconditionerSpec {
    PreconditionerSpec::new(Variant::ExactShiftInvert, sigma)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn accepted_vectors_stay_s_orthonormal(p in pencil_strategy(), seed in 0u64..1000) {
        let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
        let sigma = 0.5 * o.lambda(1);
        let mut cfg = RunConfig::new(1, 2, exact(sigma), StopCriterion::SInvResidual { tol: 1e-10 });
        cfg.seed = seed;
        let res = multi_run(&p, 3, &cfg).unwrap();
        let u = res.deflation.u();
        let gram = u.t_mul(&p.apply_s_block(u));
        prop_assert!(gram.sub(&DenseBlock::identity(u.ncols())).max_abs() < 1e-10);
    }

    #[test]
    fn ritz_values_respect_courant_fischer(p in pencil_strategy(), seed in 0u64..1000, i in 1usize..3) {
        let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
        let defl = DeflationSet::from_parts(o.deflated_basis(i), o.values()[..i - 1].to_vec()).unwrap();
        let spec = PreconditionerSpec::new(Variant::InnerKrylov, 0.0).with_tolerance(0.3);
        let mut cfg = RunConfig::new(1, 2, spec, StopCriterion::SInvResidual { tol: 1e-9 });
        cfg.max_steps = 30;
        let z0 = random_block(p.n(), 2, seed);
        let (_, trace) = run(&p, &defl, &z0, &cfg).unwrap();
        let slack = 1e-10 * o.lambda_max();
        for rec in &trace {
            for (t, &theta) in rec.thetas.iter().enumerate() {
                prop_assert!(theta >= o.lambda(i + t) - slack, "θ_{} = {} below λ = {}", t + 1, theta, o.lambda(i + t));
            }
        }
    }

    #[test]
    fn eigenvector_is_a_fixed_point(p in pencil_strategy(), j in 0usize..4) {
        let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
        let k = Preconditioner::build(exact(0.0), &p).unwrap();
        let defl = DeflationSet::from_parts(o.deflated_basis(j + 1), o.values()[..j].to_vec()).unwrap();
        let z = o.vectors().col(j).to_vec();
        // The preconditioned residual is rounding noise. Whether it is kept
        // or dropped, the smallest Ritz value stays at λ.
        match psd_id_step(&z, &defl, &k, &p, StepSettings::default()) {
            Ok((t, _)) => prop_assert!((t - o.lambda(j + 1)).abs() <= 1e-10 * o.lambda_max()),
            Err(e) => {
                let collapsed = matches!(e, psdid::Error::SubspaceCollapse { .. });
                prop_assert!(collapsed, "unexpected error {}", e);
            }
        }
    }

    #[test]
    fn step_matches_coefficient_space_rayleigh_ritz(p in pencil_strategy(), seed in 0u64..1000, i in 1usize..3) {
        let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
        let sigma = o.lambda(i) - 0.3 * (o.lambda(i + 1) - o.lambda(i)).max(1e-3);
        let k = Preconditioner::build(exact(sigma), &p).unwrap();
        let defl = DeflationSet::from_parts(o.deflated_basis(i), o.values()[..i - 1].to_vec()).unwrap();
        let z = random_block(p.n(), 1, seed);
        let settings = StepSettings::default();
        let Ok((theta_next, _)) = psd_id_step(z.col(0), &defl, &k, &p, settings) else {
            return Ok(());
        };

        // Same step written in eigen-coefficients of the non-deflated part.
        let (ro, _) = effective_form(&k, &p, &o, i, sigma).unwrap();
        let lam: Vec<f64> = o.values()[i - 1..].to_vec();
        let c = o.coefficients(&p, i, &z);
        let c: Vec<f64> = c.col(0).to_vec();
        let cc: f64 = c.iter().map(|x| x * x).sum();
        let rho: f64 = c.iter().zip(&lam).map(|(x, l)| x * x * l).sum::<f64>() / cc;
        let rt: Vec<f64> = c.iter().zip(&lam).map(|(x, l)| (l - rho) * x).collect();
        let d = ro.k_tilde.mul_vec(&rt);
        let basis = DenseBlock::from_columns(c.len(), &[c, d]).unwrap();
        let id = SparseMatrix::identity(lam.len());
        let q = psdid::linalg::s_orthonormalize(&id, &basis, None, 1e-10).unwrap();
        let mut aq = q.clone();
        aq.scale_rows(&lam);
        let g = q.t_mul(&aq);
        let eig = sym_eig(&g, DEFAULT_DENSE_LIMIT).unwrap();
        prop_assert!((eig.values[0] - theta_next).abs() <= 1e-9 * o.lambda_max(),
            "{} vs {}", eig.values[0], theta_next);
    }

    #[test]
    fn bound_parameter_never_touches_the_solver(p in pencil_strategy(), seed in 0u64..1000) {
        let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
        let spec = PreconditionerSpec::new(Variant::InnerKrylov, 0.5 * o.lambda(1)).with_tolerance(0.2);
        let mut cfg = RunConfig::new(1, 2, spec, StopCriterion::SInvResidual { tol: 1e-8 });
        cfg.seed = seed;
        let mut a = QualityObserver::new(&p, &o, NuRule::Sigma);
        let mut b = QualityObserver::new(&p, &o, NuRule::Fixed(0.25 * o.lambda(1)));
        let ta = multi_run_observed(&p, 2, &cfg, &mut a).unwrap().traces;
        let tb = multi_run_observed(&p, 2, &cfg, &mut b).unwrap().traces;
        prop_assert_eq!(ta, tb);
    }

    #[test]
    fn epsilon_is_scale_invariant(
        raw in prop::collection::vec(-1.0f64..1.0, 25),
        lam in prop::collection::vec(0.1f64..10.0, 5),
        c in 0.01f64..100.0,
    ) {
        // K̃ = AᵀA + I is symmetric positive definite.
        let a = DenseBlock::from_col_major(5, 5, raw).unwrap();
        let mut k = a.t_mul(&a);
        for d in 0..5 {
            k[(d, d)] += 1.0;
        }
        let mut kc = k.clone();
        kc.scale_cols(&[c; 5]);
        let q1 = quality_epsilon(&RestrictedOperators::from_parts(1, 0.0, lam.clone(), k).unwrap()).unwrap();
        let q2 = quality_epsilon(&RestrictedOperators::from_parts(1, 0.0, lam, kc).unwrap()).unwrap();
        prop_assert!((q1.epsilon - q2.epsilon).abs() < 1e-12);
        prop_assert!((q2.omega * c / q1.omega - 1.0).abs() < 1e-10);
        prop_assert!((0.0..1.0).contains(&q1.epsilon));
    }

    #[test]
    fn exact_shift_invert_traces_obey_the_bounds(p in pencil_strategy(), seed in 0u64..1000, frac in 0.0f64..0.9) {
        let Some(o) = separated(&p) else { return Ok(()); };
        let sigma = frac * o.lambda(1);
        let mut cfg = RunConfig::new(1, 2, exact(sigma), StopCriterion::SInvResidual { tol: 1e-10 });
        cfg.seed = seed;
        // A fixed shift stays below every target.
        let res = multi_run(&p, 3, &cfg).unwrap();
        let rep = verify_trace(&res.traces, &o, &EpsilonSchedule::constant(0.0, sigma), &BTreeMap::new(), &VerifyConfig::default()).unwrap();
        prop_assert!(rep.passed(), "{} violations, max slack {:e}", rep.violations, rep.max_slack);
    }

    #[test]
    fn krylov_traces_obey_the_bounds_with_realized_quality(
        p in pencil_strategy(),
        seed in 0u64..1000,
        tol in prop::sample::select(vec![0.5, 0.1, 0.01]),
    ) {
        let Some(o) = separated(&p) else { return Ok(()); };
        let spec = PreconditionerSpec::new(Variant::InnerKrylov, 0.5 * o.lambda(1)).with_tolerance(tol);
        let mut cfg = RunConfig::new(1, 2, spec, StopCriterion::SInvResidual { tol: 1e-9 });
        cfg.seed = seed;
        let mut obs = QualityObserver::new(&p, &o, NuRule::Sigma);
        let z0 = random_block(p.n(), 2, seed);
        let (_, trace) = run_observed(&p, &DeflationSet::new(p.n()), &z0, &cfg, &mut obs).unwrap();
        let (eps, taus) = obs.into_parts();
        let rep = verify_trace(&trace, &o, &eps, &taus, &VerifyConfig::default()).unwrap();
        prop_assert!(rep.passed(), "{} violations, {} monotone", rep.violations, rep.monotone_violations);
    }

    #[test]
    fn bound3_never_exceeds_bound2(
        gaps in prop::collection::vec(0.001f64..5.0, 10),
        t in 1usize..4,
        eps in 0.0f64..0.9,
        nu_frac in 0.0f64..0.99,
        steps in 0u32..20,
        theta_frac in 0.01f64..0.99,
    ) {
        let mut eigs = vec![1.0];
        for g in gaps {
            eigs.push(eigs.last().unwrap() + g);
        }
        let (i, kt) = (2, 3);
        let nu = eigs[0] + nu_frac * (eigs[1] - eigs[0]);
        let gap = eigs[i + kt - 1];
        let theta_last = eigs[i + kt - 2] + theta_frac * (gap - eigs[i + kt - 2]);
        let input = MultiStepInput {
            i, t, block_size: kt, nu, sigma: nu, epsilon: eps, steps,
            theta_t_ref: theta_last, theta_last_ref: theta_last, tau: None, steps_from_start: steps,
        };
        let b = multi_step_bounds(&eigs, &input);
        if let (Some(b2), Some(b3)) = (b.bound2, b.bound3) {
            prop_assert!(b3.factor <= b2.factor * (1.0 + 1e-12));
            prop_assert!(b3.value <= b2.value * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn certificates_contain_an_eigenvalue(p in pencil_strategy(), seed in 0u64..1000) {
        let o = dense_oracle(&p, DEFAULT_DENSE_LIMIT).unwrap();
        let mut cfg = RunConfig::new(2, 3, exact(0.5 * o.lambda(1)), StopCriterion::SInvResidual { tol: 1e-6 });
        cfg.seed = seed;
        let res = multi_run(&p, 2, &cfg).unwrap();
        for (&value, &radius) in res.deflation.eigenvalues().iter().zip(res.deflation.radii()) {
            let nearest = o.values().iter().map(|l| (l - value).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= radius * (1.0 + 1e-8) + 1e-12 * o.lambda_max());
        }
    }
}
