use gammarad::gamma_norm::{cauchy_tail_profile, gamma_norm_sq};
use gammarad::hilbert_sequences::gram;
use gammarad::laplace::cauchy_riemann_defect;
use gammarad::weiss::{factor_four_identity, invariant_measure_quantity, resolvent_family_bounds, ModeLaw, ResolventGrid};
use gammarad::{
    ColumnOperator, Complex64, DiagonalSystem, FiniteVector, GaussianDrawConfig, HilbertSequenceSpec, OrthonormalBasis,
    RepresentableOperator, SpaceSpec,
};
use proptest::prelude::*;

fn space(i: usize) -> SpaceSpec<f64> {
    match i {
        0 => SpaceSpec::lp(1.0).unwrap(),
        1 => SpaceSpec::lp(1.5).unwrap(),
        2 => SpaceSpec::l2(),
        3 => SpaceSpec::lp(3.0).unwrap(),
        _ => SpaceSpec::c0(),
    }
}

fn cvec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| Complex64::new(a, b)), n)
}

fn operator(cols: &[Vec<Complex64>]) -> ColumnOperator<f64> {
    let dim = cols.iter().map(Vec::len).max().unwrap_or(1).max(cols.len());
    let mut op = ColumnOperator::new(SpaceSpec::l2(), dim).unwrap();
    for (k, c) in cols.iter().enumerate() {
        op.set_column(k, c.iter().copied().enumerate().collect()).unwrap();
    }
    op
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_is_homogeneous_and_subadditive(s in 0usize..5, u in cvec(6), v in cvec(6), a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let sp = space(s);
        let (fu, fv) = (FiniteVector::new(u).unwrap(), FiniteVector::new(v).unwrap());
        let alpha = Complex64::new(a, b);
        let lhs = sp.norm(&fu.scaled(alpha)).unwrap();
        prop_assert!((lhs - alpha.norm() * sp.norm(&fu).unwrap()).abs() <= 1e-12 * lhs.max(1.0));
        let sum = sp.norm(&fu.add(&fv)).unwrap();
        prop_assert!(sum <= sp.norm(&fu).unwrap() + sp.norm(&fv).unwrap() + 1e-12);
    }

    #[test]
    fn ideal_property_on_l2(cols in prop::collection::vec(cvec(5), 1..6), s in cvec(5), r in prop::collection::vec(-1.0..1.0f64, 6), perm in Just(()).prop_perturb(|_, mut rng| rng.random::<u64>())) {
        let t = operator(&cols);
        let n = t.truncation();
        // R = D P with |d_k| ≤ 1 and a rotation of the indices: ‖R‖ ≤ 1
        let shift = (perm % n as u64) as usize;
        let rr: Vec<Vec<Complex64>> = (0..n)
            .map(|k| {
                let mut e = vec![Complex64::default(); n];
                e[(k + shift) % n] = Complex64::new(r[k % r.len()], 0.0);
                e
            })
            .collect();
        let s_norm = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cfg = GaussianDrawConfig::default();
        let composed = gamma_norm_sq(&t.right_multiply(&rr).left_multiply_diagonal(&s), &cfg).unwrap().mean;
        let base = gamma_norm_sq(&t, &cfg).unwrap().mean;
        prop_assert!(composed <= s_norm * s_norm * base * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn tail_profile_is_monotone(weights in prop::collection::vec(0.0..3.0f64, 2..40)) {
        let n = weights.len();
        let seq: Vec<_> = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| ColumnOperator::new(SpaceSpec::l2(), n).unwrap().with_column(k, vec![(k, Complex64::new(w, 0.0))]).unwrap())
            .collect();
        let cuts: Vec<usize> = (0..n).collect();
        let prof = cauchy_tail_profile(&seq, &OrthonormalBasis::standard(), &cuts, n, &GaussianDrawConfig::default()).unwrap();
        prop_assert!(prof.windows(2).all(|w| w[1].mean <= w[0].mean));
    }

    #[test]
    fn factor_four_holds_for_random_systems(lam in prop::collection::vec(1e-3..1e3f64, 1..100), beta in prop::collection::vec(-5.0..5.0f64, 100)) {
        let n = lam.len();
        let sys = DiagonalSystem::real(&lam, &beta[..n]).unwrap();
        prop_assert!(factor_four_identity(&sys, n).unwrap().relative_gap <= 1e-12);
    }

    #[test]
    fn resolvent_bound_is_monotone_and_capped(lam in prop::collection::vec(0.01..1e4f64, 1..60), beta in prop::collection::vec(-2.0..2.0f64, 60), m in 1u32..4) {
        let n = lam.len();
        let sys = DiagonalSystem::real(&lam, &beta[..n]).unwrap();
        let coarse = resolvent_family_bounds(&sys, &ResolventGrid::refined(m)).unwrap();
        let fine = resolvent_family_bounds(&sys, &ResolventGrid::refined(2 * m)).unwrap();
        prop_assert!(fine.lower_bound_sq >= coarse.lower_bound_sq * (1.0 - 1e-12));
        if let Some(u) = fine.upper_bound {
            prop_assert!(fine.lower_bound() <= u + 1e-12);
        }
        let head = DiagonalSystem::real(&lam[..n.div_ceil(2)], &beta[..n.div_ceil(2)]).unwrap();
        prop_assert!(resolvent_family_bounds(&head, &ResolventGrid::refined(m)).unwrap().lower_bound_sq <= coarse.lower_bound_sq);
    }

    #[test]
    fn laplace_transform_is_analytic(c in cvec(4), re in prop::collection::vec(0.1..5.0f64, 4), im in prop::collection::vec(-5.0..5.0f64, 4), x in 0.5..3.0f64, y in -3.0..3.0f64) {
        let rates: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let phi = RepresentableOperator::diagonal(&c, &rates).unwrap();
        let d = cauchy_riemann_defect(&phi, Complex64::new(x, y), 1e-4).unwrap();
        prop_assert!(d <= 1e-5 * (1.0 + c.iter().map(|z| z.norm()).sum::<f64>()), "{d}");
    }

    #[test]
    fn gram_norm_grows_with_window(b in 0.2..3.0f64, rho in 0.0..1.0f64, half in 1i64..24) {
        let small = gram(&HilbertSequenceSpec::modulated(b, rho, -half, half).unwrap()).unwrap();
        let large = gram(&HilbertSequenceSpec::modulated(b, rho, -half - 1, half + 1).unwrap()).unwrap();
        prop_assert!(large.op_norm_sqrt >= small.op_norm_sqrt * (1.0 - 1e-12));
        prop_assert!(small.is_psd());
    }
}

#[test]
fn single_precision_tracks_double() {
    let s32 = DiagonalSystem::<f32>::from_laws(ModeLaw::Power(2.0), ModeLaw::Constant(1.0), 1000).unwrap();
    let s64 = DiagonalSystem::<f64>::from_laws(ModeLaw::Power(2.0), ModeLaw::Constant(1.0), 1000).unwrap();
    let (a, b) = (invariant_measure_quantity(&s32).value, invariant_measure_quantity(&s64).value);
    assert!((f64::from(a) - b).abs() < 1e-6);
    assert!(factor_four_identity(&s32, 1000).unwrap().relative_gap <= 1e-6);
}
