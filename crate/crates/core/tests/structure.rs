mod common;

use algebroid::algebroid::CovectorField;
use algebroid::models::{self, BUILTIN_NAMES};
use algebroid::sampling;
use nalgebra::DVector;
use proptest::prelude::*;

#[test]
fn structure_is_antisymmetric_everywhere() {
    for name in BUILTIN_NAMES {
        let b = models::builtin(name).unwrap();
        let mut rng = sampling::rng(11);
        for _ in 0..1000 {
            let q = b.sampling.base.uniform(&mut rng);
            let c = b.algebroid.structure(&q).unwrap();
            assert_eq!(c.antisymmetry_defect(), 0.0, "{name} at {q:?}");
        }
    }
}

#[test]
fn builtin_residuals_with_finite_differences() {
    for name in BUILTIN_NAMES {
        let b = models::builtin(name).unwrap();
        let fd = b.algebroid.without_analytic_derivatives();
        let mut rng = sampling::rng(5);
        for _ in 0..100 {
            let q = b.sampling.base.uniform(&mut rng);
            assert!(
                fd.anchor_compat_residual(&q).unwrap().max_abs() < 1e-5,
                "{name}"
            );
            assert!(fd.jacobi_residual(&q).unwrap().max_abs() < 1e-5, "{name}");
        }
    }
}

#[test]
fn zero_dimensional_base_shapes() {
    let so3 = models::builtin("so3").unwrap();
    let alg = &so3.algebroid;
    assert_eq!(alg.anchor(&[]).unwrap().shape(), (0, 3));
    assert!(alg.anchor_jacobian(&[]).unwrap().is_empty());
    assert_eq!(alg.anchor_divergence(&[]).unwrap().len(), 3);
    let df = alg
        .differential_of_function(&algebroid::BaseField::constant(2.0), &[])
        .unwrap();
    assert_eq!(df.components, DVector::zeros(3));
    assert_eq!(alg.jacobi_residual(&[]).unwrap().max_abs(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_squared_vanishes(seed in any::<u64>(), which in 0usize..4) {
        let name = ["harmonic-oscillator", "heavy-top", "beanie", "atiyah-aff1"][which];
        let b = models::builtin(name).unwrap();
        let mut rng = sampling::rng(seed);
        let f = common::random_smooth(&mut rng, b.base_dim());
        let alg = b.algebroid.clone();
        let n = alg.rank();
        let df = CovectorField::new(move |q| {
            alg.differential_of_function(&f, q)
                .map(|c| c.components)
                .unwrap_or_else(|_| DVector::from_element(n, f64::NAN))
        });
        let q = b.sampling.base.uniform(&mut rng);
        let dd = b.algebroid.differential_of_section(&df, &q).unwrap();
        prop_assert!(dd.amax() < 1e-6, "{} |d d f| = {:e}", name, dd.amax());
    }
}
