mod common;

use algebroid::models::{self, BUILTIN_NAMES};
use algebroid::modular::{
    modular_character, modular_cocycle_residual, modular_section, unimodularity_residual,
    UnimodularityCertificate, VolumeSpec,
};
use algebroid::sampling;
use proptest::prelude::*;

#[test]
fn zero_dimensional_section_is_the_character() {
    for name in BUILTIN_NAMES {
        let b = models::builtin(name).unwrap();
        if b.base_dim() != 0 {
            continue;
        }
        let section = modular_section(&b.algebroid, &b.volume, &[])
            .unwrap()
            .components;
        assert_eq!(section, modular_character(&b.algebroid).unwrap(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fibre_rescaling_shifts_by_an_exact_form(seed in any::<u64>(), k in 0..BUILTIN_NAMES.len()) {
        let b = models::builtin(BUILTIN_NAMES[k]).unwrap();
        let mut rng = sampling::rng(seed);
        let mu = common::random_smooth(&mut rng, b.base_dim());
        let q = b.sampling.base.uniform(&mut rng);
        let m = modular_section(&b.algebroid, &b.volume, &q).unwrap().components;
        let shifted = modular_section(&b.algebroid, &b.volume.with_fiber_shift(&mu), &q).unwrap().components;
        let d_mu = b.algebroid.differential_of_function(&mu, &q).unwrap().components;
        prop_assert!((shifted - m - d_mu).amax() < 1e-8);
    }

    #[test]
    fn modular_section_is_closed(seed in any::<u64>(), k in 0..BUILTIN_NAMES.len()) {
        let b = models::builtin(BUILTIN_NAMES[k]).unwrap();
        let mut rng = sampling::rng(seed);
        let dim = b.base_dim();
        let vol = VolumeSpec::new(common::random_smooth(&mut rng, dim), common::random_smooth(&mut rng, dim));
        let q = b.sampling.base.uniform(&mut rng);
        let r = modular_cocycle_residual(&b.algebroid, &vol, &q).unwrap();
        prop_assert!(r.amax() < 1e-6, "{} |d M| = {:e}", BUILTIN_NAMES[k], r.amax());
    }

    #[test]
    fn certificates_are_defined_up_to_constants(seed in any::<u64>(), c in -10.0f64..10.0) {
        let b = models::builtin("heavy-top").unwrap();
        let mut rng = sampling::rng(seed);
        let sigma = common::random_smooth(&mut rng, 2);
        let lifted = sigma.plus(&algebroid::BaseField::constant(c));
        let q = b.sampling.base.uniform(&mut rng);
        let r1 = unimodularity_residual(&b.algebroid, &b.volume, &UnimodularityCertificate::new(sigma), &q).unwrap();
        let r2 = unimodularity_residual(&b.algebroid, &b.volume, &UnimodularityCertificate::new(lifted), &q).unwrap();
        prop_assert!((r1.components - r2.components).amax() < 1e-12);
    }
}
