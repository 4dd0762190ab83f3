use algebroid::integrate::{integrate, IntegratorConfig, Monitor};
use algebroid::models::{self, BUILTIN_NAMES};
use algebroid::sampling;
use proptest::prelude::*;

#[test]
fn energy_drift_over_builtins() {
    for name in BUILTIN_NAMES {
        let b = models::builtin(name).unwrap();
        let x0 = b.sampling.initial_condition(&mut sampling::rng(2));
        let cfg = IntegratorConfig::rk4(1e-3, 10.0).with_record_stride(100);
        let traj = integrate(
            &b.algebroid,
            (&b.hamiltonian).into(),
            &x0,
            &cfg,
            &[Monitor::Energy],
        )
        .unwrap();
        assert!(traj.escaped.is_none(), "{name} left its chart");
        let e0 = traj.monitors[0][0];
        let rel = traj.monitor_drift(0) / e0.abs().max(1e-300);
        assert!(
            rel < 1e-8 || traj.monitor_drift(0) < 1e-12,
            "{name}: relative drift {rel:e}"
        );
    }
}

#[test]
fn casimirs_are_conserved_along_trajectories() {
    for name in BUILTIN_NAMES {
        let b = models::builtin(name).unwrap();
        let monitors: Vec<Monitor> = b
            .expected
            .casimirs
            .iter()
            .map(|c| Monitor::Casimir {
                name: c.name.clone(),
                field: c.field.clone(),
            })
            .collect();
        if monitors.is_empty() {
            continue;
        }
        let x0 = b.sampling.initial_condition(&mut sampling::rng(8));
        let traj = integrate(
            &b.algebroid,
            (&b.hamiltonian).into(),
            &x0,
            &IntegratorConfig::rk4(1e-3, 5.0),
            &monitors,
        )
        .unwrap();
        for (j, label) in traj.monitor_labels.iter().enumerate() {
            assert!(
                traj.monitor_drift(j) < 1e-9,
                "{name} {label}: {:e}",
                traj.monitor_drift(j)
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn adaptive_matches_fine_fixed_step(seed in any::<u64>(), k in 0..BUILTIN_NAMES.len()) {
        let b = models::builtin(BUILTIN_NAMES[k]).unwrap();
        let x0 = b.sampling.initial_condition(&mut sampling::rng(seed));
        let h = (&b.hamiltonian).into();
        let atol = 1e-9;
        let fixed = integrate(&b.algebroid, h, &x0, &IntegratorConfig::rk4(1e-4, 1.0), &[]).unwrap();
        let adaptive =
            integrate(&b.algebroid, h, &x0, &IntegratorConfig::rkf45(1e-12, atol, 1e-12, 0.1, 1.0), &[]).unwrap();
        let (a, c) = (fixed.final_state().to_flat(), adaptive.final_state().to_flat());
        let gap = a.iter().zip(&c).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        prop_assert!(gap < 10.0 * atol, "{}: {:e}", BUILTIN_NAMES[k], gap);
    }

    #[test]
    fn integration_is_deterministic(seed in any::<u64>(), k in 0..BUILTIN_NAMES.len()) {
        let b = models::builtin(BUILTIN_NAMES[k]).unwrap();
        let x0 = b.sampling.initial_condition(&mut sampling::rng(seed));
        let cfg = IntegratorConfig::rkf45(1e-8, 1e-10, 1e-12, 0.1, 2.0);
        let run = || integrate(&b.algebroid, (&b.hamiltonian).into(), &x0, &cfg, &[Monitor::Energy]).unwrap();
        let (a, c) = (run(), run());
        prop_assert_eq!(&a, &c);
        prop_assert!(a.times.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(a.states.len(), a.times.len());
        prop_assert_eq!(a.monitors.len(), a.times.len());
    }
}
