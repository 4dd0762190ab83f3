// Free rigid body as the Lie-Poisson system on so(3)*: integrate with fixed-step RK4 and
// watch energy and |p|^2 stay put while the body tumbles.

use algebroid::integrate::{integrate, IntegratorConfig, Monitor};
use algebroid::models;
use algebroid::PhasePoint;

pub fn run_example() -> algebroid::Result<()> {
    let top = models::builtin("so3")?;
    let mut monitors = vec![Monitor::Energy];
    for c in &top.expected.casimirs {
        monitors.push(Monitor::Casimir {
            name: c.name.clone(),
            field: c.field.clone(),
        });
    }
    // Close to the unstable middle axis, so the body flips over.
    let x0 = PhasePoint::new(vec![], vec![0.05, 1.0, 0.05]);
    let cfg = IntegratorConfig::rk4(1e-3, 30.0).with_record_stride(1000);
    let traj = integrate(
        &top.algebroid,
        (&top.hamiltonian).into(),
        &x0,
        &cfg,
        &monitors,
    )?;

    println!("{:>6}  {:>10} {:>10} {:>10}", "t", "p1", "p2", "p3");
    for (t, x) in traj.times.iter().zip(&traj.states) {
        println!("{t:6.1}  {:10.6} {:10.6} {:10.6}", x.p[0], x.p[1], x.p[2]);
    }
    for (j, label) in traj.monitor_labels.iter().enumerate() {
        println!("{label} drift {:.2e}", traj.monitor_drift(j));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> algebroid::Result<()> {
    run_example()
}
