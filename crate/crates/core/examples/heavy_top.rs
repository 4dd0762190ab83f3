// Heavy top on the action algebroid so(3) x S^2: the flow does not preserve dtheta dphi dp,
// but it does preserve sin(theta) dtheta dphi dp, and the integrated divergence shows it.

use algebroid::integrate::{integrate, IntegratorConfig, Monitor};
use algebroid::models;
use algebroid::sampling;
use algebroid::volume_flow::jacobian_log_det;

pub fn run_example() -> algebroid::Result<()> {
    let top = models::builtin("heavy-top")?;
    let (volume, density) = top
        .certified_volume()
        .expect("heavy top ships a certificate");
    let x0 = top.sampling.initial_condition(&mut sampling::rng(7));
    let h = (&top.hamiltonian).into();

    let cfg = IntegratorConfig::rkf45(1e-10, 1e-12, 1e-12, 0.05, 10.0).with_record_stride(50);
    let monitors = [
        Monitor::Energy,
        Monitor::Divergence {
            volume: volume.clone(),
            density: density.clone(),
        },
    ];
    let traj = integrate(&top.algebroid, h, &x0, &cfg, &monitors)?;
    let end = traj.final_state();
    println!("theta, phi: {:?} -> {:?}", x0.q, end.q);
    println!("energy drift {:.2e}", traj.monitor_drift(0));
    println!(
        "integrated divergence against sin(theta): {:.2e}",
        traj.monitor_drift(1)
    );

    let r = jacobian_log_det(
        &top.algebroid,
        h,
        &x0,
        10.0,
        1e-3,
        Some((&volume, &density)),
    )?;
    println!("coordinate log det J      {:+.6}", r.log_det_jacobian);
    println!(
        "change of log sin(theta)  {:+.6}",
        r.volume_log_change - r.log_det_jacobian
    );
    println!("preserved-volume change   {:+.2e}", r.volume_log_change);
    Ok(())
}

#[allow(dead_code)]
fn main() -> algebroid::Result<()> {
    run_example()
}
