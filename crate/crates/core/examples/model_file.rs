// Models from JSON: a pendulum written as the standard algebroid T R with expression
// strings, validated, certified and simulated like a built-in.

use algebroid::integrate::{integrate, IntegratorConfig, Monitor};
use algebroid::models::{parse_model_file, STRUCTURE_TOL};
use algebroid::PhasePoint;

const PENDULUM: &str = r#"{
  "name": "pendulum",
  "base_dim": 1,
  "rank": 1,
  "coord_names": ["q"],
  "domain": [null],
  "anchor": [["1"]],
  "cometric": [["1"]],
  "potential": "1 - cos(q)",
  "certificate_sigma": "0"
}"#;

pub fn run_example() -> algebroid::Result<()> {
    let pendulum = parse_model_file(PENDULUM)?;
    let report = pendulum.structure_report(0)?;
    println!(
        "{}: anchor residual {:.1e}, jacobi residual {:.1e} on {} points, passes {}",
        pendulum.name,
        report.max_anchor_residual,
        report.max_jacobi_residual,
        report.grid_size,
        report.passes(STRUCTURE_TOL)
    );
    if let Some(cert) = pendulum.verify_certificate(0)? {
        println!(
            "certificate residual {:.1e} (verified {})",
            cert.max_residual, cert.verified
        );
    }

    // Released from rest at q = 2, the period is 4 K(sin 1), about 8.35.
    let x0 = PhasePoint::new(vec![2.0], vec![0.0]);
    let cfg = IntegratorConfig::rkf45(1e-10, 1e-12, 1e-12, 0.1, 9.0).with_record_stride(20);
    let traj = integrate(
        &pendulum.algebroid,
        (&pendulum.hamiltonian).into(),
        &x0,
        &cfg,
        &[Monitor::Energy],
    )?;
    let turn = traj
        .times
        .windows(2)
        .zip(traj.states.windows(2))
        .find(|(_, s)| s[0].p[0] < 0.0 && s[1].p[0] >= 0.0)
        .map(|(t, _)| t[1]);
    println!(
        "{} steps recorded, energy drift {:.1e}",
        traj.times.len(),
        traj.monitor_drift(0)
    );
    if let Some(t) = turn {
        println!("momentum changes sign again near t = {t:.2} (half period)");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> algebroid::Result<()> {
    run_example()
}
