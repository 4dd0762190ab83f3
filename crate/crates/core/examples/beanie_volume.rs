// The beanie: a trivial Atiyah algebroid se(2) x T S^1 with a shape-coupled metric. It is
// unimodular, so the flow preserves a basic volume; this example measures it.

use algebroid::models;
use algebroid::sampling;
use algebroid::volume_flow::{divergence, jacobian_log_det};

pub fn run_example() -> algebroid::Result<()> {
    let beanie = models::make_beanie(1.0, 1.0, 0.5)?;
    let (volume, density) = beanie.certified_volume().expect("beanie is certified");
    let h = (&beanie.hamiltonian).into();
    let mut rng = sampling::rng(3);

    let worst = (0..100)
        .map(|_| {
            let x = beanie.sampling.phase_point(&mut rng);
            divergence(&beanie.algebroid, h, &volume, &density, &x).map(|d| d.divergence.abs())
        })
        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))?;
    println!("max |div| over 100 phase points: {worst:.1e}");

    for _ in 0..3 {
        let x0 = beanie.sampling.initial_condition(&mut rng);
        let r = jacobian_log_det(
            &beanie.algebroid,
            h,
            &x0,
            10.0,
            1e-3,
            Some((&volume, &density)),
        )?;
        println!(
            "theta0 = {:+.3}: log det J = {:+.2e}, divergence integral {:+.2e}",
            x0.q[0], r.volume_log_change, r.integrated_divergence
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> algebroid::Result<()> {
    run_example()
}
