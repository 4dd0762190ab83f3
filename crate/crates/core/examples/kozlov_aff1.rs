// The non-unimodular algebra aff(1): its Lie-Poisson flow expands every volume of basic
// type, and the growth matches the closed form log det J = int p1 dt.

use algebroid::models;
use algebroid::modular::{modular_character, PhaseDensity, VolumeSpec};
use algebroid::volume_flow::{divergence, jacobian_log_det, zero_section_obstruction};
use algebroid::PhasePoint;

pub fn run_example() -> algebroid::Result<()> {
    let aff = models::builtin("aff1")?;
    println!(
        "modular character {:?}",
        modular_character(&aff.algebroid)?.as_slice()
    );

    let h = (&aff.hamiltonian).into();
    for p0 in [[1.0, 0.0], [0.5, 0.5], [-1.0, 0.2]] {
        let x0 = PhasePoint::new(vec![], p0.to_vec());
        let r = jacobian_log_det(&aff.algebroid, h, &x0, 2.0, 1e-3, None)?;
        println!(
            "p0 = {p0:?}: log det J = {:+.6}, integrated divergence {:+.6}",
            r.log_det_jacobian, r.integrated_divergence
        );
    }

    let at = PhasePoint::new(vec![], vec![2.0, 5.0]);
    let d = divergence(
        &aff.algebroid,
        h,
        &VolumeSpec::lebesgue(),
        &PhaseDensity::zero(2),
        &at,
    )?;
    println!("divergence at p = (2, 5): {}", d.divergence);

    // No basic volume can be preserved: the zero-section residual is non-zero for sigma = 0.
    let r = zero_section_obstruction(
        &aff.algebroid,
        &aff.hamiltonian,
        &VolumeSpec::lebesgue(),
        &PhaseDensity::zero(2),
        &algebroid::BaseField::zero(),
        &[],
    )?;
    println!("zero-section residual {:?}", r.as_slice());
    Ok(())
}

#[allow(dead_code)]
fn main() -> algebroid::Result<()> {
    run_example()
}
