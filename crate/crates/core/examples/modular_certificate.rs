// Modular sections and unimodularity certificates across the built-in models: a certified
// bundle has M = -d^A sigma, and rescaling the volume shifts M by an exact term.

use algebroid::models::{self, BUILTIN_NAMES};
use algebroid::modular::{modular_cocycle_residual, modular_section, UnimodularityCertificate};
use algebroid::BaseField;

pub fn run_example() -> algebroid::Result<()> {
    println!(
        "{:<20} {:>12} {:>14} {:>10}",
        "model", "unimodular", "max residual", "verified"
    );
    for name in BUILTIN_NAMES {
        let b = models::builtin(name)?;
        match b.verify_certificate(0)? {
            Some(r) => println!(
                "{name:<20} {:>12} {:>14.2e} {:>10}",
                format!("{:?}", b.expected.unimodular),
                r.max_residual,
                r.verified
            ),
            None => println!(
                "{name:<20} {:>12} {:>14} {:>10}",
                format!("{:?}", b.expected.unimodular),
                "-",
                "-"
            ),
        }
    }

    // Rescaling nu by e^sigma moves M by d^A sigma: M' - M = rho^T dsigma.
    let top = models::builtin("heavy-top")?;
    let q = [1.0, 0.5];
    let sigma = BaseField::with_gradient(|q| q[0] * q[1], |q| vec![q[1], q[0]]);
    let m = modular_section(&top.algebroid, &top.volume, &q)?.components;
    let shifted =
        modular_section(&top.algebroid, &top.volume.with_base_shift(&sigma), &q)?.components;
    let d_sigma = top
        .algebroid
        .differential_of_function(&sigma, &q)?
        .components;
    println!("heavy-top M        {:?}", m.as_slice());
    println!("shift - d^A sigma  {:.1e}", (shifted - m - d_sigma).amax());
    println!(
        "d^A M (cocycle)    {:.1e}",
        modular_cocycle_residual(&top.algebroid, &top.volume, &q)?.amax()
    );

    // A wrong certificate is caught by the residual.
    let beanie = models::builtin("beanie")?;
    let wrong = UnimodularityCertificate::new(BaseField::with_gradient(|q| q[0], |_| vec![1.0]));
    let r = algebroid::modular::verify_certificate(
        &beanie.algebroid,
        &beanie.volume,
        &wrong,
        &beanie.sampling.base,
        0,
    )?;
    println!(
        "beanie with sigma = theta: residual {:.2e}, verified {}",
        r.max_residual, r.verified
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> algebroid::Result<()> {
    run_example()
}
