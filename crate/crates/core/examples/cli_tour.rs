// Drives the command-line interface in-process: list models, validate one, and run the
// volume study, printing whatever the binary would print.

use algebroid::cli;

pub fn run_example() -> Result<(), String> {
    let invocations: [&[&str]; 3] = [
        &["algebroid", "list-models"],
        &["algebroid", "validate", "--model", "heisenberg"],
        &[
            "algebroid",
            "volume",
            "--model",
            "aff1",
            "--samples",
            "10",
            "--trajectories",
            "1",
        ],
    ];
    for args in invocations {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = cli::run(args.iter().copied(), &mut out, &mut err);
        println!("$ {}  (exit {code})", args.join(" "));
        let text = String::from_utf8_lossy(&out);
        for line in text.lines().take(12) {
            println!("  {line}");
        }
        // Exit 1 only reports a failed expectation; input and numeric errors are faults.
        if code > cli::EXIT_EXPECTATION {
            return Err(String::from_utf8_lossy(&err).into_owned());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), String> {
    run_example()
}
