use algebroid::cli::{self, EXIT_EXPECTATION, EXIT_INPUT, EXIT_OK};
use algebroid::models::{self, BUILTIN_NAMES};
use proptest::prelude::*;

fn run(args: &[String]) -> (i32, Vec<u8>, Vec<u8>) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("algebroid".to_string()).chain(args.iter().cloned());
    let code = cli::run(argv, &mut out, &mut err);
    (code, out, err)
}

fn args(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

fn invocation(sub: usize, model: &str, seed: u64) -> Vec<String> {
    let seed = seed.to_string();
    match sub {
        0 => args(&["validate", "--model", model, "--seed", &seed]),
        1 => args(&[
            "simulate",
            "--model",
            model,
            "--seed",
            &seed,
            "--t-final",
            "0.5",
            "--dt",
            "0.01",
        ]),
        2 => args(&["modular", "--model", model, "--seed", &seed]),
        3 => args(&[
            "volume",
            "--model",
            model,
            "--seed",
            &seed,
            "--samples",
            "10",
            "--trajectories",
            "1",
            "--t-final",
            "0.2",
            "--obstruction-points",
            "5",
            "--expect-preserved",
        ]),
        _ => args(&["list-models"]),
    }
}

fn expected_exit(sub: usize, model: &str) -> i32 {
    let unimodular = models::builtin(model).unwrap().expected.unimodular == Some(true);
    match sub {
        3 if !unimodular => EXIT_EXPECTATION,
        _ => EXIT_OK,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn exit_codes_follow_the_contract(sub in 0usize..5, k in 0..BUILTIN_NAMES.len(), seed in 0u64..1000) {
        let model = BUILTIN_NAMES[k];
        let (code, out, err) = run(&invocation(sub, model, seed));
        prop_assert_eq!(code, expected_exit(sub, model), "{}", String::from_utf8_lossy(&err));
        prop_assert!(!out.is_empty());
    }

    #[test]
    fn identical_invocations_give_identical_bytes(sub in 0usize..5, k in 0..BUILTIN_NAMES.len(), seed in 0u64..1000) {
        let argv = invocation(sub, BUILTIN_NAMES[k], seed);
        prop_assert_eq!(run(&argv), run(&argv));
    }

    #[test]
    fn unknown_flags_are_input_errors(sub in 0usize..5, flag in "--[a-z]{3,10}") {
        prop_assume!(!["--model", "--seed", "--output", "--help", "--version"].contains(&flag.as_str()));
        let mut argv = invocation(sub, "so3", 0);
        argv.insert(1, flag);
        argv.push("1".into());
        let (code, _, err) = run(&argv);
        prop_assert_eq!(code, EXIT_INPUT);
        prop_assert!(!err.is_empty());
    }
}

#[test]
fn unknown_models_are_input_errors() {
    for sub in 0..4 {
        let (code, _, _) = run(&invocation(sub, "no-such-model", 0));
        assert_eq!(code, EXIT_INPUT, "subcommand {sub}");
    }
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("so3.json");
    let (_, stdout, _) = run(&args(&["validate", "--model", "so3"]));
    let (code, quiet, _) = run(&args(&[
        "validate",
        "--model",
        "so3",
        "--output",
        path.to_str().unwrap(),
    ]));
    assert_eq!(code, EXIT_OK);
    assert!(quiet.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
}
