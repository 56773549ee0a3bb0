//! Runs the example programs that `cargo test` builds alongside the tests.

use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> Command {
    let mut dir: PathBuf = std::env::current_exe().unwrap();
    dir.pop();
    if dir.ends_with("deps") {
        dir.pop();
    }
    Command::new(dir.join("examples").join(name))
}

fn stdout_of(name: &str, env: &[(&str, &str)]) -> String {
    let out = example(name).envs(env.iter().copied()).output().unwrap();
    assert!(
        out.status.success(),
        "{name} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn examples_print_what_they_promise() {
    type Case<'a> = (&'a str, &'a [(&'a str, &'a str)], &'a str);
    let cases: [Case; 8] = [
        ("preprocess_features", &[], "feature channels, 16 frames each"),
        ("dtw_alignment", &[], "distance 0.2"),
        ("enroll_and_verify", &[], "fourth sample right away: SessionGapNotElapsed"),
        ("http_roundtrip", &[], "verify: accepted=true"),
        ("replay_defense", &[], "replayed  -> HTTP 409"),
        ("edge_attestation", &[], "attested reject 5: failures=5 blocked=true"),
        ("synthetic_eval", &[("USERS", "4")], "EER "),
        ("attack_simulation", &[], "scenario unsupported"),
    ];
    for (name, env, needle) in cases {
        let out = stdout_of(name, env);
        assert!(out.contains(needle), "{name} output lacks {needle:?}:\n{out}");
    }
}
