//! Runs the `sigaccess` binary as a separate process.

use std::io::{BufRead, BufReader};
use std::process::{Child, Command, Stdio};

const TOKEN: &str = "cli-test-token";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sigaccess"));
    c.env("ADMIN_TOKEN", TOKEN).env_remove("SIGACCESS_SERVER");
    c
}

struct Server {
    child: Child,
    url: String,
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn serve(data_dir: &std::path::Path) -> Server {
    let mut child = bin()
        .args(["serve", "--profile", "test", "--bind", "127.0.0.1:0", "--data-dir"])
        .arg(data_dir)
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let addr = loop {
        let line = lines.next().expect("server exited").unwrap();
        if let Some(rest) = line.split("addr=").nth(1) {
            break rest.split_whitespace().next().unwrap().to_string();
        }
    };
    std::thread::spawn(move || for _ in lines {});
    Server {
        child,
        url: format!("http://{addr}"),
    }
}

fn run(server: &Server, args: &[&str]) -> (bool, String, String) {
    let out = bin().arg("--server").arg(&server.url).args(args).output().unwrap();
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn admin_commands_against_live_server() {
    let dir = tempfile::tempdir().unwrap();
    let s = serve(dir.path());

    let (ok, out, _) = run(&s, &["users"]);
    assert!(ok);
    assert_eq!(out.lines().count(), 1, "header only: {out}");

    let (ok, out, _) = run(&s, &["authorize", "zoe"]);
    assert!(ok);
    assert!(out.contains("temporary password: "));
    let (ok, out, _) = run(&s, &["users"]);
    assert!(ok && out.contains("zoe") && out.contains("Authorized"));

    let (ok, _, err) = run(&s, &["unblock", "zoe"]);
    assert!(!ok);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("NotBlocked"), "{err}");

    let (ok, out, _) = run(&s, &["config", "--set", "max_failures=7"]);
    assert!(ok && out.contains("\"max_failures\": 7"));
    let (ok, _, err) = run(&s, &["config", "--set", "max_failures=0"]);
    assert!(!ok && err.contains("InvalidConfig"), "{err}");

    let (ok, out, _) = run(&s, &["logs", "--last", "2"]);
    assert!(ok);
    assert_eq!(out.lines().count(), 2);

    let out = bin()
        .arg("--server")
        .arg(&s.url)
        .env("ADMIN_TOKEN", "wrong")
        .arg("users")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotAdmin"));
}

#[test]
fn killed_server_restarts_with_log_and_state() {
    let dir = tempfile::tempdir().unwrap();
    let s = serve(dir.path());
    run(&s, &["authorize", "yuri"]);
    run(&s, &["config", "--set", "max_failures=9"]);
    let (_, before, _) = run(&s, &["logs", "--last", "100"]);
    drop(s); // SIGKILL

    let s = serve(dir.path());
    let (_, after, _) = run(&s, &["logs", "--last", "100"]);
    assert!(after.starts_with(before.trim_end()));
    let seqs: Vec<u64> = after
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["seq"].as_u64().unwrap())
        .collect();
    assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1));
    let (_, users, _) = run(&s, &["users"]);
    assert!(users.contains("yuri"));
    let (_, cfg, _) = run(&s, &["config"]);
    assert!(cfg.contains("\"max_failures\": 9"));
}

#[test]
fn attack_sim_replay_reports_detection() {
    let out = bin().args(["attack-sim", "replay"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("detected (pass)"), "{text}");

    let out = bin().args(["attack-sim", "replay", "--point", "7"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported"));
}

#[test]
fn gen_corpus_then_eval_prints_eer_line() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c");
    let out = bin()
        .args(["gen-corpus", "--users", "3", "--genuine", "8", "--forgeries", "4", "--out"])
        .arg(&corpus)
        .output()
        .unwrap();
    assert!(out.status.success());
    let report = dir.path().join("r.json");
    let out = bin()
        .args(["eval", "--corpus"])
        .arg(&corpus)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let line = text.lines().last().unwrap();
    assert!(line.starts_with("EER ") && line.contains(" at threshold "), "{line}");
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(report).unwrap()).unwrap();
    assert_eq!(v["thresholds"].as_array().unwrap().len(), 501);
}

#[test]
fn enroll_batch_refuses_session_gap() {
    let dir = tempfile::tempdir().unwrap();
    let s = serve(dir.path());
    let corpus = dir.path().join("c");
    bin()
        .args(["gen-corpus", "--users", "2", "--genuine", "6", "--forgeries", "1", "--out"])
        .arg(&corpus)
        .output()
        .unwrap();
    run(&s, &["config", "--set", "min_session_gap_secs=60"]);
    let (ok, _, err) = run(&s, &["enroll-batch", "--corpus", corpus.to_str().unwrap()]);
    assert!(!ok && err.contains("min_session_gap_secs = 0"), "{err}");
    run(&s, &["config", "--set", "min_session_gap_secs=0"]);
    let (ok, out, _) = run(&s, &["enroll-batch", "--corpus", corpus.to_str().unwrap()]);
    assert!(ok, "{out}");
    let (ok, out, _) = run(
        &s,
        &["verify-batch", "--corpus", corpus.to_str().unwrap(), "--compare", "--parallel", "4"],
    );
    assert!(ok, "{out}");
    assert!(out.contains("decisions match"));
}
