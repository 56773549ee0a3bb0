//! A low-power terminal verifies locally and reports only its decision.
//! The report carries an HMAC over terminal, user, decision and nonce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigaccess::security::terminal::{compute_mac, mac_message, Decision, TerminalIdentity};
use sigaccess::server::service::AttestRequest;
use sigaccess::tooling::corpus::SyntheticUserSpec;
use sigaccess::{AccessService, SystemConfig};

fn report(t: &TerminalIdentity, user: &str, decision: Decision, nonce: &str) -> AttestRequest {
    let tag = compute_mac(&t.shared_secret, &mac_message(&t.terminal_id, user, decision, nonce));
    AttestRequest {
        terminal_id: t.terminal_id.clone(),
        username: user.into(),
        decision,
        mac: hex::encode(tag),
        nonce: nonce.into(),
    }
}

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let svc = AccessService::builder(SystemConfig::test_in(dir.path()), "admin").open()?;
    let pw = svc.authorize(Some("admin"), "erik", None)?.temp_password;
    let spec = SyntheticUserSpec::from_seed(5, 4, 0.03, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let n = svc.issue_challenge("erik")?.nonce;
        svc.submit_enrollment_sample(None, "erik", &pw, &n, spec.genuine(&mut rng, 150, 10))?;
    }

    let lobby = TerminalIdentity::generate("lobby-door");
    svc.register_terminal(lobby.clone())?;

    let n = svc.issue_challenge("erik")?.nonce;
    let ok = svc.edge_attest(&report(&lobby, "erik", Decision::Accept, &n))?;
    println!("valid accept report -> {:?}", ok.decision);

    let n = svc.issue_challenge("erik")?.nonce;
    let mut tampered = report(&lobby, "erik", Decision::Reject, &n);
    tampered.decision = Decision::Accept;
    println!("reject flipped to accept -> {}", svc.edge_attest(&tampered).unwrap_err().code());

    let rogue = TerminalIdentity::generate("rogue");
    let n = svc.issue_challenge("erik")?.nonce;
    let e = svc.edge_attest(&report(&rogue, "erik", Decision::Accept, &n)).unwrap_err();
    println!("unregistered terminal -> {}", e.code());

    for i in 1..=svc.config().max_failures {
        let n = svc.issue_challenge("erik")?.nonce;
        let r = svc.edge_attest(&report(&lobby, "erik", Decision::Reject, &n))?;
        println!("attested reject {i}: failures={} blocked={}", r.consecutive_failures, r.blocked);
    }
    Ok(())
}
