//! Full enrollment and verification against an in-process service.
//!
//! The service runs on a temporary directory with a manual clock, so the
//! one-day gap between the two enrollment sessions passes instantly.

use std::sync::Arc;

use chrono::Duration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigaccess::tooling::corpus::SyntheticUserSpec;
use sigaccess::{AccessService, ManualClock, SystemConfig};

const ADMIN: &str = "example-admin";

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let mut cfg = SystemConfig::test_in(dir.path());
    cfg.min_session_gap_secs = 24 * 3600;
    let clock = Arc::new(ManualClock::default());
    let svc = AccessService::builder(cfg, ADMIN).clock(clock.clone()).open()?;

    let writer = SyntheticUserSpec::from_seed(7, 4, 0.03, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let auth = svc.authorize(Some(ADMIN), "alice", Some("Alice"))?;
    println!("authorized alice, temporary password {}", auth.temp_password);

    for i in 0..5 {
        let nonce = svc.issue_challenge("alice")?.nonce;
        let sample = writer.genuine(&mut rng, 150, 10);
        match svc.submit_enrollment_sample(None, "alice", &auth.temp_password, &nonce, sample) {
            Ok(p) => println!("sample {i}: {:?}, {} collected", p.phase, p.collected),
            Err(e) if e.code() == "SessionGapNotElapsed" => unreachable!(),
            Err(e) => return Err(e.into()),
        }
        if i == 2 {
            let nonce = svc.issue_challenge("alice")?.nonce;
            let early = writer.genuine(&mut rng, 150, 10);
            let e = svc
                .submit_enrollment_sample(None, "alice", &auth.temp_password, &nonce, early)
                .unwrap_err();
            println!("fourth sample right away: {}", e.code());
            clock.advance(Duration::hours(24));
        }
    }

    let model = svc.user_document("alice").unwrap().model.unwrap();
    println!("model: {} references, mu_ref {:.4}", model.refs.len(), model.mu_ref);

    let threshold = svc.config().accept_threshold;
    for (label, sample) in [
        ("genuine", writer.genuine(&mut rng, 150, 10)),
        ("skilled forgery", writer.skilled_forgery(&mut rng, 150, 10)),
    ] {
        let nonce = svc.issue_challenge("alice")?.nonce;
        let r = svc.verify("alice", &nonce, sample)?;
        println!(
            "{label:<16} score {:.3} (threshold {threshold}) -> {}",
            r.score,
            if r.accepted { "accept" } else { "reject" }
        );
    }
    Ok(())
}
