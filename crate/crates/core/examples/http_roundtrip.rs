//! Starts the HTTP server on an ephemeral port and drives it with the client.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigaccess::server::http;
use sigaccess::tooling::client::ApiClient;
use sigaccess::tooling::corpus::SyntheticUserSpec;
use sigaccess::{AccessService, SystemConfig};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let svc = Arc::new(AccessService::builder(SystemConfig::test_in(dir.path()), "admin").open()?);
    let server = http::spawn(svc, "127.0.0.1:0").await?;
    println!("listening on {}", server.base_url());

    let admin = ApiClient::new(server.base_url()).with_admin_token("admin");
    let terminal = ApiClient::new(server.base_url());

    let pw = admin.authorize("bruno", None).await?.temp_password;
    let writer = SyntheticUserSpec::from_seed(11, 4, 0.03, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let nonce = terminal.challenge("bruno").await?.nonce;
        terminal
            .enroll("bruno", &pw, &nonce, &writer.genuine(&mut rng, 150, 10))
            .await?;
    }
    println!("status: {:?}", terminal.enroll_status("bruno").await?.progress.phase);

    let r = terminal
        .verify_fresh("bruno", &writer.genuine(&mut rng, 150, 10))
        .await?;
    println!("verify: accepted={} score={:.3}", r.accepted, r.score);

    let e = admin.unblock("bruno").await.unwrap_err();
    println!("unblock on an active user: {}", e.code().unwrap_or("?"));

    for u in admin.users().await? {
        println!("user {} {:?} failures={} blocked={}", u.name, u.phase, u.consecutive_failures, u.blocked);
    }
    for rec in admin.transactions(5).await? {
        println!("#{:<3} {:<10} {:?} {:?}", rec.seq, rec.username, rec.kind, rec.outcome);
    }
    server.stop().await?;
    Ok(())
}
