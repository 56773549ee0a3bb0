use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sigaccess::server::http;
use sigaccess::tooling::client::{verify_body, ApiClient};
use sigaccess::tooling::corpus::SyntheticUserSpec;
use sigaccess::{AccessService, SystemConfig};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let svc = Arc::new(AccessService::builder(SystemConfig::test_in(dir.path()), "admin").open()?);
    let server = http::spawn(Arc::clone(&svc), "127.0.0.1:0").await?;
    let client = ApiClient::new(server.base_url()).with_admin_token("admin");

    let spec = SyntheticUserSpec::from_seed(3, 4, 0.03, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pw = client.authorize("carla", None).await?.temp_password;
    for _ in 0..5 {
        let n = client.challenge("carla").await?.nonce;
        client.enroll("carla", &pw, &n, &spec.genuine(&mut rng, 150, 10)).await?;
    }

    // Record a successful request off the wire, then send the same bytes again.
    let nonce = client.challenge("carla").await?.nonce;
    let body = serde_json::to_vec(&verify_body("carla", &nonce, &spec.genuine(&mut rng, 150, 10)))?;
    let first = client.post_raw("/api/v1/verify", body.clone()).await?;
    let second = client.post_raw("/api/v1/verify", body).await?;
    println!("original  -> HTTP {}", first.status);
    println!("replayed  -> HTTP {} {:?}", second.status, second.error_code());

    // A nonce is also bound to the user it was issued for.
    client.authorize("dmitri", None).await?;
    let foreign = client.challenge("dmitri").await?.nonce;
    let e = client
        .verify("carla", &foreign, &spec.genuine(&mut rng, 150, 10))
        .await
        .unwrap_err();
    println!("nonce of another user -> {}", e.code().unwrap_or("?"));

    let attacks: Vec<_> = client
        .transactions(50)
        .await?
        .into_iter()
        .filter(|r| r.kind == sigaccess::server::txlog::TxKind::AttackDetected)
        .collect();
    for r in &attacks {
        println!("logged: #{} {:?} {}", r.seq, r.outcome, r.detail);
    }
    server.stop().await?;
    Ok(())
}
