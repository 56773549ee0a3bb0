//! Generates the default synthetic corpus and sweeps the threshold grid.
//!
//! Pass a directory to also write the corpus and the JSON report there:
//! `cargo run --release --example synthetic_eval -- /tmp/out`.

use sigaccess::tooling::corpus::{generate, CorpusParams};
use sigaccess::tooling::eval::{eval, EvalOptions};

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from);
    let params = CorpusParams {
        n_users: std::env::var("USERS").ok().and_then(|v| v.parse().ok()).unwrap_or(50),
        ..CorpusParams::default()
    };
    let corpus = generate(&params)?;
    println!(
        "{} users, {} genuine and {} forgeries each",
        corpus.users.len(),
        params.genuines_per_user,
        params.forgeries_per_user
    );

    let report = eval(&corpus, &EvalOptions::default())?;
    println!("{}", report.summary());

    if let Some(dir) = out {
        corpus.write(&dir.join("corpus"))?;
        report.write_json(&dir.join("report.json"))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
