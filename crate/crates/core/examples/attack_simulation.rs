//! Runs every scripted attack against a private local server.

use sigaccess::security::attack::{run_attack_scenario, AttackKind, AttackScenario, AttackTarget};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let kinds = [
        AttackKind::SensorDestroy,
        AttackKind::Replay,
        AttackKind::DosFlood,
        AttackKind::TrojanAccept,
        AttackKind::TrojanReject,
    ];
    for kind in kinds {
        let scenario = AttackScenario::standard(kind, kind.default_point())?;
        let report = run_attack_scenario(&scenario, AttackTarget::Local).await?;
        print!("{}", report.render());
    }

    match AttackScenario::standard(AttackKind::TrojanAccept, 3) {
        Err(e) => println!("trojan at point 3: {e}"),
        Ok(_) => println!("trojan at point 3 unexpectedly accepted"),
    }
    Ok(())
}
