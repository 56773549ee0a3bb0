//! Turns a hand-written capture into the feature sequence the matcher sees.
//!
//! Run with `cargo run --example preprocess_features`.

use sigaccess::signal::{extract_features, parse_sample, preprocess, CHANNEL_NAMES};
use sigaccess::{RawCapture, SignaturePoint};

fn main() -> anyhow::Result<()> {
    // A short "L" stroke, a pen lift, then a dot. The pen-up point is dropped.
    let pts = [
        (0, 100.0, 100.0, 0.4, true),
        (10, 100.0, 140.0, 0.6, true),
        (20, 100.0, 180.0, 0.7, true),
        (30, 130.0, 180.0, 0.6, true),
        (40, 160.0, 180.0, 0.3, true),
        (50, 170.0, 150.0, 0.0, false),
        (60, 180.0, 120.0, 0.5, true),
        (70, 181.0, 121.0, 0.5, true),
    ];
    let raw = RawCapture {
        device_id: "demo-pad".into(),
        points: pts
            .iter()
            .map(|&(t, x, y, p, down)| SignaturePoint::new(t, x, y, p, down))
            .collect(),
    };

    let sample = parse_sample(raw)?;
    println!("{} pen-down points after parsing", sample.points().len());

    let traj = preprocess(&sample, 16)?;
    println!("\nnormalized trajectory (centered, max |coord| = 1):");
    for i in 0..traj.len() {
        println!("  {:2}  x {:+.3}  y {:+.3}  p {:.3}", i, traj.x[i], traj.y[i], traj.p[i]);
    }

    let feats = extract_features(&traj);
    println!("\nfeature channels, {} frames each:", feats.len());
    for (c, name) in CHANNEL_NAMES.iter().enumerate() {
        let col = feats.channel(c);
        let head: Vec<String> = col.iter().take(4).map(|v| format!("{v:+.2}")).collect();
        println!("  {name:<8} {} ...", head.join(" "));
    }
    Ok(())
}
