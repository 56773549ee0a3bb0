mod common;

use common::mean_sd;
use proptest::prelude::*;
use sigaccess::signal::{
    extract_features, parse_sample, preprocess, RawCapture, SampleError, SignaturePoint,
    FEATURE_CHANNELS,
};

const N: usize = 64;

fn capture() -> impl Strategy<Value = RawCapture> {
    prop::collection::vec(
        (1u64..30, -500.0f64..500.0, -500.0f64..500.0, 0.0f64..=1.0, prop::bool::weighted(0.9)),
        3..80,
    )
    .prop_map(|steps| {
        let mut t = 0;
        let points = steps
            .into_iter()
            .map(|(dt, x, y, p, down)| {
                t += dt;
                SignaturePoint::new(t, x, y, p, down)
            })
            .collect();
        RawCapture {
            device_id: String::new(),
            points,
        }
    })
}

fn transform(raw: &RawCapture, dx: f64, dy: f64, s: f64) -> RawCapture {
    let mut out = raw.clone();
    for p in &mut out.points {
        p.x = p.x * s + dx;
        p.y = p.y * s + dy;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn translation_and_uniform_scale_invariance(
        raw in capture(),
        dx in -1e4f64..1e4,
        dy in -1e4f64..1e4,
        s in 0.01f64..100.0,
    ) {
        let base = parse_sample(raw.clone()).and_then(|x| preprocess(&x, N));
        let moved = parse_sample(transform(&raw, dx, dy, s)).and_then(|x| preprocess(&x, N));
        match (base, moved) {
            (Ok(a), Ok(b)) => {
                for (u, v) in a.x.iter().chain(&a.y).chain(&a.p).zip(b.x.iter().chain(&b.y).chain(&b.p)) {
                    prop_assert!((u - v).abs() <= 1e-9, "{u} vs {v}");
                }
            }
            (Err(e1), Err(e2)) => prop_assert_eq!(e1, e2),
            (a, b) => prop_assert!(false, "diverged: {:?} vs {:?}", a.map(|_| ()), b.map(|_| ())),
        }
    }

    #[test]
    fn normalized_trajectory_is_centered_and_bounded(raw in capture()) {
        let Ok(t) = parse_sample(raw).and_then(|x| preprocess(&x, N)) else { return Ok(()); };
        prop_assert_eq!(t.len(), N);
        let (mx, _) = mean_sd(&t.x);
        let (my, _) = mean_sd(&t.y);
        prop_assert!(mx.abs() < 1e-12 && my.abs() < 1e-12);
        let extent = t.x.iter().chain(&t.y).fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!((extent - 1.0).abs() < 1e-12);
    }

    #[test]
    fn feature_channels_are_zscored(raw in capture()) {
        let Ok(t) = parse_sample(raw).and_then(|x| preprocess(&x, N)) else { return Ok(()); };
        let f = extract_features(&t);
        prop_assert_eq!(f.channels(), FEATURE_CHANNELS);
        prop_assert_eq!(f.len(), N);
        for c in 0..FEATURE_CHANNELS {
            let col = f.channel(c);
            let (m, sd) = mean_sd(&col);
            if col.iter().all(|v| *v == 0.0) {
                continue;
            }
            prop_assert!(m.abs() <= 1e-6, "channel {c} mean {m}");
            prop_assert!((sd - 1.0).abs() <= 1e-6, "channel {c} sd {sd}");
        }
    }
}

#[test]
fn single_pen_down_point_is_empty() {
    let raw = RawCapture {
        device_id: String::new(),
        points: vec![
            SignaturePoint::new(0, 0.0, 0.0, 0.5, true),
            SignaturePoint::new(10, 1.0, 1.0, 0.5, false),
        ],
    };
    assert_eq!(parse_sample(raw).unwrap_err(), SampleError::EmptySample);
}
