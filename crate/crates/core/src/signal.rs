//! Signature capture parsing, normalization and feature extraction.
//!
//! A raw capture goes through three pure stages:
//!
//! 1. [`parse_sample`] validates the wire-format point list.
//! 2. [`preprocess`] drops pen-up points, resamples uniformly in time,
//!    removes the centroid and scales so the largest absolute coordinate is 1.
//! 3. [`extract_features`] derives the seven per-step channels and z-scores
//!    each of them over the sequence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of points a trajectory is resampled to.
pub const DEFAULT_RESAMPLE_LEN: usize = 256;

/// Smallest accepted resample length.
pub const MIN_RESAMPLE_LEN: usize = 8;

/// Number of feature channels per time step.
pub const FEATURE_CHANNELS: usize = 7;

/// Channel names in storage order. Versioned together with the model format.
pub const CHANNEL_NAMES: [&str; FEATURE_CHANNELS] =
    ["x", "y", "p", "dx", "dy", "speed", "angle"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("sample has fewer than 2 pen-down points")]
    EmptySample,
    #[error("timestamps are not strictly increasing at point {index}")]
    NonMonotonicTime { index: usize },
    #[error("pressure out of [0,1] at point {index}")]
    PressureOutOfRange { index: usize },
    #[error("non-finite coordinate at point {index}")]
    NonFiniteCoordinate { index: usize },
    #[error("sample has zero spatial extent")]
    DegenerateSample,
    #[error("resample length {0} is below the minimum of {MIN_RESAMPLE_LEN}")]
    ResampleTooShort(usize),
    #[error("feature sequence is malformed: {0}")]
    MalformedFeatures(&'static str),
}

impl SampleError {
    /// Stable error code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            SampleError::EmptySample => "EmptySample",
            SampleError::NonMonotonicTime { .. } => "NonMonotonicTime",
            SampleError::PressureOutOfRange { .. } => "PressureOutOfRange",
            SampleError::NonFiniteCoordinate { .. } => "NonFiniteCoordinate",
            SampleError::DegenerateSample => "DegenerateSample",
            SampleError::ResampleTooShort(_) => "ResampleTooShort",
            SampleError::MalformedFeatures(_) => "MalformedFeatures",
        }
    }
}

/// One captured pen event, as it appears on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignaturePoint {
    /// Milliseconds since capture start.
    pub t: u64,
    pub x: f64,
    pub y: f64,
    /// Pressure in `[0, 1]`.
    pub p: f64,
    #[serde(rename = "pen")]
    pub pen_down: bool,
}

impl SignaturePoint {
    pub fn new(t: u64, x: f64, y: f64, p: f64, pen_down: bool) -> Self {
        Self {
            t,
            x,
            y,
            p,
            pen_down,
        }
    }
}

/// Wire representation of a capture: unvalidated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RawCapture {
    #[serde(default)]
    pub device_id: String,
    pub points: Vec<SignaturePoint>,
}

/// A validated capture. Construct through [`parse_sample`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignatureSample {
    points: Vec<SignaturePoint>,
    device_id: String,
}

impl SignatureSample {
    pub fn points(&self) -> &[SignaturePoint] {
        &self.points
    }

    pub fn device_id(&self) -> &str {
        &self.device_id
    }

    /// Back to the wire form. `parse_sample(s.to_raw())` returns `s`.
    pub fn to_raw(&self) -> RawCapture {
        RawCapture {
            device_id: self.device_id.clone(),
            points: self.points.clone(),
        }
    }
}

impl<'de> Deserialize<'de> for SignatureSample {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawCapture::deserialize(deserializer)?;
        parse_sample(raw).map_err(serde::de::Error::custom)
    }
}

/// Validates a wire capture.
pub fn parse_sample(raw: RawCapture) -> Result<SignatureSample, SampleError> {
    let mut prev_t: Option<u64> = None;
    let mut pen_down = 0usize;
    for (index, pt) in raw.points.iter().enumerate() {
        if let Some(prev) = prev_t {
            if pt.t <= prev {
                return Err(SampleError::NonMonotonicTime { index });
            }
        }
        prev_t = Some(pt.t);
        if !pt.x.is_finite() || !pt.y.is_finite() {
            return Err(SampleError::NonFiniteCoordinate { index });
        }
        if !(0.0..=1.0).contains(&pt.p) {
            return Err(SampleError::PressureOutOfRange { index });
        }
        if pt.pen_down {
            pen_down += 1;
        }
    }
    if pen_down < 2 {
        return Err(SampleError::EmptySample);
    }
    Ok(SignatureSample {
        points: raw.points,
        device_id: raw.device_id,
    })
}

/// A resampled, centered and scaled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTrajectory {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
}

impl NormalizedTrajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Resamples the pen-down part of `sample` to `n` points uniform in time,
/// moves the centroid to the origin and scales isotropically so that the
/// largest absolute coordinate is 1. Pressure is interpolated but otherwise
/// left untouched.
pub fn preprocess(sample: &SignatureSample, n: usize) -> Result<NormalizedTrajectory, SampleError> {
    if n < MIN_RESAMPLE_LEN {
        return Err(SampleError::ResampleTooShort(n));
    }
    let down: Vec<&SignaturePoint> = sample.points.iter().filter(|p| p.pen_down).collect();
    if down.len() < 2 {
        return Err(SampleError::EmptySample);
    }

    let (min_x, max_x) = min_max(down.iter().map(|p| p.x));
    let (min_y, max_y) = min_max(down.iter().map(|p| p.y));
    if max_x == min_x && max_y == min_y {
        return Err(SampleError::DegenerateSample);
    }

    let t0 = down[0].t as f64;
    let t1 = down[down.len() - 1].t as f64;
    let span = t1 - t0;

    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let t = if k == n - 1 {
            t1
        } else {
            t0 + span * (k as f64) / ((n - 1) as f64)
        };
        while seg + 2 < down.len() && (down[seg + 1].t as f64) < t {
            seg += 1;
        }
        let a = down[seg];
        let b = down[seg + 1];
        let (ta, tb) = (a.t as f64, b.t as f64);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        x.push(a.x + (b.x - a.x) * w);
        y.push(a.y + (b.y - a.y) * w);
        p.push(a.p + (b.p - a.p) * w);
    }

    let cx = mean(&x);
    let cy = mean(&y);
    x.iter_mut().for_each(|v| *v -= cx);
    y.iter_mut().for_each(|v| *v -= cy);

    let extent = x
        .iter()
        .chain(y.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if extent == 0.0 || !extent.is_finite() {
        return Err(SampleError::DegenerateSample);
    }
    x.iter_mut().for_each(|v| *v /= extent);
    y.iter_mut().for_each(|v| *v /= extent);

    Ok(NormalizedTrajectory { x, y, p })
}

/// Multi-channel time series, stored frame-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureSeqRepr", into = "FeatureSeqRepr")]
pub struct FeatureSeq {
    channels: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FeatureSeqRepr {
    channels: usize,
    frames: Vec<Vec<f64>>,
}

impl TryFrom<FeatureSeqRepr> for FeatureSeq {
    type Error = SampleError;

    fn try_from(r: FeatureSeqRepr) -> Result<Self, Self::Error> {
        let seq = FeatureSeq::from_frames(r.frames)?;
        if seq.channels != r.channels {
            return Err(SampleError::MalformedFeatures("channel count mismatch"));
        }
        Ok(seq)
    }
}

impl From<FeatureSeq> for FeatureSeqRepr {
    fn from(s: FeatureSeq) -> Self {
        FeatureSeqRepr {
            channels: s.channels,
            frames: s.frames().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl FeatureSeq {
    /// Builds a sequence from per-step frames. All frames must have the same
    /// non-zero width and there must be at least one frame.
    pub fn from_frames<I, F>(frames: I) -> Result<Self, SampleError>
    where
        I: IntoIterator<Item = F>,
        F: AsRef<[f64]>,
    {
        let mut channels = None;
        let mut data = Vec::new();
        for f in frames {
            let f = f.as_ref();
            match channels {
                None => channels = Some(f.len()),
                Some(c) if c != f.len() => {
                    return Err(SampleError::MalformedFeatures("ragged frames"))
                }
                _ => {}
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(SampleError::MalformedFeatures("non-finite value"));
            }
            data.extend_from_slice(f);
        }
        match channels {
            None => Err(SampleError::MalformedFeatures("no frames")),
            Some(0) => Err(SampleError::MalformedFeatures("zero channels")),
            Some(channels) => Ok(Self { channels, data }),
        }
    }

    /// Single-channel convenience constructor.
    pub fn from_scalars(values: &[f64]) -> Result<Self, SampleError> {
        Self::from_frames(values.iter().map(std::slice::from_ref))
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.data[i * self.channels..(i + 1) * self.channels]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.channels)
    }

    /// Copies channel `c` out as a contiguous vector.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.frames().map(|f| f[c]).collect()
    }
}

/// Derives the seven feature channels and z-scores each one.
pub fn extract_features(traj: &NormalizedTrajectory) -> FeatureSeq {
    let n = traj.len();
    let dx = forward_diff(&traj.x);
    let dy = forward_diff(&traj.y);
    let speed: Vec<f64> = dx.iter().zip(&dy).map(|(a, b)| a.hypot(*b)).collect();
    let angle = unwrap_angles(dx.iter().zip(&dy).map(|(a, b)| b.atan2(*a)));

    let mut columns = [
        traj.x.clone(),
        traj.y.clone(),
        traj.p.clone(),
        dx,
        dy,
        speed,
        angle,
    ];
    for col in columns.iter_mut() {
        zscore_in_place(col);
    }

    let mut data = Vec::with_capacity(n * FEATURE_CHANNELS);
    for i in 0..n {
        data.extend(columns.iter().map(|c| c[i]));
    }
    FeatureSeq {
        channels: FEATURE_CHANNELS,
        data,
    }
}

/// Full pipeline from a validated sample to a feature sequence.
pub fn featurize(sample: &SignatureSample, n: usize) -> Result<FeatureSeq, SampleError> {
    preprocess(sample, n).map(|t| extract_features(&t))
}

/// Population z-score. Channels whose spread is negligible relative to their
/// magnitude are mapped to all zeros.
pub fn zscore_in_place(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    let sd = var.sqrt();
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    // Also catches a NaN spread.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(sd > 1e-9 * scale.max(1.0)) {
        values.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    values.iter_mut().for_each(|v| *v = (*v - m) / sd);
}

fn forward_diff(v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let last = out.last().copied().unwrap_or(0.0);
    out.push(last);
    out
}

fn unwrap_angles(raw: impl Iterator<Item = f64>) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out: Vec<f64> = Vec::new();
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for a in raw {
        if let Some(p) = prev {
            let d = a - p;
            if d > PI {
                offset -= TAU;
            } else if d < -PI {
                offset += TAU;
            }
        }
        prev = Some(a);
        out.push(a + offset);
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}
