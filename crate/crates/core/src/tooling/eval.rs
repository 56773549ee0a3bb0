//! FAR/FRR/EER sweep over a corpus, computed in process.
//!
//! The first `enroll_count` genuine samples of each user build the model.
//! Every remaining genuine sample is a genuine trial against its own model and
//! every forgery is an impostor trial against the victim's model. Models are
//! frozen for the whole run.

use std::path::Path;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::corpus::{Corpus, ForgeryKind};
use crate::matcher::{build_model, score, MatchError, DEFAULT_EPSILON};
use crate::signal::{featurize, parse_sample, RawCapture, SampleError, DEFAULT_RESAMPLE_LEN};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("user {user} has {got} genuine samples, need more than {need}")]
    InsufficientSamples { user: String, got: usize, need: usize },
    #[error("sample {file} of {user}: {source}")]
    Sample {
        user: String,
        file: String,
        #[source]
        source: SampleError,
    },
    #[error(transparent)]
    Model(#[from] MatchError),
    #[error("threshold grid must be non-empty, finite and ascending")]
    BadGrid,
    #[error("cannot write report {0}: {1}")]
    Io(String, std::io::Error),
}

/// Inclusive, evenly spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 5.0,
            step: 0.01,
        }
    }
}

impl ThresholdGrid {
    pub fn values(&self) -> Result<Vec<f64>, EvalError> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step > 0.0)
            || self.stop < self.start
        {
            return Err(EvalError::BadGrid);
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    Genuine,
    SkilledForgery,
    RandomForgery,
}

/// One scored probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub user: String,
    pub probe: String,
    pub kind: TrialKind,
    pub normalized_score: f64,
}

impl Trial {
    pub fn is_genuine(&self) -> bool {
        self.kind == TrialKind::Genuine
    }

    pub fn accepted(&self, threshold: f64) -> bool {
        self.normalized_score <= threshold
    }
}

/// Error rates at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub thresholds: Vec<f64>,
    pub far: Vec<f64>,
    pub frr: Vec<f64>,
    pub eer: f64,
    pub eer_threshold: f64,
    pub genuine_trials: usize,
    pub impostor_trials: usize,
    pub operating_point: OperatingPoint,
    pub elapsed_secs: f64,
    pub trials: Vec<Trial>,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub enroll_count: usize,
    pub resample_len: usize,
    pub grid: ThresholdGrid,
    /// Threshold reported as the operating point.
    pub threshold: f64,
    pub epsilon: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            enroll_count: 5,
            resample_len: DEFAULT_RESAMPLE_LEN,
            grid: ThresholdGrid::default(),
            threshold: 1.6,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Stable probe label used to pair in-process and over-HTTP decisions.
pub fn probe_label(kind: TrialKind, index: usize) -> String {
    match kind {
        TrialKind::Genuine => format!("genuine_{index:02}"),
        _ => format!("forgery_{index:02}"),
    }
}

fn features(
    user: &str,
    file: String,
    raw: &RawCapture,
    n: usize,
) -> Result<crate::signal::FeatureSeq, EvalError> {
    parse_sample(raw.clone())
        .and_then(|s| featurize(&s, n))
        .map_err(|source| EvalError::Sample {
            user: user.to_string(),
            file,
            source,
        })
}

/// Scores every trial of the corpus. Order: users in corpus order, genuine
/// probes then forgeries.
pub fn score_trials(corpus: &Corpus, opts: &EvalOptions) -> Result<Vec<Trial>, EvalError> {
    let epoch = DateTime::<Utc>::UNIX_EPOCH;
    let mut trials = Vec::new();
    for u in &corpus.users {
        if u.genuine.len() <= opts.enroll_count {
            return Err(EvalError::InsufficientSamples {
                user: u.id.clone(),
                got: u.genuine.len(),
                need: opts.enroll_count,
            });
        }
        let refs = u.genuine[..opts.enroll_count]
            .iter()
            .enumerate()
            .map(|(i, s)| features(&u.id, probe_label(TrialKind::Genuine, i), s, opts.resample_len))
            .collect::<Result<Vec<_>, _>>()?;
        let model = build_model(refs, opts.enroll_count, epoch)?;
        let mut push = |kind: TrialKind, label: String, raw: &RawCapture| -> Result<(), EvalError> {
            let f = features(&u.id, label.clone(), raw, opts.resample_len)?;
            let s = score(&model, &f, opts.threshold, opts.epsilon)?;
            trials.push(Trial {
                user: u.id.clone(),
                probe: label,
                kind,
                normalized_score: s.normalized,
            });
            Ok(())
        };
        for (i, g) in u.genuine.iter().enumerate().skip(opts.enroll_count) {
            push(TrialKind::Genuine, probe_label(TrialKind::Genuine, i), g)?;
        }
        for (i, f) in u.forgeries.iter().enumerate() {
            let kind = match f.kind {
                ForgeryKind::Skilled => TrialKind::SkilledForgery,
                ForgeryKind::Random => TrialKind::RandomForgery,
            };
            push(kind, probe_label(kind, i), &f.sample)?;
        }
    }
    Ok(trials)
}

/// FAR and FRR of `trials` at `threshold`. A class with no trials has rate 0.
pub fn rates(trials: &[Trial], threshold: f64) -> OperatingPoint {
    let (mut g, mut fr, mut i, mut fa) = (0usize, 0usize, 0usize, 0usize);
    for t in trials {
        if t.is_genuine() {
            g += 1;
            fr += usize::from(!t.accepted(threshold));
        } else {
            i += 1;
            fa += usize::from(t.accepted(threshold));
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    OperatingPoint {
        threshold,
        far: ratio(fa, i),
        frr: ratio(fr, g),
    }
}

/// Crossing of the FAR and FRR curves, linearly interpolated between the two
/// bracketing grid points. Without a sign change, the grid point with the
/// smallest gap is used and the EER is the mean of the two rates there.
pub fn equal_error_rate(thresholds: &[f64], far: &[f64], frr: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = far.iter().zip(frr).map(|(a, r)| a - r).collect();
    for i in 0..d.len() {
        if d[i] == 0.0 {
            return (far[i], thresholds[i]);
        }
        if i > 0 && d[i - 1] < 0.0 && d[i] > 0.0 {
            let a = -d[i - 1] / (d[i] - d[i - 1]);
            let eer = far[i - 1] + a * (far[i] - far[i - 1]);
            let t = thresholds[i - 1] + a * (thresholds[i] - thresholds[i - 1]);
            return (eer, t);
        }
    }
    let best = (0..d.len())
        .min_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()))
        .expect("non-empty grid");
    ((far[best] + frr[best]) / 2.0, thresholds[best])
}

pub fn report_from_trials(
    trials: Vec<Trial>,
    opts: &EvalOptions,
    elapsed: Duration,
) -> Result<EvalReport, EvalError> {
    let thresholds = opts.grid.values()?;
    let points: Vec<OperatingPoint> = thresholds.iter().map(|&t| rates(&trials, t)).collect();
    let far: Vec<f64> = points.iter().map(|p| p.far).collect();
    let frr: Vec<f64> = points.iter().map(|p| p.frr).collect();
    let (eer, eer_threshold) = equal_error_rate(&thresholds, &far, &frr);
    let genuine_trials = trials.iter().filter(|t| t.is_genuine()).count();
    Ok(EvalReport {
        operating_point: rates(&trials, opts.threshold),
        impostor_trials: trials.len() - genuine_trials,
        genuine_trials,
        thresholds,
        far,
        frr,
        eer,
        eer_threshold,
        elapsed_secs: elapsed.as_secs_f64(),
        trials,
    })
}

pub fn eval(corpus: &Corpus, opts: &EvalOptions) -> Result<EvalReport, EvalError> {
    let start = Instant::now();
    opts.grid.values()?;
    let trials = score_trials(corpus, opts)?;
    report_from_trials(trials, opts, start.elapsed())
}

impl EvalReport {
    pub fn eer_line(&self) -> String {
        format!("EER {:.4} at threshold {:.3}", self.eer, self.eer_threshold)
    }

    /// Plain-text summary with a coarse FAR/FRR table.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "genuine trials {}, impostor trials {}, {:.1}s\n",
            self.genuine_trials, self.impostor_trials, self.elapsed_secs
        );
        s.push_str("threshold      FAR      FRR\n");
        let stride = (self.thresholds.len() / 20).max(1);
        for i in (0..self.thresholds.len()).step_by(stride) {
            s.push_str(&format!(
                "{:>9.2} {:>8.4} {:>8.4}\n",
                self.thresholds[i], self.far[i], self.frr[i]
            ));
        }
        let op = self.operating_point;
        s.push_str(&format!(
            "at threshold {:.3}: FAR {:.4} FRR {:.4}\n",
            op.threshold, op.far, op.frr
        ));
        s.push_str(&self.eer_line());
        s
    }

    pub fn write_json(&self, path: &Path) -> Result<(), EvalError> {
        let bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        std::fs::write(path, bytes).map_err(|e| EvalError::Io(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(kind: TrialKind, s: f64) -> Trial {
        Trial {
            user: "u".into(),
            probe: "p".into(),
            kind,
            normalized_score: s,
        }
    }

    #[test]
    fn grid_is_inclusive() {
        let v = ThresholdGrid::default().values().unwrap();
        assert_eq!(v.len(), 501);
        assert_eq!(v[0], 0.0);
        assert!((v[500] - 5.0).abs() < 1e-12);
        let bad = ThresholdGrid {
            start: 1.0,
            stop: 0.0,
            step: 0.1,
        };
        assert!(bad.values().is_err());
    }

    #[test]
    fn rates_count_boundary_as_accept() {
        let t = vec![
            trial(TrialKind::Genuine, 1.0),
            trial(TrialKind::Genuine, 2.0),
            trial(TrialKind::SkilledForgery, 1.0),
            trial(TrialKind::SkilledForgery, 3.0),
        ];
        let p = rates(&t, 1.0);
        assert_eq!((p.far, p.frr), (0.5, 0.5));
        let p = rates(&t, 0.5);
        assert_eq!((p.far, p.frr), (0.0, 1.0));
    }

    #[test]
    fn eer_interpolates_between_bracketing_points() {
        // d = -0.4 at 1.0 and +0.2 at 2.0, so the crossing is 2/3 of the way.
        let (eer, t) = equal_error_rate(&[1.0, 2.0], &[0.1, 0.4], &[0.5, 0.2]);
        assert!((t - (1.0 + 2.0 / 3.0)).abs() < 1e-12);
        assert!((eer - 0.3).abs() < 1e-12);
    }

    #[test]
    fn eer_exact_hit() {
        let (eer, t) = equal_error_rate(&[0.0, 1.0, 2.0], &[0.0, 0.1, 0.5], &[1.0, 0.1, 0.0]);
        assert_eq!((eer, t), (0.1, 1.0));
    }
}
