//! Elastic matching of feature sequences and the per-user reference model.
//!
//! The model keeps the enrollment references verbatim and scores a probe by
//! its smallest DTW distance to any reference, divided by the mean pairwise
//! distance among the references (target-dependent normalization).

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::FeatureSeq;

/// Format tag written into every persisted model.
pub const MODEL_VERSION: &str = "dtw-refset/v1";

/// Guard added to `mu_ref` before dividing.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("channel count mismatch: {left} vs {right}")]
    ChannelMismatch { left: usize, right: usize },
    #[error("expected {expected} reference signatures, got {got}")]
    WrongReferenceCount { expected: usize, got: usize },
}

/// Unnormalized DTW cost: the smallest sum of per-step Euclidean distances
/// over monotone alignment paths from `(0,0)` to `(len(a)-1, len(b)-1)` with
/// steps `(1,0)`, `(0,1)`, `(1,1)`.
pub fn dtw_cost(a: &FeatureSeq, b: &FeatureSeq) -> Result<f64, MatchError> {
    if a.channels() != b.channels() {
        return Err(MatchError::ChannelMismatch {
            left: a.channels(),
            right: b.channels(),
        });
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for i in 0..a.len() {
        let fa = a.frame(i);
        for j in 0..m {
            let cost = euclidean(fa, b.frame(j));
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = prev[j];
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                let diag = if j > 0 { prev[j - 1] } else { f64::INFINITY };
                up.min(left).min(diag)
            };
            cur[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

/// DTW cost divided by `len(a) + len(b)`.
pub fn dtw_distance(a: &FeatureSeq, b: &FeatureSeq) -> Result<f64, MatchError> {
    let total = dtw_cost(a, b)?;
    Ok(total / (a.len() + b.len()) as f64)
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-user reference set plus the statistics used to normalize scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    pub version: String,
    /// Oldest first; updates evict from the front.
    pub refs: Vec<FeatureSeq>,
    pub mu_ref: f64,
    pub sigma_ref: f64,
    pub updated_at: DateTime<Utc>,
}

impl UserModel {
    pub fn reference_count(&self) -> usize {
        self.refs.len()
    }
}

/// Outcome of scoring one probe against one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub raw_min: f64,
    pub normalized: f64,
    pub accepted: bool,
}

/// Mean and population standard deviation of all pairwise distances.
pub fn pairwise_stats(refs: &[FeatureSeq]) -> Result<(f64, f64), MatchError> {
    let mut d = Vec::with_capacity(refs.len() * refs.len().saturating_sub(1) / 2);
    for i in 0..refs.len() {
        for j in (i + 1)..refs.len() {
            d.push(dtw_distance(&refs[i], &refs[j])?);
        }
    }
    if d.is_empty() {
        return Ok((0.0, 0.0));
    }
    let n = d.len() as f64;
    let mu = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    Ok((mu, var.sqrt()))
}

pub fn build_model(
    refs: Vec<FeatureSeq>,
    required: usize,
    now: DateTime<Utc>,
) -> Result<UserModel, MatchError> {
    if refs.len() != required {
        return Err(MatchError::WrongReferenceCount {
            expected: required,
            got: refs.len(),
        });
    }
    let (mu_ref, sigma_ref) = pairwise_stats(&refs)?;
    Ok(UserModel {
        version: MODEL_VERSION.to_string(),
        refs,
        mu_ref,
        sigma_ref,
        updated_at: now,
    })
}

/// Scores `probe` against `model`. `accepted` is `normalized <= threshold`.
pub fn score(
    model: &UserModel,
    probe: &FeatureSeq,
    threshold: f64,
    epsilon: f64,
) -> Result<MatchScore, MatchError> {
    let mut raw_min = f64::INFINITY;
    for r in &model.refs {
        raw_min = raw_min.min(dtw_distance(probe, r)?);
    }
    let normalized = raw_min / (model.mu_ref + epsilon);
    Ok(MatchScore {
        raw_min,
        normalized,
        accepted: normalized <= threshold,
    })
}

/// FIFO update: drops the oldest reference, appends `accepted_probe` and
/// recomputes the pairwise statistics.
pub fn update_model(
    model: &UserModel,
    accepted_probe: FeatureSeq,
    now: DateTime<Utc>,
) -> Result<UserModel, MatchError> {
    let mut refs = model.refs.clone();
    if !refs.is_empty() {
        refs.remove(0);
    }
    refs.push(accepted_probe);
    let (mu_ref, sigma_ref) = pairwise_stats(&refs)?;
    Ok(UserModel {
        version: model.version.clone(),
        refs,
        mu_ref,
        sigma_ref,
        updated_at: now,
    })
}

/// Decision back end used by the server. The DTW reference-set matcher is the
/// only production implementation; other implementations exist to simulate
/// compromised components.
pub trait Matcher: Send + Sync {
    fn score(
        &self,
        model: &UserModel,
        probe: &FeatureSeq,
        threshold: f64,
    ) -> Result<MatchScore, MatchError>;
}

#[derive(Debug, Clone, Copy)]
pub struct DtwMatcher {
    pub epsilon: f64,
}

impl Default for DtwMatcher {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl Matcher for DtwMatcher {
    fn score(
        &self,
        model: &UserModel,
        probe: &FeatureSeq,
        threshold: f64,
    ) -> Result<MatchScore, MatchError> {
        score(model, probe, threshold, self.epsilon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> FeatureSeq {
        FeatureSeq::from_scalars(v).unwrap()
    }

    fn now() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    #[test]
    fn worked_case_one_dimensional() {
        let a = seq(&[0.0, 1.0, 2.0]);
        let b = seq(&[0.0, 2.0]);
        assert_eq!(dtw_cost(&a, &b).unwrap(), 1.0);
        assert!((dtw_distance(&a, &b).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn identity_is_zero() {
        let a = seq(&[0.3, -1.0, 2.5, 0.0]);
        assert_eq!(dtw_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn channel_mismatch() {
        let a = seq(&[0.0, 1.0]);
        let b = FeatureSeq::from_frames([[0.0, 1.0]]).unwrap();
        assert_eq!(
            dtw_distance(&a, &b).unwrap_err(),
            MatchError::ChannelMismatch { left: 1, right: 2 }
        );
    }

    #[test]
    fn identical_refs_give_zero_stats() {
        let r = seq(&[1.0, 2.0, 3.0]);
        let m = build_model(vec![r.clone(); 5], 5, now()).unwrap();
        assert_eq!(m.mu_ref, 0.0);
        assert_eq!(m.sigma_ref, 0.0);
        assert_eq!(m.version, MODEL_VERSION);
    }

    #[test]
    fn wrong_reference_count() {
        let r = seq(&[1.0, 2.0, 3.0]);
        assert_eq!(
            build_model(vec![r; 4], 5, now()).unwrap_err(),
            MatchError::WrongReferenceCount {
                expected: 5,
                got: 4
            }
        );
    }

    #[test]
    fn identical_probe_scores_zero() {
        let refs: Vec<_> = (0..5)
            .map(|k| seq(&[0.0, k as f64, 1.0, -(k as f64)]))
            .collect();
        let m = build_model(refs.clone(), 5, now()).unwrap();
        let s = score(&m, &refs[3], 1e-3, DEFAULT_EPSILON).unwrap();
        assert_eq!(s.raw_min, 0.0);
        assert_eq!(s.normalized, 0.0);
        assert!(s.accepted);
    }

    #[test]
    fn degenerate_model_rejects_nonzero_probe() {
        let m = build_model(vec![seq(&[1.0, 2.0]); 5], 5, now()).unwrap();
        let s = score(&m, &seq(&[1.0, 2.5]), 1.6, DEFAULT_EPSILON).unwrap();
        assert!(s.raw_min > 0.0);
        assert!((s.normalized - s.raw_min / DEFAULT_EPSILON).abs() < 1e-6);
        assert!(!s.accepted);
    }

    #[test]
    fn fifo_update_order() {
        let refs: Vec<_> = (0..5).map(|k| seq(&[k as f64, 0.0])).collect();
        let m = build_model(refs.clone(), 5, now()).unwrap();
        let p1 = seq(&[10.0, 0.0]);
        let p2 = seq(&[11.0, 0.0]);
        let m1 = update_model(&m, p1.clone(), now()).unwrap();
        assert_eq!(m1.refs, [&refs[1..], std::slice::from_ref(&p1)].concat());
        let m2 = update_model(&m1, p2.clone(), now()).unwrap();
        assert_eq!(m2.refs, [&refs[2..], &[p1, p2]].concat());
        assert_eq!(m2.reference_count(), 5);
    }

    #[test]
    fn accepted_iff_below_threshold() {
        let refs: Vec<_> = (0..3).map(|k| seq(&[0.0, k as f64])).collect();
        let m = build_model(refs, 3, now()).unwrap();
        let probe = seq(&[0.0, 0.5]);
        let s = score(&m, &probe, 10.0, DEFAULT_EPSILON).unwrap();
        let at = score(&m, &probe, s.normalized, DEFAULT_EPSILON).unwrap();
        assert!(at.accepted);
        let below = score(&m, &probe, s.normalized * 0.999, DEFAULT_EPSILON).unwrap();
        assert!(!below.accepted);
    }
}
