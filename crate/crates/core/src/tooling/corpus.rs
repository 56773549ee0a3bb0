//! Deterministic synthetic signature corpus.
//!
//! Each user owns a base curve built from a few harmonics per channel.
//! Genuine samples are the base curve with small jitter on amplitudes,
//! phases, timing and position. Skilled forgeries start from the victim's
//! base curve, distort amplitudes, phases and timing by `forgery_warp`, then
//! receive the same kind of jitter. Random forgeries are another user's
//! genuine sample. Every sample also gets a random placement and size on the
//! tablet, which preprocessing removes.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{RawCapture, SignaturePoint};

pub const MANIFEST_FILE: &str = "manifest.json";

/// 100 Hz for 1.5 s.
pub const DEFAULT_POINTS: usize = 150;
pub const DEFAULT_INTERVAL_MS: u64 = 10;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("invalid corpus parameters: {0}")]
    InvalidParams(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub n_users: usize,
    pub genuines_per_user: usize,
    pub forgeries_per_user: usize,
    #[serde(default)]
    pub random_forgeries_per_user: usize,
    pub master_seed: u64,
    pub n_harmonics: usize,
    pub genuine_jitter: f64,
    pub forgery_warp: f64,
    pub points: usize,
    pub interval_ms: u64,
}

impl Default for CorpusParams {
    /// 50 users with 5 enrollment + 10 genuine probes and 10 skilled
    /// forgeries each.
    fn default() -> Self {
        Self {
            n_users: 50,
            genuines_per_user: 15,
            forgeries_per_user: 10,
            random_forgeries_per_user: 0,
            master_seed: 0x5157_5645_5249_4659,
            n_harmonics: 4,
            genuine_jitter: 0.03,
            forgery_warp: 0.25,
            points: DEFAULT_POINTS,
            interval_ms: DEFAULT_INTERVAL_MS,
        }
    }
}

impl CorpusParams {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: &str| Err(CorpusError::InvalidParams(m.to_string()));
        if self.n_users < 1 {
            return bad("n_users must be at least 1");
        }
        if self.n_harmonics < 1 {
            return bad("n_harmonics must be at least 1");
        }
        if self.points < 2 || self.interval_ms == 0 {
            return bad("need at least 2 points and a positive interval");
        }
        if !(0.0..0.5).contains(&self.genuine_jitter) || !(0.0..1.0).contains(&self.forgery_warp)
        {
            return bad("genuine_jitter must be in [0,0.5) and forgery_warp in [0,1)");
        }
        if self.random_forgeries_per_user > 0 && (self.n_users < 2 || self.genuines_per_user == 0)
        {
            return bad("random forgeries need at least 2 users with genuine samples");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub amplitude: f64,
    pub phase: f64,
}

/// Parameters of one synthetic writer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticUserSpec {
    pub seed: u64,
    pub n_harmonics: usize,
    /// Left-to-right progression of the x channel.
    pub drift: f64,
    pub x: Vec<Harmonic>,
    pub y: Vec<Harmonic>,
    pub p: Vec<Harmonic>,
    pub genuine_jitter: f64,
    pub forgery_warp: f64,
}

impl SyntheticUserSpec {
    pub fn from_seed(seed: u64, n_harmonics: usize, genuine_jitter: f64, forgery_warp: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |lo: f64, hi: f64, decay: f64| -> Vec<Harmonic> {
            (1..=n_harmonics)
                .map(|k| Harmonic {
                    amplitude: rng.random_range(lo..hi) / (k as f64).powf(decay),
                    phase: rng.random_range(0.0..TAU),
                })
                .collect()
        };
        let x = draw(0.3, 1.0, 0.5);
        let y = draw(0.3, 1.0, 0.5);
        let p = draw(0.05, 0.15, 1.0);
        let drift = ChaCha8Rng::seed_from_u64(seed ^ 0xd1f7).random_range(1.0..3.0);
        Self {
            seed,
            n_harmonics,
            drift,
            x,
            y,
            p,
            genuine_jitter,
            forgery_warp,
        }
    }

    /// Trajectory of the base curve at normalized time `u` in `[0,1]`.
    fn eval(&self, u: f64) -> (f64, f64, f64) {
        let series = |hs: &[Harmonic]| -> f64 {
            hs.iter()
                .enumerate()
                .map(|(i, h)| h.amplitude * (TAU * (i + 1) as f64 * u + h.phase).sin())
                .sum()
        };
        (
            self.drift * u + series(&self.x),
            series(&self.y),
            0.55 + series(&self.p),
        )
    }

    /// Copy with amplitudes scaled by `1 + scale * N(0,1)` and phases shifted
    /// by `scale * pi * N(0,1)`.
    fn perturbed(&self, rng: &mut ChaCha8Rng, scale: f64) -> Self {
        let mut out = self.clone();
        for h in out.x.iter_mut().chain(out.y.iter_mut()).chain(out.p.iter_mut()) {
            h.amplitude *= 1.0 + scale * normal(rng);
            h.phase += scale * PI * normal(rng);
        }
        out.drift *= 1.0 + scale * normal(rng);
        out
    }

    fn render(
        &self,
        rng: &mut ChaCha8Rng,
        warp: f64,
        noise: f64,
        points: usize,
        interval_ms: u64,
        device_id: &str,
    ) -> RawCapture {
        // Monotone time warp: u + a sin(2 pi u) with |2 pi a| < 1.
        let a = (warp * rng.random_range(-1.0..1.0)).clamp(-0.9 / TAU, 0.9 / TAU);
        let size = 400.0 * rng.random_range(0.9..1.1);
        let ox = 500.0 + rng.random_range(-50.0..50.0);
        let oy = 300.0 + rng.random_range(-50.0..50.0);
        let pts = (0..points)
            .map(|i| {
                let u0 = i as f64 / (points - 1) as f64;
                let u = u0 + a * (TAU * u0).sin();
                let (x, y, p) = self.eval(u);
                let x = x + noise * normal(rng);
                let y = y + noise * normal(rng);
                let p = (p + 0.5 * noise * normal(rng)).clamp(0.0, 1.0);
                SignaturePoint::new(
                    i as u64 * interval_ms,
                    ox + size * x,
                    oy - size * y,
                    p,
                    true,
                )
            })
            .collect();
        RawCapture {
            device_id: device_id.to_string(),
            points: pts,
        }
    }

    pub fn genuine(&self, rng: &mut ChaCha8Rng, points: usize, interval_ms: u64) -> RawCapture {
        let j = self.genuine_jitter;
        self.perturbed(rng, j)
            .render(rng, j, 0.1 * j, points, interval_ms, "synthetic-genuine")
    }

    pub fn skilled_forgery(
        &self,
        rng: &mut ChaCha8Rng,
        points: usize,
        interval_ms: u64,
    ) -> RawCapture {
        let j = self.genuine_jitter;
        let w = self.forgery_warp;
        self.perturbed(rng, w)
            .perturbed(rng, j)
            .render(rng, w, 0.1 * j, points, interval_ms, "synthetic-forgery")
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Per-user seed: SplitMix64 of the master seed and user index.
pub fn user_seed(master_seed: u64, user: usize) -> u64 {
    let mut z = master_seed.wrapping_add((user as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForgeryKind {
    Skilled,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forgery {
    pub kind: ForgeryKind,
    /// User whose genuine sample was reused, for random forgeries.
    pub source_user: Option<String>,
    pub sample: RawCapture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserSamples {
    pub id: String,
    pub spec: SyntheticUserSpec,
    pub genuine: Vec<RawCapture>,
    pub forgeries: Vec<Forgery>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub params: CorpusParams,
    pub users: Vec<UserSamples>,
}

pub fn user_id(index: usize) -> String {
    format!("user{index:03}")
}

/// Pure function of `params`.
pub fn generate(params: &CorpusParams) -> Result<Corpus, CorpusError> {
    params.validate()?;
    let mut users: Vec<UserSamples> = (0..params.n_users)
        .map(|u| {
            let seed = user_seed(params.master_seed, u);
            let spec = SyntheticUserSpec::from_seed(
                seed,
                params.n_harmonics,
                params.genuine_jitter,
                params.forgery_warp,
            );
            let mut g_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let genuine = (0..params.genuines_per_user)
                .map(|_| spec.genuine(&mut g_rng, params.points, params.interval_ms))
                .collect();
            let mut f_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
            let forgeries = (0..params.forgeries_per_user)
                .map(|_| Forgery {
                    kind: ForgeryKind::Skilled,
                    source_user: None,
                    sample: spec.skilled_forgery(&mut f_rng, params.points, params.interval_ms),
                })
                .collect();
            UserSamples {
                id: user_id(u),
                spec,
                genuine,
                forgeries,
            }
        })
        .collect();

    let n = params.n_users;
    for u in 0..n {
        for k in 0..params.random_forgeries_per_user {
            let src = (u + 1 + k % (n - 1)) % n;
            let pick = (u + k) % params.genuines_per_user;
            let sample = users[src].genuine[pick].clone();
            let id = users[src].id.clone();
            users[u].forgeries.push(Forgery {
                kind: ForgeryKind::Random,
                source_user: Some(id),
                sample,
            });
        }
    }
    Ok(Corpus {
        params: params.clone(),
        users,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestForgery {
    pub file: String,
    pub kind: ForgeryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_user: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestUser {
    pub id: String,
    pub spec: SyntheticUserSpec,
    pub genuine: Vec<String>,
    pub forgeries: Vec<ManifestForgery>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub params: CorpusParams,
    pub users: Vec<ManifestUser>,
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), CorpusError> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("corpus data serializes");
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(io_err(path))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CorpusError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| CorpusError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

impl Corpus {
    /// Writes one directory per user plus `manifest.json`.
    pub fn write(&self, dir: &Path) -> Result<CorpusManifest, CorpusError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut users = Vec::with_capacity(self.users.len());
        for u in &self.users {
            let udir = dir.join(&u.id);
            std::fs::create_dir_all(&udir).map_err(io_err(&udir))?;
            let mut genuine = Vec::new();
            for (i, s) in u.genuine.iter().enumerate() {
                let rel = format!("{}/genuine_{i:02}.json", u.id);
                write_json(&dir.join(&rel), s)?;
                genuine.push(rel);
            }
            let mut forgeries = Vec::new();
            for (i, f) in u.forgeries.iter().enumerate() {
                let rel = format!("{}/forgery_{i:02}.json", u.id);
                write_json(&dir.join(&rel), &f.sample)?;
                forgeries.push(ManifestForgery {
                    file: rel,
                    kind: f.kind,
                    source_user: f.source_user.clone(),
                });
            }
            users.push(ManifestUser {
                id: u.id.clone(),
                spec: u.spec.clone(),
                genuine,
                forgeries,
            });
        }
        let manifest = CorpusManifest {
            params: self.params.clone(),
            users,
        };
        write_json(&dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }

    pub fn load(dir: &Path) -> Result<Corpus, CorpusError> {
        let manifest: CorpusManifest = read_json(&dir.join(MANIFEST_FILE))?;
        let mut users = Vec::with_capacity(manifest.users.len());
        for u in manifest.users {
            let genuine = u
                .genuine
                .iter()
                .map(|f| read_json(&dir.join(f)))
                .collect::<Result<Vec<RawCapture>, _>>()?;
            let forgeries = u
                .forgeries
                .iter()
                .map(|f| {
                    Ok(Forgery {
                        kind: f.kind,
                        source_user: f.source_user.clone(),
                        sample: read_json(&dir.join(&f.file))?,
                    })
                })
                .collect::<Result<Vec<_>, CorpusError>>()?;
            users.push(UserSamples {
                id: u.id,
                spec: u.spec,
                genuine,
                forgeries,
            });
        }
        Ok(Corpus {
            params: manifest.params,
            users,
        })
    }
}

/// Generates and writes a corpus in one step.
pub fn gen_corpus(dir: &Path, params: &CorpusParams) -> Result<CorpusManifest, CorpusError> {
    generate(params)?.write(dir)
}
