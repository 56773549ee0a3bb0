#![allow(dead_code)]

use std::sync::Arc;

use chrono::Duration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sigaccess::clock::ManualClock;
use sigaccess::matcher::Matcher;
use sigaccess::server::config::SystemConfig;
use sigaccess::server::service::AccessService;
use sigaccess::server::store::UserDocument;
use sigaccess::server::txlog::{read_all, TransactionRecord};
use sigaccess::signal::{FeatureSeq, RawCapture};
use sigaccess::tooling::corpus::{SyntheticUserSpec, DEFAULT_INTERVAL_MS, DEFAULT_POINTS};

pub const ADMIN: &str = "test-admin-token";

/// Minimum over every monotone alignment path of the summed Euclidean frame
/// distances, found by enumerating the paths one by one.
pub fn dtw_oracle(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    fn local(x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    }
    fn walk(a: &[Vec<f64>], b: &[Vec<f64>], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + local(&a[i], &b[j]);
        if i + 1 == a.len() && j + 1 == b.len() {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

pub fn seq(frames: &[Vec<f64>]) -> FeatureSeq {
    FeatureSeq::from_frames(frames.iter().map(|f| f.as_slice())).unwrap()
}

/// Mean and population standard deviation of a slice.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// A synthetic writer with reproducible samples.
pub struct Writer {
    pub spec: SyntheticUserSpec,
    rng: ChaCha8Rng,
}

impl Writer {
    pub fn new(seed: u64) -> Self {
        Self {
            spec: SyntheticUserSpec::from_seed(seed, 4, 0.03, 0.25),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a),
        }
    }

    pub fn genuine(&mut self) -> RawCapture {
        self.spec
            .genuine(&mut self.rng, DEFAULT_POINTS, DEFAULT_INTERVAL_MS)
    }

    pub fn forgery(&mut self) -> RawCapture {
        self.spec
            .skilled_forgery(&mut self.rng, DEFAULT_POINTS, DEFAULT_INTERVAL_MS)
    }
}

/// Service over a temporary directory with a manual clock.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub clock: Arc<ManualClock>,
    pub svc: Arc<AccessService>,
}

impl Fixture {
    pub fn new() -> Self {
        Self::with(|_| {})
    }

    pub fn with(tweak: impl FnOnce(&mut SystemConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = SystemConfig::test_in(dir.path());
        tweak(&mut cfg);
        let clock = Arc::new(ManualClock::default());
        let svc = open(cfg, Arc::clone(&clock), None);
        Self { dir, clock, svc }
    }

    pub fn with_matcher(m: Arc<dyn Matcher>) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::default());
        let svc = open(SystemConfig::test_in(dir.path()), Arc::clone(&clock), Some(m));
        Self { dir, clock, svc }
    }

    /// Drops the running service and opens a new one on the same directory.
    pub fn reopen(&mut self) {
        let cfg = (*self.svc.config()).clone();
        self.svc = open(cfg, Arc::clone(&self.clock), None);
    }

    pub fn log(&self) -> Vec<TransactionRecord> {
        read_all(self.svc.log().path()).unwrap()
    }

    pub fn log_len(&self) -> usize {
        self.log().len()
    }

    /// Authorizes `name` and submits `samples` with fresh nonces.
    pub fn enroll(&self, name: &str, samples: &[RawCapture]) -> UserDocument {
        let pw = self
            .svc
            .authorize(Some(ADMIN), name, None)
            .unwrap()
            .temp_password;
        for s in samples {
            let n = self.svc.issue_challenge(name).unwrap().nonce;
            self.svc
                .submit_enrollment_sample(None, name, &pw, &n, s.clone())
                .unwrap();
            self.clock.advance(Duration::seconds(1));
        }
        self.svc.user_document(name).unwrap()
    }

    pub fn enroll_writer(&self, name: &str, w: &mut Writer) -> UserDocument {
        let n = self.svc.config().enroll_count;
        let samples: Vec<RawCapture> = (0..n).map(|_| w.genuine()).collect();
        self.enroll(name, &samples)
    }

    pub fn verify(
        &self,
        name: &str,
        sample: &RawCapture,
    ) -> Result<sigaccess::server::service::VerifyResponse, sigaccess::ServiceError> {
        let n = self.svc.issue_challenge(name)?.nonce;
        self.svc.verify(name, &n, sample.clone())
    }
}

fn open(cfg: SystemConfig, clock: Arc<ManualClock>, m: Option<Arc<dyn Matcher>>) -> Arc<AccessService> {
    let mut b = AccessService::builder(cfg, ADMIN).clock(clock);
    if let Some(m) = m {
        b = b.matcher(m);
    }
    Arc::new(b.open().unwrap())
}

/// Plain full-matrix DTW cost, independent of the library's two-row version.
pub fn full_matrix_dtw(a: &FeatureSeq, b: &FeatureSeq) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![f64::INFINITY; m + 1]; n + 1];
    d[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let c: f64 = a
                .frame(i - 1)
                .iter()
                .zip(b.frame(j - 1))
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            d[i][j] = c + d[i - 1][j].min(d[i][j - 1]).min(d[i - 1][j - 1]);
        }
    }
    d[n][m]
}

/// Mean of all pairwise normalized distances, by brute force.
pub fn brute_force_mu(refs: &[FeatureSeq]) -> f64 {
    let mut sum = 0.0;
    let mut k = 0;
    for i in 0..refs.len() {
        for j in 0..refs.len() {
            if i < j {
                sum += full_matrix_dtw(&refs[i], &refs[j]) / (refs[i].len() + refs[j].len()) as f64;
                k += 1;
            }
        }
    }
    sum / k as f64
}

pub async fn http(
    svc: &Arc<AccessService>,
) -> (sigaccess::server::http::ServerHandle, sigaccess::tooling::client::ApiClient) {
    let h = sigaccess::server::http::spawn(Arc::clone(svc), "127.0.0.1:0")
        .await
        .unwrap();
    let c = sigaccess::tooling::client::ApiClient::new(h.base_url()).with_admin_token(ADMIN);
    (h, c)
}
