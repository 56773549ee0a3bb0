//! Behavioral signature verification for physical access control.
//!
//! A signature is captured on a pen tablet as a sequence of timestamped
//! points. [`signal`] turns it into a fixed-length multichannel feature
//! sequence, [`matcher`] compares sequences with dynamic time warping, and
//! [`enrollment`] drives the two-session reference collection. The
//! [`server`] module wraps all of it in a persistent, audited HTTP service,
//! [`security`] holds the replay and terminal-authentication primitives plus
//! an attack harness, and [`tooling`] has the synthetic corpus, evaluation
//! and batch clients.
//!
//! The `examples/` directory has one runnable program per capability:
//!
//! | example | shows |
//! |---|---|
//! | `preprocess_features` | parsing, normalization and feature channels |
//! | `dtw_alignment` | DTW cost and distance on tiny sequences |
//! | `enroll_and_verify` | the enrollment protocol and scoring in process |
//! | `http_roundtrip` | the HTTP API driven through [`tooling::client::ApiClient`] |
//! | `replay_defense` | nonce binding and a rejected resubmission |
//! | `edge_attestation` | a terminal-side decision authenticated with HMAC |
//! | `synthetic_eval` | corpus generation and the FAR/FRR/EER sweep |
//! | `attack_simulation` | the scripted attack scenarios |

pub mod clock;
pub mod enrollment;
pub mod matcher;
pub mod security;
pub mod server;
pub mod signal;
pub mod tooling;

pub use clock::{Clock, ManualClock, SystemClock};
pub use matcher::{DtwMatcher, MatchScore, Matcher, UserModel};
pub use server::config::SystemConfig;
pub use server::service::{AccessService, ServiceError};
pub use signal::{FeatureSeq, RawCapture, SignaturePoint, SignatureSample};
