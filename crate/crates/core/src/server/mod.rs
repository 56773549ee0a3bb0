//! The verification server: configuration, persistence, audit log, the
//! transport-independent service and its HTTP binding.

pub mod config;
pub mod http;
pub mod service;
pub mod store;
pub mod txlog;
