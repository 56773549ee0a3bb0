pub mod client;
pub mod corpus;
pub mod eval;
pub mod batch;
