pub mod nonce;
pub mod terminal;
pub mod attack;
