pub mod engine;
pub mod frontend;
pub mod itp;
pub mod mbp;
pub mod oracle;
pub mod qgen;
pub mod smt;
pub mod term;
