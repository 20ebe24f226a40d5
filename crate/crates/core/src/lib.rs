//! Diagnostic harness for stale retrieved repository context in code completion.
//!
//! The pipeline mines helper signature changes from git history ([`miner`]), turns them
//! into wrapper-completion samples with paired static oracles ([`builder`]), renders
//! neutralized prompts under five retrieval conditions ([`prompt`]), runs them against a
//! chat-completions endpoint or a scripted mock ([`client`], [`harness`]), classifies the
//! outputs ([`oracle`]), and reports stale-reference statistics ([`analysis`]).

pub mod builder;
pub mod callsite;
pub mod client;
pub mod analysis;
pub mod audit;
pub mod condition;
pub mod harness;
pub mod jsonl;
pub mod miner;
pub mod oracle;
pub mod prompt;
pub mod reference;
