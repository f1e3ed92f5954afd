//! Command-line companion to `sici-core`: a JSON spec format, a textual
//! gate grammar, CSV/JSON table artifacts, and the `compile`, `check`,
//! `count`, `verify` and `diff` commands.

pub mod commands;
pub mod document;
pub mod error;
pub mod gate_text;
pub mod output;
