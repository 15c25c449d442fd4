//! Experiment harness and command-line front end for `gkdv-core`.
//!
//! Subcommands: `simulate` (runs and sweeps from a spec file), `norms`,
//! `soliton`, `decompose` and `concentrate`. Outputs are deterministic: the
//! same inputs give byte-identical CSV and JSON.

pub mod cli;
pub mod commands;
pub mod error;
pub mod initial;
pub mod output;
pub mod spec;
