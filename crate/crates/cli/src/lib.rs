//! Library surface of the experiment runner; the binary is a thin clap
//! wrapper over [`commands`]. Exposed as a library so integration tests can
//! drive full pipelines in-process.

pub mod commands;
pub mod config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COUNTEREXAMPLE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Exit-code classification: schema/parameter/usage problems are exit 2,
/// numeric failures exit 4. Counterexample findings (exit 3) are returned
/// as successful results carrying the code, not as errors.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    if let Some(core) = err.downcast_ref::<geowalk_core::Error>() {
        match core {
            geowalk_core::Error::Numeric(_) => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    } else {
        EXIT_CONFIG
    }
}
