//! Report envelope shared by every subcommand.
//!
//! Each command emits a single JSON document on stdout: command name, library
//! version, the fully resolved configuration, the command's own fields, and a
//! final `pass` flag. Reruns with the same flags produce byte-identical bytes,
//! so reports carry no timestamps, hostnames, or other ambient state.

use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

/// How a command run ended from the caller's point of view.
///
/// `Pass` maps to exit code 0, `CheckFail` to 1. Errors that prevent the
/// checks from running at all are reported through [`Failure`] instead.
pub enum Outcome {
    Pass,
    CheckFail,
}

/// An error that aborts the run before a verdict is reached.
///
/// `code` follows the fixed convention: 2 for usage problems (bad flag
/// values, malformed descriptors, unwritable paths), 3 for numerical
/// failures inside the library (solver breakdowns, tangent equators,
/// preconditions like a projection pole landing on the surface).
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

pub fn numerical(message: impl Into<String>) -> Failure {
    Failure { code: 3, message: message.into() }
}

/// One named sub-check inside a report: measured value against a tolerance.
#[derive(Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn bounded(name: &'static str, value: f64, tolerance: f64) -> Check {
        Check { name, value, tolerance, pass: value.is_finite() && value <= tolerance }
    }

    /// Records an exact expectation: the check owns its own verdict.
    pub fn verdict(name: &'static str, value: f64, tolerance: f64, pass: bool) -> Check {
        Check { name, value, tolerance, pass }
    }
}

/// Wraps command fields with the common envelope and serializes them.
#[derive(Serialize)]
pub struct Envelope<C: Serialize, B: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub config: C,
    #[serde(flatten)]
    pub body: B,
    pub pass: bool,
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Renders the envelope, prints it on stdout, and mirrors it to `json_path`
/// when one was requested. Returns the exit outcome implied by `pass`.
pub fn emit<C: Serialize, B: Serialize>(
    command: &'static str,
    config: C,
    body: B,
    pass: bool,
    json_path: Option<&Path>,
) -> Result<Outcome, Failure> {
    let envelope = Envelope { command, version: VERSION, config, body, pass };
    let mut text = serde_json::to_string_pretty(&envelope)
        .map_err(|e| numerical(format!("report serialization failed: {e}")))?;
    text.push('\n');
    println!("{}", text.trim_end());
    if let Some(path) = json_path {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(if pass { Outcome::Pass } else { Outcome::CheckFail })
}

/// Writes via a sibling temp file and rename so readers never observe a
/// half-written report.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let tmp = sibling_temp(path);
    let write = (|| -> std::io::Result<()> {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        Ok(())
    })();
    if let Err(e) = write {
        let _ = fs::remove_file(&tmp);
        return Err(usage(format!("cannot write {}: {e}", path.display())));
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        usage(format!("cannot write {}: {e}", path.display()))
    })
}

fn sibling_temp(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}
