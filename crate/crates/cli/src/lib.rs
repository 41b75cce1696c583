//! Command-line front end for `crestfield-core`: JSON problem files in,
//! JSON reports and CSV tables out.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 schema or grid error, 3 degenerate
//! energy, 4 infeasible problem, 5 stalled refinement (report still written),
//! 6 inconsistent verdict.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod problem;
pub mod table;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use commands::{Inputs, Output};
pub use error::{exit, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Evaluate,
    Solve,
    Verify,
    Sweep,
}

/// Environment variable capping worker threads.
pub const THREADS_VAR: &str = "CRESTFIELD_THREADS";

pub fn problem_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        write!(out, "{b:02x}").expect("writing to a string");
    }
    out
}

/// Thread cap from the environment. Evaluation is currently single-threaded,
/// so the value is validated and recorded but never exceeded.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Schema {
                path: THREADS_VAR.into(),
                msg: format!("expected a positive integer, got \"{s}\""),
            }),
        },
    }
}

fn provenance(inputs: &Inputs, output: &Output, threads: Option<usize>) -> Value {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "problemSha256": problem_hash(&inputs.problem_text),
        "seed": output.seed.or(inputs.seed),
        "threads": threads,
        "timestamp": timestamp,
    })
}

pub fn dispatch(cmd: Command, inputs: &Inputs) -> Result<Output, CliError> {
    match cmd {
        Command::Evaluate => commands::evaluate(inputs),
        Command::Solve => commands::solve(inputs),
        Command::Verify => commands::verify(inputs),
        Command::Sweep => commands::sweep(inputs),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `report.json` (provenance plus body) and the tables into `out`.
pub fn write_outputs(
    out: &Path,
    inputs: &Inputs,
    output: &Output,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    if let Some(body) = &output.report {
        let doc =
            json!({ "provenance": provenance(inputs, output, thread_cap()?), "report": body });
        let path = out.join("report.json");
        let mut text = serde_json::to_string_pretty(&doc).expect("report serialises");
        text.push('\n');
        write_file(&path, &text)?;
        written.push(path);
    }
    for (name, contents) in &output.files {
        let path = out.join(name);
        write_file(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}

/// Reads inputs, runs `cmd`, writes outputs and returns the exit code.
pub fn run(
    cmd: Command,
    problem: &Path,
    field: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
) -> i32 {
    match run_inner(cmd, problem, field, out, seed) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run_inner(
    cmd: Command,
    problem: &Path,
    field: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
) -> Result<i32, CliError> {
    thread_cap()?;
    let inputs = Inputs {
        problem_text: read(problem)?,
        field: match field {
            Some(p) => Some((read(p)?, p.display().to_string())),
            None => None,
        },
        seed,
    };
    let output = dispatch(cmd, &inputs)?;
    for path in write_outputs(out, &inputs, &output)? {
        println!("wrote {}", path.display());
    }
    println!("{}", output.summary);
    Ok(output.exit)
}
