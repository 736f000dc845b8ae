//! Library half of the `touchdown` command-line tool.
//!
//! `main.rs` only parses arguments and maps [`CliError`] to an exit code, so
//! the commands can be driven from tests without spawning a process.

use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub mod args;
pub mod commands;
pub mod runfile;
pub mod settings;
pub mod sweep;

pub use args::{Cli, Command, GlobalArgs, ModeArg, OutputFormat};
pub use runfile::RunOutput;
pub use settings::Settings;

use touchdown_core::ErrorCategory;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Command-line usage error (reported by clap).
    pub const USAGE: i32 = 2;
    pub const IO: i32 = 3;
    pub const VALIDATION: i32 = 4;
    pub const DATA: i32 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Io,
    Validation,
    Data,
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            category: Category::Validation,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            category: Category::Data,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        Self {
            category: Category::Io,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category {
            Category::Io => exit::IO,
            Category::Validation => exit::VALIDATION,
            Category::Data => exit::DATA,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<touchdown_core::Error> for CliError {
    fn from(e: touchdown_core::Error) -> Self {
        let category = match e.category() {
            ErrorCategory::Io => Category::Io,
            ErrorCategory::Validation => Category::Validation,
            ErrorCategory::Data => Category::Data,
        };
        Self {
            category,
            message: e.to_string(),
        }
    }
}

/// Runs one parsed command, writing reports to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let settings = Settings::load(cli.global.config.as_deref())?;
    // Output is buffered so the command can run inside a worker pool.
    let mut buf = Vec::new();
    let mut work = || commands::dispatch(cli, &settings, &mut buf);
    match cli.global.jobs {
        Some(0) => Err(CliError::validation("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::validation(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }?;
    stdout
        .write_all(&buf)
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    touchdown_core::write_atomic(path, text.as_bytes())?;
    Ok(())
}

pub(crate) fn emit(stdout: &mut dyn Write, out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}
