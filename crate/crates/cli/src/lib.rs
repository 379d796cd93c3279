//! Command-line front end for `qcmsv-core` and the experiment runners that
//! regenerate the tables and figure data.
//!
//! [`run`] is the whole binary: it parses arguments, executes one subcommand
//! and returns the process exit code (0 success, 1 computation error,
//! 2 usage error).

mod args;
mod commands;
pub mod error;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::Cli;
pub use error::CliError;

/// Parses `argv` (including the program name), runs the command with output
/// sent to `out`, and returns the exit code. Diagnostics go to stderr.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    // Commands write into a buffer so they can run inside a custom pool.
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n as usize).build() {
            Ok(pool) => pool.install(|| commands::dispatch(&cli, &mut buf)),
            Err(e) => Err(CliError::Usage(format!("cannot build worker pool: {e}"))),
        },
        None => commands::dispatch(&cli, &mut buf),
    };
    if out.write_all(&buf).and_then(|_| out.flush()).is_err() {
        return 1;
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let code = run_with(argv, &mut lock);
    let _ = lock.flush();
    code
}
