use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use primal_svm_cli::{run, threads_from_env, Cli, CliError};

fn fail(e: CliError) -> ExitCode {
    if !matches!(e, CliError::BrokenPipe) {
        eprintln!("error: {e}");
    }
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            let msg = first.trim().trim_start_matches("error: ").to_string();
            return fail(CliError::Usage(msg));
        }
    };
    let threads = match threads_from_env() {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    // caps nested parallel work outside cross-validation too
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, threads, &mut out).and_then(|_| {
        out.flush().or_else(|e| match e.kind() {
            std::io::ErrorKind::BrokenPipe => Ok(()),
            _ => Err(CliError::Data(e.to_string())),
        })
    }) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
