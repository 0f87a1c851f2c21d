use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use spdelab_cli::{exit_code, run, Cli, CliError, Verdict};

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut result = run(&cli);
    if let Ok(out) = &result {
        let written = out
            .files
            .iter()
            .try_for_each(|(p, text)| write_file(p, text))
            .and_then(|()| match &cli.out {
                Some(p) => write_file(p, &out.text),
                None => std::io::stdout()
                    .write_all(out.text.as_bytes())
                    .map_err(|e| CliError::Output(e.to_string())),
            });
        if let Err(e) = written {
            result = Err(e);
        }
    }
    match &result {
        Ok(out) => match &out.verdict {
            Verdict::Assumption(names) => eprintln!("assumption failed: {names}"),
            Verdict::Fail => eprintln!("statistical check failed"),
            Verdict::Pass => {}
        },
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
