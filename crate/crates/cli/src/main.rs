use afx_cli::{run, Cli};
use clap::Parser;
use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let precision = std::env::var("AFX_PRECISION").ok();
    match run(&cli, precision.as_deref()) {
        Ok(out) => {
            let written = match (&cli.out, &cli.command) {
                (_, afx_cli::app::Command::Examples { all: true, .. }) | (None, _) => {
                    std::io::stdout().write_all(out.text.as_bytes())
                }
                (Some(path), _) => std::fs::write(path, &out.text),
            };
            if let Err(e) = written {
                eprintln!("afx: cannot write output: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(out.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("afx: {e}");
            ExitCode::from(1)
        }
    }
}
