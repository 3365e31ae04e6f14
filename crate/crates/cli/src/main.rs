// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use dfm_cli::commands::Command;
use dfm_cli::{run, Cli};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let start = Instant::now();
    let mut outcome = match run(&cli, &argv[1..]) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    outcome.report.timing_ms = start.elapsed().as_secs_f64() * 1e3;

    let report_json = serde_json::to_string_pretty(&outcome.report).expect("reports serialize");
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let written = (|| -> std::io::Result<()> {
        let simulate = matches!(cli.command, Command::Simulate(_));
        match (&cli.output, simulate) {
            (Some(path), true) => std::fs::write(path, outcome.csv.as_deref().unwrap_or_default())?,
            (Some(path), false) => std::fs::write(path, &report_json)?,
            (None, true) if !cli.json => {
                // table on stdout, report on stderr
                out.write_all(outcome.csv.as_deref().unwrap_or_default().as_bytes())?;
                eprint!("{}", outcome.text);
                return Ok(());
            }
            _ => {}
        }
        if cli.json {
            writeln!(out, "{report_json}")
        } else {
            write!(out, "{}", outcome.text)
        }
    })();
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.exit_code)
}
