use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use renewal_cli::args::Cli;
use renewal_cli::{run, Failure, RunConfig};

fn report_failure(command: &str, failure: &Failure) -> ExitCode {
    let record = serde_json::json!({
        "status": "failed",
        "command": command,
        "kind": failure.kind(),
        "exit_code": failure.exit_code(),
        "message": failure.message(),
    });
    eprintln!("{record}");
    ExitCode::from(failure.exit_code() as u8)
}

fn write_artifact(config: &RunConfig, text: &str) -> Result<(), Failure> {
    match &config.output.path {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return report_failure("config", &Failure::Config(e.kind().to_string()));
        }
    };
    let config = match cli.resolve() {
        Ok(c) => c,
        Err(msg) => return report_failure("config", &Failure::Config(msg)),
    };
    let command = config.command.as_str();
    if cli.print_config() {
        return match config.to_toml() {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => report_failure(command, &Failure::Config(e.to_string())),
        };
    }
    match run(&config) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if let Err(f) = write_artifact(&config, &outcome.artifact) {
                return report_failure(command, &f);
            }
            match &outcome.failure {
                Some(f) => report_failure(command, f),
                None => ExitCode::SUCCESS,
            }
        }
        Err(f) => report_failure(command, &f),
    }
}
