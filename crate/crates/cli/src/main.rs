mod args;
mod commands;
mod error;
mod output;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde::de::DeserializeOwned;

use args::{Cli, Command, OutputOpts};
use error::CliError;
use output::Report;

/// Input block of a previously written JSON report.
fn replay<I: DeserializeOwned>(path: &std::path::Path, schema: &str) -> Result<I, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })?;
    match doc.get("schema").and_then(|s| s.as_str()) {
        Some(s) if s == schema => {}
        other => {
            return Err(CliError::Usage(format!(
                "{}: expected a `{schema}` report, found {}",
                path.display(),
                other
                    .map(|s| format!("`{s}`"))
                    .unwrap_or_else(|| "no schema".into())
            )))
        }
    }
    let input = doc
        .get("input")
        .cloned()
        .ok_or_else(|| CliError::Usage(format!("{}: no `input` block", path.display())))?;
    serde_json::from_value(input).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })
}

fn resolve<I: DeserializeOwned + Clone>(
    input: &I,
    opts: &OutputOpts,
    schema: &str,
) -> Result<I, CliError> {
    match &opts.replay {
        Some(path) => replay(path, schema),
        None => Ok(input.clone()),
    }
}

fn emit(report: &Report, opts: &OutputOpts) -> Result<u8, CliError> {
    let rendered = report.render(opts.format)?;
    match &opts.output {
        Some(path) => fs::write(path, rendered).map_err(|e| CliError::io(path, e))?,
        None => {
            let mut out = std::io::stdout().lock();
            // A closed pipe is not worth an error message.
            let _ = out.write_all(rendered.as_bytes());
        }
    }
    Ok(report.exit_code)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let (report, opts) = match &cli.command {
        Command::Estimate(r) => (
            commands::estimate(&resolve(&r.input, &r.output, "urn.estimate.v1")?)?,
            &r.output,
        ),
        Command::Sensitivity(r) => (
            commands::sensitivity(&resolve(&r.input, &r.output, "urn.sensitivity.v1")?)?,
            &r.output,
        ),
        Command::Posterior(r) => (
            commands::posterior(&resolve(&r.input, &r.output, "urn.posterior.v1")?)?,
            &r.output,
        ),
        Command::Attributable(r) => (
            commands::attributable(&resolve(&r.input, &r.output, "urn.attributable.v1")?)?,
            &r.output,
        ),
        Command::Verify(r) => (
            commands::verify(&resolve(&r.input, &r.output, "urn.verify.v1")?)?,
            &r.output,
        ),
        Command::Simulate(r) => (
            commands::simulate(&resolve(&r.input, &r.output, "urn.simulate.v1")?)?,
            &r.output,
        ),
    };
    emit(&report, opts)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
