//! `faircompass`: audit a dataset or walk the decision tree from a terminal.
//!
//! Exit status: 0 when every requested definition holds or a record was
//! written, 1 on a fairness violation or an aborted session, 2 on usage or
//! input errors.

mod compass_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use faircompass_core::audit::AuditConfig;
use faircompass_core::ingest::SchemaMapping;
use faircompass_core::report::{audit_source, parse_definitions};
use faircompass_core::OutcomeLabel;

#[derive(Parser)]
#[command(name = "faircompass", version, about = "Fairness audits and guided definition choice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test fairness definitions on a delimited dataset.
    Audit {
        #[arg(long)]
        data: PathBuf,
        /// JSON schema mapping columns to labels, scores and attributes.
        #[arg(long)]
        schema: PathBuf,
        /// Comma-separated definition names, or `all`.
        #[arg(long)]
        definitions: String,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Favourable outcome label (0 or 1); overrides the schema.
        #[arg(long, value_parser = parse_label)]
        favourable: Option<OutcomeLabel>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Walk the decision tree and write a decision record.
    Compass {
        /// Tree document; the built-in tree when unset.
        #[arg(long, env = "FAIRCOMPASS_TREE")]
        tree: Option<PathBuf>,
        /// JSON list of answers, each a label or {"label", "rationale"}.
        #[arg(long)]
        answers: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Free text stored with the record.
        #[arg(long, default_value = "")]
        context: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn parse_label(s: &str) -> Result<OutcomeLabel, String> {
    let n: i64 = s.parse().map_err(|_| format!("expected 0 or 1, got {s:?}"))?;
    OutcomeLabel::try_from(n).map_err(|e| e.to_string())
}

/// A failure with the exit status it maps to.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &PathBuf, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn audit(
    data: PathBuf,
    schema: PathBuf,
    definitions: String,
    tolerance: Option<f64>,
    favourable: Option<OutcomeLabel>,
    format: Format,
    out: Option<PathBuf>,
) -> Result<u8, Failure> {
    let mapping: SchemaMapping = serde_json::from_str(&read(&schema)?)
        .map_err(|e| Failure::input(format!("{}: {e}", schema.display())))?;
    let definitions = parse_definitions(&definitions).map_err(|e| Failure::input(e.to_string()))?;
    let mut config = AuditConfig::default();
    if let Some(t) = tolerance {
        config.tolerance = t;
    }
    let report = audit_source(&read(&data)?, &mapping, &definitions, &config, favourable)
        .map_err(|e| Failure::input(e.to_string()))?;
    let text = match format {
        Format::Text => report.render_text(),
        Format::Json => report.to_json() + "\n",
    };
    match out {
        Some(path) => write(&path, &text)?,
        None => print!("{text}"),
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Audit {
            data,
            schema,
            definitions,
            tolerance,
            favourable,
            format,
            out,
        } => audit(data, schema, definitions, tolerance, favourable, format, out),
        Command::Compass {
            tree,
            answers,
            out,
            context,
        } => compass_cmd::run(tree.as_ref(), answers.as_ref(), &out, &context),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
