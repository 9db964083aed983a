use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use faircompass_core::compass::{default_tree, load_tree, start_session, CompassTree, TreeError};
use faircompass_core::CompassSession;
use serde::Deserialize;

use crate::{read, write, Failure};

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptedAnswer {
    Label(String),
    Full {
        label: String,
        #[serde(default)]
        rationale: String,
    },
}

fn load(path: Option<&PathBuf>) -> Result<CompassTree, Failure> {
    let Some(path) = path else {
        return Ok(default_tree());
    };
    load_tree(&read(path)?).map_err(|e| match e {
        TreeError::Invalid(violations) => {
            let lines: Vec<String> = violations.iter().map(|v| format!("  - {v}")).collect();
            Failure::input(format!("invalid tree {}:\n{}", path.display(), lines.join("\n")))
        }
        other => Failure::input(format!("{}: {other}", path.display())),
    })
}

fn aborted(session: &CompassSession, why: &str) -> Failure {
    Failure {
        code: 1,
        message: format!(
            "session aborted at node {} ({why}); no record written",
            session.current()
        ),
    }
}

fn scripted(tree: &CompassTree, path: &PathBuf) -> Result<CompassSession, Failure> {
    let answers: Vec<ScriptedAnswer> = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut session = start_session(tree);
    for (i, a) in answers.into_iter().enumerate() {
        let (label, rationale) = match a {
            ScriptedAnswer::Label(l) => (l, String::new()),
            ScriptedAnswer::Full { label, rationale } => (label, rationale),
        };
        session
            .answer(tree, &label, &rationale)
            .map_err(|e| Failure::input(format!("answer {}: {e}", i + 1)))?;
    }
    if !session.is_complete(tree) {
        return Err(aborted(&session, "scripted answers ran out"));
    }
    Ok(session)
}

/// Prompts for one answer at a time until a definition node is reached.
pub fn interactive(
    tree: &CompassTree,
    input: &mut impl BufRead,
    output: &mut impl Write,
) -> Result<CompassSession, Failure> {
    let io_err = |e: io::Error| Failure::input(format!("terminal error: {e}"));
    let mut session = start_session(tree);
    let mut line = String::new();
    while !session.is_complete(tree) {
        let node = session.current_node(tree).expect("sessions stay on their tree");
        let choices = node.choices();
        writeln!(output, "\n{}", node.prompt).map_err(io_err)?;
        if !node.tooltip.is_empty() {
            writeln!(output, "  ({})", node.tooltip).map_err(io_err)?;
        }
        for (i, c) in choices.iter().enumerate() {
            writeln!(output, "  [{}] {c}", i + 1).map_err(io_err)?;
        }
        write!(output, "answer (number or label, 'back' to undo, 'quit' to stop): ").map_err(io_err)?;
        output.flush().map_err(io_err)?;

        line.clear();
        if input.read_line(&mut line).map_err(io_err)? == 0 {
            return Err(aborted(&session, "input closed"));
        }
        let reply = line.trim();
        match reply {
            "quit" | "q" => return Err(aborted(&session, "stopped by user")),
            "back" | "b" => {
                if let Err(e) = session.undo() {
                    writeln!(output, "{e}").map_err(io_err)?;
                }
                continue;
            }
            _ => {}
        }
        let label = match reply.parse::<usize>() {
            Ok(n) if (1..=choices.len()).contains(&n) => choices[n - 1].to_string(),
            _ => reply.to_string(),
        };
        if !choices.contains(&label.as_str()) {
            writeln!(output, "unknown choice {label:?}; valid choices: {}", choices.join(", "))
                .map_err(io_err)?;
            continue;
        }
        write!(output, "rationale (optional): ").map_err(io_err)?;
        output.flush().map_err(io_err)?;
        line.clear();
        input.read_line(&mut line).map_err(io_err)?;
        session
            .answer(tree, &label, line.trim())
            .map_err(|e| Failure::input(e.to_string()))?;
    }
    Ok(session)
}

pub fn run(
    tree_path: Option<&PathBuf>,
    answers: Option<&PathBuf>,
    out: &PathBuf,
    context: &str,
) -> Result<u8, Failure> {
    let tree = load(tree_path)?;
    let session = match answers {
        Some(path) => scripted(&tree, path)?,
        None => interactive(&tree, &mut io::stdin().lock(), &mut io::stdout())?,
    };
    let record = session
        .export_record(&tree, context)
        .map_err(|e| Failure::input(e.to_string()))?;
    let json = serde_json::to_string_pretty(&record).expect("records serialize") + "\n";
    write(out, &json)?;
    println!(
        "recommended: {} ({} family); path {}",
        record.recommended,
        record.family,
        record.path().join(" -> ")
    );
    println!("record written to {}", out.display());
    Ok(0)
}
