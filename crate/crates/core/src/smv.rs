//! NuSMV model emission and optional cross-checking against a NuSMV binary.

use std::fmt::{self, Write as _};
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::EventGraph;
use crate::ltl::Formula;

/// How transitions are written in the `next(state)` case block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum SmvStyle {
    /// One arm per source with the set of its targets; nondeterministic.
    #[default]
    Sets,
    /// One arm per edge, sources ascending, then sink self-loop arms. NuSMV
    /// takes the first matching arm, so this encoding is deterministic.
    PaperLiteral,
}

impl SmvStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            SmvStyle::Sets => "sets",
            SmvStyle::PaperLiteral => "paper-literal",
        }
    }
}

impl fmt::Display for SmvStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SmvStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sets" => Ok(SmvStyle::Sets),
            "paper-literal" => Ok(SmvStyle::PaperLiteral),
            other => Err(format!("unknown SMV style `{other}` (expected sets or paper-literal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmvDocument {
    pub text: String,
    pub style: SmvStyle,
}

#[derive(Debug, Error)]
pub enum SmvError {
    #[error("unknown atom {0} in formula (graph has {1} events)")]
    UnknownAtom(crate::ltl::Event, u32),
    #[error("NuSMV executable not found at {0}")]
    ExecutableNotFound(String),
    #[error("NuSMV exited with status {code:?}: {stderr}")]
    NonZeroExit { code: Option<i32>, stderr: String },
    #[error("could not find a specification result in NuSMV output")]
    UnparseableOutput(String),
    #[error("I/O error running NuSMV: {0}")]
    Io(#[from] std::io::Error),
}

/// `LTLSPEC` body: the canonical formula with atoms as `(state=eventi)`.
pub fn ltlspec(formula: &Formula) -> String {
    let mut out = String::new();
    formula.write_with(&mut out, &|e| format!("(state={e})"));
    out
}

pub fn emit_smv(g: &EventGraph, formula: &Formula, style: SmvStyle) -> Result<SmvDocument, SmvError> {
    if let Some(e) = formula.atom_outside(g.n()) {
        return Err(SmvError::UnknownAtom(e, g.n()));
    }
    let events = g.events();
    let names: Vec<String> = events.iter().map(|e| e.to_string()).collect();

    let mut text = String::new();
    text.push_str("MODULE main\nVAR\n");
    let _ = writeln!(text, "    state : {{{}}};", names.join(", "));
    text.push_str("ASSIGN\n");
    let _ = writeln!(text, "    init(state) := {};", g.initial());
    text.push_str("    next(state) := case\n");
    match style {
        SmvStyle::Sets => {
            for &e in &events {
                let targets = g.successors(e).expect("own event");
                if targets.is_empty() {
                    let _ = writeln!(text, "        state = {e} : {e};");
                } else {
                    let list: Vec<String> = targets.iter().map(|t| t.to_string()).collect();
                    let _ = writeln!(text, "        state = {e} : {{{}}};", list.join(", "));
                }
            }
        }
        SmvStyle::PaperLiteral => {
            for (from, to) in g.edges() {
                let _ = writeln!(text, "        state = {from} : {to};");
            }
            for &e in events.iter().filter(|&&e| g.is_sink(e)) {
                let _ = writeln!(text, "        state = {e} : {e};");
            }
        }
    }
    text.push_str("    esac;\n");
    let _ = writeln!(text, "LTLSPEC {}", ltlspec(formula));
    Ok(SmvDocument { text, style })
}

/// Extracts the verdict from a `-- specification ... is true|false` line.
pub fn parse_nusmv_output(stdout: &str) -> Result<bool, SmvError> {
    for line in stdout.lines() {
        let line = line.trim();
        if !line.starts_with("-- specification") {
            continue;
        }
        if line.ends_with("is true") {
            return Ok(true);
        }
        if line.ends_with("is false") {
            return Ok(false);
        }
    }
    Err(SmvError::UnparseableOutput(stdout.to_string()))
}

/// Writes `doc` to a temporary file and runs `<nusmv_path> <file>`.
pub fn run_nusmv(doc: &SmvDocument, nusmv_path: &Path) -> Result<bool, SmvError> {
    if !nusmv_path.is_file() {
        return Err(SmvError::ExecutableNotFound(nusmv_path.display().to_string()));
    }
    let mut file = tempfile::Builder::new().suffix(".smv").tempfile()?;
    file.write_all(doc.text.as_bytes())?;
    file.flush()?;
    let output = Command::new(nusmv_path).arg(file.path()).output().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            SmvError::ExecutableNotFound(nusmv_path.display().to_string())
        } else {
            SmvError::Io(e)
        }
    })?;
    if !output.status.success() {
        return Err(SmvError::NonZeroExit {
            code: output.status.code(),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    parse_nusmv_output(&String::from_utf8_lossy(&output.stdout))
}
