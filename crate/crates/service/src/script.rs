//! Scripted sessions: one `set Symbol = value` or `retract Symbol` per line.
//! Arguments go in parentheses, `#` starts a comment.

use kbsel::consultant::SetRequest;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Set(SetRequest),
    Retract { symbol: String, args: Vec<String> },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

fn location(text: &str) -> Option<(String, Vec<String>)> {
    let text = text.trim();
    match text.split_once('(') {
        None if !text.is_empty() && !text.contains(char::is_whitespace) => Some((text.to_string(), Vec::new())),
        None => None,
        Some((name, rest)) => {
            let inner = rest.strip_suffix(')')?;
            let args = inner.split(',').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect();
            Some((name.trim().to_string(), args))
        }
    }
}

/// Parses `Symbol = value` as used by `set` lines and `--set` flags.
pub fn parse_assignment(text: &str) -> Option<SetRequest> {
    let (lhs, value) = text.split_once('=')?;
    let (symbol, args) = location(lhs)?;
    let value = value.trim();
    if value.is_empty() {
        return None;
    }
    Some(SetRequest { symbol, args, value: value.to_string() })
}

pub fn parse_script(text: &str) -> Result<Vec<Step>, ScriptError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| ScriptError { line: i + 1, message: message.to_string() };
        let (verb, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match verb {
            "set" => steps.push(Step::Set(parse_assignment(rest).ok_or_else(|| err("expected `set Symbol = value`"))?)),
            "retract" => {
                let (symbol, args) = location(rest).ok_or_else(|| err("expected `retract Symbol`"))?;
                steps.push(Step::Retract { symbol, args });
            }
            other => return Err(err(&format!("unknown command `{other}`"))),
        }
    }
    Ok(steps)
}
