//! The line-oriented textual model format and relation files.
//!
//! ```text
//! # comment
//! system coin
//! initial go
//! states go head tail
//! alphabet toss win lose
//! opt  go   toss head
//! must head win  go
//! ```
//!
//! States and actions mentioned only by transitions are added to the
//! declared sets in order of first mention. Relation files hold one
//! `pair <left-state> <right-state>` directive per line.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{is_identifier, ModalSystem, SystemDraft, Violation};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing `initial` directive")]
    MissingInitial,
    #[error("invalid system: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

/// Splits a line into whitespace-separated tokens, dropping `#` comments.
fn tokenize(line: &str) -> Vec<Token<'_>> {
    let line = match line.find('#') {
        Some(index) => &line[..index],
        None => line,
    };
    let mut tokens = Vec::new();
    let mut start = None;
    for (index, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(index),
            (true, Some(s)) => {
                tokens.push(Token {
                    text: &line[s..index],
                    column: line[..s].chars().count() + 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    tokens
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn identifiers<'a>(line: usize, tokens: &'a [Token<'a>]) -> Result<Vec<&'a str>, ParseError> {
    tokens
        .iter()
        .map(|token| {
            if is_identifier(token.text) {
                Ok(token.text)
            } else {
                Err(syntax(
                    line,
                    token.column,
                    format!("`{}` is not a valid identifier", token.text),
                ))
            }
        })
        .collect()
}

fn push_unique(list: &mut Vec<String>, item: &str) {
    if !list.iter().any(|existing| existing == item) {
        list.push(item.to_string());
    }
}

/// Parses a model. Systems without a `system` directive are named `system`.
pub fn parse_system(text: &str) -> Result<ModalSystem, ParseError> {
    let mut name: Option<(String, usize)> = None;
    let mut draft = SystemDraft::default();
    let mut initial_line = 0;

    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let tokens = tokenize(raw);
        let Some((directive, args)) = tokens.split_first() else {
            continue;
        };
        let arity = |expected: usize| {
            if args.len() == expected {
                Ok(())
            } else {
                Err(syntax(
                    line,
                    directive.column,
                    format!(
                        "`{}` takes {expected} argument(s), found {}",
                        directive.text,
                        args.len()
                    ),
                ))
            }
        };
        match directive.text {
            "system" => {
                arity(1)?;
                let ids = identifiers(line, args)?;
                match &name {
                    Some((existing, _)) if existing != ids[0] => {
                        return Err(syntax(
                            line,
                            args[0].column,
                            format!("system already named `{existing}`"),
                        ))
                    }
                    _ => name = Some((ids[0].to_string(), line)),
                }
            }
            "initial" => {
                arity(1)?;
                let ids = identifiers(line, args)?;
                match &draft.initial {
                    Some(existing) if existing != ids[0] => {
                        return Err(syntax(
                            line,
                            args[0].column,
                            format!("initial state already set to `{existing}` on line {initial_line}"),
                        ))
                    }
                    _ => {
                        draft.initial = Some(ids[0].to_string());
                        initial_line = line;
                    }
                }
            }
            "states" => {
                for id in identifiers(line, args)? {
                    push_unique(&mut draft.states, id);
                }
            }
            "alphabet" => {
                for id in identifiers(line, args)? {
                    push_unique(&mut draft.alphabet, id);
                }
            }
            "must" | "opt" => {
                arity(3)?;
                let ids = identifiers(line, args)?;
                let triple = (ids[0].to_string(), ids[1].to_string(), ids[2].to_string());
                let (same, other) = if directive.text == "must" {
                    (&mut draft.necessary, &draft.optional)
                } else {
                    (&mut draft.optional, &draft.necessary)
                };
                if other.contains(&triple) {
                    return Err(syntax(
                        line,
                        directive.column,
                        format!(
                            "transition {} --{}--> {} is declared both necessary and optional",
                            triple.0, triple.1, triple.2
                        ),
                    ));
                }
                if !same.contains(&triple) {
                    same.push(triple);
                }
            }
            other => return Err(syntax(line, directive.column, format!("unknown directive `{other}`"))),
        }
    }

    let Some(initial) = draft.initial.clone() else {
        return Err(ParseError::MissingInitial);
    };
    // Infer undeclared states and actions, initial state first.
    let mut states = Vec::new();
    push_unique(&mut states, &initial);
    for state in std::mem::take(&mut draft.states) {
        push_unique(&mut states, &state);
    }
    for (source, action, target) in draft.necessary.iter().chain(&draft.optional) {
        push_unique(&mut states, source);
        push_unique(&mut states, target);
        push_unique(&mut draft.alphabet, action);
    }
    draft.states = states;
    draft.name = name.map(|(n, _)| n).unwrap_or_else(|| "system".to_string());
    draft.build().map_err(|e| match e {
        crate::model::ModelError::Invalid(v) => ParseError::Invalid(v),
        crate::model::ModelError::NotLts(_) => unreachable!("build never checks for LTS"),
    })
}

/// Canonical textual form: every state and action is declared, transitions
/// follow in (source, action, target) declaration order.
pub fn serialize(system: &ModalSystem) -> String {
    let mut out = String::new();
    writeln!(out, "system {}", system.name()).unwrap();
    writeln!(out, "initial {}", system.state_name(system.initial())).unwrap();
    writeln!(out, "states {}", system.states().join(" ")).unwrap();
    if system.alphabet().is_empty() {
        writeln!(out, "alphabet").unwrap();
    } else {
        writeln!(out, "alphabet {}", system.alphabet().join(" ")).unwrap();
    }
    for t in system.transitions() {
        writeln!(
            out,
            "{} {} {} {}",
            t.modality.keyword(),
            system.state_name(t.source),
            system.action_name(t.action),
            system.state_name(t.target)
        )
        .unwrap();
    }
    out
}

/// Parses a relation file into (left, right) state-name pairs, in file order
/// with duplicates removed.
pub fn parse_relation(text: &str) -> Result<Vec<(String, String)>, ParseError> {
    let mut pairs = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let tokens = tokenize(raw);
        let Some((directive, args)) = tokens.split_first() else {
            continue;
        };
        if directive.text != "pair" {
            return Err(syntax(
                line,
                directive.column,
                format!("unknown directive `{}`", directive.text),
            ));
        }
        if args.len() != 2 {
            return Err(syntax(
                line,
                directive.column,
                format!("`pair` takes 2 arguments, found {}", args.len()),
            ));
        }
        let ids = identifiers(line, args)?;
        let pair = (ids[0].to_string(), ids[1].to_string());
        if !pairs.contains(&pair) {
            pairs.push(pair);
        }
    }
    Ok(pairs)
}

pub fn serialize_relation(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .map(|(left, right)| format!("pair {left} {right}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1_T: &str = "\
# optional arcs are dashed in drawings
system T
initial t0
opt  t0 a t1
must t1 a t0
opt  t0 a t2
";

    #[test]
    fn parses_fig1_t() {
        let t = parse_system(FIG1_T).unwrap();
        assert_eq!(t.name(), "T");
        assert_eq!(t.states(), ["t0", "t1", "t2"]);
        assert_eq!(t.optional().count(), 2);
        assert_eq!(t.necessary().count(), 1);
    }

    #[test]
    fn initial_only() {
        let s = parse_system("initial s0\n").unwrap();
        assert_eq!(s.states(), ["s0"]);
        assert_eq!(s.transition_count(), 0);
        assert!(s.alphabet().is_empty());
    }

    #[test]
    fn conflicting_modality_is_rejected_with_position() {
        let err = parse_system("initial p\nmust p a q\n  opt p a q\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, column: 3, .. }), "{err}");
    }

    #[test]
    fn duplicate_directives_are_idempotent() {
        let once = parse_system("initial p\nmust p a q\n").unwrap();
        let twice = parse_system("initial p\ninitial p\nmust p a q\nmust p a q\n").unwrap();
        assert_eq!(once, twice);
        assert!(parse_system("initial p\ninitial q\n").is_err());
    }

    #[test]
    fn syntax_errors_report_line_and_column() {
        assert_eq!(parse_system("must p a q\n"), Err(ParseError::MissingInitial));
        match parse_system("initial p\nmust p a\n").unwrap_err() {
            ParseError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 1)),
            other => panic!("{other}"),
        }
        match parse_system("initial p\nstates q r-s\n").unwrap_err() {
            ParseError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 10)),
            other => panic!("{other}"),
        }
        assert!(parse_system("initial p\nfrobnicate\n").is_err());
    }

    #[test]
    fn primes_are_identifier_characters() {
        let s = parse_system("initial i0'\nmust i0' c i1'\n").unwrap();
        assert_eq!(s.states(), ["i0'", "i1'"]);
    }

    #[test]
    fn canonical_round_trip() {
        let t = parse_system(FIG1_T).unwrap();
        let text = serialize(&t);
        assert_eq!(parse_system(&text).unwrap(), t);
        assert_eq!(serialize(&parse_system(&text).unwrap()), text);
    }

    #[test]
    fn relation_files() {
        let pairs = parse_relation("# caption relation\npair s0 t0\npair s t2 # tail\n\npair s0 t0\n").unwrap();
        assert_eq!(pairs, vec![("s0".into(), "t0".into()), ("s".into(), "t2".into())]);
        assert_eq!(parse_relation(&serialize_relation(&pairs)).unwrap(), pairs);
        assert!(parse_relation("pair s0\n").is_err());
        assert!(parse_relation("must s0 a t0\n").is_err());
    }
}
