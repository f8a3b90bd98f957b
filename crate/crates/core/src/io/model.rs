//! Plain-text model format.
//!
//! ```text
//! # comment
//! mc <numStates> <initialState>
//! <src> <dst> <prob>
//! ...
//! ```
//!
//! Fields are whitespace separated, `#` starts a comment anywhere on a line.

use std::fmt::Write as _;

use thiserror::Error;

use crate::chain::{ChainError, Distribution, MarkovChain, StateId, INPUT_SUM_TOLERANCE};
use crate::sum::NeumaierSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: ChainError },
}

impl ModelError {
    pub fn line(&self) -> usize {
        match self {
            ModelError::Syntax { line, .. } | ModelError::Invalid { line, .. } => *line,
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(
    tok: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, ModelError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| syntax(line, format!("bad {what} `{tok}`")))
}

pub fn parse_model(text: &str) -> Result<MarkovChain, ModelError> {
    let mut header: Option<(usize, usize, usize)> = None;
    let mut rows: Vec<Vec<(StateId, f64, usize)>> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(first) = toks.next() else { continue };
        match header {
            None => {
                if first != "mc" {
                    return Err(syntax(
                        line,
                        "expected header `mc <numStates> <initialState>`",
                    ));
                }
                let n: usize = field(toks.next(), line, "state count")?;
                let init: usize = field(toks.next(), line, "initial state")?;
                if n == 0 {
                    return Err(ModelError::Invalid {
                        line,
                        source: ChainError::Empty,
                    });
                }
                if init >= n {
                    return Err(ModelError::Invalid {
                        line,
                        source: ChainError::BadInitial(init),
                    });
                }
                header = Some((n, init, line));
                rows = vec![Vec::new(); n];
            }
            Some((n, _, _)) => {
                let src: usize = field(Some(first), line, "source state")?;
                let dst: usize = field(toks.next(), line, "target state")?;
                let p: f64 = field(toks.next(), line, "probability")?;
                if src >= n {
                    return Err(syntax(line, format!("source state {src} out of range")));
                }
                if dst >= n {
                    return Err(ModelError::Invalid {
                        line,
                        source: ChainError::DanglingSuccessor {
                            state: src,
                            target: dst,
                        },
                    });
                }
                if !p.is_finite() || p < 0.0 {
                    return Err(ModelError::Invalid {
                        line,
                        source: ChainError::NegativeProbability { state: src },
                    });
                }
                if rows[src].iter().any(|&(t, _, _)| t.index() == dst) {
                    return Err(ModelError::Invalid {
                        line,
                        source: ChainError::DuplicateSuccessor {
                            state: src,
                            target: dst,
                        },
                    });
                }
                rows[src].push((StateId(dst), p, line));
            }
        }
        if toks.next().is_some() {
            return Err(syntax(line, "trailing fields"));
        }
    }

    let (_, init, header_line) =
        header.ok_or_else(|| syntax(last_line.max(1), "missing header"))?;
    let mut transitions = Vec::with_capacity(rows.len());
    for (s, row) in rows.into_iter().enumerate() {
        let sum = row
            .iter()
            .map(|&(_, p, _)| p)
            .collect::<NeumaierSum>()
            .value();
        if (sum - 1.0).abs() > INPUT_SUM_TOLERANCE {
            let line = row.last().map_or(header_line, |&(_, _, l)| l);
            return Err(ModelError::Invalid {
                line,
                source: ChainError::BadProbabilitySum { state: s, sum },
            });
        }
        let entries = row.into_iter().map(|(t, p, _)| (t, p)).collect();
        let d = Distribution::new(s, entries).map_err(|source| ModelError::Invalid {
            line: header_line,
            source,
        })?;
        transitions.push(d);
    }
    MarkovChain::from_distributions(transitions, Some(StateId(init))).map_err(|source| {
        ModelError::Invalid {
            line: header_line,
            source,
        }
    })
}

/// Canonical text: header, then transitions by source and target, each
/// probability in shortest round-trip decimal form.
pub fn serialize_model(chain: &MarkovChain) -> String {
    let mut out = String::new();
    let init = chain.initial().map_or(0, StateId::index);
    writeln!(out, "mc {} {}", chain.num_states(), init).unwrap();
    for s in chain.states() {
        for (t, p) in chain.successors(s).iter() {
            writeln!(out, "{} {} {}", s, t, p).unwrap();
        }
    }
    out
}
