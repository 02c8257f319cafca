//! Textual controller format.
//!
//! ```text
//! node listen action=listen initial
//!   on hear-left -> heard-left
//!   on hear-right -> heard-right
//! node heard-left action=listen
//!   on hear-left -> open-right
//! ```
//! Edge lines attach to the most recent `node` line. Nodes may be referenced
//! before they are declared. Without an `initial` marker the first node is initial.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fsc::{Fsc, FscWarning};
use crate::pomdp::Pomdp;

fn col_of(line: &str, token: &str) -> usize {
    let base = line.as_ptr() as usize;
    let p = token.as_ptr() as usize;
    if p >= base && p <= base + line.len() {
        line[..p - base].chars().count() + 1
    } else {
        1
    }
}

struct PendingEdge {
    line: usize,
    col: usize,
    from: usize,
    obs: usize,
    target: String,
}

/// Parses a controller against `m`. Returns the controller and load-time warnings.
pub fn parse_fsc(text: &str, m: &Pomdp) -> Result<(Fsc, Vec<FscWarning>)> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut nodes: Vec<String> = Vec::new();
    let mut actions: Vec<usize> = Vec::new();
    let mut initial: Option<(usize, usize)> = None;
    let mut edges: Vec<PendingEdge> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        let syntax = |tok: Option<&&str>, expected: &str| Error::Syntax {
            line,
            col: tok.map(|t| col_of(raw, t)).unwrap_or(content.trim_end().len() + 1),
            expected: expected.to_string(),
        };
        match toks.first().copied() {
            None => continue,
            Some("node") => {
                let name = toks.get(1).ok_or_else(|| syntax(None, "a node name"))?;
                let act = toks.get(2).ok_or_else(|| syntax(None, "`action=<name>`"))?;
                let aname = act.strip_prefix("action=").ok_or_else(|| syntax(toks.get(2), "`action=<name>`"))?;
                let a = m
                    .action_index(aname)
                    .ok_or_else(|| Error::UnknownAction { line, name: aname.to_string() })?;
                if nodes.iter().any(|n| n == name) {
                    return Err(Error::Semantic { line, message: format!("node `{name}` declared twice") });
                }
                match toks.get(3).copied() {
                    None => {}
                    Some("initial") => {
                        if let Some((_, prev)) = initial {
                            return Err(Error::Semantic { line, message: format!("second initial node (first on line {prev})") });
                        }
                        initial = Some((nodes.len(), line));
                    }
                    Some(_) => return Err(syntax(toks.get(3), "`initial` or end of line")),
                }
                if toks.len() > 4 {
                    return Err(syntax(toks.get(4), "end of line"));
                }
                nodes.push(name.to_string());
                actions.push(a);
            }
            Some("on") => {
                let from = nodes.len().checked_sub(1).ok_or_else(|| syntax(toks.first(), "a `node` line before edges"))?;
                let oname = toks.get(1).ok_or_else(|| syntax(None, "an observation name"))?;
                if toks.get(2) != Some(&"->") {
                    return Err(syntax(toks.get(2), "`->`"));
                }
                let target = toks.get(3).ok_or_else(|| syntax(None, "a target node"))?;
                if toks.len() > 4 {
                    return Err(syntax(toks.get(4), "end of line"));
                }
                let obs = m
                    .observation_index(oname)
                    .ok_or_else(|| Error::UnknownObservation { line, name: oname.to_string() })?;
                edges.push(PendingEdge { line, col: col_of(raw, target), from, obs, target: target.to_string() });
            }
            Some(_) => return Err(syntax(toks.first(), "`node` or `on`")),
        }
    }
    if nodes.is_empty() {
        return Err(Error::Semantic { line: 0, message: "controller declares no nodes".into() });
    }
    let mut next = vec![vec![None; m.n_observations()]; nodes.len()];
    for e in edges {
        let to = nodes.iter().position(|n| *n == e.target).ok_or(Error::Syntax {
            line: e.line,
            col: e.col,
            expected: format!("a declared node (found `{}`)", e.target),
        })?;
        if next[e.from][e.obs].replace(to).is_some() {
            return Err(Error::DuplicateEdge {
                line: e.line,
                node: nodes[e.from].clone(),
                observation: m.observations[e.obs].clone(),
            });
        }
    }
    let fsc = Fsc { nodes, initial: initial.map(|x| x.0).unwrap_or(0), action: actions, next };
    fsc.check_indices(m)?;
    let warnings = fsc.warnings(m);
    Ok((fsc, warnings))
}

pub fn write_fsc(pi: &Fsc, m: &Pomdp) -> String {
    let mut out = String::new();
    for n in 0..pi.n_nodes() {
        let init = if n == pi.initial { " initial" } else { "" };
        let _ = writeln!(out, "node {} action={}{}", pi.nodes[n], m.actions[pi.action[n]], init);
        for (o, nn) in pi.next[n].iter().enumerate() {
            if let Some(nn) = nn {
                let _ = writeln!(out, "  on {} -> {}", m.observations[o], pi.nodes[*nn]);
            }
        }
    }
    out
}
