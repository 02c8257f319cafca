//! Line-oriented tabular POMDP format.
//!
//! ```text
//! # comment
//! states: s0 s1
//! actions: a0 a1
//! observations: o0 o1
//! discount: 0.95
//! start: uniform          # or one probability per state
//! T: a0 : s0 : s1 1.0
//! Z: a0 : s1 : o0 0.85
//! R: s0 : a0 -1
//! ```
//! Unlisted entries are zero.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pomdp::{validate_model, Pomdp};

struct Cursor<'a> {
    line: usize,
    text: &'a str,
}

impl<'a> Cursor<'a> {
    fn syntax(&self, at: &str, expected: &str) -> Error {
        let col = if at.is_empty() { self.text.len() + 1 } else { col_of(self.text, at) };
        Error::Syntax { line: self.line, col, expected: expected.to_string() }
    }

    fn semantic(&self, message: impl Into<String>) -> Error {
        Error::Semantic { line: self.line, message: message.into() }
    }
}

fn col_of(line: &str, token: &str) -> usize {
    let base = line.as_ptr() as usize;
    let p = token.as_ptr() as usize;
    if p >= base && p <= base + line.len() {
        line[..p - base].chars().count() + 1
    } else {
        1
    }
}

fn parse_f64(cur: &Cursor, tok: &str, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| cur.syntax(tok, what))
}

fn names(rest: &str) -> Vec<String> {
    rest.split_whitespace().map(str::to_string).collect()
}

#[derive(Default)]
struct Header {
    states: Option<Vec<String>>,
    actions: Option<Vec<String>>,
    observations: Option<Vec<String>>,
}

pub fn parse_pomdp(text: &str) -> Result<Pomdp> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let eof = text.lines().count().max(1);
    let mut header = Header::default();
    let mut discount: Option<f64> = None;
    let mut start: Option<(usize, Vec<String>)> = None;
    let mut model: Option<Pomdp> = None;
    let mut seen: HashMap<(char, usize, usize, usize), usize> = HashMap::new();
    let mut row_line: HashMap<String, usize> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let cur = Cursor { line: i + 1, text: raw };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, rest)) = content.split_once(':') else {
            return Err(cur.syntax(content, "`<keyword>:`"));
        };
        let key = key.trim();
        match key {
            "states" | "actions" | "observations" => {
                if model.is_some() {
                    return Err(cur.semantic(format!("`{key}:` must precede T/Z/R entries")));
                }
                let list = names(rest);
                if list.is_empty() {
                    return Err(cur.syntax("", "at least one name"));
                }
                let mut uniq = list.clone();
                uniq.sort();
                uniq.dedup();
                if uniq.len() != list.len() {
                    return Err(cur.semantic(format!("duplicate name in `{key}:`")));
                }
                let slot = match key {
                    "states" => &mut header.states,
                    "actions" => &mut header.actions,
                    _ => &mut header.observations,
                };
                if slot.replace(list).is_some() {
                    return Err(cur.semantic(format!("`{key}:` declared twice")));
                }
            }
            "discount" => {
                let tok = rest.trim();
                let v = parse_f64(&cur, tok, "a discount factor")?;
                if discount.replace(v).is_some() {
                    return Err(cur.semantic("`discount:` declared twice"));
                }
            }
            "start" => {
                if start.replace((cur.line, names(rest))).is_some() {
                    return Err(cur.semantic("`start:` declared twice"));
                }
            }
            "T" | "Z" | "R" => {
                if model.is_none() {
                    let (Some(s), Some(a), Some(o)) = (header.states.clone(), header.actions.clone(), header.observations.clone())
                    else {
                        return Err(cur.semantic("states, actions and observations must be declared before entries"));
                    };
                    let mut m = Pomdp::zeros(s, a, o, 0.0);
                    m.initial = vec![];
                    model = Some(m);
                }
                let m = model.as_mut().expect("model initialized");
                let parts: Vec<&str> = rest.split(':').collect();
                let want = if key == "R" { 2 } else { 3 };
                if parts.len() != want {
                    return Err(cur.syntax(rest, &format!("{want} `:`-separated fields")));
                }
                let last: Vec<&str> = parts[want - 1].split_whitespace().collect();
                if last.len() != 2 {
                    let at = last.get(2).copied().unwrap_or("");
                    return Err(cur.syntax(at, "`<name> <number>`"));
                }
                let value = parse_f64(&cur, last[1], "a number")?;
                let ids: Vec<&str> = parts[..want - 1].iter().map(|p| p.trim()).chain([last[0]]).collect();
                let lookup = |kind: &str, list: &[String], name: &str| -> Result<usize> {
                    list.iter()
                        .position(|x| x == name)
                        .ok_or_else(|| cur.semantic(format!("unknown {kind} `{name}`")))
                };
                let (tag, a, b, c) = match key {
                    "T" => {
                        let a = lookup("action", &m.actions, ids[0])?;
                        let s = lookup("state", &m.states, ids[1])?;
                        let s2 = lookup("state", &m.states, ids[2])?;
                        m.set_t(s, a, s2, value);
                        row_line.entry(format!("T(s={}, a={})", ids[1], ids[0])).or_insert(cur.line);
                        ('T', a, s, s2)
                    }
                    "Z" => {
                        let a = lookup("action", &m.actions, ids[0])?;
                        let s2 = lookup("state", &m.states, ids[1])?;
                        let o = lookup("observation", &m.observations, ids[2])?;
                        m.set_z(a, s2, o, value);
                        row_line.entry(format!("Z(a={}, s'={})", ids[0], ids[1])).or_insert(cur.line);
                        ('Z', a, s2, o)
                    }
                    _ => {
                        let s = lookup("state", &m.states, ids[0])?;
                        let a = lookup("action", &m.actions, ids[1])?;
                        m.set_r(s, a, value);
                        ('R', s, a, 0)
                    }
                };
                if let Some(prev) = seen.insert((tag, a, b, c), cur.line) {
                    return Err(cur.semantic(format!("entry already given on line {prev}")));
                }
            }
            other => return Err(cur.syntax(other, "one of states, actions, observations, discount, start, T, Z, R")),
        }
    }

    let mut m = match model {
        Some(m) => m,
        None => {
            let (Some(s), Some(a), Some(o)) = (header.states, header.actions, header.observations) else {
                return Err(Error::Semantic { line: eof, message: "missing states, actions or observations".into() });
            };
            Pomdp::zeros(s, a, o, 0.0)
        }
    };
    m.discount = discount.ok_or(Error::Semantic { line: eof, message: "missing `discount:`".into() })?;
    let ns = m.n_states();
    m.initial = match start {
        None => vec![1.0 / ns as f64; ns],
        Some((_, toks)) if toks.len() == 1 && toks[0] == "uniform" => vec![1.0 / ns as f64; ns],
        Some((line, toks)) => {
            if toks.len() != ns {
                return Err(Error::Semantic { line, message: format!("`start:` needs {ns} probabilities, got {}", toks.len()) });
            }
            toks.iter()
                .map(|t| t.parse::<f64>().map_err(|_| Error::Semantic { line, message: format!("bad probability `{t}`") }))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let violations = validate_model(&m);
    if let Some(v) = violations.first() {
        let line = row_line.get(&v.location).copied().unwrap_or(0);
        return Err(Error::Semantic { line, message: v.to_string() });
    }
    m.checked()
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

pub fn write_pomdp(m: &Pomdp) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "states: {}", m.states.join(" "));
    let _ = writeln!(out, "actions: {}", m.actions.join(" "));
    let _ = writeln!(out, "observations: {}", m.observations.join(" "));
    let _ = writeln!(out, "discount: {}", fmt_num(m.discount));
    let start: Vec<String> = m.initial.iter().map(|&p| fmt_num(p)).collect();
    let _ = writeln!(out, "start: {}", start.join(" "));
    out.push('\n');
    for a in 0..m.n_actions() {
        for s in 0..m.n_states() {
            for s2 in 0..m.n_states() {
                let p = m.t(s, a, s2);
                if p != 0.0 {
                    let _ = writeln!(out, "T: {} : {} : {} {}", m.actions[a], m.states[s], m.states[s2], fmt_num(p));
                }
            }
        }
    }
    out.push('\n');
    for a in 0..m.n_actions() {
        for s2 in 0..m.n_states() {
            for o in 0..m.n_observations() {
                let p = m.z(a, s2, o);
                if p != 0.0 {
                    let _ = writeln!(out, "Z: {} : {} : {} {}", m.actions[a], m.states[s2], m.observations[o], fmt_num(p));
                }
            }
        }
    }
    out.push('\n');
    for s in 0..m.n_states() {
        for a in 0..m.n_actions() {
            let r = m.r(s, a);
            if r != 0.0 {
                let _ = writeln!(out, "R: {} : {} {}", m.states[s], m.actions[a], fmt_num(r));
            }
        }
    }
    out
}
