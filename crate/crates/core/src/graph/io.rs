//! Edge-list and GML readers.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{parse_error, Graph, GraphBuilder};
use crate::error::{GraphError, ParseError};

/// Parses `u v [w]` lines. `#` starts a comment line.
///
/// Node tokens are re-indexed densely in order of first appearance and kept as
/// labels. Self-loops and duplicate edges are dropped and counted in
/// [`Graph::dropped`].
pub fn load_edge_list<'a>(text: &'a str) -> Result<Graph, GraphError> {
    let mut ids: HashMap<&'a str, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut raw: Vec<(usize, usize, Option<f64>)> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if !(2..=3).contains(&tokens.len()) {
            return Err(parse_error(
                line_no,
                format!("expected `u v [weight]`, found {} tokens", tokens.len()),
            )
            .into());
        }
        let weight = match tokens.get(2) {
            Some(tok) => {
                let w: f64 = tok
                    .parse()
                    .map_err(|_| parse_error(line_no, format!("invalid weight `{tok}`")))?;
                if !(w.is_finite() && w > 0.0) {
                    return Err(parse_error(line_no, format!("weight must be positive, got `{tok}`")).into());
                }
                Some(w)
            }
            None => None,
        };
        let mut index_of = |tok: &'a str| -> usize {
            *ids.entry(tok).or_insert_with(|| {
                labels.push(tok.to_string());
                labels.len() - 1
            })
        };
        let u = index_of(tokens[0]);
        let v = index_of(tokens[1]);
        raw.push((u, v, weight));
    }

    let mut builder = GraphBuilder::with_labels(labels);
    for (u, v, w) in raw {
        builder.add_edge(u, v, w)?;
    }
    Ok(builder.build())
}

/// Serializes to the edge-list format read by [`load_edge_list`].
///
/// Isolated nodes cannot be expressed in this format and are not written.
pub fn to_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} nodes, {} edges", g.node_count(), g.edge_count());
    for (idx, &(u, v)) in g.edges().iter().enumerate() {
        match g.weights() {
            Some(w) => {
                let _ = writeln!(out, "{} {} {}", g.label(u), g.label(v), w[idx]);
            }
            None => {
                let _ = writeln!(out, "{} {}", g.label(u), g.label(v));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Word(&'a str),
    Str(&'a str),
}

fn tokenize(text: &str) -> Result<Vec<(Token<'_>, usize)>, ParseError> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'[' => {
                tokens.push((Token::Open, line));
                i += 1;
            }
            b']' => {
                tokens.push((Token::Close, line));
                i += 1;
            }
            b'"' => {
                let start_line = line;
                let start = i + 1;
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    if bytes[i] == b'\n' {
                        line += 1;
                    }
                    i += 1;
                }
                if i >= bytes.len() {
                    return Err(parse_error(start_line, "unterminated string"));
                }
                tokens.push((Token::Str(&text[start..i]), start_line));
                i += 1;
            }
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'[' | b']' | b'"') {
                    i += 1;
                }
                tokens.push((Token::Word(&text[start..i]), line));
            }
        }
    }
    Ok(tokens)
}

#[derive(Debug)]
enum Value<'a> {
    Scalar(&'a str),
    List(Vec<Entry<'a>>),
}

#[derive(Debug)]
struct Entry<'a> {
    key: &'a str,
    value: Value<'a>,
    line: usize,
}

struct Parser<'a> {
    tokens: Vec<(Token<'a>, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn last_line(&self) -> usize {
        self.tokens.last().map_or(1, |t| t.1)
    }

    /// Parses `key value` pairs until `]` (when nested) or end of input.
    fn entries(&mut self, nested: bool) -> Result<Vec<Entry<'a>>, ParseError> {
        let mut out = Vec::new();
        loop {
            let Some((tok, line)) = self.tokens.get(self.pos).cloned() else {
                if nested {
                    return Err(parse_error(self.last_line(), "unbalanced `[`"));
                }
                return Ok(out);
            };
            self.pos += 1;
            let key = match tok {
                Token::Close if nested => return Ok(out),
                Token::Word(w) => w,
                other => return Err(parse_error(line, format!("expected a key, found {other:?}"))),
            };
            let Some((val, vline)) = self.tokens.get(self.pos).cloned() else {
                return Err(parse_error(line, format!("key `{key}` has no value")));
            };
            self.pos += 1;
            let value = match val {
                Token::Open => Value::List(self.entries(true)?),
                Token::Word(w) | Token::Str(w) => Value::Scalar(w),
                Token::Close => return Err(parse_error(vline, format!("key `{key}` has no value"))),
            };
            out.push(Entry { key, value, line });
        }
    }
}

fn scalar<'a>(entries: &[Entry<'a>], key: &str) -> Option<&'a str> {
    entries.iter().find_map(|e| match (e.key == key, &e.value) {
        (true, Value::Scalar(s)) => Some(*s),
        _ => None,
    })
}

/// Parses the GML subset `graph [ node [ id N ] ... edge [ source A target B ] ... ]`.
///
/// Keys are case-sensitive; unknown keys (including nested blocks) are skipped.
/// Node ids become labels; an optional numeric `weight` on edges is honored.
pub fn load_gml(text: &str) -> Result<Graph, GraphError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
    };
    let top = parser.entries(false)?;
    let graph = top
        .iter()
        .find_map(|e| match (e.key, &e.value) {
            ("graph", Value::List(items)) => Some(items),
            _ => None,
        })
        .ok_or_else(|| parse_error(1, "missing `graph [ ... ]` block"))?;

    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut labels = Vec::new();
    for entry in graph.iter().filter(|e| e.key == "node") {
        let Value::List(items) = &entry.value else {
            return Err(parse_error(entry.line, "`node` must be a block").into());
        };
        let id = scalar(items, "id").ok_or_else(|| parse_error(entry.line, "node block without `id`"))?;
        if ids.insert(id, labels.len()).is_some() {
            return Err(parse_error(entry.line, format!("duplicate node id {id}")).into());
        }
        labels.push(id.to_string());
    }

    let mut builder = GraphBuilder::with_labels(labels);
    for entry in graph.iter().filter(|e| e.key == "edge") {
        let Value::List(items) = &entry.value else {
            return Err(parse_error(entry.line, "`edge` must be a block").into());
        };
        let endpoint = |key: &str| -> Result<usize, ParseError> {
            let id = scalar(items, key)
                .ok_or_else(|| parse_error(entry.line, format!("edge block without `{key}`")))?;
            ids.get(id)
                .copied()
                .ok_or_else(|| parse_error(entry.line, format!("edge {key} references unknown node id {id}")))
        };
        let (u, v) = (endpoint("source")?, endpoint("target")?);
        let weight = match scalar(items, "weight") {
            Some(w) => {
                let w: f64 = w
                    .parse()
                    .map_err(|_| parse_error(entry.line, format!("invalid edge weight `{w}`")))?;
                if !(w.is_finite() && w > 0.0) {
                    return Err(parse_error(entry.line, "edge weight must be positive").into());
                }
                Some(w)
            }
            None => None,
        };
        builder.add_edge(u, v, weight)?;
    }
    Ok(builder.build())
}
