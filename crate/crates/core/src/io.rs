//! Text formats.
//!
//! Hypergraph: `H <n> <m>` then m lines `<weight> <v1> ... <vk>`.
//! Stream: `S <n>` then `+ <weight> <v1> ... <vk>` or `- <id>` lines.
//! Lines starting with `#` are comments in both.

use crate::error::{Error, Result};
use crate::hypergraph::{EdgeId, Hyperedge, Hypergraph, VertexId};
use std::fmt::Write as _;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| perr(line, format!("bad {what} `{tok}`")))
}

fn parse_edge_body<'a>(
    toks: impl Iterator<Item = &'a str>,
    n: usize,
    line: usize,
) -> Result<(f64, Vec<VertexId>)> {
    let mut toks = toks.peekable();
    let w_tok = toks.next().ok_or_else(|| perr(line, "missing weight"))?;
    let weight: f64 = parse_num(w_tok, line, "weight")?;
    if !(weight.is_finite() && weight > 0.0) {
        return Err(perr(line, format!("non-positive weight {weight}")));
    }
    let mut vs = Vec::new();
    for t in toks {
        let v: VertexId = parse_num(t, line, "vertex")?;
        if v >= n {
            return Err(perr(line, format!("vertex {v} >= n = {n}")));
        }
        if let Some(&last) = vs.last() {
            if v == last {
                return Err(perr(line, format!("duplicate vertex {v}")));
            }
            if v < last {
                return Err(perr(line, "vertices not strictly increasing"));
            }
        }
        vs.push(v);
    }
    if vs.is_empty() {
        return Err(perr(line, "hyperedge without vertices"));
    }
    Ok((weight, vs))
}

pub fn parse_hypergraph(text: &str) -> Result<Hypergraph> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 3 || toks[0] != "H" {
        return Err(perr(hl, "expected header `H <n> <m>`"));
    }
    let n: usize = parse_num(toks[1], hl, "n")?;
    let m: usize = parse_num(toks[2], hl, "m")?;
    let mut h = Hypergraph::new(n);
    let mut count = 0;
    for (ln, l) in lines {
        let (w, vs) = parse_edge_body(l.split_whitespace(), n, ln)?;
        h.push(vs, w)?;
        count += 1;
    }
    if count != m {
        return Err(perr(hl, format!("header declares {m} edges, found {count}")));
    }
    Ok(h)
}

/// Writes edges in id order; ids are implied by position.
pub fn serialize_hypergraph(h: &Hypergraph) -> String {
    let mut s = String::new();
    writeln!(s, "H {} {}", h.n(), h.len()).unwrap();
    for e in h.edges() {
        write_edge_body(&mut s, e.weight, &e.vertices);
    }
    s
}

fn write_edge_body(s: &mut String, w: f64, vs: &[VertexId]) {
    write!(s, "{w}").unwrap();
    for v in vs {
        write!(s, " {v}").unwrap();
    }
    s.push('\n');
}

#[derive(Clone, Debug, PartialEq)]
pub enum StreamOp {
    Insert { weight: f64, vertices: Vec<VertexId> },
    Delete(EdgeId),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Stream {
    pub n: usize,
    pub ops: Vec<StreamOp>,
}

impl Stream {
    pub fn new(n: usize) -> Self {
        Stream { n, ops: Vec::new() }
    }

    pub fn insert(&mut self, vertices: Vec<VertexId>, weight: f64) {
        self.ops.push(StreamOp::Insert { weight, vertices });
    }

    pub fn delete(&mut self, id: EdgeId) {
        self.ops.push(StreamOp::Delete(id));
    }

    pub fn insert_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|o| matches!(o, StreamOp::Insert { .. }))
            .count()
    }

    /// Stream that inserts every edge of `h` in id order.
    pub fn from_hypergraph(h: &Hypergraph) -> Self {
        Stream {
            n: h.n(),
            ops: h
                .edges()
                .iter()
                .map(|e| StreamOp::Insert {
                    weight: e.weight,
                    vertices: e.vertices.clone(),
                })
                .collect(),
        }
    }

    /// Replays the stream into the hypergraph of live edges.
    /// Insert ids are assigned sequentially from `first_id`.
    pub fn replay(&self, first_id: EdgeId) -> Result<Hypergraph> {
        let mut h = Hypergraph::new(self.n);
        let mut next = first_id;
        for op in &self.ops {
            match op {
                StreamOp::Insert { weight, vertices } => {
                    h.insert(Hyperedge::new(next, vertices.clone(), *weight))?;
                    next += 1;
                }
                StreamOp::Delete(id) => {
                    h.remove(*id)?;
                }
            }
        }
        Ok(h)
    }
}

pub fn parse_stream(text: &str) -> Result<Stream> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "missing header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 || toks[0] != "S" {
        return Err(perr(hl, "expected header `S <n>`"));
    }
    let n: usize = parse_num(toks[1], hl, "n")?;
    let mut st = Stream::new(n);
    for (ln, l) in lines {
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("+") => {
                let (weight, vertices) = parse_edge_body(toks, n, ln)?;
                st.ops.push(StreamOp::Insert { weight, vertices });
            }
            Some("-") => {
                let id_tok = toks.next().ok_or_else(|| perr(ln, "missing id"))?;
                let id: EdgeId = parse_num(id_tok, ln, "id")?;
                if toks.next().is_some() {
                    return Err(perr(ln, "trailing tokens after delete id"));
                }
                st.ops.push(StreamOp::Delete(id));
            }
            _ => return Err(perr(ln, "expected `+` or `-`")),
        }
    }
    Ok(st)
}

pub fn serialize_stream(st: &Stream) -> String {
    let mut s = String::new();
    writeln!(s, "S {}", st.n).unwrap();
    for op in &st.ops {
        match op {
            StreamOp::Insert { weight, vertices } => {
                s.push_str("+ ");
                write_edge_body(&mut s, *weight, vertices);
            }
            StreamOp::Delete(id) => writeln!(s, "- {id}").unwrap(),
        }
    }
    s
}
