//! graph6 encoding (short form, up to 62 vertices).
//!
//! The adjacency upper triangle is read column by column, `(0,1), (0,2),
//! (1,2), (0,3), ...`, packed six bits per printable byte with offset 63.

use super::Graph;
use crate::error::{Error, Result};

const HEADER: &str = ">>graph6<<";
const MAX_SHORT_N: usize = 62;

pub fn parse_graph6(text: &str) -> Result<Graph> {
    let line = text.trim_end_matches(['\n', '\r']);
    let (body, base) = match line.strip_prefix(HEADER) {
        Some(rest) => (rest.as_bytes(), HEADER.len()),
        None => (line.as_bytes(), 0),
    };
    let Some(&first) = body.first() else {
        return Err(Error::parse_at_byte(base, "empty graph6 line"));
    };
    if first == 126 {
        return Err(Error::parse_at_byte(
            base,
            "long-form graph6 header (n > 62) is not supported",
        ));
    }
    if !(63..=126).contains(&first) {
        return Err(Error::parse_at_byte(base, format!("invalid size byte {first:#04x}")));
    }
    let n = (first - 63) as usize;
    let nbits = n * n.saturating_sub(1) / 2;
    let need = nbits.div_ceil(6);
    let data = &body[1..];
    if data.len() != need {
        return Err(Error::parse_at_byte(
            base + 1 + data.len().min(need),
            format!("expected {need} adjacency bytes for n = {n}, found {}", data.len()),
        ));
    }
    let mut bits = Vec::with_capacity(need * 6);
    for (off, &b) in data.iter().enumerate() {
        if !(63..=126).contains(&b) {
            return Err(Error::parse_at_byte(base + 1 + off, format!("invalid data byte {b:#04x}")));
        }
        let v = b - 63;
        bits.extend((0..6).rev().map(|s| (v >> s) & 1 == 1));
    }
    if bits[nbits..].iter().any(|&b| b) {
        return Err(Error::parse_at_byte(
            base + body.len() - 1,
            "nonzero padding bits after the adjacency triangle",
        ));
    }
    let mut edges = Vec::new();
    let mut k = 0;
    for j in 1..n {
        for i in 0..j {
            if bits[k] {
                edges.push((i, j));
            }
            k += 1;
        }
    }
    Graph::new(n, edges)
}

/// Parse one graph per non-empty line; errors carry the line number.
pub fn parse_graph6_lines(text: &str) -> Result<Vec<Graph>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(no, l)| {
            parse_graph6(l.trim()).map_err(|e| match e {
                Error::Parse { location, message } => Error::Parse {
                    location: format!("line {}, {location}", no + 1),
                    message,
                },
                other => other,
            })
        })
        .collect()
}

pub fn encode_graph6(g: &Graph) -> Result<String> {
    let n = g.n();
    if n > MAX_SHORT_N {
        return Err(Error::input(format!("graph6 short form supports n <= 62, got {n}")));
    }
    let nbits = n * n.saturating_sub(1) / 2;
    let mut bits = vec![false; nbits.div_ceil(6) * 6];
    for &(i, j) in g.edges() {
        bits[j * (j - 1) / 2 + i] = true;
    }
    let mut out = String::with_capacity(1 + bits.len() / 6);
    out.push((n as u8 + 63) as char);
    for chunk in bits.chunks(6) {
        let v = chunk.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8);
        out.push((v + 63) as char);
    }
    Ok(out)
}
