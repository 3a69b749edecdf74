use crate::error::{Error, Result};
use crate::ising::IsingInstance;

/// Parse whitespace-separated `i j w` lines (`i == j` gives a field).
///
/// `#` starts a comment. An optional `n <count>` line declares the qubit
/// count; otherwise it is one past the largest index seen. Duplicate terms
/// are rejected with the offending line number.
pub fn parse_edge_list(text: &str) -> Result<IsingInstance<f64>> {
    let mut declared: Option<(usize, usize)> = None;
    let mut terms: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] == "n" {
            if toks.len() != 2 || declared.is_some() || !terms.is_empty() {
                return Err(Error::parse_at_line(
                    line_no,
                    "`n <count>` must appear once, before any term",
                ));
            }
            let n = toks[1]
                .parse::<usize>()
                .map_err(|_| Error::parse_at_line(line_no, format!("bad qubit count {:?}", toks[1])))?;
            declared = Some((n, line_no));
            continue;
        }
        if toks.len() != 3 {
            return Err(Error::parse_at_line(
                line_no,
                format!("expected `i j w`, found {} tokens", toks.len()),
            ));
        }
        let idx = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| Error::parse_at_line(line_no, format!("bad index {t:?}")))
        };
        let i = idx(toks[0])?;
        let j = idx(toks[1])?;
        let w = toks[2]
            .parse::<f64>()
            .ok()
            .filter(|w| w.is_finite())
            .ok_or_else(|| Error::parse_at_line(line_no, format!("bad weight {:?}", toks[2])))?;
        if let Some((n, _)) = declared {
            if i >= n || j >= n {
                return Err(Error::parse_at_line(
                    line_no,
                    format!("index out of declared range n = {n}"),
                ));
            }
        }
        let key = (i.min(j), i.max(j));
        if terms.iter().any(|t| (t.0, t.1) == key) {
            return Err(Error::parse_at_line(
                line_no,
                format!("duplicate term ({}, {})", key.0, key.1),
            ));
        }
        terms.push((key.0, key.1, line_no, w));
    }
    let n = match declared {
        Some((n, _)) => n,
        None => terms.iter().map(|t| t.1 + 1).max().unwrap_or(0),
    };
    if n == 0 {
        return Err(Error::parse_at_line(1, "edge list declares no qubits"));
    }
    let couplings = terms
        .iter()
        .filter(|t| t.0 != t.1)
        .map(|t| (t.0, t.1, t.3))
        .collect();
    let fields = terms.iter().filter(|t| t.0 == t.1).map(|t| (t.0, t.3)).collect();
    IsingInstance::new(n, couplings, fields, "edge-list")
}
