use std::collections::HashSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{CouplingMatrix, CsrMatrix, ProblemInstance, ValueKind};

/// A weighted undirected edge with 1-based endpoints, as written in files.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// A graph in the G-set / rudy edge-list format:
///
/// ```text
/// % optional comments ('%' or '#')
/// n m
/// i j w      (m lines, 1-based nodes)
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeListGraph {
    pub n: usize,
    pub edges: Vec<Edge>,
}

impl EdgeListGraph {
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Fraction of absent node pairs, `1 - m / (n (n-1) / 2)`.
    pub fn sparsity(&self) -> f64 {
        let pairs = self.n as f64 * (self.n as f64 - 1.0) / 2.0;
        1.0 - self.m() as f64 / pairs
    }

    /// Symmetric 0-based adjacency matrix in CSR form.
    pub fn adjacency(&self) -> CouplingMatrix {
        let n = self.n;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in &self.edges {
            rows[e.i - 1].push((e.j - 1, e.w));
            rows[e.j - 1].push((e.i - 1, e.w));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(2 * self.edges.len());
        let mut vals = Vec::with_capacity(2 * self.edges.len());
        offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        let integral = self.edges.iter().all(|e| e.w.fract() == 0.0);
        let csr = CsrMatrix::new(n, offsets, cols, vals).expect("edge list validated");
        let kind = if integral { ValueKind::Integer } else { ValueKind::Real };
        CouplingMatrix::from_csr_unchecked(csr, kind)
    }
}

fn is_skippable(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('%') || t.starts_with('#')
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the edge-list format. Line numbers in errors are 1-based.
pub fn parse_edgelist(text: &str) -> Result<EdgeListGraph> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !is_skippable(l));
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header line \"n m\""))?;
    let hline = hline + 1;
    let mut tok = header.split_whitespace();
    let n: usize = tok
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(hline, "bad node count"))?;
    let m: usize = tok
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(hline, "bad edge count"))?;
    if tok.next().is_some() {
        return Err(parse_err(hline, "header has more than two fields"));
    }

    let mut edges = Vec::with_capacity(m.min(1 << 24));
    let mut seen = HashSet::with_capacity(m.min(1 << 24));
    for (idx, line) in lines {
        let lno = idx + 1;
        if edges.len() == m {
            return Err(parse_err(lno, format!("more than the declared {m} edges")));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(lno, format!("expected \"i j w\", got {:?}", line.trim())));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(lno, format!("bad node index {:?}", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(lno, format!("bad node index {:?}", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(lno, format!("bad weight {:?}", fields[2])))?;
        if !w.is_finite() {
            return Err(parse_err(lno, "weight is not finite"));
        }
        for v in [i, j] {
            if v < 1 || v > n {
                return Err(parse_err(lno, format!("node index {v} out of range 1..={n}")));
            }
        }
        if i == j {
            return Err(parse_err(lno, format!("self-loop on node {i}")));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(parse_err(lno, format!("duplicate edge {i}-{j}")));
        }
        edges.push(Edge { i, j, w });
    }
    if edges.len() != m {
        return Err(parse_err(
            text.lines().count().max(1),
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    Ok(EdgeListGraph { n, edges })
}

/// Writes the graph back in edge-list form. Integral weights are printed
/// without a fractional part.
pub fn write_edgelist<W: Write>(g: &EdgeListGraph, mut sink: W) -> Result<()> {
    writeln!(sink, "{} {}", g.n, g.m())?;
    for e in &g.edges {
        if e.w.fract() == 0.0 && e.w.abs() < 1e15 {
            writeln!(sink, "{} {} {}", e.i, e.j, e.w as i64)?;
        } else {
            writeln!(sink, "{} {} {:?}", e.i, e.j, e.w)?;
        }
    }
    Ok(())
}

/// MAX-CUT instance of a graph: `J = -W/2`, with the cut offset recorded so
/// traces can report cut values next to energies.
pub fn graph_to_instance(name: &str, g: &EdgeListGraph) -> ProblemInstance {
    ProblemInstance::from_maxcut(name, &g.adjacency())
}

/// Inverse of [`graph_to_instance`]: the graph with `W = -2J`, one edge per
/// nonzero upper-triangular coupling.
pub fn coupling_to_graph(j: &CouplingMatrix) -> EdgeListGraph {
    let mut edges = Vec::new();
    for i in 0..j.n() {
        j.for_each_in_row(i, |k, v| {
            if k > i && v != 0.0 {
                edges.push(Edge {
                    i: i + 1,
                    j: k + 1,
                    w: -2.0 * v,
                });
            }
        });
    }
    EdgeListGraph { n: j.n(), edges }
}
