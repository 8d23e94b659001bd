use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Directed graph on nodes `0..n`; an edge `(src, dst)` means actions of
/// `src` excite `dst`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Sorts and deduplicates the edges; self-loops are dropped.
    pub fn new(n: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(s, d)) = edges.iter().find(|(s, d)| *s >= n || *d >= n) {
            return Err(Error::IndexOutOfRange { index: s.max(d), n });
        }
        edges.retain(|(s, d)| s != d);
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { n, edges })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, edges: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(s, _) in &self.edges {
            deg[s] += 1;
        }
        deg
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# n={}", self.n)?;
        for (s, d) in &self.edges {
            writeln!(w, "{s} {d}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("n=") {
                    n = Some(v.trim().parse::<usize>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?);
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                parts
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: expected 'src dst'", lineno + 1)))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let s = next()?;
            let d = next()?;
            edges.push((s, d));
        }
        let n = n.ok_or_else(|| Error::Parse("missing '# n=<count>' header".into()))?;
        Self::new(n, edges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_edge_list(f)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_edge_list(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
