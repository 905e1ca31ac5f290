//! Weighted graphs as metric measure spaces.
//!
//! Edge-list format: the first non-comment line holds the point count `N`,
//! each following line is `i j weight` with `weight > 0` read as an edge
//! length. Measure files hold `i mu` lines. `#` starts a comment.

use std::fs;
use std::path::{Path, PathBuf};

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

use super::MetricMeasureSpace;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub fn read_edge_list(path: &Path) -> Result<EdgeList> {
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, path)
}

pub(crate) fn parse_edge_list(text: &str, path: &Path) -> Result<EdgeList> {
    let mut lines = content_lines(text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing point-count header"))?;
    let n: usize = header
        .parse()
        .map_err(|_| parse_err(path, hl, format!("bad point count `{header}`")))?;
    if n == 0 {
        return Err(parse_err(path, hl, "point count must be positive"));
    }
    let mut edges = Vec::new();
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(path, ln, "expected `i j weight`"));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, ln, "bad index"))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(path, ln, "bad index"))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(path, ln, "bad weight"))?;
        if i >= n || j >= n {
            return Err(parse_err(path, ln, format!("index out of range 0..{n}")));
        }
        if i == j {
            return Err(parse_err(path, ln, "self loops are not allowed"));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(parse_err(path, ln, "edge length must be positive"));
        }
        edges.push((i, j, w));
    }
    Ok(EdgeList { n, edges })
}

/// Reads `i mu` lines. Points not listed keep `μ = 1`.
pub fn read_measure_file(path: &Path, n: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut mu = vec![1.0; n];
    let mut seen = vec![false; n];
    for (ln, line) in content_lines(&text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(path, ln, "expected `i mu`"));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(path, ln, "bad index"))?;
        let m: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(path, ln, "bad mass"))?;
        if i >= n {
            return Err(parse_err(path, ln, format!("index out of range 0..{n}")));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(parse_err(path, ln, "mass must be positive"));
        }
        mu[i] = m;
        seen[i] = true;
    }
    let missing = seen.iter().filter(|s| !**s).count();
    if missing > 0 {
        log::warn!("{}: {missing} points without a mass, using 1", path.display());
    }
    Ok(mu)
}

impl MetricMeasureSpace {
    /// Shortest-path metric of a connected weighted graph.
    pub fn from_graph(edges: &EdgeList, measure: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let n = edges.n;
        let mut g = UnGraph::<(), f64>::with_capacity(n, edges.edges.len());
        let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
        for &(i, j, w) in &edges.edges {
            g.add_edge(nodes[i], nodes[j], w);
        }
        let rows = crate::par::map_range(n, |x| {
            let reach = dijkstra(&g, nodes[x], None, |e| *e.weight());
            let mut row = vec![f64::INFINITY; n];
            for (node, d) in reach {
                row[node.index()] = d;
            }
            row
        });
        let mut table = Vec::with_capacity(n * n);
        for row in rows {
            if row.iter().any(|d| d.is_infinite()) {
                return Err(Error::invalid("graph is not connected"));
            }
            table.extend(row);
        }
        // Dijkstra sums in path order, so d(x,y) and d(y,x) can differ in the
        // last bit.
        for x in 0..n {
            for y in x + 1..n {
                let d = table[x * n + y].min(table[y * n + x]);
                table[x * n + y] = d;
                table[y * n + x] = d;
            }
        }
        Self::from_distance_table(n, table, measure, label)
    }

    /// Reads an edge list and an optional measure file.
    pub fn from_graph_files(edge_path: &Path, measure_path: Option<&Path>) -> Result<(Self, EdgeList)> {
        let edges = read_edge_list(edge_path)?;
        let measure = match measure_path {
            Some(p) => read_measure_file(p, edges.n)?,
            None => {
                log::warn!("{}: no measure file, using μ = 1", edge_path.display());
                vec![1.0; edges.n]
            }
        };
        let label = format!("graph({})", edge_path.display());
        let space = Self::from_graph(&edges, measure, label)?;
        Ok((space, edges))
    }
}
