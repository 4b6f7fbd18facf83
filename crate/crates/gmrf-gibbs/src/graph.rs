//! Undirected Markov graphs and greedy coloring.
//!
//! A [`MarkovGraph`] stores the neighborhood structure of a GMRF: sorted
//! adjacency lists plus a symmetric edge weight per neighbor pair. A
//! [`Coloring`] partitions the nodes into classes in which no two members are
//! adjacent, which is what lets the chromatic sampler draw a whole class at
//! once.

use crate::rng::RngStream;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Lattice neighborhood structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    /// 4-neighborhood: horizontal and vertical neighbors.
    Rook4,
    /// 8-neighborhood: every surrounding cell, as in first-order image models.
    King8,
}

/// Undirected weighted graph in flat adjacency (CSR-like) form.
///
/// Invariants: neighbor lists sorted ascending with no duplicates, no
/// self-loops, and `w_ij = w_ji`.
#[derive(Debug, Clone)]
pub struct MarkovGraph {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl MarkovGraph {
    /// Regular `rows x cols` lattice in row-major node order. Boundary nodes
    /// keep truncated neighborhoods; there is no wrap-around.
    pub fn lattice(rows: usize, cols: usize, nb: Neighborhood) -> Result<Self, GraphError> {
        if rows == 0 || cols == 0 {
            return Err(GraphError::InvalidArgument(format!(
                "lattice dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let n = rows * cols;
        let deltas: &[(i64, i64)] = match nb {
            Neighborhood::Rook4 => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Neighborhood::King8 => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        };
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for r in 0..rows as i64 {
            for c in 0..cols as i64 {
                for &(dr, dc) in deltas {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr >= 0 && nr < rows as i64 && nc >= 0 && nc < cols as i64 {
                        neighbors.push((nr as usize) * cols + nc as usize);
                    }
                }
                offsets.push(neighbors.len());
            }
        }
        // Deltas are emitted in row-major order, so each list is already sorted.
        let weights = vec![1.0; neighbors.len()];
        Ok(MarkovGraph {
            n,
            offsets,
            neighbors,
            weights,
        })
    }

    /// Build from an edge list with unit weights. Duplicate edges collapse and
    /// symmetry is enforced.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let weighted: Vec<(usize, usize, f64)> =
            edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        Self::from_weighted_edge_list(n, &weighted)
    }

    /// Build from `(i, j, w)` triples. Later duplicates of an edge overwrite
    /// earlier ones.
    pub fn from_weighted_edge_list(
        n: usize,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self, GraphError> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(GraphError::InvalidArgument(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(GraphError::InvalidArgument(format!("self-loop at node {i}")));
            }
            for (a, b) in [(i, j), (j, i)] {
                match adj[a].iter_mut().find(|(k, _)| *k == b) {
                    Some(entry) => entry.1 = w,
                    None => adj[a].push((b, w)),
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for list in adj.iter_mut() {
            list.sort_unstable_by_key(|&(k, _)| k);
            for &(k, w) in list.iter() {
                neighbors.push(k);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        Ok(MarkovGraph {
            n,
            offsets,
            neighbors,
            weights,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn weights_of(&self, i: usize) -> &[f64] {
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Sum of incident edge weights, the diagonal of D.
    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.weights_of(i).iter().sum()
    }

    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut stack = Vec::new();
        let mut count = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &u in self.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        count
    }

    /// Parse the edge-list text format: first non-comment line is `n`, then one
    /// `i j [w]` triple per line. `#` starts a comment; indices are 0-based.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut n: Option<usize> = None;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if n.is_none() {
                if fields.len() != 1 {
                    return Err(GraphError::Parse {
                        line,
                        msg: "expected node count on first line".to_string(),
                    });
                }
                n = Some(fields[0].parse().map_err(|_| GraphError::Parse {
                    line,
                    msg: format!("bad node count '{}'", fields[0]),
                })?);
                continue;
            }
            if fields.len() != 2 && fields.len() != 3 {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("expected 'i j [w]', got {} fields", fields.len()),
                });
            }
            let i: usize = fields[0].parse().map_err(|_| GraphError::Parse {
                line,
                msg: format!("bad index '{}'", fields[0]),
            })?;
            let j: usize = fields[1].parse().map_err(|_| GraphError::Parse {
                line,
                msg: format!("bad index '{}'", fields[1]),
            })?;
            let w: f64 = if fields.len() == 3 {
                fields[2].parse().map_err(|_| GraphError::Parse {
                    line,
                    msg: format!("bad weight '{}'", fields[2]),
                })?
            } else {
                1.0
            };
            edges.push((i, j, w));
        }
        let n = n.ok_or(GraphError::Parse {
            line: 0,
            msg: "empty edge-list file".to_string(),
        })?;
        Self::from_weighted_edge_list(n, &edges)
    }

    pub fn read_edge_list(path: &std::path::Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_edge_list(&text)
    }

    /// Render in the edge-list text format (each edge once, i < j).
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            for (&j, &w) in self.neighbors(i).iter().zip(self.weights_of(i)) {
                if i < j {
                    if (w - 1.0).abs() < 1e-300 {
                        out.push_str(&format!("{i} {j}\n"));
                    } else {
                        out.push_str(&format!("{i} {j} {w}\n"));
                    }
                }
            }
        }
        out
    }
}

/// Node ordering handed to the greedy coloring pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorOrder {
    /// Ascending node index. The default: reproducible, and optimal on the
    /// lattices used here.
    Natural,
    /// Seeded Fisher-Yates shuffle.
    Random(u64),
    /// Highest degree first, ties by index.
    DegreeDesc,
}

impl ColorOrder {
    pub fn permutation(&self, graph: &MarkovGraph) -> Vec<usize> {
        let n = graph.node_count();
        let mut order: Vec<usize> = (0..n).collect();
        match *self {
            ColorOrder::Natural => {}
            ColorOrder::Random(seed) => {
                let mut s = RngStream::new(seed, 0);
                for i in (1..n).rev() {
                    let j = (s.next_u64() % (i as u64 + 1)) as usize;
                    order.swap(i, j);
                }
            }
            ColorOrder::DegreeDesc => {
                order.sort_by_key(|&i| (std::cmp::Reverse(graph.degree(i)), i));
            }
        }
        order
    }
}

/// A proper k-coloring: `assignment[i]` is node i's color in `1..=k`, and
/// `classes[c]` lists the nodes of color `c + 1` in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub assignment: Vec<usize>,
    pub k: usize,
    pub classes: Vec<Vec<usize>>,
}

impl Coloring {
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self, GraphError> {
        let k = assignment.iter().copied().max().unwrap_or(0);
        if assignment.contains(&0) {
            return Err(GraphError::InvalidArgument(
                "colors are 1-based; found color 0".to_string(),
            ));
        }
        let mut classes = vec![Vec::new(); k];
        for (i, &c) in assignment.iter().enumerate() {
            classes[c - 1].push(i);
        }
        Ok(Coloring {
            assignment,
            k,
            classes,
        })
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    /// `node,color` CSV.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("node,color\n");
        for (i, c) in self.assignment.iter().enumerate() {
            out.push_str(&format!("{i},{c}\n"));
        }
        out
    }
}

/// Greedy coloring: visit nodes in `order`, give each the smallest color not
/// used by an already-colored neighbor. Uses at most max-degree + 1 colors.
pub fn greedy_color(graph: &MarkovGraph, order: &[usize]) -> Result<Coloring, GraphError> {
    let n = graph.node_count();
    if order.len() != n {
        return Err(GraphError::InvalidArgument(format!(
            "order has length {}, expected {n}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return Err(GraphError::InvalidArgument(
                "order is not a permutation of the nodes".to_string(),
            ));
        }
        seen[v] = true;
    }

    let mut assignment = vec![0usize; n];
    // forbidden[c] == v marks color c+1 as used by a neighbor of v.
    let mut forbidden = vec![usize::MAX; graph.max_degree() + 2];
    for &v in order {
        for &u in graph.neighbors(v) {
            let c = assignment[u];
            if c != 0 {
                forbidden[c - 1] = v;
            }
        }
        let mut color = 1;
        while forbidden[color - 1] == v {
            color += 1;
        }
        assignment[v] = color;
    }
    Coloring::from_assignment(assignment)
}

/// True iff the coloring is proper and its classes are consistent with the
/// assignment (a partition of the nodes with no empty class).
pub fn validate_coloring(graph: &MarkovGraph, coloring: &Coloring) -> Result<bool, GraphError> {
    let n = graph.node_count();
    if coloring.assignment.len() != n {
        return Err(GraphError::InvalidArgument(format!(
            "coloring covers {} nodes, graph has {n}",
            coloring.assignment.len()
        )));
    }
    for (i, &c) in coloring.assignment.iter().enumerate() {
        if c == 0 || c > coloring.k {
            return Ok(false);
        }
        for &j in graph.neighbors(i) {
            if coloring.assignment[j] == c {
                return Ok(false);
            }
        }
    }
    if coloring.classes.len() != coloring.k {
        return Ok(false);
    }
    let mut covered = vec![false; n];
    for (ci, class) in coloring.classes.iter().enumerate() {
        if class.is_empty() {
            return Ok(false);
        }
        for &i in class {
            if i >= n || covered[i] || coloring.assignment[i] != ci + 1 {
                return Ok(false);
            }
            covered[i] = true;
        }
    }
    Ok(covered.iter().all(|&c| c))
}
